#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "proxnet/common.hpp"

namespace proxnet {

/// Samples as rows of `features`; `labels` is either a class index or +-1.
struct Dataset {
  Matrix features;
  std::vector<int> labels;

  Index size() const noexcept { return features.rows(); }
  Index dim() const noexcept { return features.cols(); }
  /// Rows selected by `indices`, in order.
  Dataset subset(std::span<const Index> indices) const;
};

/// Decoded IDX file: unsigned-byte payload with its declared dimensions.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;

/// Parses a big-endian IDX buffer (u8 labels, 1-dim, or u8 images, 3-dim).
/// The payload length must match the header exactly.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
IdxTensor read_idx_file(const std::string& path);

/// Pairs an images file and a labels file; pixels are scaled to [0, 1].
Dataset load_mnist(const std::string& images_path, const std::string& labels_path);

/// Keeps the two digits and relabels pos -> +1, neg -> -1.
Dataset filter_binary(const Dataset& ds, int pos_digit, int neg_digit);

struct Partition {
  std::vector<Index> assignment;                 // agent per sample
  std::vector<std::vector<Index>> agent_indices;  // samples per agent
};

/// Stable sort by label, then contiguous chunks; the first N mod n agents get
/// one extra sample.
Partition partition_heterogeneous(const Dataset& ds, Index n);

/// Labels +-1 drawn uniformly; features b * margin * w + N(0, I) for a random
/// unit vector w. Deterministic per seed.
Dataset synthetic_binary(Index n_samples, Index dim, std::uint64_t seed, double margin);

}  // namespace proxnet
