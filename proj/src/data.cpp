#include "proxnet/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>

#include "proxnet/rng.hpp"

namespace proxnet {

Dataset Dataset::subset(std::span<const Index> indices) const {
  Dataset out;
  out.features.resize(static_cast<Index>(indices.size()), dim());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Index>(r)) = features.row(indices[r]);
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw LengthError("IDX header truncated: expected at least 4 bytes, got " +
                      std::to_string(bytes.size()));
  }
  const std::uint32_t magic = read_be32(bytes, 0);
  std::size_t ndim = 0;
  if (magic == kIdxLabelsMagic) {
    ndim = 1;
  } else if (magic == kIdxImagesMagic) {
    ndim = 3;
  } else {
    char buf[11];
    std::snprintf(buf, sizeof buf, "0x%08X", magic);
    throw FormatError(std::string("unsupported IDX magic ") + buf +
                      " (expected 0x00000801 labels or 0x00000803 images)");
  }
  const std::size_t header = 4 + 4 * ndim;
  if (bytes.size() < header) {
    throw LengthError("IDX header truncated: expected " + std::to_string(header) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  IdxTensor t;
  std::uint64_t count = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    t.dims.push_back(read_be32(bytes, 4 + 4 * d));
    count *= t.dims.back();
  }
  const std::uint64_t actual = bytes.size() - header;
  if (actual != count) {
    throw LengthError("IDX payload length mismatch: expected " + std::to_string(count) +
                      " bytes, got " + std::to_string(actual));
  }
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

IdxTensor read_idx_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open IDX file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const Error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  const IdxTensor images = read_idx_file(images_path);
  const IdxTensor labels = read_idx_file(labels_path);
  if (images.dims.size() != 3) throw DataError(images_path + " is not an images file");
  if (labels.dims.size() != 1) throw DataError(labels_path + " is not a labels file");
  if (images.dims[0] != labels.dims[0]) {
    throw DataError("image count " + std::to_string(images.dims[0]) + " != label count " +
                    std::to_string(labels.dims[0]));
  }
  const Index n = images.dims[0];
  const Index d = static_cast<Index>(images.dims[1]) * images.dims[2];
  Dataset ds;
  ds.features.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      ds.features(i, j) = static_cast<double>(images.data[i * d + j]) / 255.0;
  ds.labels.assign(labels.data.begin(), labels.data.end());
  return ds;
}

Dataset filter_binary(const Dataset& ds, int pos_digit, int neg_digit) {
  if (pos_digit == neg_digit) throw DataError("digits must be distinct");
  if (pos_digit < 0 || pos_digit > 9 || neg_digit < 0 || neg_digit > 9) {
    throw DataError("digits must lie in 0..9");
  }
  std::vector<Index> keep;
  for (Index i = 0; i < ds.size(); ++i)
    if (ds.labels[i] == pos_digit || ds.labels[i] == neg_digit) keep.push_back(i);
  if (keep.empty()) {
    throw DataError("no samples with digits " + std::to_string(pos_digit) + " or " +
                    std::to_string(neg_digit));
  }
  Dataset out = ds.subset(keep);
  for (int& y : out.labels) y = (y == pos_digit) ? 1 : -1;
  return out;
}

Partition partition_heterogeneous(const Dataset& ds, Index n) {
  const Index total = ds.size();
  if (n < 1) throw DataError("need at least one agent");
  if (n > total) {
    throw DataError("cannot split " + std::to_string(total) + " samples across " +
                    std::to_string(n) + " agents");
  }
  std::vector<Index> order(total);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return ds.labels[a] < ds.labels[b]; });

  Partition p;
  p.assignment.assign(total, 0);
  p.agent_indices.resize(n);
  const Index base = total / n;
  const Index extra = total % n;
  Index cursor = 0;
  for (Index a = 0; a < n; ++a) {
    const Index take = base + (a < extra ? 1 : 0);
    for (Index t = 0; t < take; ++t, ++cursor) {
      p.agent_indices[a].push_back(order[cursor]);
      p.assignment[order[cursor]] = a;
    }
  }
  return p;
}

Dataset synthetic_binary(Index n_samples, Index dim, std::uint64_t seed, double margin) {
  if (n_samples < 1 || dim < 1) throw DataError("synthetic dataset needs N, d >= 1");
  RngStream rng(seed);
  Vector w(dim);
  for (Index j = 0; j < dim; ++j) w[j] = rng.normal();
  w /= w.norm();

  Dataset ds;
  ds.features.resize(n_samples, dim);
  ds.labels.resize(n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    const int b = (rng.next() >> 63) ? 1 : -1;
    ds.labels[i] = b;
    for (Index j = 0; j < dim; ++j) ds.features(i, j) = b * margin * w[j] + rng.normal();
  }
  return ds;
}

}  // namespace proxnet
