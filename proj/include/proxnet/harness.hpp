#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proxnet/algorithms.hpp"
#include "proxnet/core.hpp"
#include "proxnet/mixing.hpp"
#include "proxnet/record.hpp"

namespace proxnet {

inline constexpr const char* kVersion = "proxnet 0.1.0";

/// Every knob of an experiment. Keys are "section.name" and map one-to-one
/// onto the sectioned config file; see README for the schema.
struct ExperimentConfig {
  // [run]
  std::vector<std::string> algorithms{"norm-ed", "norm-dsgt", "norm-csgd", "prox-csgd"};
  std::int64_t iterations = 3000;
  double gamma = 0.1;
  std::uint64_t seed = 1;
  int seeds = 1;
  std::int64_t eval_every = 10;
  Index batch_size = 16;
  int threads = 0;
  std::string init = "zero";  // zero | gaussian
  double init_scale = 0.1;
  std::uint64_t init_seed = 0;
  // [stepsize]
  std::vector<double> stepsizes{1.0 / 40, 1.0 / 200, 1.0 / 1000};
  std::vector<std::int64_t> durations;  // empty = equal stages
  // [network]
  std::string topology = "ring";
  Index agents = 30;
  std::string weights = "lazy-uniform";
  std::string edges_file;
  // [problem]
  std::string loss = "tanh";  // tanh | mlp | quadratic
  Index hidden = 32;
  std::string quadratic_file;
  Index quadratic_dim = 10;
  std::uint64_t quadratic_seed = 3;
  Index quadratic_samples = 64;
  double quadratic_noise = 0.5;
  // [regularizer]
  std::string reg_kind = "l1";  // l1 | elastic_net | box | none
  double nu = 0.01;
  double nu1 = 0.001;
  double nu2 = 0.005;
  double lo = -1.0;
  double hi = 1.0;
  // [dataset]
  std::string dataset = "synthetic";  // synthetic | mnist
  std::string data_dir;               // empty: $PROXNET_DATA_DIR, then "."
  std::string images = "train-images-idx3-ubyte";
  std::string labels = "train-labels-idx1-ubyte";
  int pos_digit = 2;
  int neg_digit = 6;
  Index synthetic_samples = 2000;
  Index synthetic_dim = 50;
  double margin = 1.0;
  std::uint64_t data_seed = 7;
  // [output]
  std::string out_dir = "out";

  /// Sets one key from its text form; throws ConfigError naming the key.
  void set(const std::string& key, const std::string& value);
  /// Canonical text of every setting except output paths; hashed into CSVs.
  std::string canonical() const;
  std::string hash() const;
  void validate() const;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_stream(std::istream& in, const std::string& origin);
  static const std::vector<std::string>& keys();
};

/// Directory holding the shipped presets ($PROXNET_PRESET_DIR overrides).
std::filesystem::path preset_dir();
std::vector<std::string> list_presets();
ExperimentConfig load_preset(const std::string& name);

/// Problem and network assembled from a config.
struct Experiment {
  ExperimentConfig config;
  std::optional<CompositeProblem> problem;
  std::optional<MixingMatrix> mixing;
  Vector z0;
  std::vector<std::string> warnings;
};

Experiment build_experiment(const ExperimentConfig& config);

/// One run of the algorithm x seed grid.
struct RunVariant {
  RunConfig run;
  std::string label;  // file-name stem, e.g. "norm-ed_seed3"
};

std::vector<RunVariant> expand_grid(const Experiment& ex);

/// Per-iteration mean of each metric; all records must share one grid.
RunRecord aggregate(const std::vector<RunRecord>& records);

/// Writes "#key=value" metadata lines then the CSV header and rows.
void emit_csv(const RunRecord& record, const std::filesystem::path& path);
void write_csv(const RunRecord& record, std::ostream& out);
RunRecord read_csv(const std::filesystem::path& path);

/// File-name-safe form of an algorithm name.
std::string file_stem(const std::string& algorithm);

/// Executes the whole grid, writing one CSV per run and "<algo>_mean.csv".
/// Returns the aggregates in algorithm order.
std::vector<RunRecord> run_experiment(const Experiment& ex, std::ostream& log);

}  // namespace proxnet
