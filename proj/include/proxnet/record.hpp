#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace proxnet {

struct MetricRow {
  std::int64_t iteration = 0;
  double stationarity = 0.0;
  double consensus = 0.0;
  double objective = 0.0;
  double seconds = 0.0;
};

/// Metric trace of one run (or the mean of several).
struct RunRecord {
  std::vector<MetricRow> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::optional<std::string> abort_reason;

  void set_meta(const std::string& key, const std::string& value);
  std::optional<std::string> meta(const std::string& key) const;
};

}  // namespace proxnet
