#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace proxnet {

// Stacked agent quantities: one row per agent.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PROXNET_ERROR(Name)                      \
  class Name : public Error {                    \
   public:                                       \
    using Error::Error;                          \
  }

PROXNET_ERROR(TopologyError);
PROXNET_ERROR(NumericError);
PROXNET_ERROR(ParameterError);
PROXNET_ERROR(DomainError);
PROXNET_ERROR(OracleError);
PROXNET_ERROR(StateError);
PROXNET_ERROR(DataError);
PROXNET_ERROR(FormatError);
PROXNET_ERROR(LengthError);
PROXNET_ERROR(ConfigError);
PROXNET_ERROR(AggregationError);
PROXNET_ERROR(IoError);

#undef PROXNET_ERROR

/// Thrown by the run loop when an iterate stops being finite.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::int64_t iteration)
      : Error(what), iteration_(iteration) {}
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace proxnet
