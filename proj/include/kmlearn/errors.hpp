#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace kmlearn {

/// Malformed data passed to an operation (shape mismatch, non-finite entries).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range configuration value (negative tolerance, non-positive cap, ...).
struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed where the math says it should not have.
/// Carries the offending iterate when raised inside an optimization loop.
struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
  NumericalFailure(const std::string& what, Eigen::MatrixXd offending_iterate)
      : std::runtime_error(what), iterate(std::move(offending_iterate)) {}

  std::optional<Eigen::MatrixXd> iterate;
};

/// The metric is too close to the cone boundary for the requested probe step.
struct BoundaryProximity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The requested diagnostic is undefined for this configuration.
struct NotApplicable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// CSV file does not match the record schema; message names the line.
struct CsvSchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kmlearn
