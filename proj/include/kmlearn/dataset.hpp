#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>

#include "kmlearn/errors.hpp"

namespace kmlearn {

/// An (X, y) sample: n rows of p covariates plus responses.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in) : x(std::move(x_in)), y(std::move(y_in)) {
    if (x.rows() < 2) {
      throw InvalidInput("Dataset: needs n >= 2 samples, got " + std::to_string(x.rows()));
    }
    if (x.cols() < 1) throw InvalidInput("Dataset: needs p >= 1 covariates");
    if (y.size() != x.rows()) {
      throw InvalidInput("Dataset: y has length " + std::to_string(y.size()) +
                         " but x has " + std::to_string(x.rows()) + " rows");
    }
    if (!x.allFinite() || !y.allFinite()) throw InvalidInput("Dataset: non-finite entries");
  }

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }

  /// Biased (1/n) sample variance of the responses.
  double y_variance() const {
    const double mean = y.mean();
    return (y.array() - mean).square().sum() / static_cast<double>(y.size());
  }
};

}  // namespace kmlearn
