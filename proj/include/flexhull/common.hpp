#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flexhull {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Input document or model-construction failure. Messages carry the field
/// path of the offending entry.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical precondition failure (rank deficiency, out-of-ball uncertainty,
/// singular recovery).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Refusal to build a program whose semidefinite blocks exceed the
/// configured size budget. Message states the offending sizes.
class SizeBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flexhull
