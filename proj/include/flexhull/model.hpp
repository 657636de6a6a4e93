#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flexhull/types.hpp"

namespace flexhull {

enum class DeviceKind { kStorage, kPv, kHvac };

/// Identifies which device power a column of the constraint system holds.
struct VariableKey {
  DeviceKind kind;
  int device;  // index within its kind's array
  int period;  // 0-based
};

/// Compact constraint system over the stacked device-power vector p:
///
///   W p <= z(zeta),  z(zeta) = z_theta * zeta + z_nu
///   p0  = D p + b(zeta),  b(zeta) = b_theta * zeta + b_nu
///
/// Columns are device-major: column of (device d, period t) is d*T + t.
/// zeta is period-major: coordinate of (period t, group g) is t*Nu + g.
struct ConstraintSystem {
  int T = 0;
  int n = 0;   // controllable devices (scalar controls per period)
  int Nu = 0;  // uncertainty groups per period
  double tau = 1.0;

  MatrixXd W;        // m x nT
  MatrixXd z_theta;  // m x Nu*T
  VectorXd z_nu;     // m
  MatrixXd D;        // T x nT
  MatrixXd b_theta;  // T x Nu*T
  VectorXd b_nu;     // T

  std::vector<VariableKey> columns;    // size nT
  std::vector<std::string> row_names;  // size m

  int rows() const { return static_cast<int>(W.rows()); }
  int cols() const { return static_cast<int>(W.cols()); }
  int col_of(DeviceKind kind, int device, int period) const;
  bool deterministic() const {
    return z_theta.size() == 0 || (z_theta.cwiseAbs().maxCoeff() == 0.0 &&
                                   b_theta.cwiseAbs().maxCoeff() == 0.0);
  }
};

/// Parse and validate a flexhull/1 model document.
FeederModel build_feeder_from_json(const std::string& json_text);

/// Convenience: read the file at `path` and parse it.
FeederModel build_feeder(const std::string& path);

/// Assemble the compact constraint system. States of charge and indoor
/// temperatures are eliminated by unrolling their recursions, and reactive
/// powers by the fixed power factors, so p holds one active-power decision
/// per controllable device per period.
ConstraintSystem assemble(const FeederModel& model);

/// Evaluate the affine right-hand sides at an uncertainty realization.
/// zeta must have length Nu*T with every per-period block inside the unit
/// ball (strict mode rejects out-of-ball blocks, naming the period).
std::pair<VectorXd, VectorXd> evaluate_rhs(const ConstraintSystem& sys,
                                           const VectorXd& zeta);

}  // namespace flexhull
