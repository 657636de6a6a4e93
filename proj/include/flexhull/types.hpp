#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flexhull/common.hpp"

namespace flexhull {

/// Aggregation horizon: T periods of tau hours each.
struct Horizon {
  int periods = 1;
  double tau_hours = 1.0;
};

/// Battery storage unit. Positive power is discharge (injection into the
/// feeder); the state of charge follows e(t) = kappa * e(t-1) - tau * p(t).
struct StorageUnit {
  std::string node;
  std::string phase;
  double p_min = 0.0;  // kW
  double p_max = 0.0;  // kW
  double power_factor = 0.0;  // reactive-to-active ratio q = psi * p
  double kappa = 1.0;         // efficiency factor in (0, 1]
  double e0 = 0.0;            // initial state of charge, kWh
  double e_min = 0.0;         // kWh
  double e_cap = 0.0;         // capacity, kWh
};

/// PV inverter with per-period availability cap.
struct PvUnit {
  std::string node;
  std::string phase;
  VectorXd p_avail;  // length T, kW, >= 0
  double power_factor = 0.0;
};

/// HVAC system. Indoor temperature follows
/// h(t) = h(t-1) + alpha * (h_out(t) - h(t-1)) + tau * beta * p(t).
struct HvacUnit {
  std::string node;
  std::string phase;
  VectorXd p_cap;  // length T, kW, >= 0
  double power_factor = 0.0;
  double h_min = 0.0;  // deg C
  double h_max = 0.0;
  double h_in0 = 0.0;
  VectorXd h_out;  // length T
  double alpha = 0.0;  // in [0, 1]
  double beta = 0.0;   // deg C per kWh
};

enum class LoadCategory { kResidential, kCommercial, kIndustrial };

const char* to_string(LoadCategory c);

/// Uncontrollable load with shared per-category uncertainty.
struct UncontrollableLoad {
  std::string node;
  std::string phase;
  VectorXd p_nominal;  // length T, kW (consumption, positive)
  double power_factor = 0.0;
  LoadCategory category = LoadCategory::kResidential;
};

/// Classify by daily average nominal power. Ties at the 10/100 kW
/// thresholds go to the larger category.
LoadCategory classify_load(const VectorXd& p_nominal);

/// Shared load uncertainty: per period, one coordinate per category, with
/// the stacked per-period vector constrained to the Euclidean unit ball.
struct UncertaintyModel {
  double delta = 0.0;  // relative deviation level, >= 0
  int n_groups = 3;    // uncertainty coordinates per period
};

/// One injection group (wye or delta): where power enters the network and
/// how it moves voltages and the substation real power.
struct InjectionGroup {
  std::vector<std::string> points;  // "node.phase" keys, one per column
  MatrixXd Mp;                      // n_vnodes x n_points, per period
  MatrixXd Mq;
  RowVectorXd Gp;  // substation real-power sensitivity, 1 x n_points
  RowVectorXd Gq;

  bool empty() const { return points.empty(); }
  int index_of(const std::string& key) const;
};

/// Linear network model: voltage map v = Mp*p + Mq*q + v_tilde per period,
/// voltage band, and substation injection map p0 = G*[p;q] + c.
struct NetworkSensitivities {
  std::vector<std::string> vnodes;  // monitored "node.phase" keys
  InjectionGroup wye;
  InjectionGroup delta;
  VectorXd v_tilde;  // per vnode, per-unit
  VectorXd v_min;
  VectorXd v_max;
  VectorXd c_sub;  // length T (substation offset per period)
};

/// Full physical description of the feeder over the horizon.
struct FeederModel {
  Horizon horizon;
  std::vector<StorageUnit> storage;
  std::vector<PvUnit> pv;
  std::vector<HvacUnit> hvac;
  std::vector<UncontrollableLoad> loads;
  UncertaintyModel uncertainty;
  std::optional<NetworkSensitivities> network;

  int n_devices() const {
    return static_cast<int>(storage.size() + pv.size() + hvac.size());
  }
};

/// Throws SchemaError on any violated invariant, naming the field path.
void validate(const FeederModel& model);

}  // namespace flexhull
