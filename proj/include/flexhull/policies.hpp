#pragma once

#include "flexhull/conic.hpp"
#include "flexhull/reduction.hpp"

namespace flexhull {

// Inscribed ellipsoid {p0 = E*xi + e : ||xi|| <= 1} with shape matrix E.
struct Ellipsoid {
  MatrixXd E;      // T x T symmetric PSD
  VectorXd e;      // T
  double logdet = 0.0;
};

// Second-stage rule y = K*xi + sum_t L[t]*zeta_t + gamma. For the hyperbox
// parametrization xi is the box coordinate (||xi||_inf <= 1) instead.
struct AffinePolicy {
  MatrixXd K;               // ny x T
  std::vector<MatrixXd> L;  // T blocks, each ny x Nu
  VectorXd gamma;           // ny
  VectorXd alpha;           // m row bounds (sum of per-row norm terms)
};

// Second-stage rule y_j = u'*Q[j]*u + (L*u)_j + c[j], u = [xi; zeta].
struct QuadraticPolicy {
  std::vector<MatrixXd> Q;  // ny matrices, (T+Nu*T)^2 symmetric
  MatrixXd L;               // ny x (T+Nu*T)
  VectorXd c;               // ny
  MatrixXd lambda;          // m x (T+2) nonnegative multipliers
  bool zeta_dropped = false;  // deterministic instance solved without zeta blocks
};

// Axis-aligned box [l, u] per period.
struct Hyperbox {
  VectorXd l;
  VectorXd u;
  double logvol = 0.0;  // sum log(u_t - l_t)
};

enum class PolicyKind { kAffine, kQuadratic, kBox };

const char* to_string(PolicyKind k);

struct PolicySolution {
  PolicyKind kind = PolicyKind::kAffine;
  conic::SolveStatus status = conic::SolveStatus::kNumericalFailure;
  Ellipsoid ellipsoid;       // affine/quadratic
  Hyperbox box;              // box
  AffinePolicy affine;       // affine/box
  QuadraticPolicy quadratic; // quadratic
  double solve_seconds = 0.0;
  int iterations = 0;
  std::string message;

  int T = 0, Nu = 0, ny = 0;
  bool optimal() const { return status == conic::SolveStatus::kOptimal; }
};

// Refusal thresholds for the quadratic formulation's LMI family.
struct SizeBudget {
  int max_lmi_side = 64;        // 1 + T + Nu*T
  long max_q_entries = 20000;   // m * (n-1)T LMI count proxy
};

// Evaluate the stored second-stage rule at (xi, zeta).
VectorXd evaluate_policy(const PolicySolution& sol, const VectorXd& xi,
                         const VectorXd& zeta);

// Theorem 2 exact reformulation of the affine-policy MVE problem.
PolicySolution solve_affine(const ReducedSystem& red,
                            const conic::SolverSettings& settings = {});

// Theorem 1 approximate-S-lemma reformulation with quadratic policies.
// Throws SizeBudgetError when the LMI family exceeds the budget.
PolicySolution solve_quadratic(const ReducedSystem& red,
                               const conic::SolverSettings& settings = {},
                               const SizeBudget& budget = {});

// Hyperbox baseline: maximal axis-aligned box with the same affine
// second stage, robust counterpart via the l1/l2 mixed norm rows.
PolicySolution solve_box(const ReducedSystem& red,
                         const conic::SolverSettings& settings = {});

struct VolumeReport {
  double log_measure;  // logdet(E) or sum log(u_t - l_t)
  double det_measure;  // det(E) or prod(u_t - l_t)
  double lebesgue;     // true volume: det * unit-ball constant, or box product
  const char* convention;
};

double unit_ball_volume(int dim);  // pi^{d/2} / Gamma(d/2 + 1)
VolumeReport volume(const Ellipsoid& ell);
VolumeReport volume(const Hyperbox& box);
VolumeReport volume(const PolicySolution& sol);

// Tightness factor of Theorem 1's approximate S-lemma, reported as
// metadata: 9.19 * sqrt(ln(T + 1)).
double tightness_factor(int T);

}  // namespace flexhull
