#pragma once

#include <cstdint>
#include <random>

#include "flexhull/policies.hpp"

namespace flexhull {

struct ContainmentWitness {
  VectorXd xi;
  VectorXd zeta;
  double violation = 0.0;
};

struct ContainmentReport {
  int samples = 0;
  double max_violation = 0.0;  // reported even when zero failures
  std::vector<ContainmentWitness> failures;
  bool lp_oracle_used = false;

  bool passed(double tol = 1e-6) const {
    return failures.empty() && max_violation <= tol;
  }
};

// Sample boundary/interior points of the claimed set and check each is a
// valid aggregate trajectory under its sampled uncertainty. Mode A
// evaluates the stored policy's residuals; with use_lp_oracle the phase-1
// LP min s s.t. Wp <= z(zeta)+s, Dp = p0-b(zeta) decides instead (weaker
// precondition: no policy needed, exact feasibility).
ContainmentReport check_containment(const PolicySolution& sol,
                                    const ConstraintSystem& sys,
                                    const ReducedSystem& red, int n_samples,
                                    std::uint64_t seed, bool use_lp_oracle = true,
                                    double witness_tol = 1e-6);

// Phase-1 LP value s* for one (p0, zeta): s* <= 0 iff p0 is achievable.
// Throws NumericalError when the LP itself fails.
double lp_oracle(const ConstraintSystem& sys, const VectorXd& p0,
                 const VectorXd& zeta);

struct Polygon {
  // Counter-clockwise vertices of a convex polygon (possibly degenerate:
  // 1 vertex = point, 2 = segment).
  std::vector<Eigen::Vector2d> vertices;
  double area() const;
  // Signed clearance of a point: >= 0 inside, measured as min over edges of
  // the inward distance; degenerate polygons use distance to the hull.
  double clearance(const Eigen::Vector2d& p) const;
};

struct ProjectionBudget {
  int max_vars = 12;        // lifted dimension nT
  long max_vertices = 200000;
};

// Exact projection of {p : Wp <= z_nu} under p0 = Dp + b_nu for tiny
// deterministic instances (T <= 2), via vertex enumeration of the lifted
// polytope and a convex hull of the projected vertices.
Polygon exact_projection_2d(const ConstraintSystem& sys,
                            const ProjectionBudget& budget = {});

struct Ellipse2D {
  Eigen::Vector2d center;
  Eigen::Matrix2d shape;  // symmetric PSD; boundary = center + shape*[cos,sin]
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle_rad = 0.0;  // major-axis direction
  double area() const;
  // 257 theta-sampled boundary points, closed (first == last).
  std::vector<Eigen::Vector2d> boundary(int n = 256) const;
};

// Orthogonal shadow of the T-dim ellipsoid onto coordinates (i, j):
// shape S with S^2 = P E E' P'.
Ellipse2D project_ellipse(const Ellipsoid& ell, int i, int j);

// Disaggregation round-trip: xi = E^+(p0 - e), y from the stored policy,
// p from Proposition 1. Asserts Dp + b(zeta) = p0 within 1e-8 and
// Wp <= z(zeta) + 1e-6; throws NumericalError if p0 lies outside the
// ellipsoid (||xi|| > 1 + 1e-8) or an assertion fails.
VectorXd roundtrip(const PolicySolution& sol, const ConstraintSystem& sys,
                   const ReducedSystem& red, const NullspaceBasis& basis,
                   const VectorXd& p0, const VectorXd& zeta);

// Deterministic samplers (shared by tests and the containment check).
VectorXd sample_unit_sphere(int dim, std::mt19937_64& rng);
VectorXd sample_unit_ball(int dim, std::mt19937_64& rng);

}  // namespace flexhull
