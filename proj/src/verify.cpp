#include "flexhull/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "flexhull/conic.hpp"

namespace flexhull {

VectorXd sample_unit_sphere(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

VectorXd sample_unit_ball(int dim, std::mt19937_64& rng) {
  VectorXd v = sample_unit_sphere(dim, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return v * std::pow(unif(rng), 1.0 / dim);
}

double lp_oracle(const ConstraintSystem& sys, const VectorXd& p0,
                 const VectorXd& zeta) {
  const auto [z, b] = evaluate_rhs(sys, zeta);
  const int nT = sys.cols();
  const int m = sys.rows();

  conic::ConicProgram prog;
  conic::Var p = prog.add_vector("p", nT);
  conic::Var s = prog.add_scalar("s");
  prog.objective_coeff(s, 0, -1.0);  // maximize -s == minimize s

  // z_i - w_i p + s >= 0.
  for (int i = 0; i < m; ++i) {
    conic::LinExpr ex(z[i]);
    for (int j = 0; j < nT; ++j) {
      if (sys.W(i, j) != 0.0) ex.add(prog.slot(p, j), -sys.W(i, j));
    }
    ex.add(prog.slot(s, 0), 1.0);
    prog.add_nonneg(std::move(ex), "ineq[" + std::to_string(i) + "]");
  }
  // p0_t - b_t - d_t p = 0.
  for (int t = 0; t < sys.T; ++t) {
    conic::LinExpr ex(p0[t] - b[t]);
    for (int j = 0; j < nT; ++j) {
      if (sys.D(t, j) != 0.0) ex.add(prog.slot(p, j), -sys.D(t, j));
    }
    prog.add_zero(std::move(ex), "agg[" + std::to_string(t) + "]");
  }

  conic::Solution sol = conic::solve(prog);
  if (sol.status != conic::SolveStatus::kOptimal) {
    throw NumericalError(std::string("lp_oracle: phase-1 LP not solved: ") +
                         conic::to_string(sol.status) + " (" + sol.message + ")");
  }
  return prog.value(sol, s);
}

namespace {

// Box solutions sample the infinity-ball; surface points sit on a random face.
VectorXd sample_cube(int dim, std::mt19937_64& rng, bool surface) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = unif(rng);
  if (surface) {
    std::uniform_int_distribution<int> pick(0, dim - 1);
    const int f = pick(rng);
    v[f] = (v[f] >= 0.0) ? 1.0 : -1.0;
  }
  return v;
}

}  // namespace

ContainmentReport check_containment(const PolicySolution& sol,
                                    const ConstraintSystem& sys,
                                    const ReducedSystem& red, int n_samples,
                                    std::uint64_t seed, bool use_lp_oracle,
                                    double witness_tol) {
  if (n_samples < 1) throw SchemaError("check_containment: n_samples must be >= 1");
  if (!sol.optimal()) {
    throw NumericalError("check_containment: solution is not optimal");
  }
  std::mt19937_64 rng(seed);
  ContainmentReport report;
  report.samples = n_samples;
  report.lp_oracle_used = use_lp_oracle;
  report.max_violation = -std::numeric_limits<double>::infinity();

  const bool is_box = sol.kind == PolicyKind::kBox;
  const VectorXd box_d = is_box ? VectorXd(0.5 * (sol.box.u - sol.box.l)) : VectorXd();
  const VectorXd box_e = is_box ? VectorXd(0.5 * (sol.box.u + sol.box.l)) : VectorXd();

  for (int k = 0; k < n_samples; ++k) {
    const bool boundary = k < n_samples / 2;
    VectorXd xi, p0;
    if (is_box) {
      xi = sample_cube(sol.T, rng, boundary);
      p0 = box_d.cwiseProduct(xi) + box_e;
    } else {
      xi = boundary ? sample_unit_sphere(sol.T, rng) : sample_unit_ball(sol.T, rng);
      p0 = sol.ellipsoid.E * xi + sol.ellipsoid.e;
    }
    VectorXd zeta(sol.Nu * sol.T);
    for (int t = 0; t < sol.T; ++t) {
      zeta.segment(t * sol.Nu, sol.Nu) = sample_unit_ball(sol.Nu, rng);
    }

    double violation;
    if (use_lp_oracle) {
      violation = lp_oracle(sys, p0, zeta);
    } else {
      const VectorXd y = evaluate_policy(sol, xi, zeta);
      VectorXd resid = red.A * p0 - (red.Theta * zeta + red.nu);
      if (sol.ny > 0) resid += red.W2 * y;
      violation = resid.maxCoeff();
    }
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > witness_tol) {
      report.failures.push_back({xi, zeta, violation});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Exact 2-D projection by incremental vertex enumeration

namespace {

using Bits = std::vector<std::uint64_t>;

Bits make_bits(int n) { return Bits((n + 63) / 64, 0); }
void set_bit(Bits& b, int i) { b[i / 64] |= (std::uint64_t{1} << (i % 64)); }
int and_count(const Bits& a, const Bits& b) {
  int c = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    c += std::popcount(a[i] & b[i]);
  }
  return c;
}
Bits and_bits(const Bits& a, const Bits& b) {
  Bits r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] & b[i];
  return r;
}
void or_into(Bits& a, const Bits& b) {
  for (size_t i = 0; i < a.size(); ++i) a[i] |= b[i];
}

struct EnumVertex {
  VectorXd x;
  Bits tight;
};

// Coordinate bounds of {p : Wp <= z} via 2*d LPs.
std::pair<VectorXd, VectorXd> bounding_box(const MatrixXd& W, const VectorXd& z) {
  const int d = static_cast<int>(W.cols());
  VectorXd lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    for (int dir : {+1, -1}) {
      conic::ConicProgram prog;
      conic::Var p = prog.add_vector("p", d);
      prog.objective_coeff(p, j, static_cast<double>(dir));
      for (int i = 0; i < W.rows(); ++i) {
        conic::LinExpr ex(z[i]);
        for (int c = 0; c < d; ++c) {
          if (W(i, c) != 0.0) ex.add(prog.slot(p, c), -W(i, c));
        }
        prog.add_nonneg(std::move(ex), "r" + std::to_string(i));
      }
      conic::Solution s = conic::solve(prog);
      if (s.status == conic::SolveStatus::kUnbounded) {
        throw NumericalError("exact_projection_2d: polytope unbounded in coordinate " +
                             std::to_string(j));
      }
      if (s.status == conic::SolveStatus::kInfeasible) {
        throw NumericalError("exact_projection_2d: polytope is empty");
      }
      if (s.status != conic::SolveStatus::kOptimal) {
        throw NumericalError("exact_projection_2d: bounding LP failed");
      }
      if (dir > 0)
        hi[j] = prog.value(s, p, j);
      else
        lo[j] = prog.value(s, p, j);
    }
  }
  return {lo, hi};
}

// Andrew monotone chain; returns CCW hull, collinear points dropped.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  double span = 1.0;
  for (const auto& p : pts) span = std::max(span, p.cwiseAbs().maxCoeff());
  const double eps_len = 1e-9 * span;
  const double eps_area = 1e-12 * span * span;

  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [eps_len](const auto& a, const auto& b) {
                          return (a - b).norm() <= eps_len;
                        }),
            pts.end());
  const int n = static_cast<int>(pts.size());
  if (n <= 2) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= eps_area) --k;
    hull[k++] = pts[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= eps_area) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    // Degenerate: keep extreme points only.
    std::vector<Eigen::Vector2d> seg{pts.front(), pts.back()};
    if ((seg[0] - seg[1]).norm() <= eps_len) seg.pop_back();
    return seg;
  }
  return hull;
}

}  // namespace

double Polygon::area() const {
  if (vertices.size() < 3) return 0.0;
  double a = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i) {
    const auto& p = vertices[i];
    const auto& q = vertices[(i + 1) % vertices.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double Polygon::clearance(const Eigen::Vector2d& p) const {
  if (vertices.empty()) return -std::numeric_limits<double>::infinity();
  if (vertices.size() == 1) return -(p - vertices[0]).norm();
  if (vertices.size() == 2) {
    const Eigen::Vector2d a = vertices[0], b = vertices[1];
    const double len2 = (b - a).squaredNorm();
    const double t = std::clamp((p - a).dot(b - a) / len2, 0.0, 1.0);
    return -(p - (a + t * (b - a))).norm();
  }
  double clear = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < vertices.size(); ++i) {
    const Eigen::Vector2d a = vertices[i];
    const Eigen::Vector2d b = vertices[(i + 1) % vertices.size()];
    const Eigen::Vector2d edge = b - a;
    const Eigen::Vector2d inward(-edge.y(), edge.x());  // CCW polygon
    clear = std::min(clear, (p - a).dot(inward) / inward.norm());
  }
  return clear;
}

Polygon exact_projection_2d(const ConstraintSystem& sys, const ProjectionBudget& budget) {
  if (sys.T > 2) {
    throw SizeBudgetError("exact_projection_2d: T must be <= 2, got " +
                          std::to_string(sys.T));
  }
  if (!sys.deterministic()) {
    throw SchemaError("exact_projection_2d: system must be deterministic (delta = 0)");
  }
  const int d = sys.cols();
  if (d > budget.max_vars) {
    throw SizeBudgetError("exact_projection_2d: lifted dimension " + std::to_string(d) +
                          " exceeds budget " + std::to_string(budget.max_vars));
  }
  const MatrixXd& W = sys.W;
  const VectorXd& z = sys.z_nu;
  const int m = sys.rows();

  auto [lo, hi] = bounding_box(W, z);
  const double span = std::max(1.0, (hi - lo).cwiseAbs().maxCoeff());
  const double margin = 1e-3 * span;
  lo.array() -= margin;
  hi.array() += margin;
  const double eps = 1e-9 * span;

  // Seed with the bounding-box corners; box rows are virtual rows m..m+2d.
  const int total_rows = m + 2 * d;
  std::vector<EnumVertex> verts;
  verts.reserve(std::size_t{1} << d);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    EnumVertex v;
    v.x.resize(d);
    v.tight = make_bits(total_rows);
    for (int j = 0; j < d; ++j) {
      const bool upper = (mask >> j) & 1;
      v.x[j] = upper ? hi[j] : lo[j];
      set_bit(v.tight, m + 2 * j + (upper ? 0 : 1));
    }
    verts.push_back(std::move(v));
  }

  // Cut by each real halfspace in turn.
  for (int r = 0; r < m; ++r) {
    const RowVectorXd w = W.row(r);
    const double rhs = z[r];
    const double row_scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    const double tol = eps * row_scale;

    std::vector<double> s(verts.size());
    bool any_out = false;
    for (size_t i = 0; i < verts.size(); ++i) {
      s[i] = w.dot(verts[i].x) - rhs;
      any_out |= s[i] > tol;
    }
    if (!any_out) {
      for (size_t i = 0; i < verts.size(); ++i) {
        if (std::abs(s[i]) <= tol) set_bit(verts[i].tight, r);
      }
      continue;
    }

    std::vector<EnumVertex> next;
    for (size_t i = 0; i < verts.size(); ++i) {
      if (s[i] <= tol) {
        next.push_back(verts[i]);
        if (std::abs(s[i]) <= tol) set_bit(next.back().tight, r);
      }
    }
    if (next.empty()) return Polygon{};  // cut removed everything

    for (size_t i = 0; i < verts.size(); ++i) {
      if (s[i] > tol) continue;
      for (size_t j = 0; j < verts.size(); ++j) {
        if (s[j] <= tol) continue;
        // Adjacency: d-1 shared tight hyperplanes.
        if (and_count(verts[i].tight, verts[j].tight) < d - 1) continue;
        const double lam = s[i] / (s[i] - s[j]);
        EnumVertex nv;
        nv.x = verts[i].x + lam * (verts[j].x - verts[i].x);
        nv.tight = and_bits(verts[i].tight, verts[j].tight);
        set_bit(nv.tight, r);
        // Merge duplicates arising from degenerate corners.
        bool merged = false;
        for (auto& ex : next) {
          if ((ex.x - nv.x).norm() <= 10 * eps) {
            or_into(ex.tight, nv.tight);
            merged = true;
            break;
          }
        }
        if (!merged) next.push_back(std::move(nv));
        if (static_cast<long>(next.size()) > budget.max_vertices) {
          throw SizeBudgetError("exact_projection_2d: vertex budget exceeded at row " +
                                std::to_string(r));
        }
      }
    }
    verts = std::move(next);
  }

  // The seed box was inflated past the true bounds, so every surviving
  // vertex rests on real rows only. Project and take the planar hull
  // (T = 1 projections embed as a segment on the x-axis).
  std::vector<Eigen::Vector2d> projected;
  projected.reserve(verts.size());
  for (const auto& v : verts) {
    const VectorXd p0 = sys.D * v.x + sys.b_nu;
    projected.emplace_back(p0[0], sys.T == 2 ? p0[1] : 0.0);
  }

  Polygon poly;
  poly.vertices = convex_hull(std::move(projected));
  return poly;
}

// ---------------------------------------------------------------------------

double Ellipse2D::area() const { return M_PI * shape.determinant(); }

std::vector<Eigen::Vector2d> Ellipse2D::boundary(int n) const {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    Eigen::Vector2d u(std::cos(th), std::sin(th));
    pts.push_back(center + shape * u);
  }
  pts.back() = pts.front();  // closed exactly
  return pts;
}

Ellipse2D project_ellipse(const Ellipsoid& ell, int i, int j) {
  const int T = static_cast<int>(ell.E.rows());
  if (!(0 <= i && i < j && j < T)) {
    throw SchemaError("project_ellipse: need 0 <= i < j < T");
  }
  Eigen::Matrix2d M;
  const MatrixXd EE = ell.E * ell.E.transpose();
  M << EE(i, i), EE(i, j), EE(j, i), EE(j, j);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M);
  const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
  Ellipse2D out;
  out.center = Eigen::Vector2d(ell.e[i], ell.e[j]);
  out.shape = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
              es.eigenvectors().transpose();
  out.semi_minor = std::sqrt(ev[0]);
  out.semi_major = std::sqrt(ev[1]);
  const Eigen::Vector2d major = es.eigenvectors().col(1);
  out.angle_rad = std::atan2(major.y(), major.x());
  return out;
}

VectorXd roundtrip(const PolicySolution& sol, const ConstraintSystem& sys,
                   const ReducedSystem& red, const NullspaceBasis& basis,
                   const VectorXd& p0, const VectorXd& zeta) {
  (void)red;
  VectorXd xi;
  if (sol.kind == PolicyKind::kBox) {
    const VectorXd dv = 0.5 * (sol.box.u - sol.box.l);
    const VectorXd ev = 0.5 * (sol.box.u + sol.box.l);
    xi = VectorXd::Zero(sol.T);
    for (int t = 0; t < sol.T; ++t) {
      xi[t] = dv[t] > 0.0 ? (p0[t] - ev[t]) / dv[t] : 0.0;
      if (dv[t] == 0.0 && std::abs(p0[t] - ev[t]) > 1e-8) {
        throw NumericalError("roundtrip: p0 outside box in period " + std::to_string(t));
      }
    }
    if (xi.cwiseAbs().maxCoeff() > 1.0 + 1e-8) {
      throw NumericalError("roundtrip: p0 outside box (|xi|_inf = " +
                           std::to_string(xi.cwiseAbs().maxCoeff()) + ")");
    }
  } else {
    const VectorXd rhs = p0 - sol.ellipsoid.e;
    xi = sol.ellipsoid.E.completeOrthogonalDecomposition().solve(rhs);
    const double resid = (sol.ellipsoid.E * xi - rhs).norm();
    const double scale = std::max(1.0, rhs.norm());
    if (resid > 1e-8 * scale || xi.norm() > 1.0 + 1e-8) {
      throw NumericalError("roundtrip: p0 outside ellipsoid (||xi|| = " +
                           std::to_string(xi.norm()) + ", residual " +
                           std::to_string(resid) + ")");
    }
  }

  const VectorXd y = evaluate_policy(sol, xi, zeta);
  const VectorXd p = disaggregate(basis, sys, p0, y, zeta);

  const auto [z, b] = evaluate_rhs(sys, zeta);
  const double agg_resid = (sys.D * p + b - p0).cwiseAbs().maxCoeff();
  if (agg_resid > 1e-8) {
    throw NumericalError("roundtrip: aggregation residual " + std::to_string(agg_resid) +
                         " exceeds 1e-8");
  }
  const double ineq_resid = (sys.W * p - z).maxCoeff();
  if (ineq_resid > 1e-6) {
    throw NumericalError("roundtrip: constraint violation " + std::to_string(ineq_resid) +
                         " exceeds 1e-6");
  }
  return p;
}

}  // namespace flexhull
