#include "flexhull/policies.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace flexhull {

using conic::Cone;
using conic::ConicProgram;
using conic::Constraint;
using conic::LinExpr;
using conic::Var;

const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kAffine: return "affine";
    case PolicyKind::kQuadratic: return "quadratic";
    case PolicyKind::kBox: return "box";
  }
  return "?";
}

double unit_ball_volume(int dim) {
  return std::pow(M_PI, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
}

double tightness_factor(int T) { return 9.19 * std::sqrt(std::log(T + 1.0)); }

VolumeReport volume(const Ellipsoid& ell) {
  const double det = ell.E.determinant();
  VolumeReport r;
  r.det_measure = det;
  r.log_measure = det > 0.0 ? std::log(det) : -std::numeric_limits<double>::infinity();
  r.lebesgue = det * unit_ball_volume(static_cast<int>(ell.E.rows()));
  r.convention = "ellipsoid: det(E); Lebesgue = det(E) * unit-ball volume";
  return r;
}

VolumeReport volume(const Hyperbox& box) {
  const VectorXd w = box.u - box.l;
  VolumeReport r;
  r.det_measure = w.prod();
  r.log_measure = w.minCoeff() > 0.0
                      ? w.array().log().sum()
                      : -std::numeric_limits<double>::infinity();
  r.lebesgue = r.det_measure;
  r.convention = "box: product of side lengths (Lebesgue)";
  return r;
}

VolumeReport volume(const PolicySolution& sol) {
  return sol.kind == PolicyKind::kBox ? volume(sol.box) : volume(sol.ellipsoid);
}

VectorXd evaluate_policy(const PolicySolution& sol, const VectorXd& xi,
                         const VectorXd& zeta) {
  const int ny = sol.ny;
  if (ny == 0) return VectorXd(0);
  switch (sol.kind) {
    case PolicyKind::kAffine:
    case PolicyKind::kBox: {
      VectorXd y = sol.affine.K * xi + sol.affine.gamma;
      for (int t = 0; t < sol.T; ++t) {
        y += sol.affine.L[t] * zeta.segment(t * sol.Nu, sol.Nu);
      }
      return y;
    }
    case PolicyKind::kQuadratic: {
      VectorXd u(xi.size() + zeta.size());
      u << xi, zeta;
      VectorXd y = sol.quadratic.L * u + sol.quadratic.c;
      for (int j = 0; j < ny; ++j) y[j] += u.dot(sol.quadratic.Q[j] * u);
      return y;
    }
  }
  throw NumericalError("evaluate_policy: unknown policy kind");
}

namespace {

// Shared layout facts for one formulation build.
struct Dims {
  int T, Nu, m, ny;
  bool with_zeta;  // false when Theta == 0 and the zeta blocks are dropped
  int NuT() const { return Nu * T; }
  int du() const { return with_zeta ? T + Nu * T : T; }  // [xi; zeta] length
};

Dims make_dims(const ReducedSystem& red) {
  Dims d{red.T, red.Nu, red.m, red.ny, !red.deterministic()};
  return d;
}

// (a_i E)_j as a LinExpr contribution: sum_c a_i[c] * E(c, j).
void add_aE_terms(LinExpr& ex, const ConicProgram& prog, Var E, const RowVectorXd& a_i,
                  int j, double scale) {
  for (int c = 0; c < a_i.size(); ++c) {
    if (a_i[c] != 0.0) ex.add(prog.sym_slot(E, c, j), scale * a_i[c]);
  }
}

void finish(PolicySolution& sol, const conic::Solution& cs) {
  sol.status = cs.status;
  sol.solve_seconds = cs.solve_seconds;
  sol.iterations = cs.iterations;
  sol.message = cs.message;
}

}  // namespace

PolicySolution solve_affine(const ReducedSystem& red,
                            const conic::SolverSettings& settings) {
  const Dims d = make_dims(red);
  ConicProgram prog;
  Var E = prog.add_symmetric("E", d.T);
  Var t = prog.add_scalar("t");
  Var e = prog.add_vector("e", d.T);
  Var K = prog.add_vector("K", d.ny * d.T);            // row-major ny x T
  Var L = d.with_zeta ? prog.add_vector("L", d.ny * d.NuT()) : Var{};
  Var g = prog.add_vector("gamma", d.ny);
  Var t0 = prog.add_vector("t0", d.m);                  // ||a_i E + w2_i K||
  Var tk = d.with_zeta ? prog.add_vector("tk", d.m * d.T) : Var{};

  conic::add_logdet_epigraph(prog, E, t);
  prog.objective_coeff(t, 0, 1.0);

  for (int i = 0; i < d.m; ++i) {
    const RowVectorXd a_i = red.A.row(i);
    const RowVectorXd w2_i = d.ny ? RowVectorXd(red.W2.row(i)) : RowVectorXd(0);
    const std::string ri = "row[" + std::to_string(i) + "]";

    // ||a_i E + w2_i K|| <= t0_i.
    std::vector<LinExpr> soc;
    soc.push_back(prog.entry(t0, i));
    for (int j = 0; j < d.T; ++j) {
      LinExpr ex;
      add_aE_terms(ex, prog, E, a_i, j, 1.0);
      for (int s = 0; s < d.ny; ++s) {
        if (w2_i[s] != 0.0) ex.add(prog.slot(K, s * d.T + j), w2_i[s]);
      }
      soc.push_back(std::move(ex));
    }
    prog.add_soc(std::move(soc), ri + ".xi_norm");

    // ||w2_i L_k - theta_{k,i}|| <= tk_{i,k} per period.
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) {
        std::vector<LinExpr> rows;
        rows.push_back(prog.entry(tk, i * d.T + k));
        for (int gdx = 0; gdx < d.Nu; ++gdx) {
          LinExpr ex;
          ex.constant = -red.Theta(i, k * d.Nu + gdx);
          for (int s = 0; s < d.ny; ++s) {
            if (w2_i[s] != 0.0) {
              ex.add(prog.slot(L, s * d.NuT() + k * d.Nu + gdx), w2_i[s]);
            }
          }
          rows.push_back(std::move(ex));
        }
        prog.add_soc(std::move(rows), ri + ".zeta_norm[" + std::to_string(k) + "]");
      }
    }

    // nu_i - a_i e - w2_i gamma - t0_i - sum_k tk_{i,k} >= 0.
    LinExpr lin(red.nu[i]);
    for (int j = 0; j < d.T; ++j) {
      if (a_i[j] != 0.0) lin.add(prog.slot(e, j), -a_i[j]);
    }
    for (int s = 0; s < d.ny; ++s) {
      if (w2_i[s] != 0.0) lin.add(prog.slot(g, s), -w2_i[s]);
    }
    lin.add(prog.slot(t0, i), -1.0);
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) lin.add(prog.slot(tk, i * d.T + k), -1.0);
    }
    prog.add_nonneg(std::move(lin), ri + ".robust");
  }

  conic::Solution cs = conic::solve(prog, settings);
  PolicySolution sol;
  sol.kind = PolicyKind::kAffine;
  sol.T = d.T;
  sol.Nu = d.Nu;
  sol.ny = d.ny;
  finish(sol, cs);
  if (!sol.optimal()) return sol;

  sol.ellipsoid.E = prog.symmetric_value(cs, E);
  sol.ellipsoid.e = prog.vector_value(cs, e);
  sol.ellipsoid.logdet = prog.value(cs, t);
  sol.affine.K = MatrixXd::Zero(d.ny, d.T);
  sol.affine.gamma = prog.vector_value(cs, g);
  sol.affine.L.assign(d.T, MatrixXd::Zero(d.ny, d.Nu));
  for (int s = 0; s < d.ny; ++s) {
    for (int j = 0; j < d.T; ++j) sol.affine.K(s, j) = cs.x[prog.slot(K, s * d.T + j)];
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) {
        for (int gdx = 0; gdx < d.Nu; ++gdx) {
          sol.affine.L[k](s, gdx) = cs.x[prog.slot(L, s * d.NuT() + k * d.Nu + gdx)];
        }
      }
    }
  }
  sol.affine.alpha = VectorXd::Zero(d.m);
  for (int i = 0; i < d.m; ++i) {
    double a = cs.x[prog.slot(t0, i)];
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) a += cs.x[prog.slot(tk, i * d.T + k)];
    }
    sol.affine.alpha[i] = a;
  }
  return sol;
}

PolicySolution solve_quadratic(const ReducedSystem& red,
                               const conic::SolverSettings& settings,
                               const SizeBudget& budget) {
  const Dims d = make_dims(red);
  const int du = d.du();
  const int side = 1 + du;
  if (side > budget.max_lmi_side ||
      static_cast<long>(d.m) * std::max(d.ny, 1) > budget.max_q_entries) {
    throw SizeBudgetError(
        "quadratic formulation refused: LMI side " + std::to_string(side) + " (budget " +
        std::to_string(budget.max_lmi_side) + "), m*ny = " +
        std::to_string(static_cast<long>(d.m) * std::max(d.ny, 1)) + " (budget " +
        std::to_string(budget.max_q_entries) + ")");
  }
  // lambda columns: k = 0 (S-lemma constant), k = 1 (xi ball), then one
  // per period's zeta ball when uncertainty is active.
  const int n_lam = d.with_zeta ? d.T + 2 : 2;

  ConicProgram prog;
  Var E = prog.add_symmetric("E", d.T);
  Var t = prog.add_scalar("t");
  Var e = prog.add_vector("e", d.T);
  std::vector<Var> Q;
  for (int j = 0; j < d.ny; ++j) Q.push_back(prog.add_symmetric("Q[" + std::to_string(j) + "]", du));
  Var L = prog.add_vector("L", d.ny * du);  // row-major ny x du
  Var c = prog.add_vector("c", d.ny);
  Var lam = prog.add_vector("lambda", d.m * n_lam);  // row-major m x n_lam

  conic::add_logdet_epigraph(prog, E, t);
  prog.objective_coeff(t, 0, 1.0);

  for (int i = 0; i < d.m * n_lam; ++i) {
    prog.add_nonneg(prog.entry(lam, i), "lambda_nonneg[" + std::to_string(i) + "]");
  }

  // Ball index of coordinate r of u = [xi; zeta]: 1 for xi, 2+t for zeta_t.
  auto lam_col_of = [&](int r) { return r < d.T ? 1 : 2 + (r - d.T) / d.Nu; };

  for (int i = 0; i < d.m; ++i) {
    const RowVectorXd a_i = red.A.row(i);
    const RowVectorXd w2_i = d.ny ? RowVectorXd(red.W2.row(i)) : RowVectorXd(0);
    const std::string ri = "row[" + std::to_string(i) + "]";

    // nu_i - sum_k lambda_{k,i} - a_i e - w2_i c >= 0.
    LinExpr lin(red.nu[i]);
    for (int k = 0; k < n_lam; ++k) lin.add(prog.slot(lam, i * n_lam + k), -1.0);
    for (int j = 0; j < d.T; ++j) {
      if (a_i[j] != 0.0) lin.add(prog.slot(e, j), -a_i[j]);
    }
    for (int s = 0; s < d.ny; ++s) {
      if (w2_i[s] != 0.0) lin.add(prog.slot(c, s), -w2_i[s]);
    }
    prog.add_nonneg(std::move(lin), ri + ".robust");

    // LMI over (1 + du): [[lambda_0, -rho], [-rho', J - sum_j w2_ij Q_j]] PSD
    // with rho = ([a_i E, -theta_i] + w2_i L) / 2.
    Constraint lmi;
    lmi.cone = Cone::kPsd;
    lmi.psd_side = side;
    lmi.name = ri + ".slemma";
    lmi.rows.reserve(side * (side + 1) / 2);
    for (int I = 0; I < side; ++I) {
      for (int J = 0; J <= I; ++J) {
        LinExpr ex;
        if (I == 0) {
          ex.add(prog.slot(lam, i * n_lam + 0), 1.0);  // lambda_{0,i}
        } else if (J == 0) {
          const int r = I - 1;
          // -rho_r
          if (r < d.T) {
            add_aE_terms(ex, prog, E, a_i, r, -0.5);
          } else {
            ex.constant += 0.5 * red.Theta(i, r - d.T);
          }
          for (int s = 0; s < d.ny; ++s) {
            if (w2_i[s] != 0.0) ex.add(prog.slot(L, s * du + r), -0.5 * w2_i[s]);
          }
        } else {
          const int r = I - 1, rp = J - 1;
          if (r == rp) ex.add(prog.slot(lam, i * n_lam + lam_col_of(r)), 1.0);
          for (int s = 0; s < d.ny; ++s) {
            if (w2_i[s] != 0.0) ex.add(prog.sym_slot(Q[s], r, rp), -w2_i[s]);
          }
        }
        lmi.rows.push_back(std::move(ex));
      }
    }
    prog.add_constraint(std::move(lmi));
  }

  conic::Solution cs = conic::solve(prog, settings);
  PolicySolution sol;
  sol.kind = PolicyKind::kQuadratic;
  sol.T = d.T;
  sol.Nu = d.Nu;
  sol.ny = d.ny;
  sol.quadratic.zeta_dropped = !d.with_zeta;
  finish(sol, cs);
  if (!sol.optimal()) return sol;

  sol.ellipsoid.E = prog.symmetric_value(cs, E);
  sol.ellipsoid.e = prog.vector_value(cs, e);
  sol.ellipsoid.logdet = prog.value(cs, t);

  // Policies are stored in full [xi; zeta] coordinates; dropped zeta
  // blocks come back as zeros.
  const int du_full = d.T + d.NuT();
  sol.quadratic.Q.assign(d.ny, MatrixXd::Zero(du_full, du_full));
  sol.quadratic.L = MatrixXd::Zero(d.ny, du_full);
  sol.quadratic.c = prog.vector_value(cs, c);
  for (int j = 0; j < d.ny; ++j) {
    const MatrixXd qj = prog.symmetric_value(cs, Q[j]);
    sol.quadratic.Q[j].topLeftCorner(du, du) = qj;
    for (int r = 0; r < du; ++r) sol.quadratic.L(j, r) = cs.x[prog.slot(L, j * du + r)];
  }
  sol.quadratic.lambda = MatrixXd::Zero(d.m, d.T + 2);
  for (int i = 0; i < d.m; ++i) {
    for (int k = 0; k < n_lam; ++k) {
      sol.quadratic.lambda(i, k) = cs.x[prog.slot(lam, i * n_lam + k)];
    }
  }
  return sol;
}

PolicySolution solve_box(const ReducedSystem& red,
                         const conic::SolverSettings& settings) {
  const Dims d = make_dims(red);
  ConicProgram prog;
  Var dvar = prog.add_vector("d", d.T);
  Var r = prog.add_vector("r", d.T);  // r_t <= log d_t
  Var e = prog.add_vector("e", d.T);
  Var K = prog.add_vector("K", d.ny * d.T);
  Var L = d.with_zeta ? prog.add_vector("L", d.ny * d.NuT()) : Var{};
  Var g = prog.add_vector("gamma", d.ny);
  Var s1 = prog.add_vector("s1", d.m * d.T);  // l1 majorants per row
  Var tk = d.with_zeta ? prog.add_vector("tk", d.m * d.T) : Var{};

  for (int j = 0; j < d.T; ++j) {
    prog.add_nonneg(prog.entry(dvar, j), "d_nonneg[" + std::to_string(j) + "]");
    prog.add_log(prog.entry(r, j), prog.entry(dvar, j),
                 "logd[" + std::to_string(j) + "]");
    prog.objective_coeff(r, j, 1.0);
  }

  for (int i = 0; i < d.m; ++i) {
    const RowVectorXd a_i = red.A.row(i);
    const RowVectorXd w2_i = d.ny ? RowVectorXd(red.W2.row(i)) : RowVectorXd(0);
    const std::string ri = "row[" + std::to_string(i) + "]";

    // s1_{i,j} >= | a_i[j] d_j + (w2_i K)_j |.
    for (int j = 0; j < d.T; ++j) {
      for (double sign : {+1.0, -1.0}) {
        LinExpr ex = prog.entry(s1, i * d.T + j);
        if (a_i[j] != 0.0) ex.add(prog.slot(dvar, j), sign * -a_i[j]);
        for (int s = 0; s < d.ny; ++s) {
          if (w2_i[s] != 0.0) ex.add(prog.slot(K, s * d.T + j), sign * -w2_i[s]);
        }
        prog.add_nonneg(std::move(ex),
                        ri + ".abs[" + std::to_string(j) + (sign > 0 ? "+" : "-") + "]");
      }
    }
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) {
        std::vector<LinExpr> rows;
        rows.push_back(prog.entry(tk, i * d.T + k));
        for (int gdx = 0; gdx < d.Nu; ++gdx) {
          LinExpr ex;
          ex.constant = -red.Theta(i, k * d.Nu + gdx);
          for (int s = 0; s < d.ny; ++s) {
            if (w2_i[s] != 0.0) {
              ex.add(prog.slot(L, s * d.NuT() + k * d.Nu + gdx), w2_i[s]);
            }
          }
          rows.push_back(std::move(ex));
        }
        prog.add_soc(std::move(rows), ri + ".zeta_norm[" + std::to_string(k) + "]");
      }
    }
    LinExpr lin(red.nu[i]);
    for (int j = 0; j < d.T; ++j) {
      if (a_i[j] != 0.0) lin.add(prog.slot(e, j), -a_i[j]);
      lin.add(prog.slot(s1, i * d.T + j), -1.0);
    }
    for (int s = 0; s < d.ny; ++s) {
      if (w2_i[s] != 0.0) lin.add(prog.slot(g, s), -w2_i[s]);
    }
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) lin.add(prog.slot(tk, i * d.T + k), -1.0);
    }
    prog.add_nonneg(std::move(lin), ri + ".robust");
  }

  conic::Solution cs = conic::solve(prog, settings);
  PolicySolution sol;
  sol.kind = PolicyKind::kBox;
  sol.T = d.T;
  sol.Nu = d.Nu;
  sol.ny = d.ny;
  finish(sol, cs);
  if (!sol.optimal()) return sol;

  const VectorXd dv = prog.vector_value(cs, dvar);
  const VectorXd ev = prog.vector_value(cs, e);
  sol.box.l = ev - dv;
  sol.box.u = ev + dv;
  sol.box.logvol = (2.0 * dv.array()).log().sum();
  sol.affine.K = MatrixXd::Zero(d.ny, d.T);
  sol.affine.gamma = prog.vector_value(cs, g);
  sol.affine.L.assign(d.T, MatrixXd::Zero(d.ny, d.Nu));
  for (int s = 0; s < d.ny; ++s) {
    for (int j = 0; j < d.T; ++j) sol.affine.K(s, j) = cs.x[prog.slot(K, s * d.T + j)];
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) {
        for (int gdx = 0; gdx < d.Nu; ++gdx) {
          sol.affine.L[k](s, gdx) = cs.x[prog.slot(L, s * d.NuT() + k * d.Nu + gdx)];
        }
      }
    }
  }
  sol.affine.alpha = VectorXd::Zero(d.m);
  for (int i = 0; i < d.m; ++i) {
    double a = 0.0;
    for (int j = 0; j < d.T; ++j) a += cs.x[prog.slot(s1, i * d.T + j)];
    if (d.with_zeta) {
      for (int k = 0; k < d.T; ++k) a += cs.x[prog.slot(tk, i * d.T + k)];
    }
    sol.affine.alpha[i] = a;
  }
  return sol;
}

}  // namespace flexhull
