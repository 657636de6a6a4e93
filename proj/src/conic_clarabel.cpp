#include <Eigen/Sparse>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "flexhull/conic.hpp"

// C ABI of the bundled Clarabel interior-point backend (Rust staticlib).
extern "C" int flexhull_clarabel_solve(
    size_t n_vars, size_t n_rows, const double* q, const size_t* a_colptr,
    const size_t* a_rowval, const double* a_nzval, size_t a_nnz, const double* b,
    size_t n_cones, const int* cone_tags, const size_t* cone_dims, double feas_tol,
    double gap_tol, double time_limit, unsigned max_iter, int verbose, double* x_out,
    int* status_out, double* obj_out, int* iters_out, double* solve_time_out,
    double* r_prim_out, double* r_dual_out, char* msg_out, size_t msg_cap);

namespace flexhull::conic {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

bool env_verbose() {
  const char* v = std::getenv("FLEXHULL_SOLVER_LOG");
  return v != nullptr && v[0] != '\0' && !(v[0] == '0' && v[1] == '\0');
}

}  // namespace

Solution solve(const ConicProgram& prog, const SolverSettings& settings) {
  // Single-threaded BLAS keeps repeated solves bit-reproducible.
  ::setenv("OPENBLAS_NUM_THREADS", "1", /*overwrite=*/0);

  prog.validate();
  const int n = prog.num_scalars();

  // Clarabel standard form: min q'x s.t. Ax + s = b, s in K. A constraint
  // g(x) = Fx + f in K maps to A = -F, b = f, with PSD triangle rows
  // svec-scaled (off-diagonal times sqrt(2)).
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> b;
  std::vector<int> tags;
  std::vector<size_t> dims;

  int row = 0;
  for (const auto& c : prog.constraints()) {
    switch (c.cone) {
      case Cone::kZero: tags.push_back(0); dims.push_back(c.rows.size()); break;
      case Cone::kNonneg: tags.push_back(1); dims.push_back(c.rows.size()); break;
      case Cone::kSoc: tags.push_back(2); dims.push_back(c.rows.size()); break;
      case Cone::kExp: tags.push_back(3); dims.push_back(3); break;
      case Cone::kPsd: tags.push_back(4); dims.push_back(c.psd_side); break;
    }
    int tri_i = 0, tri_j = 0;  // running lower-triangle position for PSD scaling
    for (const auto& g : c.rows) {
      double scale = 1.0;
      if (c.cone == Cone::kPsd) {
        scale = (tri_i == tri_j) ? 1.0 : kSqrt2;
        if (++tri_j > tri_i) {
          ++tri_i;
          tri_j = 0;
        }
      }
      for (const auto& [col, coeff] : g.terms) {
        trips.emplace_back(row, col, -scale * coeff);
      }
      b.push_back(scale * g.constant);
      ++row;
    }
  }
  const int m = row;

  Eigen::SparseMatrix<double> A(m, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();

  std::vector<size_t> colptr(n + 1), rowval(A.nonZeros());
  for (int j = 0; j <= n; ++j) colptr[j] = static_cast<size_t>(A.outerIndexPtr()[j]);
  for (Eigen::Index k = 0; k < A.nonZeros(); ++k) {
    rowval[k] = static_cast<size_t>(A.innerIndexPtr()[k]);
  }

  const VectorXd c_max = prog.objective();
  const VectorXd q = -c_max;  // maximize -> minimize

  Solution sol;
  sol.x = VectorXd::Zero(n);
  int status = -1, iters = 0;
  double obj = 0.0, solve_time = 0.0, r_prim = 0.0, r_dual = 0.0;
  char msg[256] = {0};

  const int rc = flexhull_clarabel_solve(
      static_cast<size_t>(n), static_cast<size_t>(m), q.data(), colptr.data(),
      rowval.data(), A.valuePtr(), static_cast<size_t>(A.nonZeros()), b.data(),
      tags.size(), tags.data(), dims.data(), settings.feas_tol, settings.gap_tol,
      settings.time_limit_s, static_cast<unsigned>(settings.max_iter),
      (settings.verbose || env_verbose()) ? 1 : 0, sol.x.data(), &status, &obj, &iters,
      &solve_time, &r_prim, &r_dual, msg, sizeof(msg));

  sol.iterations = iters;
  sol.solve_seconds = solve_time;
  sol.r_primal = r_prim;
  sol.r_dual = r_dual;
  sol.message = msg;

  if (rc != 0) {
    sol.status = SolveStatus::kNumericalFailure;
    sol.message = "backend error: " + sol.message;
    return sol;
  }
  switch (status) {
    case 0:  // solved
    case 6:  // solved to reduced accuracy; residuals carried in the report
      sol.status = SolveStatus::kOptimal;
      break;
    case 1: sol.status = SolveStatus::kInfeasible; break;
    case 2: sol.status = SolveStatus::kUnbounded; break;
    case 4: sol.status = SolveStatus::kTimeLimit; break;
    default: sol.status = SolveStatus::kNumericalFailure; break;
  }
  if (sol.status == SolveStatus::kOptimal) {
    sol.objective = c_max.dot(sol.x);
  } else {
    sol.x.setZero();  // non-optimal x is a certificate, not a primal point
  }
  return sol;
}

}  // namespace flexhull::conic
