#include "flexhull/reduction.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace flexhull {

namespace {

// Deterministic sign convention: flip each column so its first entry of
// magnitude above a relative floor is positive.
void fix_column_signs(MatrixXd& B) {
  for (int c = 0; c < B.cols(); ++c) {
    const double floor = 1e-12 * std::max(1.0, B.col(c).cwiseAbs().maxCoeff());
    for (int r = 0; r < B.rows(); ++r) {
      if (std::abs(B(r, c)) > floor) {
        if (B(r, c) < 0.0) B.col(c) = -B.col(c);
        break;
      }
    }
  }
}

}  // namespace

NullspaceBasis decompose_matrix(const MatrixXd& D) {
  const int T = static_cast<int>(D.rows());
  const int nT = static_cast<int>(D.cols());
  if (T < 1 || nT < T) {
    throw NumericalError("decompose: D must be T x nT with nT >= T");
  }

  // Householder QR of D' with column pivoting: Q's leading T columns span
  // range(D'), the rest span null(D). Eigen's pivoting is deterministic
  // (greedy max-norm, lowest index on ties).
  Eigen::ColPivHouseholderQR<MatrixXd> qr(D.transpose());
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(nT, nT);

  // Rank check against the spectral norm of D.
  Eigen::JacobiSVD<MatrixXd> svd(D);
  const VectorXd sv = svd.singularValues();
  const double norm_d = sv[0];
  const double rank_tol = 1e-8 * std::max(norm_d, 1.0);
  if (sv.minCoeff() <= rank_tol) {
    // Name dependent rows: those whose removal does not drop the rank.
    std::string rows;
    for (int r = 0; r < T; ++r) {
      MatrixXd Dr(T - 1, nT);
      Dr << D.topRows(r), D.bottomRows(T - 1 - r);
      Eigen::JacobiSVD<MatrixXd> s2(Dr);
      const double smin = (T - 1 == 0) ? 1.0 : s2.singularValues().minCoeff();
      if (smin > rank_tol) {
        if (!rows.empty()) rows += ", ";
        rows += std::to_string(r);
      }
    }
    throw NumericalError(
        "decompose: D is rank deficient (sigma_min = " + std::to_string(sv.minCoeff()) +
        "); dependent rows: {" + (rows.empty() ? "all" : rows) + "}");
  }

  NullspaceBasis basis;
  basis.B1 = Q.leftCols(T);
  basis.B2 = Q.rightCols(nT - T);
  fix_column_signs(basis.B1);
  fix_column_signs(basis.B2);
  basis.D_tilde = D * basis.B1;

  Eigen::JacobiSVD<MatrixXd> svd_dt(basis.D_tilde);
  const VectorXd sdt = svd_dt.singularValues();
  basis.cond = sdt[0] / sdt[sdt.size() - 1];
  if (basis.cond > 1e8) {
    basis.warnings.push_back("D_tilde condition number " + std::to_string(basis.cond) +
                             " exceeds 1e8; downstream solves may be inaccurate");
  }
  basis.D_tilde_inv = basis.D_tilde.partialPivLu().inverse();
  return basis;
}

NullspaceBasis decompose(const ConstraintSystem& sys) { return decompose_matrix(sys.D); }

ReducedSystem reduce(const ConstraintSystem& sys, const NullspaceBasis& basis) {
  if (basis.B1.rows() != sys.W.cols()) {
    throw NumericalError("reduce: basis does not match system dimensions");
  }
  ReducedSystem red;
  red.T = sys.T;
  red.Nu = sys.Nu;
  red.m = static_cast<int>(sys.W.rows());
  red.ny = static_cast<int>(basis.B2.cols());
  red.W1 = sys.W * basis.B1;
  red.W2 = sys.W * basis.B2;
  red.A = red.W1 * basis.D_tilde_inv;
  // u(zeta) = z(zeta) + W1 D~^{-1} b(zeta) = Theta zeta + nu.
  red.Theta = sys.z_theta + red.A * sys.b_theta;
  red.nu = sys.z_nu + red.A * sys.b_nu;
  return red;
}

VectorXd disaggregate(const NullspaceBasis& basis, const ConstraintSystem& sys,
                      const VectorXd& p0, const VectorXd& y, const VectorXd& zeta) {
  if (p0.size() != sys.T) {
    throw NumericalError("disaggregate: p0 must have length T");
  }
  if (y.size() != basis.B2.cols()) {
    throw NumericalError("disaggregate: y must have length (n-1)T");
  }
  const VectorXd b = sys.b_theta * zeta + sys.b_nu;
  VectorXd p = basis.B1 * (basis.D_tilde_inv * (p0 - b));
  if (y.size() > 0) p += basis.B2 * y;
  return p;
}

}  // namespace flexhull
