#pragma once

#include "flexhull/model.hpp"

namespace flexhull {

// Orthogonal splitting p = B1 x + B2 y of the dispatch space: B2 spans
// null(D) (the directions invisible to the substation), B1 the complement.
// [B1 B2] has orthonormal columns, so x = B1'p, y = B2'p.
struct NullspaceBasis {
  MatrixXd B1;          // nT x T
  MatrixXd B2;          // nT x (n-1)T
  MatrixXd D_tilde;     // T x T, = D * B1, invertible
  MatrixXd D_tilde_inv; // T x T
  double cond = 0.0;    // spectral condition number of D_tilde
  std::vector<std::string> warnings;
};

// Reduced uncertain system of Proposition 1: feasibility of
// {p : Wp <= z(zeta), Dp + b(zeta) = p0} is equivalent to
// exists y: A p0 + W2 y <= Theta zeta + nu, with A = W1 * D_tilde^{-1}.
struct ReducedSystem {
  MatrixXd W1;     // m x T
  MatrixXd W2;     // m x (n-1)T
  MatrixXd A;      // m x T, = W1 * D_tilde_inv
  MatrixXd Theta;  // m x (Nu*T), u(zeta) = Theta*zeta + nu
  VectorXd nu;     // m
  int T = 0;
  int Nu = 0;
  int m = 0;
  int ny = 0;      // (n-1)T

  // Period-k block of Theta (columns k*Nu .. k*Nu+Nu-1).
  Eigen::Block<const MatrixXd> theta_block(int k) const {
    return Theta.block(0, k * Nu, Theta.rows(), Nu);
  }
  // True when uncertainty cannot move the system (Theta identically zero).
  bool deterministic(double tol = 0.0) const {
    return Theta.size() == 0 || Theta.cwiseAbs().maxCoeff() <= tol;
  }
};

// Rank-revealing orthogonal factorization of D'. Deterministic: fixed
// pivoting and the sign convention that each basis column's first nonzero
// entry is positive. Throws NumericalError naming dependent rows when
// rank(D) < T beyond tolerance 1e-8 * ||D||.
NullspaceBasis decompose(const ConstraintSystem& sys);
NullspaceBasis decompose_matrix(const MatrixXd& D);

ReducedSystem reduce(const ConstraintSystem& sys, const NullspaceBasis& basis);

// Proposition 1 recovery: p = B1 * D_tilde^{-1} * (p0 - b(zeta)) + B2 * y.
// Pure algebra; the caller checks W p <= z(zeta) separately.
VectorXd disaggregate(const NullspaceBasis& basis, const ConstraintSystem& sys,
                      const VectorXd& p0, const VectorXd& y, const VectorXd& zeta);

}  // namespace flexhull
