#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>

#include "flexhull/reduction.hpp"
#include "test_support.hpp"

using namespace flexhull;
namespace ft = flexhull::testing;

namespace {

void check_invariants(const MatrixXd& D, const NullspaceBasis& basis) {
  const int nT = static_cast<int>(D.cols());
  const int T = static_cast<int>(D.rows());
  MatrixXd B(nT, nT);
  B << basis.B1, basis.B2;
  CHECK((B.transpose() * B - MatrixXd::Identity(nT, nT)).cwiseAbs().maxCoeff() <=
        1e-10);
  if (basis.B2.cols() > 0) {
    CHECK((D * basis.B2).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK((basis.D_tilde - D * basis.B1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((basis.D_tilde * basis.D_tilde_inv - MatrixXd::Identity(T, T))
            .cwiseAbs()
            .maxCoeff() <= 1e-8 * std::max(1.0, basis.cond));
  // Sign convention: first nonzero entry of every basis column positive.
  for (int c = 0; c < nT; ++c) {
    for (int r = 0; r < nT; ++r) {
      if (std::abs(B(r, c)) > 1e-9) {
        CHECK(B(r, c) > 0.0);
        break;
      }
    }
  }
}

}  // namespace

TEST_CASE("single device: trivial basis") {
  const ConstraintSystem sys =
      assemble(build_feeder_from_json(ft::single_storage_json()));
  const NullspaceBasis basis = decompose(sys);
  CHECK(basis.B1.rows() == 1);
  CHECK(basis.B1.cols() == 1);
  CHECK(basis.B2.cols() == 0);
  CHECK(basis.B1(0, 0) == doctest::Approx(1.0));
  // D = [-1]; the sign convention lives in B1, not D_tilde.
  CHECK(basis.D_tilde(0, 0) == doctest::Approx(-1.0));
  check_invariants(sys.D, basis);
}

TEST_CASE("two identical devices split along the diagonal") {
  const ConstraintSystem sys = ft::two_device_system(1, 0.0);
  const NullspaceBasis basis = decompose(sys);
  CHECK(basis.B2.cols() == 1);
  check_invariants(sys.D, basis);
  // D = [1 1] => B1 = [1,1]/sqrt(2), D_tilde = sqrt(2).
  CHECK(basis.B1(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(basis.B1(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(basis.D_tilde(0, 0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("invariants hold across random aggregation maps") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 25; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 4);
    MatrixXd D = MatrixXd::Zero(T, n * T);
    for (int d = 0; d < n; ++d)
      for (int t = 0; t < T; ++t) D(t, d * T + t) = 0.5 + 2.0 * std::abs(normal(rng));
    const NullspaceBasis basis = decompose_matrix(D);
    check_invariants(D, basis);
  }
}

TEST_CASE("invariants hold for assembled synthetic feeders") {
  for (unsigned seed : {1u, 7u, 23u}) {
    const ConstraintSystem sys = assemble(
        build_feeder_from_json(ft::synthetic_feeder_json(seed, 10, 2, 0.1)));
    const NullspaceBasis basis = decompose(sys);
    check_invariants(sys.D, basis);
    const ReducedSystem red = reduce(sys, basis);
    CHECK(red.m == sys.rows());
    CHECK(red.ny == sys.cols() - sys.T);
    CHECK((red.A - red.W1 * basis.D_tilde_inv).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("repeat decomposition is bit-identical") {
  const ConstraintSystem sys = assemble(
      build_feeder_from_json(ft::synthetic_feeder_json(11, 12, 3, 0.2)));
  const NullspaceBasis a = decompose(sys);
  const NullspaceBasis b = decompose(sys);
  REQUIRE(a.B1.size() == b.B1.size());
  CHECK(std::memcmp(a.B1.data(), b.B1.data(), sizeof(double) * a.B1.size()) == 0);
  if (a.B2.size() > 0) {
    CHECK(std::memcmp(a.B2.data(), b.B2.data(), sizeof(double) * a.B2.size()) == 0);
  }
  CHECK(std::memcmp(a.D_tilde_inv.data(), b.D_tilde_inv.data(),
                    sizeof(double) * a.D_tilde_inv.size()) == 0);
}

TEST_CASE("rank-deficient aggregation maps are refused with a row name") {
  MatrixXd D = MatrixXd::Zero(2, 4);
  D.row(0) << 1, 0, 1, 0;
  D.row(1) = 2.0 * D.row(0);  // period 1 dependent on period 0
  CHECK_THROWS_AS(decompose_matrix(D), NumericalError);
}

TEST_CASE("condition number is reported; the rank gate precedes the warning") {
  MatrixXd D = MatrixXd::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 1e-4;
  const NullspaceBasis ok = decompose_matrix(D);
  CHECK(ok.cond == doctest::Approx(1e4).epsilon(1e-6));
  CHECK(ok.warnings.empty());

  // Condition numbers beyond 1e8 imply sigma_min under the rank tolerance,
  // so such instances are refused rather than warned through this path.
  D(1, 1) = 1e-10;
  CHECK_THROWS_AS(decompose_matrix(D), NumericalError);
}

TEST_CASE("reduction carries uncertainty into Theta") {
  const ConstraintSystem sys =
      assemble(build_feeder_from_json(ft::single_storage_load_json(0.25)));
  const ReducedSystem red = ft::reduce_of(sys);
  CHECK_FALSE(red.deterministic());
  // A = W1 * D_tilde^{-1}; Theta = z_theta + A*b_theta; with D = [-1] the
  // rate row p <= p_max becomes -p0 + ... and inherits -0.25 from b_theta.
  CHECK(red.Theta.rows() == red.m);
  CHECK(red.Theta.cols() == red.Nu * red.T);
  const VectorXd expected = sys.z_theta.col(0) + red.A * sys.b_theta.col(0);
  CHECK((red.theta_block(0).col(0) - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // Deterministic counterpart drops to an identically-zero Theta.
  const ConstraintSystem det =
      assemble(build_feeder_from_json(ft::single_storage_load_json(0.0)));
  CHECK(ft::reduce_of(det).deterministic());
}

TEST_CASE("disaggregation inverts the aggregate under any nullspace shift") {
  const ConstraintSystem sys = ft::two_device_system(2, 0.1);
  const NullspaceBasis basis = decompose(sys);
  const ReducedSystem red = reduce(sys, basis);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 10; ++k) {
    VectorXd p0(2), y(red.ny), zeta(2);
    for (int i = 0; i < 2; ++i) p0[i] = normal(rng);
    for (int i = 0; i < red.ny; ++i) y[i] = normal(rng);
    for (int i = 0; i < 2; ++i) zeta[i] = std::tanh(normal(rng));
    const VectorXd p = disaggregate(basis, sys, p0, y, zeta);
    const VectorXd b = sys.b_theta * zeta + sys.b_nu;
    CHECK((sys.D * p + b - p0).cwiseAbs().maxCoeff() <= 1e-10);
    // The recovered p splits as B1*x + B2*y with exactly the requested y.
    CHECK((basis.B2.transpose() * p - y).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
