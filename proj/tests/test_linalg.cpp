#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cutdg/linalg.hpp"

using namespace cutdg;

namespace {

SparseSym from_dense(const Eigen::MatrixXd& M) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (M(i, j) != 0.0) t.emplace_back(i, j, M(i, j));
  return SparseSym::from_triplets(int(M.rows()), t);
}

}  // namespace

TEST_CASE("identity system returns the right-hand side") {
  SparseSym A = from_dense(Eigen::MatrixXd::Identity(7, 7));
  Eigen::VectorXd b(7);
  for (int i = 0; i < 7; ++i) b(i) = 0.5 * i - 1.0;
  SolveReport rep = solve(A, b);
  REQUIRE(rep.converged);
  CHECK((rep.x - b).norm() < 1e-12);
}

TEST_CASE("zero right-hand side short-circuits to the zero solution") {
  SparseSym A = from_dense(Eigen::MatrixXd::Identity(4, 4) * 3.0);
  SolveReport rep = solve(A, Eigen::VectorXd::Zero(4));
  REQUIRE(rep.converged);
  CHECK(rep.x.norm() == 0.0);
}

TEST_CASE("tridiagonal Laplacian solve matches the dense oracle") {
  const int n = 5;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    M(i, i) = 2.0;
    if (i > 0) M(i, i - 1) = -1.0;
    if (i + 1 < n) M(i, i + 1) = -1.0;
  }
  Eigen::VectorXd b(n);
  b << 1.0, -2.0, 0.5, 3.0, -1.0;
  SolveReport rep = solve(from_dense(M), b);
  REQUIRE(rep.converged);
  Eigen::VectorXd oracle = M.fullPivLu().solve(b);
  CHECK((rep.x - oracle).norm() < 1e-12);
  CHECK(rep.residual <= 1e-10);
}

TEST_CASE("condition number of simple diagonal matrices") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 10.0;
  CondReport rep = condition_number(from_dense(D));
  REQUIRE(rep.converged);
  CHECK(rep.kappa == Catch::Approx(10.0).epsilon(1e-3));

  CondReport id = condition_number(from_dense(Eigen::MatrixXd::Identity(6, 6)));
  REQUIRE(id.converged);
  CHECK(id.kappa == Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("condition number matches the dense eigensolver on a random SPD matrix") {
  const int n = 50;
  std::mt19937 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = gauss(rng);
  Eigen::MatrixXd M = R.transpose() * R + Eigen::MatrixXd::Identity(n, n);
  CondReport rep = condition_number(from_dense(M), 1e-7);
  REQUIRE(rep.converged);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  double oracle = es.eigenvalues()(n - 1) / es.eigenvalues()(0);
  CHECK(std::abs(rep.kappa - oracle) / oracle < 1e-3);
}

TEST_CASE("condition number is invariant under positive scaling") {
  const int n = 30;
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = gauss(rng);
  Eigen::MatrixXd M = R.transpose() * R + Eigen::MatrixXd::Identity(n, n);
  CondReport a = condition_number(from_dense(M), 1e-8);
  CondReport b = condition_number(from_dense(Eigen::MatrixXd(37.5 * M)), 1e-8);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(std::abs(a.kappa - b.kappa) / a.kappa < 1e-6);
}

TEST_CASE("positive definiteness detection") {
  Eigen::MatrixXd spd = Eigen::MatrixXd::Identity(3, 3);
  spd(0, 1) = spd(1, 0) = 0.5;
  CHECK(is_positive_definite(from_dense(spd)));

  Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(3, 3);
  indef(2, 2) = -1.0;
  CHECK_FALSE(is_positive_definite(from_dense(indef)));
}

TEST_CASE("generalized maximum eigenvalue of matrix pencils") {
  // (A, A) -> 1
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
  A(0, 0) = 3.0;
  CHECK(generalized_max_eigenvalue(A, A) == Catch::Approx(1.0).margin(1e-10));

  // diag(4, 1) against diag(1, 1): max ratio 4
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
  C(0, 0) = 4.0;
  CHECK(generalized_max_eigenvalue(C, B) == Catch::Approx(4.0).margin(1e-10));

  // singular B with A active on its null space: unbounded pencil
  Eigen::MatrixXd Bs = Eigen::MatrixXd::Zero(2, 2);
  Bs(0, 0) = 1.0;
  CHECK(std::isinf(generalized_max_eigenvalue(B, Bs)));

  // singular B with A vanishing on the same null space: finite restriction
  Eigen::MatrixXd As = Eigen::MatrixXd::Zero(2, 2);
  As(0, 0) = 2.0;
  CHECK(generalized_max_eigenvalue(As, Bs) == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("sparse matrix utilities") {
  std::vector<Eigen::Triplet<double>> t;
  t.emplace_back(0, 0, 1.0);
  t.emplace_back(0, 0, 1.5);  // duplicates accumulate
  t.emplace_back(1, 0, 2.0);
  t.emplace_back(0, 1, 2.0);
  t.emplace_back(1, 1, 4.0);
  SparseSym A = SparseSym::from_triplets(2, t);
  CHECK(A.coeff(0, 0) == 2.5);
  CHECK(A.max_asymmetry() == 0.0);
  CHECK(A.dim() == 2);
  Eigen::VectorXd v(2);
  v << 1.0, -1.0;
  Eigen::VectorXd w = A.apply(v);
  CHECK(w(0) == Catch::Approx(0.5));
  CHECK(w(1) == Catch::Approx(-2.0));
  CHECK(smallest_eigenvalue_dense(A) > 0.0);
}
