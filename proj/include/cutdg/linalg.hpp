#ifndef CUTDG_LINALG_HPP
#define CUTDG_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cutdg/core.hpp"

namespace cutdg {

// Sparse symmetric matrix in row-compressed storage.
class SparseSym {
 public:
  SparseSym() = default;
  explicit SparseSym(int n) : mat_(n, n) {}

  static SparseSym from_triplets(int n, const std::vector<Eigen::Triplet<double>>& triplets) {
    SparseSym A(n);
    A.mat_.setFromTriplets(triplets.begin(), triplets.end());
    A.mat_.prune(0.0);
    A.mat_.makeCompressed();
    return A;
  }

  int dim() const { return int(mat_.rows()); }
  std::int64_t nnz() const { return mat_.nonZeros(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat_ * x; }

  double max_asymmetry() const {
    Eigen::SparseMatrix<double> d = mat_ - Eigen::SparseMatrix<double>(mat_.transpose());
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
        m = std::max(m, std::abs(it.value()));
    return m;
  }

  double coeff(int i, int j) const { return mat_.coeff(i, j); }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(mat_); }

  const Eigen::SparseMatrix<double>& eigen() const { return mat_; }
  Eigen::SparseMatrix<double>& eigen() { return mat_; }

  void dump_coordinate(std::ostream& os) const {
    for (int k = 0; k < mat_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat_, k); it; ++it)
        os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }

 private:
  Eigen::SparseMatrix<double> mat_;
};

struct SolveReport {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||Ax-b|| / ||b||
  bool converged = false;
  int iterations = 0;     // 0 for the direct path
  std::string method;
};

// Direct sparse factorization up to N = 2e5, diagonally preconditioned CG
// beyond that (or as fallback when the factorization breaks down).
inline SolveReport solve(const SparseSym& A, const Eigen::VectorXd& b,
                         std::size_t direct_limit = 200000) {
  SolveReport rep;
  double bn = b.norm();
  if (bn == 0.0) {
    rep.x = Eigen::VectorXd::Zero(A.dim());
    rep.converged = true;
    rep.method = "trivial";
    return rep;
  }
  if (std::size_t(A.dim()) <= direct_limit) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A.eigen());
    if (ldlt.info() == Eigen::Success) {
      rep.x = ldlt.solve(b);
      rep.residual = (A.apply(rep.x) - b).norm() / bn;
      rep.method = "ldlt";
      if (rep.residual <= 1e-10) {
        rep.converged = true;
        return rep;
      }
    }
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(Eigen::Index(50.0 * std::sqrt(double(A.dim())) + 100));
  cg.compute(A.eigen());
  rep.x = cg.solve(b);
  rep.iterations = int(cg.iterations());
  rep.residual = (A.apply(rep.x) - b).norm() / bn;
  rep.converged = rep.residual <= 1e-10;
  rep.method = "cg";
  return rep;
}

struct CondReport {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double kappa = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Spectral condition number of an SPD matrix: power iteration for the top
// eigenvalue, inverse iteration (via a sparse factorization) for the bottom.
inline CondReport condition_number(const SparseSym& A, double tol = 1e-4,
                                   int max_iterations = 20000) {
  CondReport rep;
  const int n = A.dim();
  if (n == 0) return rep;

  auto power = [&](const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                   double& lambda) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.3 * std::sin(1.0 + i);  // deterministic start
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      Eigen::VectorXd w = op(v);
      double nw = w.norm();
      if (nw == 0.0) return false;
      lambda = v.dot(w);
      v = w / nw;
      ++rep.iterations;
      if (it > 2 && std::abs(lambda - prev) <= tol * std::abs(lambda)) return true;
      prev = lambda;
    }
    return false;
  };

  double lmax = 0.0;
  bool ok_max = power([&](const Eigen::VectorXd& v) { return A.apply(v); }, lmax);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A.eigen());
  bool ok_min = false;
  double inv_lmax = 0.0;
  if (ldlt.info() == Eigen::Success)
    ok_min = power([&](const Eigen::VectorXd& v) { return ldlt.solve(v).eval(); }, inv_lmax);

  rep.lambda_max = lmax;
  rep.lambda_min = (ok_min && inv_lmax > 0.0) ? 1.0 / inv_lmax : 0.0;
  rep.converged = ok_max && ok_min && rep.lambda_min > 0.0;
  rep.kappa = rep.converged ? rep.lambda_max / rep.lambda_min
                            : std::numeric_limits<double>::infinity();
  return rep;
}

// Smallest eigenvalue sign check used by SPD assertions in tests.
inline double smallest_eigenvalue_dense(const SparseSym& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.dense());
  return es.eigenvalues()(0);
}

// Numerical positive definiteness via the signs of the LDL^T pivots.
inline bool is_positive_definite(const SparseSym& A) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A.eigen());
  if (ldlt.info() != Eigen::Success) return false;
  return (ldlt.vectorD().array() > 0.0).all();
}

// Largest finite generalized eigenvalue of the pencil (A, B) for symmetric
// positive semi-definite A, B, computed on the complement of null(B).
// Returns +inf if A does not vanish on null(B) (the pencil is unbounded).
inline double generalized_max_eigenvalue(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                         double drop_tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esb(B);
  const Eigen::VectorXd& lb = esb.eigenvalues();
  double lmax_b = lb(lb.size() - 1);
  if (lmax_b <= 0.0) return std::numeric_limits<double>::infinity();
  std::vector<int> keep;
  for (int i = 0; i < lb.size(); ++i)
    if (lb(i) > drop_tol * lmax_b) keep.push_back(i);
  const int r = int(keep.size());
  Eigen::MatrixXd Q(B.rows(), r);
  Eigen::VectorXd s(r);
  for (int i = 0; i < r; ++i) {
    Q.col(i) = esb.eigenvectors().col(keep[std::size_t(i)]);
    s(i) = 1.0 / std::sqrt(lb(keep[std::size_t(i)]));
  }
  // A must be negligible on the dropped directions, else the ratio is unbounded
  if (r < B.rows()) {
    double amax = std::max(A.cwiseAbs().maxCoeff(), drop_tol);
    for (int i = 0; i < lb.size(); ++i) {
      if (lb(i) > drop_tol * lmax_b) continue;
      Eigen::VectorXd v = esb.eigenvectors().col(i);
      if (v.dot(A * v) > std::sqrt(drop_tol) * amax)
        return std::numeric_limits<double>::infinity();
    }
  }
  Eigen::MatrixXd R = s.asDiagonal() * (Q.transpose() * A * Q) * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esr(0.5 * (R + R.transpose()));
  return esr.eigenvalues()(esr.eigenvalues().size() - 1);
}

}  // namespace cutdg

#endif
