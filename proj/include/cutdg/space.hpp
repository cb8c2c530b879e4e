#ifndef CUTDG_SPACE_HPP
#define CUTDG_SPACE_HPP

#include <Eigen/Dense>

#include "cutdg/quadrature.hpp"

namespace cutdg {

// Broken P_k space on a set of active elements. Each element carries an
// orthonormal modal basis built on the FULL element, so the full-element
// mass matrix is the identity even on cut elements; discrete functions
// extend polynomially over the whole element.
struct BrokenSpace {
  const BackgroundMesh* mesh = nullptr;
  int order = 1;
  int ndof_el = 0;
  std::vector<int> active;      // sorted element indices
  std::vector<int> active_pos;  // element -> position in active, or -1

  std::vector<std::array<int, 3>> exponents;  // monomial multi-indices, degree <= k
  std::vector<Vec> centers;                   // per active element
  std::vector<double> scales;                 // per active element (h_T)
  std::vector<Eigen::MatrixXd> coeffs;        // basis = C * monomials

  std::size_t n_dofs() const { return active.size() * std::size_t(ndof_el); }
  int global_dof(int element, int local) const {
    return active_pos[std::size_t(element)] * ndof_el + local;
  }
};

struct FieldVector {
  std::vector<double> coeffs;
  const BrokenSpace* space = nullptr;
};

namespace detail {

inline std::vector<std::array<int, 3>> monomial_exponents(int dim, int k) {
  std::vector<std::array<int, 3>> out;
  for (int deg = 0; deg <= k; ++deg) {
    if (dim == 2) {
      for (int a = deg; a >= 0; --a) out.push_back({a, deg - a, 0});
    } else {
      for (int a = deg; a >= 0; --a)
        for (int b = deg - a; b >= 0; --b) out.push_back({a, b, deg - a - b});
    }
  }
  return out;
}

inline double mono_eval(const std::array<int, 3>& e, const Vec& xi) {
  double r = 1.0;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < e[std::size_t(a)]; ++i) r *= xi[a];
  return r;
}

// D^alpha of the scaled monomial xi^e, evaluated at xi; includes the
// falling-factorial coefficients but not the chain-rule 1/s^|alpha| factor.
inline double mono_deriv(const std::array<int, 3>& e, const std::array<int, 3>& alpha,
                         const Vec& xi) {
  double coef = 1.0;
  std::array<int, 3> rem{};
  for (int a = 0; a < 3; ++a) {
    if (alpha[std::size_t(a)] > e[std::size_t(a)]) return 0.0;
    for (int i = 0; i < alpha[std::size_t(a)]; ++i) coef *= double(e[std::size_t(a)] - i);
    rem[std::size_t(a)] = e[std::size_t(a)] - alpha[std::size_t(a)];
  }
  return coef * mono_eval(rem, xi);
}

inline std::vector<std::array<int, 3>> multi_indices_of_order(int dim, int j) {
  std::vector<std::array<int, 3>> out;
  if (dim == 2) {
    for (int a = j; a >= 0; --a) out.push_back({a, j - a, 0});
  } else {
    for (int a = j; a >= 0; --a)
      for (int b = j - a; b >= 0; --b) out.push_back({a, b, j - a - b});
  }
  return out;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace detail

inline BrokenSpace build_space(const BackgroundMesh& mesh, const std::vector<int>& active_elements,
                               int order) {
  if (order < 1 || order > 3) throw std::invalid_argument("build_space: order must be in {1,2,3}");
  BrokenSpace sp;
  sp.mesh = &mesh;
  sp.order = order;
  sp.exponents = detail::monomial_exponents(mesh.dim, order);
  sp.ndof_el = int(sp.exponents.size());
  sp.active = active_elements;
  sp.active_pos.assign(std::size_t(mesh.n_elements()), -1);
  for (std::size_t i = 0; i < sp.active.size(); ++i)
    sp.active_pos[std::size_t(sp.active[i])] = int(i);

  const int nd = sp.ndof_el;
  sp.centers.resize(sp.active.size());
  sp.scales.resize(sp.active.size());
  sp.coeffs.resize(sp.active.size());
  const QuadratureRule ref = reference_rule(mesh.dim, 2 * order);
  for (std::size_t i = 0; i < sp.active.size(); ++i) {
    int e = sp.active[i];
    sp.centers[i] = mesh.element_centroid(e);
    sp.scales[i] = mesh.element_diameter(e);
    QuadratureRule rule;
    map_rule_onto(ref, mesh.element_simplex(e), rule);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nd, nd);
    std::vector<double> m(static_cast<std::size_t>(nd));
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Vec xi = (rule.points[q] - sp.centers[i]) / sp.scales[i];
      for (int a = 0; a < nd; ++a) m[std::size_t(a)] = detail::mono_eval(sp.exponents[std::size_t(a)], xi);
      for (int a = 0; a < nd; ++a)
        for (int b = 0; b <= a; ++b) M(a, b) += rule.weights[q] * m[std::size_t(a)] * m[std::size_t(b)];
    }
    M = M.selfadjointView<Eigen::Lower>();
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("build_space: element mass matrix not SPD");
    // basis = L^{-1} * monomials  =>  mass matrix of the basis is I
    sp.coeffs[i] = llt.matrixL().solve(Eigen::MatrixXd::Identity(nd, nd));
  }
  return sp;
}

// Values of all basis functions of `element` at `point` (which may lie
// outside the physical cut region but inside the element).
inline void eval_basis(const BrokenSpace& sp, int element, const Vec& point, double* out) {
  int i = sp.active_pos[std::size_t(element)];
  const int nd = sp.ndof_el;
  Vec xi = (point - sp.centers[std::size_t(i)]) / sp.scales[std::size_t(i)];
  Eigen::VectorXd m(nd);
  for (int a = 0; a < nd; ++a) m(a) = detail::mono_eval(sp.exponents[std::size_t(a)], xi);
  Eigen::Map<Eigen::VectorXd>(out, nd) = sp.coeffs[std::size_t(i)] * m;
}

// Gradients, row-major ndof x dim (z column zero in 2D).
inline void eval_basis_grad(const BrokenSpace& sp, int element, const Vec& point, Vec* out) {
  int i = sp.active_pos[std::size_t(element)];
  const int nd = sp.ndof_el;
  const int dim = sp.mesh->dim;
  double s = sp.scales[std::size_t(i)];
  Vec xi = (point - sp.centers[std::size_t(i)]) / s;
  Eigen::MatrixXd dm(nd, 3);
  dm.setZero();
  for (int a = 0; a < nd; ++a)
    for (int d = 0; d < dim; ++d) {
      std::array<int, 3> alpha{};
      alpha[std::size_t(d)] = 1;
      dm(a, d) = detail::mono_deriv(sp.exponents[std::size_t(a)], alpha, xi) / s;
    }
  Eigen::MatrixXd g = sp.coeffs[std::size_t(i)] * dm;
  for (int a = 0; a < nd; ++a) out[a] = {g(a, 0), g(a, 1), g(a, 2)};
}

// partial_n^j v = sum_{|alpha|=j} D^alpha v n^alpha / alpha!
inline void eval_normal_derivative(const BrokenSpace& sp, int element, const Vec& point,
                                   const Vec& n, int j, double* out) {
  const int nd = sp.ndof_el;
  if (j > sp.order) {
    std::fill(out, out + nd, 0.0);
    return;
  }
  if (j == 0) {
    eval_basis(sp, element, point, out);
    return;
  }
  int i = sp.active_pos[std::size_t(element)];
  double s = sp.scales[std::size_t(i)];
  Vec xi = (point - sp.centers[std::size_t(i)]) / s;
  double sj = std::pow(s, j);
  auto alphas = detail::multi_indices_of_order(sp.mesh->dim, j);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(nd);
  for (const auto& alpha : alphas) {
    double na = 1.0, afact = 1.0;
    for (int a = 0; a < 3; ++a) {
      for (int t = 0; t < alpha[std::size_t(a)]; ++t) na *= n[a];
      afact *= detail::factorial(alpha[std::size_t(a)]);
    }
    if (na == 0.0) continue;
    for (int b = 0; b < nd; ++b)
      m(b) += na / afact * detail::mono_deriv(sp.exponents[std::size_t(b)], alpha, xi) / sj;
  }
  Eigen::Map<Eigen::VectorXd>(out, nd) = sp.coeffs[std::size_t(i)] * m;
}

inline double eval_field(const BrokenSpace& sp, const FieldVector& u, int element,
                         const Vec& point) {
  std::vector<double> vals(std::size_t(sp.ndof_el));
  eval_basis(sp, element, point, vals.data());
  double r = 0.0;
  int g0 = sp.global_dof(element, 0);
  for (int a = 0; a < sp.ndof_el; ++a) r += u.coeffs[std::size_t(g0 + a)] * vals[std::size_t(a)];
  return r;
}

inline Vec eval_field_grad(const BrokenSpace& sp, const FieldVector& u, int element,
                           const Vec& point) {
  std::vector<Vec> grads(std::size_t(sp.ndof_el));
  eval_basis_grad(sp, element, point, grads.data());
  Vec r{};
  int g0 = sp.global_dof(element, 0);
  for (int a = 0; a < sp.ndof_el; ++a) r += grads[std::size_t(a)] * u.coeffs[std::size_t(g0 + a)];
  return r;
}

// L2 projection onto the broken space, integrating over FULL elements
// (the analysis interpolant; f must be evaluable on the whole element).
inline FieldVector l2_project(const BrokenSpace& sp, const std::function<double(const Vec&)>& f,
                              int quad_order_bump = 3) {
  FieldVector u;
  u.space = &sp;
  u.coeffs.assign(sp.n_dofs(), 0.0);
  const QuadratureRule ref = reference_rule(sp.mesh->dim,
                                            std::min(12, 2 * sp.order + quad_order_bump));
  std::vector<double> vals(std::size_t(sp.ndof_el));
  for (std::size_t i = 0; i < sp.active.size(); ++i) {
    int e = sp.active[i];
    QuadratureRule rule;
    map_rule_onto(ref, sp.mesh->element_simplex(e), rule);
    int g0 = sp.global_dof(e, 0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      eval_basis(sp, e, rule.points[q], vals.data());
      double fw = f(rule.points[q]) * rule.weights[q];
      for (int a = 0; a < sp.ndof_el; ++a) u.coeffs[std::size_t(g0 + a)] += fw * vals[std::size_t(a)];
    }
  }
  return u;
}

}  // namespace cutdg

#endif
