#include <catch2/catch_amalgamated.hpp>

#include "cutdg/space.hpp"

using namespace cutdg;

namespace {

std::vector<int> all_elements(const BackgroundMesh& mesh) {
  std::vector<int> out(std::size_t(mesh.n_elements()));
  for (int e = 0; e < mesh.n_elements(); ++e) out[std::size_t(e)] = e;
  return out;
}

}  // namespace

TEST_CASE("basis is orthonormal in the full-element mass inner product") {
  for (int dim : {2, 3}) {
    BackgroundMesh mesh = build_structured_mesh(symmetric_box(0.6, dim), 2, dim);
    for (int k : {1, 2, 3}) {
      BrokenSpace sp = build_space(mesh, all_elements(mesh), k);
      const int nd = sp.ndof_el;
      std::vector<double> vals(static_cast<std::size_t>(nd));
      const QuadratureRule ref = reference_rule(dim, 2 * k);
      for (int e = 0; e < mesh.n_elements(); ++e) {
        QuadratureRule rule;
        map_rule_onto(ref, mesh.element_simplex(e), rule);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nd, nd);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          eval_basis(sp, e, rule.points[q], vals.data());
          for (int a = 0; a < nd; ++a)
            for (int b = 0; b < nd; ++b)
              M(a, b) += rule.weights[q] * vals[std::size_t(a)] * vals[std::size_t(b)];
        }
        CHECK((M - Eigen::MatrixXd::Identity(nd, nd)).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("l2 projection reproduces polynomials up to the space order") {
  BackgroundMesh mesh = build_structured_mesh(unit_box(2), 2, 2);
  BrokenSpace sp = build_space(mesh, all_elements(mesh), 2);
  auto check_exact = [&](const std::function<double(const Vec&)>& f) {
    FieldVector u = l2_project(sp, f);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      Vec c = mesh.element_centroid(e);
      for (const Vec& p : {c, c + Vec{0.05, -0.03, 0.0}, mesh.element_vertex(e, 0)})
        CHECK(eval_field(sp, u, e, p) == Catch::Approx(f(p)).margin(1e-11));
    }
  };
  check_exact([](const Vec&) { return 1.0; });
  check_exact([](const Vec& p) { return p.x * p.y; });
  check_exact([](const Vec& p) { return 3.0 * p.x * p.x - 2.0 * p.y + 0.25; });
}

TEST_CASE("basis gradients match central finite differences") {
  BackgroundMesh mesh = build_structured_mesh(symmetric_box(0.9, 2), 3, 2);
  BrokenSpace sp = build_space(mesh, all_elements(mesh), 2);
  const int nd = sp.ndof_el;
  int e = 4;
  Vec p = mesh.element_centroid(e) + Vec{0.02, 0.013, 0.0};
  std::vector<Vec> grads(static_cast<std::size_t>(nd));
  eval_basis_grad(sp, e, p, grads.data());
  const double step = 1e-6;
  std::vector<double> lo(static_cast<std::size_t>(nd)), hi(static_cast<std::size_t>(nd));
  for (int d = 0; d < 2; ++d) {
    Vec pl = p, ph = p;
    pl[d] -= step;
    ph[d] += step;
    eval_basis(sp, e, pl, lo.data());
    eval_basis(sp, e, ph, hi.data());
    for (int a = 0; a < nd; ++a) {
      double fd = (hi[std::size_t(a)] - lo[std::size_t(a)]) / (2.0 * step);
      double scale = std::max(1.0, std::abs(grads[std::size_t(a)][d]));
      CHECK(std::abs(grads[std::size_t(a)][d] - fd) / scale < 1e-6);
    }
  }
}

TEST_CASE("normal derivatives of projected polynomials") {
  BackgroundMesh mesh = build_structured_mesh(unit_box(2), 1, 2);
  BrokenSpace sp = build_space(mesh, all_elements(mesh), 2);
  const int nd = sp.ndof_el;
  int e = 0;
  Vec p = mesh.element_centroid(e);
  std::vector<double> basis_dn(static_cast<std::size_t>(nd));

  auto normal_derivative = [&](const FieldVector& u, const Vec& n, int j) {
    eval_normal_derivative(sp, e, p, n, j, basis_dn.data());
    double r = 0.0;
    int g0 = sp.global_dof(e, 0);
    for (int a = 0; a < nd; ++a) r += u.coeffs[std::size_t(g0 + a)] * basis_dn[std::size_t(a)];
    return r;
  };

  // second normal derivative of x^2 in direction (1,0): D^(2,0) x^2 / 2! = 1
  FieldVector x2 = l2_project(sp, [](const Vec& q) { return q.x * q.x; });
  CHECK(normal_derivative(x2, Vec{1.0, 0.0, 0.0}, 2) == Catch::Approx(1.0).margin(1e-11));

  // affine functions have no second normal derivative
  FieldVector aff = l2_project(sp, [](const Vec& q) { return 2.0 * q.x - 3.0 * q.y + 1.0; });
  CHECK(normal_derivative(aff, Vec{1.0, 0.0, 0.0}, 2) == Catch::Approx(0.0).margin(1e-11));

  // first normal derivative of x + y along the diagonal is sqrt(2)
  FieldVector diag = l2_project(sp, [](const Vec& q) { return q.x + q.y; });
  double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(normal_derivative(diag, Vec{inv_sqrt2, inv_sqrt2, 0.0}, 1) ==
        Catch::Approx(std::sqrt(2.0)).margin(1e-11));

  // derivatives of order beyond the space order vanish identically
  eval_normal_derivative(sp, e, p, Vec{1.0, 0.0, 0.0}, 3, basis_dn.data());
  for (int a = 0; a < nd; ++a) CHECK(basis_dn[std::size_t(a)] == 0.0);
}

TEST_CASE("order-zero normal derivative equals the basis values") {
  BackgroundMesh mesh = build_structured_mesh(unit_box(2), 1, 2);
  BrokenSpace sp = build_space(mesh, all_elements(mesh), 2);
  const int nd = sp.ndof_el;
  Vec p{0.3, 0.4, 0.0};
  std::vector<double> a(static_cast<std::size_t>(nd)), b(static_cast<std::size_t>(nd));
  eval_basis(sp, 0, p, a.data());
  eval_normal_derivative(sp, 0, p, Vec{0.0, 1.0, 0.0}, 0, b.data());
  for (int i = 0; i < nd; ++i) CHECK(a[std::size_t(i)] == b[std::size_t(i)]);
}

TEST_CASE("projection error converges at second order for P1") {
  double prev_err = 0.0, prev_h = 0.0;
  std::vector<double> eocs;
  for (int n : {8, 16, 32}) {
    BackgroundMesh mesh = build_structured_mesh(unit_box(2), n, 2);
    BrokenSpace sp = build_space(mesh, all_elements(mesh), 1);
    auto f = [](const Vec& p) { return std::sin(2.0 * M_PI * p.x); };
    FieldVector u = l2_project(sp, f);
    double err2 = 0.0;
    const QuadratureRule ref = reference_rule(2, 8);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      QuadratureRule rule;
      map_rule_onto(ref, mesh.element_simplex(e), rule);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        double d = eval_field(sp, u, e, rule.points[q]) - f(rule.points[q]);
        err2 += rule.weights[q] * d * d;
      }
    }
    double err = std::sqrt(err2);
    if (prev_err > 0.0) eocs.push_back(std::log(prev_err / err) / std::log(prev_h / mesh.h));
    prev_err = err;
    prev_h = mesh.h;
  }
  for (double e : eocs) CHECK(e == Catch::Approx(2.0).margin(0.1));
}

TEST_CASE("space construction rejects unsupported orders") {
  BackgroundMesh mesh = build_structured_mesh(unit_box(2), 1, 2);
  CHECK_THROWS_AS(build_space(mesh, all_elements(mesh), 0), std::invalid_argument);
  CHECK_THROWS_AS(build_space(mesh, all_elements(mesh), 4), std::invalid_argument);
}
