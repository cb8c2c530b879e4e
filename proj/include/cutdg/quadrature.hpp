#ifndef CUTDG_QUADRATURE_HPP
#define CUTDG_QUADRATURE_HPP

#include <Eigen/Dense>
#include <map>

#include "cutdg/geometry.hpp"

namespace cutdg {

struct QuadratureRule {
  std::vector<Vec> points;
  std::vector<double> weights;
  std::vector<Vec> normals;  // surface rules only

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

struct GeometryDepth {
  int depth = 2;  // recursive bisections before linear reconstruction
};

enum class Side { Inside, Outside };

namespace detail {

// Gauss nodes/weights on [0,1] for the weight function (1-x)^alpha,
// via Golub-Welsch on the Jacobi recurrence.
inline void gauss_jacobi01(int n, double alpha, std::vector<double>& x,
                           std::vector<double>& w) {
  const double beta = 0.0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double ab = alpha + beta;
    double a = (k == 0) ? (beta - alpha) / (ab + 2.0)
                        : (beta * beta - alpha * alpha) /
                              ((2.0 * k + ab) * (2.0 * k + ab + 2.0));
    J(k, k) = a;
    if (k + 1 < n) {
      int m = k + 1;
      double b2 = (m == 1) ? 4.0 * (1.0 + alpha) * (1.0 + beta) /
                                 ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
                           : 4.0 * m * (m + alpha) * (m + beta) * (m + ab) /
                                 ((2.0 * m + ab) * (2.0 * m + ab) * (2.0 * m + ab + 1.0) *
                                  (2.0 * m + ab - 1.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(b2);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  // mu0 = int_{-1}^{1} (1-t)^alpha dt = 2^{alpha+1} / (alpha+1)
  double mu0 = std::pow(2.0, alpha + 1.0) / (alpha + 1.0);
  x.resize(std::size_t(n));
  w.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    x[std::size_t(i)] = 0.5 * (1.0 + es.eigenvalues()(i));
    double v0 = es.eigenvectors()(0, i);
    // mapped to [0,1]: weight function becomes (1-x)^alpha with an extra
    // 2^{-alpha-1} Jacobian factor
    w[std::size_t(i)] = mu0 * v0 * v0 / std::pow(2.0, alpha + 1.0);
  }
}

}  // namespace detail

// Rule on the reference simplex {x_i >= 0, sum x_i <= 1}, exact for total
// degree <= order, all weights positive (conical product construction).
inline QuadratureRule reference_rule(int dim, int order) {
  if (order < 1 || order > 12) throw std::invalid_argument("reference_rule: order must be in [1,12]");
  if (dim < 1 || dim > 3) throw std::invalid_argument("reference_rule: dim must be in [1,3]");

  static std::map<std::pair<int, int>, QuadratureRule> cache;
  auto key = std::make_pair(dim, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  int n = (order + 2) / 2;  // Gauss points per direction
  std::vector<double> x0, w0, x1, w1, x2, w2;
  QuadratureRule rule;
  if (dim == 1) {
    detail::gauss_jacobi01(n, 0.0, x0, w0);
    for (int i = 0; i < n; ++i) {
      rule.points.push_back({x0[std::size_t(i)], 0.0, 0.0});
      rule.weights.push_back(w0[std::size_t(i)]);
    }
  } else if (dim == 2) {
    detail::gauss_jacobi01(n, 1.0, x0, w0);
    detail::gauss_jacobi01(n, 0.0, x1, w1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double u = x0[std::size_t(i)], v = x1[std::size_t(j)];
        rule.points.push_back({u, v * (1.0 - u), 0.0});
        rule.weights.push_back(w0[std::size_t(i)] * w1[std::size_t(j)]);
      }
  } else {
    detail::gauss_jacobi01(n, 2.0, x0, w0);
    detail::gauss_jacobi01(n, 1.0, x1, w1);
    detail::gauss_jacobi01(n, 0.0, x2, w2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double u = x0[std::size_t(i)], v = x1[std::size_t(j)], t = x2[std::size_t(k)];
          rule.points.push_back({u, v * (1.0 - u), t * (1.0 - u) * (1.0 - v)});
          rule.weights.push_back(w0[std::size_t(i)] * w1[std::size_t(j)] * w2[std::size_t(k)]);
        }
  }
  cache[key] = rule;
  return rule;
}

// Map a reference rule onto a k-simplex embedded in R^3; weights are scaled
// so they sum to the simplex measure.
inline void map_rule_onto(const QuadratureRule& ref, const Simplex& s, QuadratureRule& out) {
  int k = s.nv - 1;
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  double scale = simplex_measure(s) * fact;
  for (std::size_t q = 0; q < ref.size(); ++q) {
    Vec p = s.v[0];
    for (int i = 0; i < k; ++i) p += (s.v[std::size_t(i) + 1] - s.v[0]) * ref.points[q][i];
    out.points.push_back(p);
    out.weights.push_back(ref.weights[q] * scale);
  }
}

inline QuadratureRule element_rule(const BackgroundMesh& mesh, int element, int order) {
  QuadratureRule out;
  map_rule_onto(reference_rule(mesh.dim, order), mesh.element_simplex(element), out);
  return out;
}

inline QuadratureRule face_rule(const BackgroundMesh& mesh, int face, int order) {
  QuadratureRule out;
  map_rule_onto(reference_rule(mesh.dim - 1, order), mesh.face_simplex(face), out);
  return out;
}

// ---------------------------------------------------------------------------
// Cut-cell decomposition: recursive bisection + linear marching reconstruction
// ---------------------------------------------------------------------------

namespace detail {

struct ValuedSimplex {
  Simplex s;
  std::array<double, 4> vals{};
};

inline double clamp_value(double v, double eps_abs) {
  if (std::abs(v) <= eps_abs) return eps_abs > 0.0 ? eps_abs : 1e-300;
  return v;
}

inline bool mixed_signs(const ValuedSimplex& vs) {
  bool neg = false, pos = false;
  for (int i = 0; i < vs.s.nv; ++i) (vs.vals[std::size_t(i)] < 0.0 ? neg : pos) = true;
  return neg && pos;
}

inline Vec cut_point(const Vec& a, const Vec& b, double va, double vb) {
  double t = va / (va - vb);
  return a + (b - a) * t;
}

// Edge root refined against the true level set with a few safeguarded
// false-position steps; falls back to linear interpolation of the (possibly
// sign-clamped) vertex values when the bracket is invalid.
inline Vec cut_point_refined(const LevelSet& phi, const Vec& a, const Vec& b, double va,
                             double vb) {
  double f0 = phi(a), f1 = phi(b);
  if (!(f0 < 0.0) == !(f1 < 0.0)) return cut_point(a, b, va, vb);
  double t0 = 0.0, t1 = 1.0;
  double t = f0 / (f0 - f1);
  for (int it = 0; it < 4; ++it) {
    double ft = phi(a + (b - a) * t);
    if (ft == 0.0) break;
    if ((ft < 0.0) == (f0 < 0.0)) {
      t0 = t;
      f0 = ft;
    } else {
      t1 = t;
      f1 = ft;
    }
    t = t0 + (t1 - t0) * f0 / (f0 - f1);
  }
  return a + (b - a) * t;
}

// Emit the marching decomposition of a leaf simplex with mixed vertex signs:
// volume pieces labeled by side and the reconstructed interface facets.
template <class VolCb, class IfaceCb>
inline void march_leaf(const LevelSet& phi, const ValuedSimplex& vs, VolCb&& emit_vol,
                       IfaceCb&& emit_iface) {
  const Simplex& s = vs.s;
  const auto& v = vs.vals;
  auto side_of = [](double val) { return val < 0.0 ? Side::Inside : Side::Outside; };
  auto mk = [](std::initializer_list<Vec> pts) {
    Simplex out;
    out.nv = 0;
    for (const Vec& p : pts) out.v[std::size_t(out.nv++)] = p;
    return out;
  };

  if (s.nv == 2) {  // segment
    Vec p = cut_point_refined(phi, s.v[0], s.v[1], v[0], v[1]);
    emit_vol(mk({s.v[0], p}), side_of(v[0]));
    emit_vol(mk({p, s.v[1]}), side_of(v[1]));
    emit_iface(mk({p}));
    return;
  }

  if (s.nv == 3) {  // triangle: one lone vertex against two
    int lone = -1;
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3, k = (i + 2) % 3;
      if ((v[std::size_t(i)] < 0.0) != (v[std::size_t(j)] < 0.0) &&
          (v[std::size_t(i)] < 0.0) != (v[std::size_t(k)] < 0.0)) {
        lone = i;
        break;
      }
    }
    int b = (lone + 1) % 3, c = (lone + 2) % 3;
    Vec pab = cut_point_refined(phi, s.v[std::size_t(lone)], s.v[std::size_t(b)], v[std::size_t(lone)], v[std::size_t(b)]);
    Vec pac = cut_point_refined(phi, s.v[std::size_t(lone)], s.v[std::size_t(c)], v[std::size_t(lone)], v[std::size_t(c)]);
    emit_vol(mk({s.v[std::size_t(lone)], pab, pac}), side_of(v[std::size_t(lone)]));
    emit_vol(mk({pab, s.v[std::size_t(b)], s.v[std::size_t(c)]}), side_of(v[std::size_t(b)]));
    emit_vol(mk({pab, s.v[std::size_t(c)], pac}), side_of(v[std::size_t(b)]));
    emit_iface(mk({pab, pac}));
    return;
  }

  // tetrahedron
  std::array<int, 4> neg{}, pos{};
  int nn = 0, np = 0;
  for (int i = 0; i < 4; ++i)
    (v[std::size_t(i)] < 0.0 ? neg[std::size_t(nn++)] : pos[std::size_t(np++)]) = i;

  if (nn == 1 || np == 1) {
    // 1-3 split: lone-vertex tet plus a prism on the other side
    bool lone_neg = (nn == 1);
    int a = lone_neg ? neg[0] : pos[0];
    std::array<int, 3> rest{};
    int m = 0;
    for (int i = 0; i < 4; ++i)
      if (i != a) rest[std::size_t(m++)] = i;
    Vec A = s.v[std::size_t(a)];
    std::array<Vec, 3> B{s.v[std::size_t(rest[0])], s.v[std::size_t(rest[1])], s.v[std::size_t(rest[2])]};
    std::array<Vec, 3> P{};
    for (int i = 0; i < 3; ++i)
      P[std::size_t(i)] = cut_point_refined(phi, A, B[std::size_t(i)], v[std::size_t(a)], v[std::size_t(rest[std::size_t(i)])]);
    Side lone_side = side_of(v[std::size_t(a)]);
    Side other = lone_neg ? Side::Outside : Side::Inside;
    emit_vol(mk({A, P[0], P[1], P[2]}), lone_side);
    // prism bottom (B0,B1,B2), top (P0,P1,P2)
    emit_vol(mk({B[0], B[1], B[2], P[0]}), other);
    emit_vol(mk({B[1], B[2], P[0], P[1]}), other);
    emit_vol(mk({B[2], P[0], P[1], P[2]}), other);
    emit_iface(mk({P[0], P[1], P[2]}));
    return;
  }

  // 2-2 split: vertices a,b inside; c,d outside
  int a = neg[0], b = neg[1], c = pos[0], d = pos[1];
  Vec pac = cut_point_refined(phi, s.v[std::size_t(a)], s.v[std::size_t(c)], v[std::size_t(a)], v[std::size_t(c)]);
  Vec pad = cut_point_refined(phi, s.v[std::size_t(a)], s.v[std::size_t(d)], v[std::size_t(a)], v[std::size_t(d)]);
  Vec pbc = cut_point_refined(phi, s.v[std::size_t(b)], s.v[std::size_t(c)], v[std::size_t(b)], v[std::size_t(c)]);
  Vec pbd = cut_point_refined(phi, s.v[std::size_t(b)], s.v[std::size_t(d)], v[std::size_t(b)], v[std::size_t(d)]);
  Vec A = s.v[std::size_t(a)], B = s.v[std::size_t(b)], C = s.v[std::size_t(c)], D = s.v[std::size_t(d)];
  // side A: prism bottom (A, pac, pad), top (B, pbc, pbd); the cut quad
  // (pac,pad,pbd,pbc) is split along pad-pbc
  emit_vol(mk({A, pac, pad, B}), Side::Inside);
  emit_vol(mk({pac, pad, B, pbc}), Side::Inside);
  emit_vol(mk({pad, B, pbc, pbd}), Side::Inside);
  // side B: prism bottom (C, pac, pbc), top (D, pad, pbd); same quad diagonal
  emit_vol(mk({C, pac, pbc, D}), Side::Outside);
  emit_vol(mk({pac, pbc, D, pad}), Side::Outside);
  emit_vol(mk({pbc, D, pad, pbd}), Side::Outside);
  // interface quad with the same diagonal pad-pbc
  emit_iface(mk({pac, pad, pbc}));
  emit_iface(mk({pad, pbd, pbc}));
}

// Recursively decompose a valued simplex; uniform-sign pieces are emitted
// whole, mixed ones are bisected along the longest edge until the bisection
// budget runs out. One unit of GeometryDepth corresponds to `dim` single
// bisections, so leaf diameters halve per depth unit and region-measure
// errors decay like 4^{-depth}.
template <class VolCb, class IfaceCb>
inline void decompose(const LevelSet& phi, ValuedSimplex vs, int budget, double eps_abs,
                      VolCb&& emit_vol, IfaceCb&& emit_iface) {
  if (!mixed_signs(vs)) {
    emit_vol(vs.s, vs.vals[0] < 0.0 ? Side::Inside : Side::Outside);
    return;
  }
  if (budget <= 0) {
    march_leaf(phi, vs, emit_vol, emit_iface);
    return;
  }
  int bi = 0, bj = 1;
  double best = -1.0;
  for (int i = 0; i < vs.s.nv; ++i)
    for (int j = i + 1; j < vs.s.nv; ++j) {
      double len = norm(vs.s.v[std::size_t(i)] - vs.s.v[std::size_t(j)]);
      if (len > best) {
        best = len;
        bi = i;
        bj = j;
      }
    }
  Vec mid = (vs.s.v[std::size_t(bi)] + vs.s.v[std::size_t(bj)]) * 0.5;
  double vmid = clamp_value(phi(mid), eps_abs);
  ValuedSimplex left = vs, right = vs;
  left.s.v[std::size_t(bj)] = mid;
  left.vals[std::size_t(bj)] = vmid;
  right.s.v[std::size_t(bi)] = mid;
  right.vals[std::size_t(bi)] = vmid;
  decompose(phi, left, budget - 1, eps_abs, emit_vol, emit_iface);
  decompose(phi, right, budget - 1, eps_abs, emit_vol, emit_iface);
}

inline int bisection_budget(const Simplex& s, GeometryDepth depth) {
  return depth.depth * (s.nv - 1);
}

inline ValuedSimplex valued(const LevelSet& phi, const Simplex& s, double eps_abs) {
  ValuedSimplex vs;
  vs.s = s;
  for (int i = 0; i < s.nv; ++i) vs.vals[std::size_t(i)] = clamp_value(phi(s.v[std::size_t(i)]), eps_abs);
  return vs;
}

}  // namespace detail

// Volume rule on T intersected with the requested side of phi.
inline QuadratureRule cut_volume_rule(const BackgroundMesh& mesh, int element,
                                      const LevelSet& phi, Side side, GeometryDepth depth,
                                      int order, double eps_abs = 0.0) {
  Simplex s = mesh.element_simplex(element);
  double vol = simplex_measure(s);
  double drop = 1e-14 * vol;
  QuadratureRule out;
  const QuadratureRule ref = reference_rule(mesh.dim, order);
  detail::decompose(
      phi, detail::valued(phi, s, eps_abs), detail::bisection_budget(s, depth), eps_abs,
      [&](const Simplex& piece, Side ps) {
        if (ps != side) return;
        if (simplex_measure(piece) < drop) return;
        map_rule_onto(ref, piece, out);
      },
      [](const Simplex&) {});
  return out;
}

// Rule on F intersected with the requested side; a full face is returned
// unchanged when it is not cut.
inline QuadratureRule cut_face_rule(const BackgroundMesh& mesh, int face, const LevelSet& phi,
                                    Side side, GeometryDepth depth, int order,
                                    double eps_abs = 0.0) {
  Simplex s = mesh.face_simplex(face);
  double area = simplex_measure(s);
  double drop = 1e-14 * area;
  QuadratureRule out;
  const QuadratureRule ref = reference_rule(mesh.dim - 1, order);
  detail::decompose(
      phi, detail::valued(phi, s, eps_abs), detail::bisection_budget(s, depth), eps_abs,
      [&](const Simplex& piece, Side ps) {
        if (ps != side) return;
        if (simplex_measure(piece) < drop) return;
        map_rule_onto(ref, piece, out);
      },
      [](const Simplex&) {});
  return out;
}

// Rule on the reconstructed interface Gamma within a cut element; per-point
// unit normals are grad(phi)/|grad(phi)|.
inline QuadratureRule interface_rule(const BackgroundMesh& mesh, int element,
                                     const LevelSet& phi, GeometryDepth depth, int order,
                                     double eps_abs = 0.0) {
  Simplex s = mesh.element_simplex(element);
  double drop = 1e-14 * std::pow(s.diameter(), mesh.dim - 1);
  QuadratureRule out;
  const QuadratureRule ref = reference_rule(mesh.dim - 1, order);
  detail::decompose(
      phi, detail::valued(phi, s, eps_abs), detail::bisection_budget(s, depth), eps_abs,
      [](const Simplex&, Side) {},
      [&](const Simplex& facet) {
        if (simplex_measure(facet) < drop) return;
        map_rule_onto(ref, facet, out);
      });
  for (std::size_t q = out.normals.size(); q < out.points.size(); ++q)
    out.normals.push_back(phi.unit_normal(out.points[q]));
  return out;
}

}  // namespace cutdg

#endif
