#ifndef CUTDG_GEOMETRY_HPP
#define CUTDG_GEOMETRY_HPP

#include <functional>
#include <memory>
#include <utility>

#include "cutdg/mesh.hpp"

namespace cutdg {

// Implicit domain description: phi < 0 inside Omega (resp. Omega_1),
// phi = 0 on the boundary/interface Gamma.
struct LevelSet {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional; central differences otherwise
  double fd_step = 1e-6;

  double operator()(const Vec& p) const { return value(p); }

  Vec grad(const Vec& p) const {
    if (gradient) return gradient(p);
    Vec g{};
    for (int a = 0; a < 3; ++a) {
      Vec lo = p, hi = p;
      lo[a] -= fd_step;
      hi[a] += fd_step;
      g[a] = (value(hi) - value(lo)) / (2.0 * fd_step);
    }
    return g;
  }

  Vec unit_normal(const Vec& p) const { return normalized(grad(p)); }
};

inline LevelSet negate(LevelSet phi) {
  LevelSet out;
  auto val = phi.value;
  out.value = [val](const Vec& p) { return -val(p); };
  if (phi.gradient) {
    auto g = phi.gradient;
    out.gradient = [g](const Vec& p) { return g(p) * -1.0; };
  }
  out.fd_step = phi.fd_step;
  return out;
}

inline LevelSet translate(LevelSet phi, const Vec& offset) {
  LevelSet out;
  auto val = phi.value;
  out.value = [val, offset](const Vec& p) { return val(p - offset); };
  if (phi.gradient) {
    auto g = phi.gradient;
    out.gradient = [g, offset](const Vec& p) { return g(p - offset); };
  }
  out.fd_step = phi.fd_step;
  return out;
}

// ---------------------------------------------------------------------------
// Built-in level-set catalogue
// ---------------------------------------------------------------------------

inline LevelSet half_plane(const Vec& normal, double offset) {
  Vec n = normalized(normal);
  LevelSet phi;
  phi.value = [n, offset](const Vec& p) { return dot(n, p) - offset; };
  phi.gradient = [n](const Vec&) { return n; };
  return phi;
}

inline LevelSet circle2d(double r, const Vec& center = {}) {
  LevelSet phi;
  phi.value = [r, center](const Vec& p) {
    Vec q = p - center;
    return std::sqrt(q.x * q.x + q.y * q.y) - r;
  };
  phi.gradient = [center](const Vec& p) {
    Vec q = p - center;
    double d = std::sqrt(q.x * q.x + q.y * q.y);
    if (d < 1e-14) return Vec{1.0, 0.0, 0.0};
    return Vec{q.x / d, q.y / d, 0.0};
  };
  return phi;
}

// flower-like 2D domain: r0 = 0.6, r1 = 0.2
inline LevelSet flower2d(double r0 = 0.6, double r1 = 0.2) {
  LevelSet phi;
  phi.value = [r0, r1](const Vec& p) {
    return std::sqrt(p.x * p.x + p.y * p.y) - r0 - r1 * std::cos(std::atan2(p.y, p.x));
  };
  phi.gradient = [r1](const Vec& p) {
    double d2 = p.x * p.x + p.y * p.y;
    double d = std::sqrt(d2);
    if (d < 1e-14) return Vec{1.0, 0.0, 0.0};
    double th = std::atan2(p.y, p.x);
    // grad theta = (-y, x) / d^2
    double s = r1 * std::sin(th);
    return Vec{p.x / d - s * p.y / d2, p.y / d + s * p.x / d2, 0.0};
  };
  return phi;
}

// flower-shaped 3D domain: r = 0.5, r0 = 3.5
inline LevelSet flower3d(double r = 0.5, double r0 = 3.5) {
  LevelSet phi;
  phi.value = [r, r0](const Vec& p) {
    double d = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    return d - r + (r / r0) * std::cos(5.0 * std::atan2(p.y, p.x)) * std::cos(M_PI * p.z);
  };
  return phi;  // gradient by finite differences
}

// phi = x^2 + y^2 + z^2 - 0.25^2 (squared form)
inline LevelSet sphere3d_quadric(double r = 0.25) {
  LevelSet phi;
  phi.value = [r](const Vec& p) { return p.x * p.x + p.y * p.y + p.z * p.z - r * r; };
  phi.gradient = [](const Vec& p) { return Vec{2.0 * p.x, 2.0 * p.y, 2.0 * p.z}; };
  return phi;
}

inline LevelSet sphere3d(double r, const Vec& center = {}) {
  LevelSet phi;
  phi.value = [r, center](const Vec& p) { return norm(p - center) - r; };
  phi.gradient = [center](const Vec& p) {
    Vec q = p - center;
    double d = norm(q);
    if (d < 1e-14) return Vec{1.0, 0.0, 0.0};
    return q / d;
  };
  return phi;
}

// union of 8 balls of radius 0.3 centered at (+-0.5, +-0.5, +-0.5)
inline LevelSet eight_balls3d(double r = 0.3, double c = 0.5) {
  LevelSet phi;
  auto nearest = [c](const Vec& p) {
    return Vec{p.x >= 0 ? c : -c, p.y >= 0 ? c : -c, p.z >= 0 ? c : -c};
  };
  phi.value = [r, nearest](const Vec& p) { return norm(p - nearest(p)) - r; };
  phi.gradient = [nearest](const Vec& p) {
    Vec q = p - nearest(p);
    double d = norm(q);
    if (d < 1e-14) return Vec{1.0, 0.0, 0.0};
    return q / d;
  };
  return phi;
}

// 8 corner balls (r = 0.8 at (+-1, +-1, +-1)) plus a cylinder of radius 0.6
// around the x-axis, combined with min
inline LevelSet corner_balls_cylinder3d(double rb = 0.8, double rc = 0.6) {
  LevelSet phi;
  phi.value = [rb, rc](const Vec& p) {
    Vec corner{p.x >= 0 ? 1.0 : -1.0, p.y >= 0 ? 1.0 : -1.0, p.z >= 0 ? 1.0 : -1.0};
    double balls = norm(p - corner) - rb;
    double cyl = std::sqrt(p.y * p.y + p.z * p.z) - rc;
    return std::min(balls, cyl);
  };
  phi.gradient = [rb, rc](const Vec& p) {
    Vec corner{p.x >= 0 ? 1.0 : -1.0, p.y >= 0 ? 1.0 : -1.0, p.z >= 0 ? 1.0 : -1.0};
    Vec qb = p - corner;
    double db = norm(qb);
    double balls = db - rb;
    double dc = std::sqrt(p.y * p.y + p.z * p.z);
    double cyl = dc - rc;
    if (balls <= cyl) {
      if (db < 1e-14) return Vec{1.0, 0.0, 0.0};
      return qb / db;
    }
    if (dc < 1e-14) return Vec{0.0, 1.0, 0.0};
    return Vec{0.0, p.y / dc, p.z / dc};
  };
  return phi;
}

// Name + parameter lookup used by the study config files.
inline LevelSet builtin_levelset(const std::string& name,
                                 const std::vector<double>& params = {}) {
  auto get = [&](std::size_t i, double dflt) { return i < params.size() ? params[i] : dflt; };
  if (name == "flower2d") return flower2d(get(0, 0.6), get(1, 0.2));
  if (name == "flower3d") return flower3d(get(0, 0.5), get(1, 3.5));
  if (name == "circle2d") return circle2d(get(0, 0.25));
  if (name == "sphere3d") return sphere3d(get(0, 0.25));
  if (name == "sphere3d_quadric") return sphere3d_quadric(get(0, 0.25));
  if (name == "eight_balls3d") return eight_balls3d(get(0, 0.3), get(1, 0.5));
  if (name == "corner_balls_cylinder3d") return corner_balls_cylinder3d(get(0, 0.8), get(1, 0.6));
  if (name == "half_plane_x") return half_plane({1.0, 0.0, 0.0}, get(0, 0.5));
  if (name == "half_plane")
    return half_plane({get(0, 1.0), get(1, 0.0), get(2, 0.0)}, get(3, 0.5));
  throw std::invalid_argument("unknown level set: " + name);
}

// ---------------------------------------------------------------------------
// Domain classification
// ---------------------------------------------------------------------------

enum class ElementTag : std::uint8_t { Inside, Outside, Cut };

struct DomainClassification {
  std::vector<ElementTag> element_tag;
  std::vector<int> active_elements;  // T_h, sorted
  std::vector<int> cut_elements;     // T_Gamma, sorted
  std::vector<int> interior_faces;   // F_h: both neighbors active
  std::vector<int> ghost_faces;      // F_h^g: at least one neighbor cut
  std::vector<int> boundary_faces_fitted;  // box-boundary faces of active elements
  std::vector<double> vertex_values;       // perturbed phi at mesh vertices
  double eps_abs = 0.0;                    // perturbation threshold actually used

  bool is_active(int e) const { return element_tag[std::size_t(e)] != ElementTag::Outside; }
  bool is_cut(int e) const { return element_tag[std::size_t(e)] == ElementTag::Cut; }
};

namespace detail {

inline DomainClassification classify_from_values(const BackgroundMesh& mesh,
                                                 const std::vector<double>& values,
                                                 double eps_abs) {
  DomainClassification c;
  c.vertex_values = values;
  c.eps_abs = eps_abs;
  c.element_tag.resize(std::size_t(mesh.n_elements()));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    int neg = 0, pos = 0;
    for (int i = 0; i <= mesh.dim; ++i)
      (values[std::size_t(mesh.elements[e][i])] < 0.0 ? neg : pos)++;
    ElementTag tag = (neg == mesh.dim + 1) ? ElementTag::Inside
                     : (pos == mesh.dim + 1) ? ElementTag::Outside
                                             : ElementTag::Cut;
    c.element_tag[std::size_t(e)] = tag;
    if (tag != ElementTag::Outside) c.active_elements.push_back(e);
    if (tag == ElementTag::Cut) c.cut_elements.push_back(e);
  }
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[std::size_t(f)];
    if (face.right < 0) {
      if (c.is_active(face.left)) c.boundary_faces_fitted.push_back(f);
      continue;
    }
    if (!c.is_active(face.left) || !c.is_active(face.right)) continue;
    c.interior_faces.push_back(f);
    if (c.is_cut(face.left) || c.is_cut(face.right)) c.ghost_faces.push_back(f);
  }
  return c;
}

inline std::vector<double> perturbed_vertex_values(const BackgroundMesh& mesh,
                                                   const LevelSet& phi, double eps_abs) {
  std::vector<double> values(std::size_t(mesh.n_vertices()));
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    double val = phi(mesh.vertices[std::size_t(v)]);
    // simulation of simplicity: near-zero vertices are pushed outside
    if (std::abs(val) <= eps_abs) val = eps_abs;
    values[std::size_t(v)] = val;
  }
  return values;
}

}  // namespace detail

inline DomainClassification classify(const BackgroundMesh& mesh, const LevelSet& phi,
                                     double eps = 1e-12) {
  double eps_abs = eps * mesh.h;
  return detail::classify_from_values(
      mesh, detail::perturbed_vertex_values(mesh, phi, eps_abs), eps_abs);
}

struct TwoDomainClassification {
  std::array<DomainClassification, 2> side;  // [0]: Omega_1 (phi<0), [1]: Omega_2
  std::vector<int> cut_elements;             // shared T_Gamma
};

inline TwoDomainClassification classify_two_domain(const BackgroundMesh& mesh,
                                                   const LevelSet& phi, double eps = 1e-12) {
  double eps_abs = eps * mesh.h;
  // One shared perturbed value array so the two sides partition the mesh:
  // strictly positive values for side 1 are strictly negative for side 2.
  auto values = detail::perturbed_vertex_values(mesh, phi, eps_abs);
  std::vector<double> neg_values(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) neg_values[i] = -values[i];
  TwoDomainClassification tc;
  tc.side[0] = detail::classify_from_values(mesh, values, eps_abs);
  tc.side[1] = detail::classify_from_values(mesh, neg_values, eps_abs);
  tc.cut_elements = tc.side[0].cut_elements;
  return tc;
}

}  // namespace cutdg

#endif
