#ifndef CUTDG_STUDY_HPP
#define CUTDG_STUDY_HPP

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "cutdg/assembly.hpp"

namespace cutdg {

using GradFn = std::function<Vec(const Vec&)>;

// Manufactured boundary-value problem: all data (f, g) derived analytically
// from the exact solution, never hand-typed independently.
struct BvpProblem {
  std::string name;
  int dim = 2;
  Box box;
  LevelSet phi;
  ScalarFn u;
  GradFn grad_u;
  ScalarFn f;  // -laplace u
  ScalarFn g() const { return u; }
};

// Manufactured two-phase interface problem; jump data g_D, g_N follow from
// the per-side exact solutions.
struct InterfaceProblem {
  std::string name;
  int dim = 2;
  Box box;
  LevelSet phi;
  double kappa1 = 1.0, kappa2 = 1.0;
  ScalarFn u1, u2;
  GradFn grad_u1, grad_u2;
  ScalarFn f1, f2;  // -kappa_i laplace u_i
  // outer Dirichlet data: trace of the exact solution, side-resolved via phi
  // (the interface may reach the box boundary)
  ScalarFn g() const {
    auto a = u1, b = u2;
    const LevelSet* lp = &phi;
    return [a, b, lp](const Vec& x) { return (*lp)(x) < 0.0 ? a(x) : b(x); };
  }
  ScalarFn g_D() const {
    auto a = u1, b = u2;
    return [a, b](const Vec& x) { return a(x) - b(x); };
  }
  ScalarFn g_N() const {
    auto ga = grad_u1, gb = grad_u2;
    double k1 = kappa1, k2 = kappa2;
    const LevelSet* lp = &phi;
    return [ga, gb, k1, k2, lp](const Vec& x) {
      Vec n = lp->unit_normal(x);
      return k1 * dot(ga(x), n) - k2 * dot(gb(x), n);
    };
  }
};

namespace problems {

constexpr double kPi = 3.14159265358979323846;

// u = cos(2 pi x)cos(2 pi y) + sin(2 pi x)sin(2 pi y) = cos(2 pi (x - y))
inline void trig2d(ScalarFn& u, GradFn& gu, ScalarFn& f) {
  u = [](const Vec& p) { return std::cos(2 * kPi * (p.x - p.y)); };
  gu = [](const Vec& p) {
    double s = -2 * kPi * std::sin(2 * kPi * (p.x - p.y));
    return Vec{s, -s, 0.0};
  };
  f = [](const Vec& p) { return 8 * kPi * kPi * std::cos(2 * kPi * (p.x - p.y)); };
}

// u = exp(s)cos(s)sin(s) = exp(s)sin(2s)/2, s = x + y + z
inline void expsin3d(ScalarFn& u, GradFn& gu, ScalarFn& f) {
  u = [](const Vec& p) {
    double s = p.x + p.y + p.z;
    return 0.5 * std::exp(s) * std::sin(2 * s);
  };
  gu = [](const Vec& p) {
    double s = p.x + p.y + p.z;
    double d = std::exp(s) * (0.5 * std::sin(2 * s) + std::cos(2 * s));
    return Vec{d, d, d};
  };
  f = [](const Vec& p) {
    double s = p.x + p.y + p.z;
    return -3.0 * std::exp(s) * (2.0 * std::cos(2 * s) - 1.5 * std::sin(2 * s));
  };
}

// global polynomial of total degree p with nonzero mixed terms (patch tests)
inline void poly(int dim, int p, ScalarFn& u, GradFn& gu, ScalarFn& f) {
  u = [dim, p](const Vec& v) {
    double x = v.x, y = v.y, z = dim == 3 ? v.z : 0.0;
    double r = 0.3 + 1.2 * x - 0.7 * y + 0.4 * z;
    if (p >= 2) r += 0.9 * x * x - 0.4 * x * y + 0.6 * y * y + 0.5 * y * z - 0.3 * z * z;
    if (p >= 3) r += 0.5 * x * x * x - 0.8 * x * x * y + 0.3 * x * y * y - 0.2 * y * y * y;
    return r;
  };
  gu = [dim, p](const Vec& v) {
    double x = v.x, y = v.y, z = dim == 3 ? v.z : 0.0;
    Vec g{1.2, -0.7, 0.4};
    if (p >= 2) {
      g.x += 1.8 * x - 0.4 * y;
      g.y += -0.4 * x + 1.2 * y + 0.5 * z;
      g.z += 0.5 * y - 0.6 * z;
    }
    if (p >= 3) {
      g.x += 1.5 * x * x - 1.6 * x * y + 0.3 * y * y;
      g.y += -0.8 * x * x + 0.6 * x * y - 0.6 * y * y;
    }
    if (dim == 2) g.z = 0.0;
    return g;
  };
  f = [dim, p](const Vec& v) {
    double x = v.x, y = v.y;
    double lap = 0.0;
    if (p >= 2) lap += 1.8 + 1.2 + (dim == 3 ? -0.6 : 0.0);
    if (p >= 3) lap += 3.0 * x - 1.6 * y + 0.6 * x - 1.2 * y;
    return -lap;
  };
}

// u = sum sin(3 pi x_i) (3D interface case 1; also case 2 side 1)
inline void sin3pi(double inv_kappa, ScalarFn& u, GradFn& gu, ScalarFn& f, double kappa) {
  u = [inv_kappa](const Vec& p) {
    return inv_kappa *
           (std::sin(3 * kPi * p.x) + std::sin(3 * kPi * p.y) + std::sin(3 * kPi * p.z));
  };
  gu = [inv_kappa](const Vec& p) {
    double c = inv_kappa * 3 * kPi;
    return Vec{c * std::cos(3 * kPi * p.x), c * std::cos(3 * kPi * p.y),
               c * std::cos(3 * kPi * p.z)};
  };
  f = [inv_kappa, kappa](const Vec& p) {
    return kappa * inv_kappa * 9 * kPi * kPi *
           (std::sin(3 * kPi * p.x) + std::sin(3 * kPi * p.y) + std::sin(3 * kPi * p.z));
  };
}

inline void cos3pi(double inv_kappa, ScalarFn& u, GradFn& gu, ScalarFn& f, double kappa) {
  u = [inv_kappa](const Vec& p) {
    return inv_kappa *
           (std::cos(3 * kPi * p.x) + std::cos(3 * kPi * p.y) + std::cos(3 * kPi * p.z));
  };
  gu = [inv_kappa](const Vec& p) {
    double c = -inv_kappa * 3 * kPi;
    return Vec{c * std::sin(3 * kPi * p.x), c * std::sin(3 * kPi * p.y),
               c * std::sin(3 * kPi * p.z)};
  };
  f = [inv_kappa, kappa](const Vec& p) {
    return kappa * inv_kappa * 9 * kPi * kPi *
           (std::cos(3 * kPi * p.x) + std::cos(3 * kPi * p.y) + std::cos(3 * kPi * p.z));
  };
}

}  // namespace problems

inline BvpProblem bvp_problem(const std::string& name) {
  using namespace problems;
  BvpProblem pb;
  pb.name = name;
  if (name == "bvp2d_flower") {
    pb.dim = 2;
    pb.box = symmetric_box(1.1, 2);
    pb.phi = flower2d();
    trig2d(pb.u, pb.grad_u, pb.f);
  } else if (name == "bvp3d_flower") {
    pb.dim = 3;
    pb.box = symmetric_box(0.8, 3);
    pb.phi = flower3d();
    expsin3d(pb.u, pb.grad_u, pb.f);
  } else if (name == "bvp2d_circle") {
    pb.dim = 2;
    pb.box = symmetric_box(0.51, 2);
    pb.phi = circle2d(0.25);
    trig2d(pb.u, pb.grad_u, pb.f);
  } else if (name.rfind("patch2d_p", 0) == 0 || name.rfind("patch3d_p", 0) == 0) {
    pb.dim = name[5] == '3' ? 3 : 2;
    int p = name.back() - '0';
    pb.box = symmetric_box(0.8, pb.dim);
    // generic planar cut: irrational normal direction and offset
    Vec n{std::cos(0.7), std::sin(0.7), 0.0};
    if (pb.dim == 3) n = normalized(Vec{std::cos(0.7), std::sin(0.7), 0.41});
    pb.phi = half_plane(n, 0.232358979);
    poly(pb.dim, p, pb.u, pb.grad_u, pb.f);
  } else {
    throw std::invalid_argument("unknown BVP problem: " + name);
  }
  return pb;
}

inline InterfaceProblem interface_problem(const std::string& name) {
  using namespace problems;
  InterfaceProblem pb;
  pb.name = name;
  if (name == "iface2d_flower_a") {
    pb.dim = 2;
    pb.box = symmetric_box(1.1, 2);
    pb.phi = flower2d();
    pb.kappa1 = pb.kappa2 = 1.0;
    trig2d(pb.u1, pb.grad_u1, pb.f1);
    pb.u2 = pb.u1;
    pb.grad_u2 = pb.grad_u1;
    pb.f2 = pb.f1;
  } else if (name == "iface2d_flower_b" || name == "iface2d_flower_b_alt") {
    pb.dim = 2;
    pb.box = symmetric_box(1.1, 2);
    pb.phi = flower2d();
    pb.kappa1 = 1.0;
    pb.kappa2 = 1e6;
    pb.u1 = [](const Vec& p) { return std::sin(kPi * (p.x - p.y)) * std::cos(kPi * (p.x + p.y)); };
    pb.grad_u1 = [](const Vec& p) {
      return Vec{kPi * std::cos(2 * kPi * p.x), -kPi * std::cos(2 * kPi * p.y), 0.0};
    };
    {
      double k1 = pb.kappa1;
      pb.f1 = [k1](const Vec& p) {
        return k1 * 4 * kPi * kPi * std::sin(kPi * (p.x - p.y)) * std::cos(kPi * (p.x + p.y));
      };
    }
    // amplitude 1/kappa_1 by default; the "_alt" variant reads it as 1/kappa_2
    double c = (name == "iface2d_flower_b_alt") ? 1.0 / pb.kappa2 : 1.0 / pb.kappa1;
    pb.u2 = [c](const Vec& p) { return c * 0.5 * std::sin(kPi * (p.x + p.y)); };
    pb.grad_u2 = [c](const Vec& p) {
      double d = c * 0.5 * kPi * std::cos(kPi * (p.x + p.y));
      return Vec{d, d, 0.0};
    };
    {
      double k2 = pb.kappa2;
      pb.f2 = [c, k2](const Vec& p) {
        return k2 * c * kPi * kPi * std::sin(kPi * (p.x + p.y));
      };
    }
  } else if (name == "iface3d_case1") {
    pb.dim = 3;
    pb.box = symmetric_box(1.1, 3);
    pb.phi = eight_balls3d();
    pb.kappa1 = pb.kappa2 = 1.0;
    sin3pi(1.0, pb.u1, pb.grad_u1, pb.f1, 1.0);
    pb.u2 = pb.u1;
    pb.grad_u2 = pb.grad_u1;
    pb.f2 = pb.f1;
  } else if (name == "iface3d_case2") {
    pb.dim = 3;
    pb.box = symmetric_box(1.1, 3);
    pb.phi = corner_balls_cylinder3d();
    pb.kappa1 = 1.0;
    pb.kappa2 = 10.0;
    sin3pi(1.0 / pb.kappa1, pb.u1, pb.grad_u1, pb.f1, pb.kappa1);
    cos3pi(1.0 / pb.kappa2, pb.u2, pb.grad_u2, pb.f2, pb.kappa2);
  } else {
    throw std::invalid_argument("unknown interface problem: " + name);
  }
  return pb;
}

struct ErrorReport {
  double l2 = 0.0;
  double h1_semi = 0.0;  // ||kappa^{1/2} grad e|| over physical volumes
  double h1_full = 0.0;
  double energy = 0.0;
  std::size_t dofs = 0;
  double h = 0.0;
  // broken norms over FULL active elements (extension region included);
  // filled for interface problems, where published tables use this reading
  double l2_active = 0.0;
  double h1_active = 0.0;
};

// Errors for a BVP solution: physical-volume integrals use oversampled cut
// rules (depth + 2, order + 2) so the measured EOC is a discretization EOC.
inline ErrorReport compute_errors(const BackgroundMesh& mesh, const DomainClassification& cls,
                                  const BrokenSpace& sp, const LevelSet& phi,
                                  const FieldVector& uh, const ScalarFn& u, const GradFn& grad_u,
                                  GeometryDepth depth, int quad_order) {
  ErrorReport rep;
  rep.dofs = sp.n_dofs();
  rep.h = mesh.h;
  GeometryDepth d2{depth.depth + 2};
  int order = std::min(12, quad_order + 2);
  const QuadratureRule ref = reference_rule(mesh.dim, order);
  double l2 = 0.0, h1 = 0.0, jumps = 0.0, bdry = 0.0;
  for (int e : cls.active_elements) {
    QuadratureRule rule;
    if (cls.is_cut(e))
      rule = cut_volume_rule(mesh, e, phi, Side::Inside, d2, order, cls.eps_abs);
    else
      map_rule_onto(ref, mesh.element_simplex(e), rule);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec& x = rule.points[q];
      double w = rule.weights[q];
      double ev = eval_field(sp, uh, e, x) - u(x);
      Vec eg = eval_field_grad(sp, uh, e, x) - grad_u(x);
      l2 += w * ev * ev;
      h1 += w * dot(eg, eg);
    }
    if (cls.is_cut(e)) {
      QuadratureRule gam = interface_rule(mesh, e, phi, d2, order, cls.eps_abs);
      for (std::size_t q = 0; q < gam.size(); ++q) {
        double ev = eval_field(sp, uh, e, gam.points[q]) - u(gam.points[q]);
        bdry += gam.weights[q] * ev * ev / mesh.h;
      }
    }
  }
  for (int fidx : cls.interior_faces) {
    const Face& face = mesh.faces[std::size_t(fidx)];
    bool face_cut = cls.is_cut(face.left) || cls.is_cut(face.right);
    QuadratureRule rule = face_cut
                              ? cut_face_rule(mesh, fidx, phi, Side::Inside, d2, order, cls.eps_abs)
                              : face_rule(mesh, fidx, order);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec& x = rule.points[q];
      double j = eval_field(sp, uh, face.left, x) - eval_field(sp, uh, face.right, x);
      jumps += rule.weights[q] * j * j / mesh.h;
    }
  }
  rep.l2 = std::sqrt(l2);
  rep.h1_semi = std::sqrt(h1);
  rep.h1_full = std::sqrt(l2 + h1);
  rep.energy = std::sqrt(h1 + jumps + bdry);
  return rep;
}

// Errors for an interface solution over Omega_1 union Omega_2 with
// kappa^{1/2}-weighted gradients.
inline ErrorReport compute_errors_interface(const BackgroundMesh& mesh,
                                            const TwoDomainClassification& tc,
                                            const BrokenSpace& sp1, const BrokenSpace& sp2,
                                            const InterfaceProblem& pb, const FieldVector& uh1,
                                            const FieldVector& uh2, GeometryDepth depth,
                                            int quad_order) {
  ErrorReport rep;
  rep.dofs = sp1.n_dofs() + sp2.n_dofs();
  rep.h = mesh.h;
  GeometryDepth d2{depth.depth + 2};
  int order = std::min(12, quad_order + 2);
  const QuadratureRule ref = reference_rule(mesh.dim, order);
  double l2 = 0.0, h1 = 0.0, jumps = 0.0, iface = 0.0;

  const double kappa[2] = {pb.kappa1, pb.kappa2};
  const Side sides[2] = {Side::Inside, Side::Outside};
  const BrokenSpace* spaces[2] = {&sp1, &sp2};
  const FieldVector* fields[2] = {&uh1, &uh2};
  const ScalarFn us[2] = {pb.u1, pb.u2};
  const GradFn gus[2] = {pb.grad_u1, pb.grad_u2};

  double l2_active = 0.0, h1_active = 0.0;
  for (int i = 0; i < 2; ++i) {
    const DomainClassification& cls = tc.side[std::size_t(i)];
    for (int e : cls.active_elements) {
      QuadratureRule full;
      map_rule_onto(ref, mesh.element_simplex(e), full);
      for (std::size_t q = 0; q < full.size(); ++q) {
        const Vec& x = full.points[q];
        double w = full.weights[q];
        double ev = eval_field(*spaces[i], *fields[i], e, x) - us[std::size_t(i)](x);
        Vec eg = eval_field_grad(*spaces[i], *fields[i], e, x) - gus[std::size_t(i)](x);
        l2_active += w * ev * ev;
        h1_active += w * kappa[i] * dot(eg, eg);
      }
      QuadratureRule rule;
      if (cls.is_cut(e))
        rule = cut_volume_rule(mesh, e, pb.phi, sides[i], d2, order, cls.eps_abs);
      else
        rule = full;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec& x = rule.points[q];
        double w = rule.weights[q];
        double ev = eval_field(*spaces[i], *fields[i], e, x) - us[std::size_t(i)](x);
        Vec eg = eval_field_grad(*spaces[i], *fields[i], e, x) - gus[std::size_t(i)](x);
        l2 += w * ev * ev;
        h1 += w * kappa[i] * dot(eg, eg);
      }
    }
    for (int fidx : cls.interior_faces) {
      const Face& face = mesh.faces[std::size_t(fidx)];
      bool face_cut = cls.is_cut(face.left) || cls.is_cut(face.right);
      QuadratureRule rule =
          face_cut ? cut_face_rule(mesh, fidx, pb.phi, sides[i], d2, order, cls.eps_abs)
                   : face_rule(mesh, fidx, order);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec& x = rule.points[q];
        double j = eval_field(*spaces[i], *fields[i], face.left, x) -
                   eval_field(*spaces[i], *fields[i], face.right, x);
        jumps += kappa[i] * rule.weights[q] * j * j / mesh.h;
      }
    }
  }
  double kg = 2.0 * pb.kappa1 * pb.kappa2 / (pb.kappa1 + pb.kappa2);
  ScalarFn gD = pb.g_D();
  for (int e : tc.cut_elements) {
    QuadratureRule gam = interface_rule(mesh, e, pb.phi, d2, order, tc.side[0].eps_abs);
    for (std::size_t q = 0; q < gam.size(); ++q) {
      const Vec& x = gam.points[q];
      double j = eval_field(sp1, uh1, e, x) - eval_field(sp2, uh2, e, x) - gD(x);
      iface += kg * gam.weights[q] * j * j / mesh.h;
    }
  }
  rep.l2 = std::sqrt(l2);
  rep.h1_semi = std::sqrt(h1);
  rep.h1_full = std::sqrt(l2 + h1);
  rep.energy = std::sqrt(h1 + jumps + iface);
  rep.l2_active = std::sqrt(l2_active);
  rep.h1_active = std::sqrt(h1_active);
  return rep;
}

struct EocRow {
  int n = 0;
  double h = 0.0;
  std::size_t dofs = 0;
  double l2 = 0.0, h1 = 0.0, energy = 0.0;
  double l2_active = 0.0, h1_active = 0.0;  // interface problems only
  double eoc_l2 = 0.0, eoc_h1 = 0.0, eoc_energy = 0.0;  // 0 in the first row
  bool solved = false;
  std::string error;
};

struct EocTable {
  std::vector<EocRow> rows;
};

inline double eoc(double e_prev, double e_cur, double h_prev, double h_cur) {
  return std::log(e_prev / e_cur) / std::log(h_prev / h_cur);
}

inline void fill_eoc(EocTable& table) {
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const EocRow& p = table.rows[i - 1];
    EocRow& r = table.rows[i];
    if (!p.solved || !r.solved) continue;
    r.eoc_l2 = eoc(p.l2, r.l2, p.h, r.h);
    r.eoc_h1 = eoc(p.h1, r.h1, p.h, r.h);
    r.eoc_energy = eoc(p.energy, r.energy, p.h, r.h);
  }
}

// --- plain-text `key = value` configuration -------------------------------

struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  }
  double get_double(const std::string& key, double dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : std::stod(it->second);
  }
  int get_int(const std::string& key, int dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : std::stoi(it->second);
  }
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    // items may be separated by commas, whitespace, or both
    std::vector<std::string> out;
    std::string norm = it->second;
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::stringstream ss(norm);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& dflt) const {
    if (!has(key)) return dflt;
    std::vector<int> out;
    for (const auto& s : get_list(key, {})) out.push_back(std::stoi(s));
    return out;
  }
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const {
    if (!has(key)) return dflt;
    std::vector<double> out;
    for (const auto& s : get_list(key, {})) out.push_back(std::stod(s));
    return out;
  }
};

inline Config parse_config(std::istream& in) {
  Config cfg;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t\r");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (!key.empty()) cfg.kv[key] = val;
  }
  return cfg;
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

inline BvpParams bvp_params_from_config(const Config& cfg) {
  BvpParams p;
  p.beta = cfg.get_double("beta", 50.0);
  p.gamma[0] = cfg.get_double("gamma0", 50.0);
  p.gamma[1] = cfg.get_double("gamma1", 0.1);
  p.gamma[2] = cfg.get_double("gamma2", 0.1);
  p.gamma[3] = cfg.get_double("gamma3", 0.1);
  p.gamma_proj = cfg.get_double("gamma_proj", 10.0);
  // sweep configs may list several variants; the scalar parameter set uses the first
  p.gp_variant = parse_gp_variant(cfg.get_list("gp_variant", {"face_jumps"}).front());
  p.c_s = cfg.get_double("c_s", 0.1);
  int order = cfg.get_int("order", 1);
  p.depth.depth = cfg.get_int("geometry_depth", order + 1);
  p.quad_order_factor = cfg.get_int("quad_order_factor", 2);
  return p;
}

inline InterfaceParams interface_params_from_config(const Config& cfg,
                                                    const InterfaceProblem& pb) {
  InterfaceParams p;
  p.kappa1 = pb.kappa1;
  p.kappa2 = pb.kappa2;
  p.beta_face = cfg.get_double("beta", 50.0);
  p.beta_gamma_tilde = cfg.get_double("beta_gamma", cfg.get_double("beta", 50.0));
  p.weighting = cfg.get("weighting", "harmonic") == "cut_area" ? InterfaceWeighting::CutArea
                                                               : InterfaceWeighting::Harmonic;
  p.gamma[0] = cfg.get_double("gamma0", 50.0);
  p.gamma[1] = cfg.get_double("gamma1", 0.1);
  p.gamma[2] = cfg.get_double("gamma2", 0.1);
  p.gamma[3] = cfg.get_double("gamma3", 0.1);
  p.gamma_proj = cfg.get_double("gamma_proj", 10.0);
  p.gp_variant = parse_gp_variant(cfg.get("gp_variant", "face_jumps"));
  p.c_s = cfg.get_double("c_s", 0.1);
  int order = cfg.get_int("order", 1);
  p.depth.depth = cfg.get_int("geometry_depth", order + 1);
  p.quad_order_factor = cfg.get_int("quad_order_factor", 2);
  return p;
}

// --- experiment drivers ----------------------------------------------------

struct BvpSolveResult {
  FieldVector uh;
  ErrorReport errors;
  SolveReport solve_report;
};

inline BvpSolveResult solve_bvp(const BvpProblem& pb, int n, int order, const BvpParams& params) {
  BvpSolveResult res;
  BackgroundMesh mesh = build_structured_mesh(pb.box, n, pb.dim);
  DomainClassification cls = classify(mesh, pb.phi);
  BrokenSpace sp = build_space(mesh, cls.active_elements, order);
  SystemOperator op = assemble_bvp(mesh, cls, sp, pb.phi, params, pb.f, pb.g());
  res.solve_report = solve(op.A, op.b);
  FieldVector uh;
  uh.space = &sp;
  uh.coeffs.assign(res.solve_report.x.data(),
                   res.solve_report.x.data() + res.solve_report.x.size());
  res.errors = compute_errors(mesh, cls, sp, pb.phi, uh, pb.u, pb.grad_u, params.depth,
                              params.quad_order_factor * order);
  res.uh = std::move(uh);
  res.uh.space = nullptr;  // the space is local to this call
  return res;
}

inline EocTable run_convergence(const BvpProblem& pb, const std::vector<int>& n_list, int order,
                                const BvpParams& params) {
  EocTable table;
  for (int n : n_list) {
    EocRow row;
    row.n = n;
    try {
      BvpSolveResult res = solve_bvp(pb, n, order, params);
      row.h = res.errors.h;
      row.dofs = res.errors.dofs;
      row.l2 = res.errors.l2;
      row.h1 = res.errors.h1_semi;
      row.energy = res.errors.energy;
      row.solved = res.solve_report.converged;
      if (!row.solved) row.error = "solver residual " + std::to_string(res.solve_report.residual);
    } catch (const std::exception& ex) {
      row.solved = false;
      row.error = ex.what();
    }
    table.rows.push_back(row);
  }
  fill_eoc(table);
  return table;
}

inline EocTable run_interface_convergence(const InterfaceProblem& pb,
                                          const std::vector<int>& n_list, int order,
                                          const InterfaceParams& params) {
  EocTable table;
  for (int n : n_list) {
    EocRow row;
    row.n = n;
    try {
      BackgroundMesh mesh = build_structured_mesh(pb.box, n, pb.dim);
      TwoDomainClassification tc = classify_two_domain(mesh, pb.phi);
      BrokenSpace sp1 = build_space(mesh, tc.side[0].active_elements, order);
      BrokenSpace sp2 = build_space(mesh, tc.side[1].active_elements, order);
      SystemOperator op = assemble_interface(mesh, tc, sp1, sp2, pb.phi, params, pb.f1, pb.f2,
                                             pb.g(), pb.g_D(), pb.g_N());
      SolveReport sol = solve(op.A, op.b);
      FieldVector uh1, uh2;
      uh1.space = &sp1;
      uh2.space = &sp2;
      uh1.coeffs.assign(sol.x.data(), sol.x.data() + Eigen::Index(op.n_dofs_side1));
      uh2.coeffs.assign(sol.x.data() + Eigen::Index(op.n_dofs_side1), sol.x.data() + sol.x.size());
      ErrorReport err = compute_errors_interface(mesh, tc, sp1, sp2, pb, uh1, uh2, params.depth,
                                                 params.quad_order_factor * order);
      row.h = err.h;
      row.dofs = err.dofs;
      row.l2 = err.l2;
      row.h1 = err.h1_semi;
      row.energy = err.energy;
      row.l2_active = err.l2_active;
      row.h1_active = err.h1_active;
      row.solved = sol.converged;
      if (!row.solved) row.error = "solver residual " + std::to_string(sol.residual);
    } catch (const std::exception& ex) {
      row.solved = false;
      row.error = ex.what();
    }
    table.rows.push_back(row);
  }
  fill_eoc(table);
  return table;
}

// Shift an entire manufactured problem by `d`: geometry and data move
// together, so every sweep step solves the same physical problem on a
// different cut configuration.
inline BvpProblem translate_problem(const BvpProblem& pb, const Vec& d) {
  BvpProblem out = pb;
  out.phi = translate(pb.phi, d);
  auto u = pb.u;
  auto gu = pb.grad_u;
  auto f = pb.f;
  out.u = [u, d](const Vec& x) { return u(x - d); };
  out.grad_u = [gu, d](const Vec& x) { return gu(x - d); };
  out.f = [f, d](const Vec& x) { return f(x - d); };
  return out;
}

struct SweepRow {
  double delta = 0.0;
  std::string variant;
  double l2 = 0.0, h1 = 0.0;
  double kappa = 0.0;
  bool converged = false;
};

struct SweepConfig {
  BvpProblem base;
  int n = 16;
  int order = 1;
  Vec direction{1.0, 1.0, 0.0};
  double step = 0.002;
  int steps = 200;
  std::vector<GhostPenaltyVariant> variants{GhostPenaltyVariant::FaceJumps};
  BvpParams params;
  bool with_errors = true;
  bool with_condition = true;
};

// Translation sweep: solves the BVP on gradually shifted copies of the
// geometry, recording errors and the condition number per step.
inline std::vector<SweepRow> run_translation_sweep(const SweepConfig& sc) {
  std::vector<SweepRow> rows;
  BackgroundMesh mesh = build_structured_mesh(sc.base.box, sc.n, sc.base.dim);
  for (int k = 0; k < sc.steps; ++k) {
    double delta = k * sc.step;
    BvpProblem pb = translate_problem(sc.base, sc.direction * delta);
    const LevelSet& phi = pb.phi;
    DomainClassification cls = classify(mesh, phi);
    BrokenSpace sp = build_space(mesh, cls.active_elements, sc.order);
    for (GhostPenaltyVariant variant : sc.variants) {
      SweepRow row;
      row.delta = delta;
      row.variant = gp_variant_name(variant);
      try {
        BvpParams params = sc.params;
        params.gp_variant = variant;
        SystemOperator op = assemble_bvp(mesh, cls, sp, phi, params, pb.f, pb.g());
        bool ok = true;
        if (sc.with_condition) {
          CondReport cr = condition_number(op.A);
          row.kappa = cr.kappa;
          ok = ok && cr.converged;
        }
        if (sc.with_errors) {
          SolveReport sol = solve(op.A, op.b);
          ok = ok && sol.converged;
          FieldVector uh;
          uh.space = &sp;
          uh.coeffs.assign(sol.x.data(), sol.x.data() + sol.x.size());
          ErrorReport err = compute_errors(mesh, cls, sp, phi, uh, pb.u, pb.grad_u,
                                           params.depth, params.quad_order_factor * sc.order);
          row.l2 = err.l2;
          row.h1 = err.h1_semi;
        }
        row.converged = ok;
      } catch (const std::exception&) {
        row.converged = false;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

struct ScaleRow {
  double scale = 0.0;
  double kappa_max = 0.0;
  double kappa_min = 0.0;
  double fluctuation = 0.0;  // kappa_max / kappa_min
};

// Parameter scaling study: rescales (gamma_0, gamma_1) jointly and reruns
// the condition-number translation sweep per scale.
inline std::vector<ScaleRow> run_parameter_scaling(const SweepConfig& base_sweep,
                                                   const std::vector<double>& scales) {
  std::vector<ScaleRow> out;
  for (double s : scales) {
    SweepConfig sc = base_sweep;
    sc.with_errors = false;
    sc.params.gamma[0] = base_sweep.params.gamma[0] * s;
    for (int j = 1; j < 4; ++j) sc.params.gamma[std::size_t(j)] = base_sweep.params.gamma[std::size_t(j)] * s;
    std::vector<SweepRow> rows = run_translation_sweep(sc);
    ScaleRow r;
    r.scale = s;
    r.kappa_max = 0.0;
    r.kappa_min = std::numeric_limits<double>::infinity();
    for (const SweepRow& row : rows) {
      if (!row.converged || !std::isfinite(row.kappa)) continue;
      r.kappa_max = std::max(r.kappa_max, row.kappa);
      r.kappa_min = std::min(r.kappa_min, row.kappa);
    }
    r.fluctuation = r.kappa_min > 0.0 ? r.kappa_max / r.kappa_min
                                      : std::numeric_limits<double>::infinity();
    out.push_back(r);
  }
  return out;
}

// --- CSV output -------------------------------------------------------------

inline void write_converge_csv(std::ostream& os, const EocTable& table) {
  os << "n,h,dofs,l2,eoc_l2,h1,eoc_h1,energy,eoc_energy\n";
  os << std::setprecision(12);
  for (const EocRow& r : table.rows)
    os << r.n << ',' << r.h << ',' << r.dofs << ',' << r.l2 << ',' << r.eoc_l2 << ',' << r.h1
       << ',' << r.eoc_h1 << ',' << r.energy << ',' << r.eoc_energy << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "delta,variant,l2,h1,kappa,converged\n";
  os << std::setprecision(12);
  for (const SweepRow& r : rows)
    os << r.delta << ',' << r.variant << ',' << r.l2 << ',' << r.h1 << ',' << r.kappa << ','
       << (r.converged ? 1 : 0) << '\n';
}

inline void write_scale_csv(std::ostream& os, const std::vector<ScaleRow>& rows) {
  os << "scale,kappa_max,kappa_min,fluctuation\n";
  os << std::setprecision(12);
  for (const ScaleRow& r : rows)
    os << r.scale << ',' << r.kappa_max << ',' << r.kappa_min << ',' << r.fluctuation << '\n';
}

}  // namespace cutdg

#endif
