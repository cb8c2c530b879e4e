#ifndef CUTDG_ASSEMBLY_HPP
#define CUTDG_ASSEMBLY_HPP

#include "cutdg/linalg.hpp"
#include "cutdg/space.hpp"

namespace cutdg {

enum class GhostPenaltyVariant {
  FaceJumps,     // g_h^1: jumps of all normal derivatives up to order k
  FullGradient,  // penalizes the full gradient jump only (no j=0 term)
  ProjectionP1,  // patch projection, face-neighbor pairs
  ProjectionP2,  // patch projection, vertex neighborhoods of cut elements
  ProjectionP3,  // patch projection, small-cut agglomeration pairs
  None
};

inline GhostPenaltyVariant parse_gp_variant(const std::string& s) {
  if (s == "face_jumps") return GhostPenaltyVariant::FaceJumps;
  if (s == "full_gradient") return GhostPenaltyVariant::FullGradient;
  if (s == "projection_p1") return GhostPenaltyVariant::ProjectionP1;
  if (s == "projection_p2") return GhostPenaltyVariant::ProjectionP2;
  if (s == "projection_p3") return GhostPenaltyVariant::ProjectionP3;
  if (s == "none") return GhostPenaltyVariant::None;
  throw std::invalid_argument("unknown gp_variant: " + s);
}

inline std::string gp_variant_name(GhostPenaltyVariant v) {
  switch (v) {
    case GhostPenaltyVariant::FaceJumps: return "face_jumps";
    case GhostPenaltyVariant::FullGradient: return "full_gradient";
    case GhostPenaltyVariant::ProjectionP1: return "projection_p1";
    case GhostPenaltyVariant::ProjectionP2: return "projection_p2";
    case GhostPenaltyVariant::ProjectionP3: return "projection_p3";
    default: return "none";
  }
}

struct BvpParams {
  double beta = 50.0;                          // Nitsche/face penalty
  std::array<double, 4> gamma{50.0, 0.1, 0.1, 0.1};  // gamma_0..gamma_3
  double gamma_proj = 10.0;                    // projection-variant scale
  GhostPenaltyVariant gp_variant = GhostPenaltyVariant::FaceJumps;
  double c_s = 0.1;                            // small-cut threshold for P3
  GeometryDepth depth{2};
  int quad_order_factor = 2;                   // matrix quadrature order = factor * k
};

enum class InterfaceWeighting { Harmonic, CutArea };

struct InterfaceParams {
  double kappa1 = 1.0, kappa2 = 1.0;
  double beta_face = 50.0;          // per-side SIP/outer-boundary penalty
  double beta_gamma_tilde = 50.0;   // kappa-independent interface penalty scale
  InterfaceWeighting weighting = InterfaceWeighting::Harmonic;
  std::array<double, 4> gamma{50.0, 0.1, 0.1, 0.1};
  double gamma_proj = 10.0;
  GhostPenaltyVariant gp_variant = GhostPenaltyVariant::FaceJumps;
  double c_s = 0.1;
  GeometryDepth depth{2};
  int quad_order_factor = 2;
};

struct SystemOperator {
  SparseSym A;
  Eigen::VectorXd b;
  std::size_t n_dofs_side1 = 0;  // interface systems: offset of the second block
};

using ScalarFn = std::function<double(const Vec&)>;
using Triplets = std::vector<Eigen::Triplet<double>>;

namespace detail {

inline void scatter(const Eigen::MatrixXd& local, const std::vector<int>& dofs, Triplets& out) {
  for (std::size_t a = 0; a < dofs.size(); ++a)
    for (std::size_t b = 0; b < dofs.size(); ++b)
      if (local(Eigen::Index(a), Eigen::Index(b)) != 0.0)
        out.emplace_back(dofs[a], dofs[b], local(Eigen::Index(a), Eigen::Index(b)));
}

inline std::vector<int> element_dofs(const BrokenSpace& sp, int e, int offset) {
  std::vector<int> dofs(std::size_t(sp.ndof_el));
  for (int a = 0; a < sp.ndof_el; ++a) dofs[std::size_t(a)] = offset + sp.global_dof(e, a);
  return dofs;
}

// Symmetric interior-penalty face kernel over the given rule; jump = v_L - v_R
// with the normal pointing from L to R.
inline void sip_face(const BrokenSpace& sp, int eL, int eR, const Vec& n,
                     const QuadratureRule& rule, double kappa, double penalty,
                     Eigen::MatrixXd& local) {
  const int nd = sp.ndof_el;
  local.setZero(2 * nd, 2 * nd);
  std::vector<double> vL(static_cast<std::size_t>(nd)), vR(static_cast<std::size_t>(nd));
  std::vector<Vec> gL(static_cast<std::size_t>(nd)), gR(static_cast<std::size_t>(nd));
  Eigen::VectorXd jump(2 * nd), flux(2 * nd);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec& x = rule.points[q];
    double w = rule.weights[q];
    eval_basis(sp, eL, x, vL.data());
    eval_basis(sp, eR, x, vR.data());
    eval_basis_grad(sp, eL, x, gL.data());
    eval_basis_grad(sp, eR, x, gR.data());
    for (int a = 0; a < nd; ++a) {
      jump(a) = vL[std::size_t(a)];
      jump(nd + a) = -vR[std::size_t(a)];
      flux(a) = 0.5 * kappa * dot(n, gL[std::size_t(a)]);
      flux(nd + a) = 0.5 * kappa * dot(n, gR[std::size_t(a)]);
    }
    // entry pairs are computed once so the block is symmetric to the bit
    for (int a = 0; a < 2 * nd; ++a)
      for (int c = 0; c <= a; ++c) {
        double v = w * (penalty * jump(a) * jump(c) - flux(a) * jump(c) - jump(a) * flux(c));
        local(a, c) += v;
        if (c != a) local(c, a) += v;
      }
  }
}

// Nitsche boundary kernel on a surface rule with per-point normals.
inline void nitsche_boundary(const BrokenSpace& sp, int e, const QuadratureRule& rule,
                             double kappa, double penalty, const ScalarFn& g,
                             Eigen::MatrixXd& local, Eigen::VectorXd& rhs) {
  const int nd = sp.ndof_el;
  local.setZero(nd, nd);
  rhs.setZero(nd);
  std::vector<double> vals(static_cast<std::size_t>(nd));
  std::vector<Vec> grads(static_cast<std::size_t>(nd));
  Eigen::VectorXd val(nd), dn(nd);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec& x = rule.points[q];
    const Vec& n = rule.normals[q];
    double w = rule.weights[q];
    eval_basis(sp, e, x, vals.data());
    eval_basis_grad(sp, e, x, grads.data());
    for (int a = 0; a < nd; ++a) {
      val(a) = vals[std::size_t(a)];
      dn(a) = kappa * dot(n, grads[std::size_t(a)]);
    }
    for (int a = 0; a < nd; ++a)
      for (int c = 0; c <= a; ++c) {
        double v = w * (penalty * val(a) * val(c) - dn(a) * val(c) - val(a) * dn(c));
        local(a, c) += v;
        if (c != a) local(c, a) += v;
      }
    double gq = g(x);
    rhs.noalias() += (w * gq) * (penalty * val - dn);
  }
}

struct PatchWorkspace {
  std::vector<std::vector<int>> vertex_neighbors;  // built lazily for P2/P3
};

inline std::vector<std::vector<int>> build_vertex_neighborhoods(const BackgroundMesh& mesh) {
  std::vector<std::vector<int>> v2e(std::size_t(mesh.n_vertices()));
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (int i = 0; i <= mesh.dim; ++i) v2e[std::size_t(mesh.elements[e][i])].push_back(e);
  return v2e;
}

// omega(T): active elements sharing at least one node with T (T included).
inline std::vector<int> node_patch(const BackgroundMesh& mesh, const DomainClassification& cls,
                                   const std::vector<std::vector<int>>& v2e, int e) {
  std::vector<int> patch;
  for (int i = 0; i <= mesh.dim; ++i)
    for (int nb : v2e[std::size_t(mesh.elements[e][i])])
      if (cls.is_active(nb)) patch.push_back(nb);
  std::sort(patch.begin(), patch.end());
  patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
  return patch;
}

// g_P local matrix for one patch: gamma/h^2 (I - B^T G^{-1} B) with the
// element bases orthonormal on full elements.
inline void projection_patch_matrix(const BrokenSpace& sp, const std::vector<int>& patch,
                                    double gamma_over_h2, Eigen::MatrixXd& local) {
  const BackgroundMesh& mesh = *sp.mesh;
  const int nd = sp.ndof_el;
  const int m = int(patch.size());
  Vec center{};
  for (int e : patch) center += mesh.element_centroid(e);
  center = center / double(m);
  double scale = mesh.h;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nd, m * nd);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nd, nd);
  const QuadratureRule ref = reference_rule(mesh.dim, 2 * sp.order);
  std::vector<double> vals(static_cast<std::size_t>(nd));
  Eigen::VectorXd mono(nd);
  for (int ei = 0; ei < m; ++ei) {
    int e = patch[std::size_t(ei)];
    QuadratureRule rule;
    map_rule_onto(ref, mesh.element_simplex(e), rule);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double w = rule.weights[q];
      Vec xi = (rule.points[q] - center) / scale;
      for (int a = 0; a < nd; ++a) mono(a) = mono_eval(sp.exponents[std::size_t(a)], xi);
      eval_basis(sp, e, rule.points[q], vals.data());
      for (int a = 0; a < nd; ++a)
        for (int l = 0; l < nd; ++l) B(a, ei * nd + l) += w * mono(a) * vals[std::size_t(l)];
      G.noalias() += w * mono * mono.transpose();
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  Eigen::MatrixXd GinvB = llt.solve(B);
  local = Eigen::MatrixXd::Identity(m * nd, m * nd) - B.transpose() * GinvB;
  local *= gamma_over_h2;
  // symmetrize against round-off
  local = 0.5 * (local + local.transpose()).eval();
}

}  // namespace detail

// Physical cut volume |T cap Omega(side)| of an element.
inline double cut_volume(const BackgroundMesh& mesh, int element, const LevelSet& phi,
                         Side side, GeometryDepth depth, double eps_abs) {
  return cut_volume_rule(mesh, element, phi, side, depth, 1, eps_abs).total_weight();
}

// Adds the selected ghost penalty, scaled by kappa_scale, into `out`.
// Faces are integrated over the FULL face; patches over full elements.
inline void assemble_ghost_penalty(GhostPenaltyVariant variant, const BackgroundMesh& mesh,
                                   const DomainClassification& cls, const BrokenSpace& sp,
                                   const LevelSet& phi, const BvpParams& params,
                                   Triplets& out, int dof_offset = 0,
                                   Side side = Side::Inside, double kappa_scale = 1.0) {
  if (variant == GhostPenaltyVariant::None) return;
  const int nd = sp.ndof_el;
  const int k = sp.order;
  const double h = mesh.h;

  if (variant == GhostPenaltyVariant::FaceJumps || variant == GhostPenaltyVariant::FullGradient) {
    Eigen::MatrixXd local(2 * nd, 2 * nd);
    std::vector<double> dL(static_cast<std::size_t>(nd)), dR(static_cast<std::size_t>(nd));
    std::vector<Vec> gL(static_cast<std::size_t>(nd)), gR(static_cast<std::size_t>(nd));
    Eigen::VectorXd jump(2 * nd);
    for (int f : cls.ghost_faces) {
      const Face& face = mesh.faces[std::size_t(f)];
      FaceGeometry geo = face_geometry(mesh, f);
      QuadratureRule rule = face_rule(mesh, f, 2 * k);
      local.setZero();
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec& x = rule.points[q];
        double w = rule.weights[q];
        if (variant == GhostPenaltyVariant::FaceJumps) {
          for (int j = 0; j <= k; ++j) {
            eval_normal_derivative(sp, face.left, x, geo.normal, j, dL.data());
            eval_normal_derivative(sp, face.right, x, geo.normal, j, dR.data());
            for (int a = 0; a < nd; ++a) {
              jump(a) = dL[std::size_t(a)];
              jump(nd + a) = -dR[std::size_t(a)];
            }
            double c = kappa_scale * params.gamma[std::size_t(j)] * std::pow(h, 2 * j - 1);
            for (int a = 0; a < 2 * nd; ++a)
              for (int cc = 0; cc <= a; ++cc) {
                double v = (w * c) * (jump(a) * jump(cc));
                local(a, cc) += v;
                if (cc != a) local(cc, a) += v;
              }
          }
        } else {
          eval_basis_grad(sp, face.left, x, gL.data());
          eval_basis_grad(sp, face.right, x, gR.data());
          double c = kappa_scale * params.gamma[1] * h;
          for (int d = 0; d < mesh.dim; ++d) {
            for (int a = 0; a < nd; ++a) {
              jump(a) = gL[std::size_t(a)][d];
              jump(nd + a) = -gR[std::size_t(a)][d];
            }
            for (int a = 0; a < 2 * nd; ++a)
              for (int cc = 0; cc <= a; ++cc) {
                double v = (w * c) * (jump(a) * jump(cc));
                local(a, cc) += v;
                if (cc != a) local(cc, a) += v;
              }
          }
        }
      }
      std::vector<int> dofs = detail::element_dofs(sp, face.left, dof_offset);
      std::vector<int> dofsR = detail::element_dofs(sp, face.right, dof_offset);
      dofs.insert(dofs.end(), dofsR.begin(), dofsR.end());
      detail::scatter(local, dofs, out);
    }
    return;
  }

  // projection variants: collect patches, then one local matrix per patch
  std::vector<std::vector<int>> patches;
  if (variant == GhostPenaltyVariant::ProjectionP1) {
    for (int f : cls.ghost_faces)
      patches.push_back({mesh.faces[std::size_t(f)].left, mesh.faces[std::size_t(f)].right});
  } else {
    auto v2e = detail::build_vertex_neighborhoods(mesh);
    if (variant == GhostPenaltyVariant::ProjectionP2) {
      for (int e : cls.cut_elements) patches.push_back(detail::node_patch(mesh, cls, v2e, e));
    } else {  // ProjectionP3
      for (int e : cls.cut_elements) {
        double hd = std::pow(mesh.element_diameter(e), mesh.dim);
        if (cut_volume(mesh, e, phi, side, params.depth, cls.eps_abs) > params.c_s * hd) continue;
        int mate = -1;
        for (int nb : detail::node_patch(mesh, cls, v2e, e)) {
          if (nb == e) continue;
          double vol = cls.is_cut(nb)
                           ? cut_volume(mesh, nb, phi, side, params.depth, cls.eps_abs)
                           : mesh.element_volume(nb);
          if (vol >= params.c_s * std::pow(mesh.element_diameter(nb), mesh.dim)) {
            mate = nb;
            break;
          }
        }
        if (mate < 0)
          throw std::runtime_error(
              "ProjectionP3: no fat neighbor for a small-cut element (under-resolved geometry)");
        patches.push_back({e, mate});
      }
    }
  }
  Eigen::MatrixXd local;
  for (const auto& patch : patches) {
    detail::projection_patch_matrix(sp, patch, kappa_scale * params.gamma_proj / (h * h), local);
    std::vector<int> dofs;
    for (int e : patch) {
      auto ed = detail::element_dofs(sp, e, dof_offset);
      dofs.insert(dofs.end(), ed.begin(), ed.end());
    }
    detail::scatter(local, dofs, out);
  }
}

// Assemble the cutDG system for the Poisson boundary value problem:
// A realizes a_h + g_h, b realizes l_h.
inline SystemOperator assemble_bvp(const BackgroundMesh& mesh, const DomainClassification& cls,
                                   const BrokenSpace& sp, const LevelSet& phi,
                                   const BvpParams& params, const ScalarFn& f,
                                   const ScalarFn& g) {
  const int nd = sp.ndof_el;
  const int k = sp.order;
  const double h = mesh.h;
  const int order_m = params.quad_order_factor * k;
  const int order_d = std::min(12, order_m + 2);
  const std::size_t n = sp.n_dofs();

  Triplets triplets;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(n));

  Eigen::MatrixXd local(nd, nd);
  Eigen::VectorXd rhs(nd);
  std::vector<Vec> grads(static_cast<std::size_t>(nd));
  std::vector<double> vals(static_cast<std::size_t>(nd));

  const QuadratureRule ref_m = reference_rule(mesh.dim, order_m);
  const QuadratureRule ref_d = reference_rule(mesh.dim, order_d);

  for (int e : cls.active_elements) {
    bool cut = cls.is_cut(e);
    // stiffness on T cap Omega
    QuadratureRule vol_m, vol_d;
    if (cut) {
      vol_m = cut_volume_rule(mesh, e, phi, Side::Inside, params.depth, order_m, cls.eps_abs);
      vol_d = cut_volume_rule(mesh, e, phi, Side::Inside, params.depth, order_d, cls.eps_abs);
    } else {
      map_rule_onto(ref_m, mesh.element_simplex(e), vol_m);
      map_rule_onto(ref_d, mesh.element_simplex(e), vol_d);
    }
    if (vol_m.size() == 0 && params.gp_variant == GhostPenaltyVariant::None)
      throw std::runtime_error("assemble_bvp: empty cut element without stabilization");
    local.setZero();
    for (std::size_t q = 0; q < vol_m.size(); ++q) {
      eval_basis_grad(sp, e, vol_m.points[q], grads.data());
      double w = vol_m.weights[q];
      for (int a = 0; a < nd; ++a)
        for (int c = 0; c <= a; ++c) {
          double v = w * dot(grads[std::size_t(a)], grads[std::size_t(c)]);
          local(a, c) += v;
          if (c != a) local(c, a) += v;
        }
    }
    std::vector<int> dofs = detail::element_dofs(sp, e, 0);
    detail::scatter(local, dofs, triplets);

    for (std::size_t q = 0; q < vol_d.size(); ++q) {
      eval_basis(sp, e, vol_d.points[q], vals.data());
      double fw = f(vol_d.points[q]) * vol_d.weights[q];
      for (int a = 0; a < nd; ++a) b(dofs[std::size_t(a)]) += fw * vals[std::size_t(a)];
    }

    // Nitsche boundary terms on Gamma cap T
    if (cut) {
      QuadratureRule gam = interface_rule(mesh, e, phi, params.depth, order_d, cls.eps_abs);
      if (gam.size() > 0) {
        detail::nitsche_boundary(sp, e, gam, 1.0, params.beta / h, g, local, rhs);
        detail::scatter(local, dofs, triplets);
        for (int a = 0; a < nd; ++a) b(dofs[std::size_t(a)]) += rhs(a);
      }
    }
  }

  // SIP terms on interior faces, integrated over F cap Omega
  Eigen::MatrixXd face_local;
  for (int fidx : cls.interior_faces) {
    const Face& face = mesh.faces[std::size_t(fidx)];
    bool face_cut = cls.is_cut(face.left) || cls.is_cut(face.right);
    QuadratureRule rule = face_cut ? cut_face_rule(mesh, fidx, phi, Side::Inside, params.depth,
                                                   order_m, cls.eps_abs)
                                   : face_rule(mesh, fidx, order_m);
    if (rule.size() == 0) continue;
    FaceGeometry geo = face_geometry(mesh, fidx);
    detail::sip_face(sp, face.left, face.right, geo.normal, rule, 1.0, params.beta / h,
                     face_local);
    std::vector<int> dofs = detail::element_dofs(sp, face.left, 0);
    std::vector<int> dofsR = detail::element_dofs(sp, face.right, 0);
    dofs.insert(dofs.end(), dofsR.begin(), dofsR.end());
    detail::scatter(face_local, dofs, triplets);
  }

  // Nitsche terms on the fitted part of the boundary (where Omega touches
  // the background box)
  for (int fidx : cls.boundary_faces_fitted) {
    const Face& face = mesh.faces[std::size_t(fidx)];
    QuadratureRule rule = cls.is_cut(face.left)
                              ? cut_face_rule(mesh, fidx, phi, Side::Inside, params.depth,
                                              order_d, cls.eps_abs)
                              : face_rule(mesh, fidx, order_d);
    if (rule.size() == 0) continue;
    FaceGeometry geo = face_geometry(mesh, fidx);
    rule.normals.assign(rule.size(), geo.normal);  // outward: boundary face of left element
    detail::nitsche_boundary(sp, face.left, rule, 1.0, params.beta / h, g, local, rhs);
    std::vector<int> dofs = detail::element_dofs(sp, face.left, 0);
    detail::scatter(local, dofs, triplets);
    for (int a = 0; a < nd; ++a) b(dofs[std::size_t(a)]) += rhs(a);
  }

  assemble_ghost_penalty(params.gp_variant, mesh, cls, sp, phi, params, triplets);

  SystemOperator op;
  op.A = SparseSym::from_triplets(int(n), triplets);
  op.b = std::move(b);
  op.n_dofs_side1 = n;
  return op;
}

// Assemble the coupled cutDG system for the two-phase interface problem.
// DOF layout: [side-1 dofs | side-2 dofs].
inline SystemOperator assemble_interface(const BackgroundMesh& mesh,
                                         const TwoDomainClassification& tc,
                                         const BrokenSpace& sp1, const BrokenSpace& sp2,
                                         const LevelSet& phi, const InterfaceParams& params,
                                         const ScalarFn& f1, const ScalarFn& f2,
                                         const ScalarFn& g, const ScalarFn& g_D,
                                         const ScalarFn& g_N) {
  const double h = mesh.h;
  const int k = sp1.order;
  const int order_m = params.quad_order_factor * k;
  const int order_d = std::min(12, order_m + 2);
  const std::size_t n1 = sp1.n_dofs(), n2 = sp2.n_dofs();
  const std::size_t n = n1 + n2;

  Triplets triplets;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(n));

  const double kappa[2] = {params.kappa1, params.kappa2};
  const Side sides[2] = {Side::Inside, Side::Outside};
  const BrokenSpace* spaces[2] = {&sp1, &sp2};
  const int offsets[2] = {0, int(n1)};
  const ScalarFn* fs[2] = {&f1, &f2};

  const QuadratureRule ref_m = reference_rule(mesh.dim, order_m);
  const QuadratureRule ref_d = reference_rule(mesh.dim, order_d);

  for (int i = 0; i < 2; ++i) {
    const DomainClassification& cls = tc.side[std::size_t(i)];
    const BrokenSpace& sp = *spaces[i];
    const int nd = sp.ndof_el;
    Eigen::MatrixXd local(nd, nd);
    Eigen::VectorXd rhs(nd);
    std::vector<Vec> grads(static_cast<std::size_t>(nd));
    std::vector<double> vals(static_cast<std::size_t>(nd));

    for (int e : cls.active_elements) {
      bool cut = cls.is_cut(e);
      QuadratureRule vol_m, vol_d;
      if (cut) {
        vol_m = cut_volume_rule(mesh, e, phi, sides[i], params.depth, order_m, cls.eps_abs);
        vol_d = cut_volume_rule(mesh, e, phi, sides[i], params.depth, order_d, cls.eps_abs);
      } else {
        map_rule_onto(ref_m, mesh.element_simplex(e), vol_m);
        map_rule_onto(ref_d, mesh.element_simplex(e), vol_d);
      }
      local.setZero();
      for (std::size_t q = 0; q < vol_m.size(); ++q) {
        eval_basis_grad(sp, e, vol_m.points[q], grads.data());
        double w = kappa[i] * vol_m.weights[q];
        for (int a = 0; a < nd; ++a)
          for (int c = 0; c <= a; ++c) {
            double v = w * dot(grads[std::size_t(a)], grads[std::size_t(c)]);
            local(a, c) += v;
            if (c != a) local(c, a) += v;
          }
      }
      std::vector<int> dofs = detail::element_dofs(sp, e, offsets[i]);
      detail::scatter(local, dofs, triplets);
      for (std::size_t q = 0; q < vol_d.size(); ++q) {
        eval_basis(sp, e, vol_d.points[q], vals.data());
        double fw = (*fs[i])(vol_d.points[q]) * vol_d.weights[q];
        for (int a = 0; a < nd; ++a) b(dofs[std::size_t(a)]) += fw * vals[std::size_t(a)];
      }
    }

    // per-side SIP faces on F_{h,i} cap Omega_i
    Eigen::MatrixXd face_local;
    for (int fidx : cls.interior_faces) {
      const Face& face = mesh.faces[std::size_t(fidx)];
      bool face_cut = cls.is_cut(face.left) || cls.is_cut(face.right);
      QuadratureRule rule = face_cut ? cut_face_rule(mesh, fidx, phi, sides[i], params.depth,
                                                     order_m, cls.eps_abs)
                                     : face_rule(mesh, fidx, order_m);
      if (rule.size() == 0) continue;
      FaceGeometry geo = face_geometry(mesh, fidx);
      detail::sip_face(sp, face.left, face.right, geo.normal, rule, kappa[i],
                       params.beta_face * kappa[i] / h, face_local);
      std::vector<int> dofs = detail::element_dofs(sp, face.left, offsets[i]);
      std::vector<int> dofsR = detail::element_dofs(sp, face.right, offsets[i]);
      dofs.insert(dofs.end(), dofsR.begin(), dofsR.end());
      detail::scatter(face_local, dofs, triplets);
    }

    // ghost penalty, kappa-scaled for contrast robustness
    BvpParams gp;
    gp.gamma = params.gamma;
    gp.gamma_proj = params.gamma_proj;
    gp.c_s = params.c_s;
    gp.depth = params.depth;
    assemble_ghost_penalty(params.gp_variant, mesh, cls, sp, phi, gp, triplets, offsets[i],
                           sides[i], kappa[i]);
  }

  // outer Dirichlet boundary: fitted Nitsche terms, each side over its own
  // part of the box boundary (the interface may reach the boundary)
  for (int i = 0; i < 2; ++i) {
    const DomainClassification& cls = tc.side[std::size_t(i)];
    const BrokenSpace& sp = *spaces[i];
    const int nd = sp.ndof_el;
    Eigen::MatrixXd local(nd, nd);
    Eigen::VectorXd rhs(nd);
    for (int fidx : cls.boundary_faces_fitted) {
      const Face& face = mesh.faces[std::size_t(fidx)];
      QuadratureRule rule = cls.is_cut(face.left)
                                ? cut_face_rule(mesh, fidx, phi, sides[i], params.depth, order_d,
                                                cls.eps_abs)
                                : face_rule(mesh, fidx, order_d);
      if (rule.size() == 0) continue;
      FaceGeometry geo = face_geometry(mesh, fidx);
      rule.normals.assign(rule.size(), geo.normal);  // outward: boundary face of left element
      detail::nitsche_boundary(sp, face.left, rule, kappa[i],
                               params.beta_face * kappa[i] / h, g, local, rhs);
      std::vector<int> dofs = detail::element_dofs(sp, face.left, offsets[i]);
      detail::scatter(local, dofs, triplets);
      for (int a = 0; a < nd; ++a) b(dofs[std::size_t(a)]) += rhs(a);
    }
  }

  // interface coupling on Gamma; normal points from Omega_1 into Omega_2
  {
    const int nd1 = sp1.ndof_el, nd2 = sp2.ndof_el;
    const int nt = nd1 + nd2;
    Eigen::MatrixXd local(nt, nt);
    Eigen::VectorXd rhs(nt), jump(nt), flux(nt), dual(nt);
    std::vector<double> v1(static_cast<std::size_t>(nd1)), v2(static_cast<std::size_t>(nd2));
    std::vector<Vec> g1(static_cast<std::size_t>(nd1)), g2(static_cast<std::size_t>(nd2));

    const double ksum = params.kappa1 + params.kappa2;
    double w1 = params.kappa2 / ksum, w2 = params.kappa1 / ksum;
    double beta_gamma = params.beta_gamma_tilde * 2.0 * params.kappa1 * params.kappa2 / ksum;

    for (int e : tc.cut_elements) {
      QuadratureRule gam =
          interface_rule(mesh, e, phi, params.depth, order_d, tc.side[0].eps_abs);
      if (gam.size() == 0) continue;

      double penalty = beta_gamma / h;
      if (params.weighting == InterfaceWeighting::CutArea) {
        double a1 = cut_volume(mesh, e, phi, Side::Inside, params.depth, tc.side[0].eps_abs);
        double a2 = cut_volume(mesh, e, phi, Side::Outside, params.depth, tc.side[0].eps_abs);
        double denom = params.kappa2 * a1 + params.kappa1 * a2;
        if (denom > 0.0) {
          w1 = params.kappa2 * a1 / denom;
          w2 = params.kappa1 * a2 / denom;
          penalty = params.beta_gamma_tilde * params.kappa1 * params.kappa2 *
                    gam.total_weight() / denom;
        }
      }

      local.setZero();
      rhs.setZero();
      for (std::size_t q = 0; q < gam.size(); ++q) {
        const Vec& x = gam.points[q];
        const Vec& nrm = gam.normals[q];
        double w = gam.weights[q];
        eval_basis(sp1, e, x, v1.data());
        eval_basis(sp2, e, x, v2.data());
        eval_basis_grad(sp1, e, x, g1.data());
        eval_basis_grad(sp2, e, x, g2.data());
        for (int a = 0; a < nd1; ++a) {
          jump(a) = v1[std::size_t(a)];
          flux(a) = w1 * params.kappa1 * dot(nrm, g1[std::size_t(a)]);
          dual(a) = w2 * v1[std::size_t(a)];
        }
        for (int a = 0; a < nd2; ++a) {
          jump(nd1 + a) = -v2[std::size_t(a)];
          flux(nd1 + a) = w2 * params.kappa2 * dot(nrm, g2[std::size_t(a)]);
          dual(nd1 + a) = w1 * v2[std::size_t(a)];
        }
        for (int a = 0; a < nt; ++a)
          for (int c = 0; c <= a; ++c) {
            double v = w * (penalty * jump(a) * jump(c) - flux(a) * jump(c) - jump(a) * flux(c));
            local(a, c) += v;
            if (c != a) local(c, a) += v;
          }
        double gd = g_D(x), gn = g_N(x);
        rhs.noalias() += w * (gd * (penalty * jump - flux) + gn * dual);
      }
      std::vector<int> dofs = detail::element_dofs(sp1, e, 0);
      std::vector<int> dofs2 = detail::element_dofs(sp2, e, int(n1));
      dofs.insert(dofs.end(), dofs2.begin(), dofs2.end());
      detail::scatter(local, dofs, triplets);
      for (int a = 0; a < nt; ++a) b(dofs[std::size_t(a)]) += rhs(a);
    }
  }

  SystemOperator op;
  op.A = SparseSym::from_triplets(int(n), triplets);
  op.b = std::move(b);
  op.n_dofs_side1 = n1;
  return op;
}

// Gram matrices used by the extension-property spectral diagnostics.
enum class GramKind { StiffnessFull, StiffnessPhysical, MassFull, MassPhysical };

inline SparseSym assemble_gram(const BackgroundMesh& mesh, const DomainClassification& cls,
                               const BrokenSpace& sp, const LevelSet& phi, GramKind kind,
                               GeometryDepth depth, int order) {
  const int nd = sp.ndof_el;
  Triplets triplets;
  bool physical = (kind == GramKind::StiffnessPhysical || kind == GramKind::MassPhysical);
  bool stiffness = (kind == GramKind::StiffnessFull || kind == GramKind::StiffnessPhysical);
  const QuadratureRule ref = reference_rule(mesh.dim, order);
  Eigen::MatrixXd local(nd, nd);
  std::vector<Vec> grads(static_cast<std::size_t>(nd));
  std::vector<double> vals(static_cast<std::size_t>(nd));
  for (int e : cls.active_elements) {
    QuadratureRule rule;
    if (physical && cls.is_cut(e))
      rule = cut_volume_rule(mesh, e, phi, Side::Inside, depth, order, cls.eps_abs);
    else
      map_rule_onto(ref, mesh.element_simplex(e), rule);
    local.setZero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double w = rule.weights[q];
      if (stiffness) {
        eval_basis_grad(sp, e, rule.points[q], grads.data());
        for (int a = 0; a < nd; ++a)
          for (int c = 0; c < nd; ++c)
            local(a, c) += w * dot(grads[std::size_t(a)], grads[std::size_t(c)]);
      } else {
        eval_basis(sp, e, rule.points[q], vals.data());
        for (int a = 0; a < nd; ++a)
          for (int c = 0; c < nd; ++c)
            local(a, c) += w * vals[std::size_t(a)] * vals[std::size_t(c)];
      }
    }
    detail::scatter(local, detail::element_dofs(sp, e, 0), triplets);
  }
  return SparseSym::from_triplets(int(sp.n_dofs()), triplets);
}

}  // namespace cutdg

#endif
