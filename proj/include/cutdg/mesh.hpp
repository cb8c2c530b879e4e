#ifndef CUTDG_MESH_HPP
#define CUTDG_MESH_HPP

#include <algorithm>
#include <map>
#include <ostream>

#include "cutdg/core.hpp"

namespace cutdg {

struct Box {
  Vec lo{}, hi{};

  double extent(int axis) const { return hi[axis] - lo[axis]; }
};

inline Box unit_box(int dim) {
  Box b;
  for (int a = 0; a < dim; ++a) b.hi[a] = 1.0;
  return b;
}

inline Box symmetric_box(double half_width, int dim) {
  Box b;
  for (int a = 0; a < dim; ++a) {
    b.lo[a] = -half_width;
    b.hi[a] = half_width;
  }
  return b;
}

struct Face {
  std::array<int, 3> verts{};  // dim entries used, sorted
  int left = -1;               // lower element index
  int right = -1;              // -1 on the boundary
};

// Structured simplicial background mesh: fixed-diagonal triangles in 2D,
// Kuhn subdivision into six tetrahedra per cube in 3D.
struct BackgroundMesh {
  int dim = 2;
  Box box;
  int n_per_axis = 0;
  std::vector<Vec> vertices;
  std::vector<std::array<int, 4>> elements;  // dim+1 entries used
  std::vector<Face> faces;
  std::vector<std::vector<int>> element_to_faces;
  double h = 0.0;

  int n_elements() const { return int(elements.size()); }
  int n_vertices() const { return int(vertices.size()); }
  int n_faces() const { return int(faces.size()); }

  Vec element_vertex(int e, int i) const { return vertices[elements[e][i]]; }

  Simplex element_simplex(int e) const {
    Simplex s;
    s.nv = dim + 1;
    for (int i = 0; i <= dim; ++i) s.v[i] = element_vertex(e, i);
    return s;
  }

  Simplex face_simplex(int f) const {
    Simplex s;
    s.nv = dim;
    for (int i = 0; i < dim; ++i) s.v[i] = vertices[faces[f].verts[i]];
    return s;
  }

  double element_volume(int e) const { return simplex_measure(element_simplex(e)); }
  Vec element_centroid(int e) const { return element_simplex(e).centroid(); }
  double element_diameter(int e) const { return element_simplex(e).diameter(); }
};

namespace detail {

inline void build_faces(BackgroundMesh& mesh) {
  const int d = mesh.dim;
  std::map<std::array<int, 3>, int> lookup;
  mesh.element_to_faces.assign(mesh.elements.size(), {});
  for (int e = 0; e < mesh.n_elements(); ++e) {
    // facet i of a simplex omits vertex i
    for (int skip = 0; skip <= d; ++skip) {
      std::array<int, 3> key{-1, -1, -1};
      int m = 0;
      for (int i = 0; i <= d; ++i)
        if (i != skip) key[m++] = mesh.elements[e][i];
      std::sort(key.begin(), key.begin() + d);
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        Face f;
        f.verts = key;
        f.left = e;
        lookup.emplace(key, int(mesh.faces.size()));
        mesh.element_to_faces[e].push_back(int(mesh.faces.size()));
        mesh.faces.push_back(f);
      } else {
        mesh.faces[it->second].right = e;
        mesh.element_to_faces[e].push_back(it->second);
      }
    }
  }
}

}  // namespace detail

inline BackgroundMesh build_structured_mesh(const Box& box, int n_per_axis, int dim) {
  if (n_per_axis < 1) throw std::invalid_argument("build_structured_mesh: n_per_axis must be >= 1");
  if (dim != 2 && dim != 3) throw std::invalid_argument("build_structured_mesh: dim must be 2 or 3");
  for (int a = 0; a < dim; ++a)
    if (!(box.extent(a) > 0.0)) throw std::invalid_argument("build_structured_mesh: degenerate box");

  BackgroundMesh mesh;
  mesh.dim = dim;
  mesh.box = box;
  mesh.n_per_axis = n_per_axis;

  const int n = n_per_axis;
  const int nv1 = n + 1;

  if (dim == 2) {
    mesh.vertices.reserve(std::size_t(nv1) * nv1);
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        mesh.vertices.push_back({box.lo.x + box.extent(0) * i / n,
                                 box.lo.y + box.extent(1) * j / n, 0.0});
    auto vid = [nv1](int i, int j) { return j * nv1 + i; };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
        // split along the v00-v11 diagonal; both triangles counter-clockwise
        mesh.elements.push_back({v00, v10, v11, -1});
        mesh.elements.push_back({v00, v11, v01, -1});
      }
  } else {
    mesh.vertices.reserve(std::size_t(nv1) * nv1 * nv1);
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
          mesh.vertices.push_back({box.lo.x + box.extent(0) * i / n,
                                   box.lo.y + box.extent(1) * j / n,
                                   box.lo.z + box.extent(2) * k / n});
    auto vid = [nv1](int i, int j, int k) { return (k * nv1 + j) * nv1 + i; };
    // Kuhn subdivision: one tet per permutation of the axes, all sharing
    // the main diagonal of the cube.
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (const auto& p : perms) {
            std::array<int, 3> c{i, j, k};
            std::array<int, 4> tet{};
            tet[0] = vid(c[0], c[1], c[2]);
            for (int s = 0; s < 3; ++s) {
              c[p[s]] += 1;
              tet[s + 1] = vid(c[0], c[1], c[2]);
            }
            // fix orientation: odd permutations give negative volume
            Vec a = mesh.vertices[tet[0]], b = mesh.vertices[tet[1]],
                cc = mesh.vertices[tet[2]], dd = mesh.vertices[tet[3]];
            if (signed_simplex_measure_3d(a, b, cc, dd) < 0.0) std::swap(tet[2], tet[3]);
            mesh.elements.push_back(tet);
          }
  }

  detail::build_faces(mesh);

  mesh.h = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) mesh.h = std::max(mesh.h, mesh.element_diameter(e));
  return mesh;
}

struct FaceGeometry {
  Vec normal;       // points from left element to right element (or outward)
  double measure;   // length in 2D, area in 3D
  Vec centroid;
};

inline FaceGeometry face_geometry(const BackgroundMesh& mesh, int face_index) {
  const Face& f = mesh.faces.at(std::size_t(face_index));
  Simplex s = mesh.face_simplex(face_index);
  FaceGeometry g;
  g.measure = simplex_measure(s);
  g.centroid = s.centroid();
  if (mesh.dim == 2) {
    Vec t = s.v[1] - s.v[0];
    g.normal = normalized(Vec{t.y, -t.x, 0.0});
  } else {
    g.normal = normalized(cross(s.v[1] - s.v[0], s.v[2] - s.v[0]));
  }
  if (dot(g.normal, g.centroid - mesh.element_centroid(f.left)) < 0.0) g.normal = g.normal * -1.0;
  return g;
}

inline void dump_mesh(const BackgroundMesh& mesh, std::ostream& os) {
  os << mesh.dim << ' ' << mesh.n_vertices() << ' ' << mesh.n_elements() << ' '
     << mesh.n_faces() << '\n';
  for (const auto& v : mesh.vertices) {
    os << v.x << ' ' << v.y;
    if (mesh.dim == 3) os << ' ' << v.z;
    os << '\n';
  }
  for (const auto& el : mesh.elements) {
    for (int i = 0; i <= mesh.dim; ++i) os << (i ? " " : "") << el[i];
    os << '\n';
  }
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < mesh.dim; ++i) os << (i ? " " : "") << f.verts[i];
    os << ' ' << f.left << ' ' << f.right << '\n';
  }
}

}  // namespace cutdg

#endif
