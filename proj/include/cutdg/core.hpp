#ifndef CUTDG_CORE_HPP
#define CUTDG_CORE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cutdg {

// Points and vectors live in R^3; 2D code leaves z = 0.
struct Vec {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec operator+(const Vec& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec operator-(const Vec& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec& operator+=(const Vec& o) { x += o.x; y += o.y; z += o.z; return *this; }
};

inline Vec operator*(double s, const Vec& v) { return v * s; }

inline double dot(const Vec& a, const Vec& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec cross(const Vec& a, const Vec& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

inline Vec normalized(const Vec& v) {
  double n = norm(v);
  return n > 0.0 ? v / n : v;
}

// Simplex with up to dim+1 vertices; nv-1 is the intrinsic dimension,
// which may be lower than the ambient one (faces, interface facets).
struct Simplex {
  std::array<Vec, 4> v{};
  int nv = 0;

  Vec centroid() const {
    Vec c{};
    for (int i = 0; i < nv; ++i) c += v[i];
    return c / double(nv);
  }
  double diameter() const {
    double d = 0.0;
    for (int i = 0; i < nv; ++i)
      for (int j = i + 1; j < nv; ++j) d = std::max(d, norm(v[i] - v[j]));
    return d;
  }
};

// Unsigned k-simplex measure embedded in R^3 (length, area, volume).
inline double simplex_measure(const Simplex& s) {
  switch (s.nv) {
    case 1: return 0.0;
    case 2: return norm(s.v[1] - s.v[0]);
    case 3: return 0.5 * norm(cross(s.v[1] - s.v[0], s.v[2] - s.v[0]));
    case 4: {
      Vec a = s.v[1] - s.v[0], b = s.v[2] - s.v[0], c = s.v[3] - s.v[0];
      return std::abs(dot(a, cross(b, c))) / 6.0;
    }
    default: return 0.0;
  }
}

inline double signed_simplex_measure_2d(const Vec& a, const Vec& b, const Vec& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

inline double signed_simplex_measure_3d(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  return dot(b - a, cross(c - a, d - a)) / 6.0;
}

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace cutdg

#endif
