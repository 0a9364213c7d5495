#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "twaves/error.hpp"

namespace twaves {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

/// Periodic rectangular grid. Axis 0 is the propagation axis. Unused axes
/// have size 1. Points sit at x_j = -L/2 + j h so the box midpoint is index n/2.
struct Grid {
  int ndim = 1;
  std::array<std::size_t, 3> n{1, 1, 1};
  Vec3 len{1.0, 1.0, 1.0};

  static Grid make(const std::vector<std::size_t>& sizes, const std::vector<double>& lengths) {
    if (sizes.empty() || sizes.size() > 3 || sizes.size() != lengths.size())
      fail(ErrorCode::InvalidArgument, "grid needs 1 to 3 axes with matching sizes and lengths");
    Grid g;
    g.ndim = static_cast<int>(sizes.size());
    for (int a = 0; a < g.ndim; ++a) {
      if (!is_pow2(sizes[a])) fail(ErrorCode::ValidationError, "grid size " + std::to_string(sizes[a]) + " is not a power of two");
      if (!(lengths[a] > 0.0)) fail(ErrorCode::ValidationError, "box length must be positive");
      g.n[a] = sizes[a];
      g.len[a] = lengths[a];
    }
    return g;
  }

  std::size_t size() const { return n[0] * n[1] * n[2]; }
  double spacing(int a) const { return len[a] / static_cast<double>(n[a]); }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim; ++a) v *= spacing(a);
    return v;
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim; ++a) v *= len[a];
    return v;
  }
  double coord(int a, std::size_t i) const { return -0.5 * len[a] + static_cast<double>(i) * spacing(a); }

  /// Signed integer mode of index k; the Nyquist index maps to 0.
  static long mode(std::size_t k, std::size_t nn) {
    if (nn == 1) return 0;
    if (2 * k == nn) return 0;
    return 2 * k < nn ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(nn);
  }
  double wavenumber(int a, std::size_t k) const {
    return 2.0 * std::numbers::pi * static_cast<double>(mode(k, n[a])) / len[a];
  }
  std::vector<double> wavenumbers(int a) const {
    std::vector<double> w(n[a]);
    for (std::size_t k = 0; k < n[a]; ++k) w[k] = wavenumber(a, k);
    return w;
  }

  std::size_t index(std::size_t i0, std::size_t i1 = 0, std::size_t i2 = 0) const { return (i0 * n[1] + i1) * n[2] + i2; }

  bool same_shape(const Grid& o) const { return ndim == o.ndim && n == o.n; }
  bool same(const Grid& o, double rtol = 1e-9) const {
    if (!same_shape(o)) return false;
    for (int a = 0; a < ndim; ++a)
      if (std::abs(len[a] - o.len[a]) > rtol * std::max(len[a], o.len[a])) return false;
    return true;
  }
  Grid with_lengths(const Vec3& l) const {
    Grid g = *this;
    for (int a = 0; a < ndim; ++a) g.len[a] = l[a];
    return g;
  }
};

enum class Space { Physical, Fourier };

template <class T>
struct Field {
  Grid grid;
  std::vector<T> v;
  Space space = Space::Physical;

  Field() = default;
  explicit Field(const Grid& g, T fill = T{}, Space s = Space::Physical) : grid(g), v(g.size(), fill), space(s) {}

  std::size_t size() const { return v.size(); }
  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }

  Field& operator+=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
  }
  Field& operator*=(T s) {
    for (auto& x : v) x *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, T s) { return a *= s; }
  friend Field operator*(T s, Field a) { return a *= s; }

  void check(const Field& o) const {
    if (o.v.size() != v.size() || !grid.same_shape(o.grid)) fail(ErrorCode::SizeMismatch, "field shapes differ");
  }
};

using RField = Field<double>;
using CField = Field<cplx>;

/// Samples f(x) at grid points, x given as a Vec3 of coordinates.
template <class T = double, class Fn>
Field<T> sample(const Grid& g, Fn&& fn) {
  Field<T> out(g);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k) {
        const Vec3 x{g.coord(0, i), g.ndim > 1 ? g.coord(1, j) : 0.0, g.ndim > 2 ? g.coord(2, k) : 0.0};
        out.v[g.index(i, j, k)] = static_cast<T>(fn(x));
      }
  return out;
}

inline CField to_complex(const RField& f) {
  CField out(f.grid, cplx{}, f.space);
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i];
  return out;
}
inline RField real_part(const CField& f) {
  RField out(f.grid, 0.0, f.space);
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i].real();
  return out;
}
inline RField imag_part(const CField& f) {
  RField out(f.grid, 0.0, f.space);
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i].imag();
  return out;
}
inline RField modulus(const CField& f) {
  RField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = std::abs(f.v[i]);
  return out;
}

template <class T>
double max_abs(const Field<T>& f) {
  double m = 0.0;
  for (const auto& x : f.v) m = std::max(m, std::abs(x));
  return m;
}

inline double integrate(const RField& f) {
  double s = 0.0;
  for (double x : f.v) s += x;
  return s * f.grid.cell_volume();
}

/// Integral of |f|^2 over the box.
template <class T>
double norm2_sq(const Field<T>& f) {
  double s = 0.0;
  for (const auto& x : f.v) s += std::norm(x);
  return s * f.grid.cell_volume();
}

/// Real L2 inner product Re int f conj(g).
template <class T>
double inner(const Field<T>& f, const Field<T>& g) {
  f.check(g);
  double s = 0.0;
  if constexpr (std::is_same_v<T, double>) {
    for (std::size_t i = 0; i < f.size(); ++i) s += f.v[i] * g.v[i];
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) s += f.v[i].real() * g.v[i].real() + f.v[i].imag() * g.v[i].imag();
  }
  return s * f.grid.cell_volume();
}

/// Index of the mirror point under x_a -> -x_a.
inline std::size_t mirror_index(std::size_t i, std::size_t n) { return (n - i) % n; }

/// f(x) -> f with the listed axes reflected.
template <class T>
Field<T> reflect(const Field<T>& f, std::array<bool, 3> axes) {
  const Grid& g = f.grid;
  Field<T> out(g, T{}, f.space);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k) {
        const std::size_t ii = axes[0] ? mirror_index(i, g.n[0]) : i;
        const std::size_t jj = axes[1] ? mirror_index(j, g.n[1]) : j;
        const std::size_t kk = axes[2] ? mirror_index(k, g.n[2]) : k;
        out.v[g.index(i, j, k)] = f.v[g.index(ii, jj, kk)];
      }
  return out;
}

/// Cyclic shift by whole grid cells along each axis.
template <class T>
Field<T> cyclic_shift(const Field<T>& f, std::array<long, 3> s) {
  const Grid& g = f.grid;
  Field<T> out(g, T{}, f.space);
  auto wrap = [](long i, std::size_t n) { return static_cast<std::size_t>(((i % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n)); };
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k)
        out.v[g.index(wrap(static_cast<long>(i) + s[0], g.n[0]), wrap(static_cast<long>(j) + s[1], g.n[1]),
                      wrap(static_cast<long>(k) + s[2], g.n[2]))] = f.v[g.index(i, j, k)];
  return out;
}

}  // namespace twaves
