#pragma once

#include <cmath>
#include <numbers>

#include "twaves/fft.hpp"

namespace twaves {

inline constexpr cplx I{0.0, 1.0};

/// d^order f / dx_axis^order.
template <class T>
Field<T> derivative(const Field<T>& f, int axis, int order = 1) {
  return apply_multiplier(f, [&](const Vec3& xi) { return std::pow(I * xi[axis], order); });
}

template <class T>
Field<T> laplacian(const Field<T>& f) {
  return apply_multiplier(f, [](const Vec3& xi) { return -(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]); });
}

template <class T>
Field<T> laplacian_perp(const Field<T>& f) {
  return apply_multiplier(f, [](const Vec3& xi) { return -(xi[1] * xi[1] + xi[2] * xi[2]); });
}

/// Means of f along every axis-0 line; result indexed by transverse index.
inline std::vector<double> line_means(const RField& f) {
  const Grid& g = f.grid;
  const std::size_t nt = g.n[1] * g.n[2];
  std::vector<double> m(nt, 0.0);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t t = 0; t < nt; ++t) m[t] += f.v[i * nt + t];
  for (auto& x : m) x /= static_cast<double>(g.n[0]);
  return m;
}

inline RField remove_line_means(RField f) {
  const auto m = line_means(f);
  const std::size_t nt = m.size();
  for (std::size_t i = 0; i < f.size(); ++i) f.v[i] -= m[i % nt];
  return f;
}

/// Antiderivative along axis 0, zero on the xi_1 = 0 plane.
inline RField inv_dz1(const RField& f, double tol = 1e-10) {
  const auto m = line_means(f);
  const double scale = std::max(1.0, max_abs(f));
  for (double x : m)
    if (std::abs(x) > tol * scale) fail(ErrorCode::NotZeroMean, "axis-0 line mean " + std::to_string(x) + " exceeds tolerance");
  return apply_multiplier(f, [](const Vec3& xi) { return xi[0] == 0.0 ? cplx{} : 1.0 / (I * xi[0]); });
}

/// True for modes kept by the 2/3 rule.
inline std::vector<char> dealias_mask(const Grid& g) {
  std::vector<char> keep(g.size(), 1);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k, ++idx) {
        const std::size_t ii[3] = {i, j, k};
        for (int a = 0; a < g.ndim; ++a) {
          const long m = std::abs(Grid::mode(ii[a], g.n[a]));
          if (2 * ii[a] == g.n[a] || 3 * m > static_cast<long>(g.n[a])) keep[idx] = 0;
        }
      }
  return keep;
}

inline void dealias_spectrum(CField& s) {
  const auto keep = dealias_mask(s.grid);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!keep[i]) s.v[i] = 0.0;
}

/// Product a*b projected onto the 2/3 band.
inline RField dealiased_product(const RField& a, const RField& b) {
  a.check(b);
  RField p(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) p.v[i] = a.v[i] * b.v[i];
  CField s = fft_forward(p);
  dealias_spectrum(s);
  return checked_real(fft_inverse(std::move(s)));
}

/// Integral of |f|^2 computed from the spectrum.
inline double parseval_norm2_sq(const CField& spectrum) {
  double s = 0.0;
  for (const auto& x : spectrum.v) s += std::norm(x);
  return s * spectrum.grid.cell_volume() / static_cast<double>(spectrum.grid.size());
}

/// Translation by a physical displacement d: out(x) = f(x - d).
template <class T>
Field<T> translate(const Field<T>& f, const Vec3& d) {
  return apply_multiplier(f, [&](const Vec3& xi) {
    return std::exp(-I * (xi[0] * d[0] + xi[1] * d[1] + xi[2] * d[2]));
  });
}

/// Trigonometric interpolation along one axis: out(x) = f(x with x_axis
/// replaced by x_axis / a). The Nyquist mode is split symmetrically.
template <class T>
Field<T> dilate_axis(const Field<T>& f, int axis, double a) {
  const Grid& g = f.grid;
  const std::size_t n = g.n[axis];
  if (n == 1 || a == 1.0) return f;
  // dense interpolation matrix M[j][m] = sum_k exp(i xi_k (y_j - x_m)) / n
  std::vector<double> mat(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = g.coord(axis, j) / a;
    for (std::size_t m = 0; m < n; ++m) {
      const double d = y - g.coord(axis, m);
      double s = 1.0;
      for (std::size_t k = 1; k < n / 2; ++k) s += 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) * d / g.len[axis]);
      s += std::cos(std::numbers::pi * static_cast<double>(n) * d / g.len[axis]);
      mat[j * n + m] = s / static_cast<double>(n);
    }
  }
  Field<T> out(g, T{}, f.space);
  const std::size_t stride = (axis == 0) ? g.n[1] * g.n[2] : (axis == 1 ? g.n[2] : 1);
  std::vector<T> line(n);
  for (std::size_t base = 0; base < g.size(); ++base) {
    // base must be the first element of a line along axis
    const std::size_t pos = (base / stride) % n;
    if (pos != 0) continue;
    for (std::size_t m = 0; m < n; ++m) line[m] = f.v[base + m * stride];
    for (std::size_t j = 0; j < n; ++j) {
      T acc{};
      const double* row = &mat[j * n];
      for (std::size_t m = 0; m < n; ++m) acc += row[m] * line[m];
      out.v[base + j * stride] = acc;
    }
  }
  return out;
}

// ---- transonic kernels ------------------------------------------------------

/// D_eps(xi) = xi1^4 + xi1^2 + cs^2 |xiP|^2 + 2 eps^2 xi1^2 |xiP|^2 + eps^4 |xiP|^4
inline double kernel_denominator(const Vec3& xi, double eps, double cs) {
  const double a = xi[0] * xi[0];
  const double p = xi[1] * xi[1] + xi[2] * xi[2];
  const double e2 = eps * eps;
  return a * a + a + cs * cs * p + 2.0 * e2 * a * p + e2 * e2 * p * p;
}

struct KernelSymbol {
  enum class Kind { K1, Kperp, K1j };
  Kind kind = Kind::K1;
  int j = 1;  // transverse axis for K1j (1 or 2)
  double eps = 0.1;
  double c_s = std::numbers::sqrt2;

  double operator()(const Vec3& xi) const {
    const double d = kernel_denominator(xi, eps, c_s);
    if (d == 0.0) return 0.0;
    switch (kind) {
      case Kind::K1: return xi[0] * xi[0] / d;
      case Kind::Kperp: return (xi[1] * xi[1] + xi[2] * xi[2]) / d;
      case Kind::K1j: return xi[0] * xi[j] / d;
    }
    return 0.0;
  }
};

inline RField kernel_convolve(const KernelSymbol& k, const RField& h) {
  if (!(k.eps > 0.0 && k.eps < k.c_s)) fail(ErrorCode::InvalidArgument, "kernel needs 0 < eps < c_s");
  return apply_multiplier(h, k);
}

}  // namespace twaves
