#pragma once
// Independent reference solutions used by the test suites.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "twaves/field.hpp"

namespace oracle {

using std::numbers::pi;

inline double quad(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

/// Composite Gauss-Legendre on equal panels; for smooth integrands in 2D.
inline double panel_quad(const std::function<double(double)>& f, double a, double b, int panels = 16) {
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) s += boost::math::quadrature::gauss<double, 30>::integrate(f, a + p * h, a + (p + 1) * h);
  return s;
}

/// Exact 2D KP-I lump for sound speed cs and coefficient g.
struct Lump {
  double cs, g;
  double s() const { return -8.0 / (g * cs * cs); }
  double operator()(double z1, double z2) const {
    const double x = z1 / std::sqrt(3.0), y = z2 / (std::sqrt(3.0) * cs);
    const double r = x * x + y * y + 1.0;
    return s() * (-x * x + y * y + 1.0) / (r * r);
  }
  // whole-plane action for cs = sqrt2, g = 6
  static constexpr double kGpAction = 0.9873073195907478;
};

/// KdV soliton integrals on the whole line.
struct Kdv {
  double cs, g;
  double w(double z) const { const double c = std::cosh(0.5 * z); return -3.0 / (cs * cs * g * c * c); }
  double dw(double z) const { return -w(z) * std::tanh(0.5 * z); }
  double mass() const { return quad([&](double z) { return w(z) * w(z); }, -80, 80); }
  double deriv() const { return quad([&](double z) { return dw(z) * dw(z); }, -80, 80); }
  double cubic() const { return quad([&](double z) { return w(z) * w(z) * w(z); }, -80, 80); }
  double action() const { return 48.0 / (5.0 * std::pow(cs, 6) * g * g); }
};

/// Gross-Pitaevskii dark soliton travelling at speed c (r0 = 1).
struct DarkSoliton {
  double c;
  double eps() const { return std::sqrt(2.0 - c * c); }
  std::complex<double> u(double x) const {
    const double a = std::sqrt(1.0 - 0.5 * c * c);
    return {a * std::tanh(a * x / std::sqrt(2.0)), c / std::sqrt(2.0)};
  }
  double eta(double x) const { const double e = eps(); const double ch = std::cosh(0.5 * e * x); return 0.5 * e * e / (ch * ch); }
  double energy() const { return 4.0 * std::sqrt(2.0) / 3.0 * std::pow(0.5 * eps() * eps(), 1.5); }
  double momentum() const {
    const double L = 80.0 / eps();
    return -0.5 * c * quad([&](double x) { const double h = eta(x); return h * h / (1.0 - h); }, -L, L);
  }
  /// int (rho')^2 with rho = sqrt(1 - eta)
  double grad_rho_sq() const {
    const double L = 80.0 / eps();
    const double e = eps();
    return quad([&](double x) {
      const double h = eta(x);
      const double dh = -e * h * std::tanh(0.5 * e * x);
      const double dr = -dh / (2.0 * std::sqrt(1.0 - h));
      return dr * dr;
    }, -L, L);
  }
};

}  // namespace oracle
