#pragma once

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "twaves/gmres.hpp"
#include "twaves/kpi.hpp"
#include "twaves/model.hpp"
#include "twaves/spectral.hpp"

namespace twaves {

/// Travelling wave of speed c together with its diagnostics.
struct TwSolution {
  CField u;
  double c = 0.0;
  double eps = 0.0;
  Nonlinearity nl;
  double energy = 0.0;
  double momentum = std::numeric_limits<double>::quiet_NaN();
  double kinetic = 0.0;
  double kinetic_perp = 0.0;
  double pohozaev_p = std::numeric_limits<double>::quiet_NaN();
  double min_modulus = 0.0;
  double residual = 0.0;
  double boundary_deviation = 0.0;
  double multiplier = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LiftedWave {
  RField rho;
  RField phi;
};

// ---- derivatives ------------------------------------------------------------

namespace detail {

/// Phase advance per unit length for 1D fields with different phases at the
/// two ends of the box; zero in 2D/3D.
inline double twist_rate(const CField& u) {
  if (u.grid.ndim != 1 || u.v.empty()) return 0.0;
  const cplx a = u.v.front(), b = u.v.back();
  if (std::abs(a) == 0.0 || std::abs(b) == 0.0) return 0.0;
  return std::arg(b / a) / u.grid.len[0];
}

inline CField twist(const CField& u, double kappa, double sign) {
  CField out = u;
  for (std::size_t i = 0; i < u.size(); ++i) out.v[i] *= std::exp(sign * I * kappa * u.grid.coord(0, i));
  return out;
}

/// Multiplier applied to a field whose phase winds by kappa * L across the box.
template <class Sym>
CField twisted_multiplier(const CField& u, double kappa, Sym&& symbol) {
  if (kappa == 0.0) return apply_multiplier(u, symbol);
  CField v = apply_multiplier(twist(u, kappa, -1.0), [&](const Vec3& xi) { return symbol(Vec3{xi[0] + kappa, xi[1], xi[2]}); });
  return twist(v, kappa, 1.0);
}

inline double boundary_deviation(const CField& u, double r0_sq) {
  const Grid& g = u.grid;
  double dev = 0.0;
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k) {
        const bool edge = i == 0 || i + 1 == g.n[0] || (g.ndim > 1 && (j == 0 || j + 1 == g.n[1])) ||
                          (g.ndim > 2 && (k == 0 || k + 1 == g.n[2]));
        if (edge) dev = std::max(dev, std::abs(std::norm(u.v[g.index(i, j, k)]) - r0_sq) / r0_sq);
      }
  return dev;
}

inline double min_abs(const CField& u) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& x : u.v) m = std::min(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Spectral derivative along an axis; 1D fields may carry a phase twist.
inline CField tw_derivative(const CField& u, int axis, int order = 1) {
  const double kappa = axis == 0 ? detail::twist_rate(u) : 0.0;
  return detail::twisted_multiplier(u, kappa, [&](const Vec3& xi) { return std::pow(I * xi[axis], order); });
}

inline CField tw_laplacian(const CField& u) {
  const double kappa = detail::twist_rate(u);
  return detail::twisted_multiplier(u, kappa, [](const Vec3& xi) { return cplx{-(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])}; });
}

/// Integral of |d_a u|^2 summed over the listed axes.
inline double gradient_sq(const CField& u, int first_axis = 0) {
  double s = 0.0;
  for (int a = first_axis; a < u.grid.ndim; ++a) s += norm2_sq(tw_derivative(u, a));
  return s;
}

// ---- functionals ------------------------------------------------------------

inline double potential_integral(const CField& u, const Nonlinearity& nl) {
  double s = 0.0;
  for (const auto& x : u.v) s += nl.V(std::norm(x));
  return s * u.grid.cell_volume();
}

inline void check_boundary(const CField& u, const Nonlinearity& nl, double tol) {
  const double dev = detail::boundary_deviation(u, nl.r0_sq());
  if (dev > tol) fail(ErrorCode::BoundaryMismatch, "field deviates from the background by " + std::to_string(dev) + " on the box boundary");
}

/// E(u) = int |grad u|^2 + V(|u|^2).
inline double energy(const CField& u, const Nonlinearity& nl, double boundary_tol = 1e-6) {
  check_boundary(u, nl, boundary_tol);
  return gradient_sq(u) + potential_integral(u, nl);
}

inline void check_lifting(const CField& u, const Nonlinearity& nl, double fraction = 0.5) {
  const double m = detail::min_abs(u);
  if (!(m > fraction * nl.r0()))
    fail(ErrorCode::VortexDetected, "modulus drops to " + std::to_string(m) + " (lifting needs > " + std::to_string(fraction * nl.r0()) + ")");
}

/// Phase gradient component Im(conj(u) d_a u) / |u|^2.
inline RField phase_gradient(const CField& u, int axis) {
  const CField du = tw_derivative(u, axis);
  RField g(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) g.v[i] = std::imag(std::conj(u.v[i]) * du.v[i]) / std::norm(u.v[i]);
  return g;
}

/// Modulus gradient component Re(conj(u) d_a u) / |u|.
inline RField modulus_gradient(const CField& u, int axis) {
  const CField du = tw_derivative(u, axis);
  RField g(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) g.v[i] = std::real(std::conj(u.v[i]) * du.v[i]) / std::abs(u.v[i]);
  return g;
}

/// Q(u) = int (r0^2 - rho^2) d1 phi, valid while |u| > r0 / 2.
inline double momentum(const CField& u, const Nonlinearity& nl) {
  check_lifting(u, nl);
  const RField g = phase_gradient(u, 0);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (nl.r0_sq() - std::norm(u.v[i])) * g.v[i];
  return s * u.grid.cell_volume();
}

/// Pohozaev functional. In 1D the transverse term is replaced by the
/// modulus balance E + cQ = 2 int (rho')^2.
inline double pohozaev_p(const CField& u, double c, const Nonlinearity& nl, double boundary_tol = 1e-6) {
  const double e = energy(u, nl, boundary_tol);
  const double q = momentum(u, nl);
  const int n = u.grid.ndim;
  if (n == 1) return e + c * q - 2.0 * norm2_sq(modulus_gradient(u, 0));
  return e + c * q - 2.0 / (n - 1) * gradient_sq(u, 1);
}

struct ToolsGaps {
  double gap_energy = 0.0;
  double gap_phase = 0.0;
};

/// Relative gaps of E + cQ = (2/N) int |grad rho|^2 and 2 int rho^2 |grad phi|^2 = -cQ.
inline ToolsGaps tools_identities(const CField& u, double c, const Nonlinearity& nl, double boundary_tol = 1e-6) {
  check_lifting(u, nl, 0.75);
  const int n = u.grid.ndim;
  const double e = energy(u, nl, boundary_tol);
  const double q = momentum(u, nl);
  double grad_rho = 0.0, phase = 0.0;
  for (int a = 0; a < n; ++a) {
    grad_rho += norm2_sq(modulus_gradient(u, a));
    const RField g = phase_gradient(u, a);
    for (std::size_t i = 0; i < u.size(); ++i) phase += std::norm(u.v[i]) * g.v[i] * g.v[i];
  }
  phase *= 2.0 * u.grid.cell_volume();
  auto rel = [](double lhs, double rhs) {
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
  };
  return {rel(e + c * q, 2.0 / n * grad_rho), rel(phase, -c * q)};
}

/// Pointwise left side of the travelling-wave equation.
inline CField tw_operator(const CField& u, double c, const Nonlinearity& nl) {
  CField out = tw_laplacian(u);
  const CField d1 = tw_derivative(u, 0);
  for (std::size_t i = 0; i < u.size(); ++i) out.v[i] += -I * c * d1.v[i] + nl.F(std::norm(u.v[i])) * u.v[i];
  return out;
}

/// Sup norm of -ic d1 u + Lap u + F(|u|^2) u.
inline double tw_residual(const CField& u, double c, const Nonlinearity& nl) { return max_abs(tw_operator(u, c, nl)); }

/// Odd C1 cutoff: identity up to 2 r0, constant 3 r0 beyond 4 r0.
inline double gl_cutoff(double s, double r0) {
  const double a = std::abs(s);
  double v;
  if (a <= 2.0 * r0) v = a;
  else if (a >= 4.0 * r0) v = 3.0 * r0;
  else {
    const double t = (a - 2.0 * r0) / (2.0 * r0);
    v = 2.0 * r0 + 2.0 * r0 * (t - 0.5 * t * t);
  }
  return std::copysign(v, s);
}

inline double gl_energy(const CField& u, const Nonlinearity& nl) {
  const double r0 = nl.r0();
  double s = 0.0;
  for (const auto& x : u.v) {
    const double chi = gl_cutoff(std::abs(x), r0);
    s += (chi * chi - r0 * r0) * (chi * chi - r0 * r0);
  }
  return gradient_sq(u) + s * u.grid.cell_volume();
}

inline LiftedWave lift(const CField& u, const Nonlinearity& nl) {
  check_lifting(u, nl);
  LiftedWave w{RField(u.grid), RField(u.grid)};
  for (std::size_t i = 0; i < u.size(); ++i) {
    w.rho.v[i] = std::abs(u.v[i]);
    w.phi.v[i] = std::arg(u.v[i]);
  }
  return w;
}

/// Fills all diagnostics of a candidate solution without boundary checks.
inline TwSolution make_solution(CField u, double c, const Nonlinearity& nl) {
  TwSolution s;
  s.c = c;
  s.eps = std::sqrt(std::max(0.0, nl.c_s() * nl.c_s() - c * c));
  s.nl = nl;
  s.u = std::move(u);
  constexpr double open = std::numeric_limits<double>::infinity();
  s.boundary_deviation = detail::boundary_deviation(s.u, nl.r0_sq());
  s.kinetic = gradient_sq(s.u);
  s.kinetic_perp = s.u.grid.ndim > 1 ? gradient_sq(s.u, 1) : 0.0;
  s.energy = s.kinetic + potential_integral(s.u, nl);
  s.min_modulus = detail::min_abs(s.u);
  s.residual = tw_residual(s.u, c, nl);
  if (s.min_modulus > 0.5 * nl.r0()) {
    s.momentum = momentum(s.u, nl);
    s.pohozaev_p = pohozaev_p(s.u, c, nl, open);
  }
  return s;
}

/// Reflection (x1 -> -x1, c -> -c): returns the mirrored field.
inline CField reflect_x1(const CField& u) {
  if (detail::twist_rate(u) == 0.0) return reflect(u, {true, false, false});
  // twisted line: mirror about the box centre so the winding stays at the ends
  CField out = u;
  std::reverse(out.v.begin(), out.v.end());
  return out;
}

// ---- box sizing -------------------------------------------------------------

struct BoxAuto {
  double l1 = 60.0;     // slow length along x1
  double lperp = 120.0; // slow transverse length
  double l1_1d = 400.0;
};

/// Physical box L1 = l1 / eps, Lperp = lperp / eps^2.
inline Grid auto_box(double eps, const std::vector<std::size_t>& sizes, const BoxAuto& b = {}) {
  std::vector<double> len(sizes.size());
  for (std::size_t a = 0; a < sizes.size(); ++a)
    len[a] = a == 0 ? (sizes.size() == 1 ? b.l1_1d : b.l1) / eps : b.lperp / (eps * eps);
  return Grid::make(sizes, len);
}

inline double speed_eps(const Nonlinearity& nl, double c) {
  const double cs = nl.c_s();
  if (!(c < cs)) fail(ErrorCode::SupersonicSpeed, "speed " + std::to_string(c) + " is not below the sound speed " + std::to_string(cs));
  if (!(c > 0.0)) fail(ErrorCode::ValidationError, "speed must be positive");
  return std::sqrt(cs * cs - c * c);
}

// ---- 1D -----------------------------------------------------------------------

namespace detail {

/// Rebuilds u = rho exp(i phi) on a line from the modulus, with rho^2 phi' = (c/2)(rho^2 - r0^2).
inline CField rebuild_1d(const RField& rho, double c, double r0_sq) {
  const Grid& g = rho.grid;
  RField dphi(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r2 = rho.v[i] * rho.v[i];
    dphi.v[i] = 0.5 * c * (r2 - r0_sq) / r2;
  }
  const double mean = integrate(dphi) / g.len[0];
  for (auto& x : dphi.v) x -= mean;
  const RField per = apply_multiplier(dphi, [](const Vec3& xi) { return xi[0] == 0.0 ? cplx{} : 1.0 / (I * xi[0]); });
  CField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u.v[i] = rho.v[i] * std::exp(I * (mean * g.coord(0, i) + per.v[i]));
  return u;
}

inline RField symmetrize_even(const RField& f) {
  RField out = f;
  const RField m = reflect(f, {true, false, false});
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = 0.5 * (f.v[i] + m.v[i]);
  return out;
}

}  // namespace detail

/// Closed-form Gross-Pitaevskii dark soliton (r0 = 1).
inline CField dark_soliton(const Grid& g, double c) {
  const double a = std::sqrt(1.0 - 0.5 * c * c);
  return sample<cplx>(g, [&](const Vec3& x) { return cplx{a * std::tanh(a * x[0] / std::numbers::sqrt2), c / std::numbers::sqrt2}; });
}

struct Solve1dOptions {
  bool exact = false;
  double tol = 1e-12;
  int max_iter = 60;
  double min_speed_ratio = 0.5;
};

/// 1D travelling wave by Newton-GMRES on the modulus equation
/// rho'' + rho F(rho^2) + (c^2/2)(eta/rho)(1 - eta/(2 rho^2)) = 0, eta = rho^2 - r0^2.
inline TwSolution solve_1d(const Nonlinearity& nl, double c, const Grid& grid, const Solve1dOptions& opt = {}) {
  if (grid.ndim != 1) fail(ErrorCode::UnsupportedDimension, "solve_1d needs a 1D grid");
  const double eps = speed_eps(nl, c);
  const double cs = nl.c_s();
  if (c <= opt.min_speed_ratio * cs) fail(ErrorCode::ValidationError, "speed below the supported range");
  if (eps < 1e-3 || grid.len[0] * eps < 40.0) fail(ErrorCode::SonicDegenerate, "box cannot resolve the 1/eps scale");
  if (opt.exact) {
    if (nl.id() != "gp") fail(ErrorCode::InvalidArgument, "closed form exists only for the gp model");
    TwSolution s = make_solution(dark_soliton(grid, c), c, nl);
    s.converged = true;
    return s;
  }
  const double r0_sq = nl.r0_sq(), r0 = nl.r0();
  const double gam = nl.gamma();
  check_gamma(gam);
  const double c2 = c * c;

  RField rho = sample(grid, [&](const Vec3& x) {
    const double ch = std::cosh(0.5 * eps * x[0]);
    return r0 * (1.0 - 3.0 * eps * eps / (cs * cs * gam * ch * ch));
  });

  auto residual = [&](const RField& r) {
    RField out = derivative(r, 0, 2);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double p = r.v[i], s = p * p, eta = s - r0_sq;
      out.v[i] += p * nl.F(s) + 0.5 * c2 * (eta / p) * (1.0 - eta / (2.0 * s));
    }
    return out;
  };
  auto precond = [&](const DVec& in, DVec& out) {
    RField f(grid);
    f.v = in;
    out = apply_multiplier(f, [&](const Vec3& xi) { return -1.0 / (xi[0] * xi[0] + eps * eps); }).v;
  };

  RField res = residual(rho);
  double rnorm = max_abs(res);
  int it = 0;
  for (; it < opt.max_iter && rnorm > opt.tol; ++it) {
    RField m(grid);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double p = rho.v[i], s = p * p, eta = s - r0_sq;
      m.v[i] = nl.F(s) + 2.0 * s * nl.dF(s) + 0.5 * c2 * ((s + r0_sq) / s - (4.0 * eta * s - 3.0 * eta * eta) / (2.0 * s * s));
    }
    auto jac = [&](const DVec& in, DVec& out) {
      RField f(grid);
      f.v = in;
      RField d2 = derivative(f, 0, 2);
      for (std::size_t i = 0; i < in.size(); ++i) d2.v[i] += m.v[i] * in[i];
      out = std::move(d2.v);
    };
    DVec rhs(res.v.size()), step(res.v.size(), 0.0);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -res.v[i];
    gmres(jac, precond, rhs, step, {1e-11, 60, 600});
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      RField trial = rho;
      for (std::size_t i = 0; i < trial.size(); ++i) trial.v[i] += t * step[i];
      trial = detail::symmetrize_even(trial);
      if (*std::min_element(trial.v.begin(), trial.v.end()) <= 0.0) continue;
      RField tr = residual(trial);
      const double tn = max_abs(tr);
      if (tn < (1.0 - 1e-4 * t) * rnorm || tn < opt.tol) {
        rho = std::move(trial);
        res = std::move(tr);
        rnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(rnorm <= std::max(opt.tol, 1e-9))) fail(ErrorCode::NewtonDiverged, "modulus Newton stopped at residual " + std::to_string(rnorm));
  TwSolution s = make_solution(detail::rebuild_1d(rho, c, r0_sq), c, nl);
  s.iterations = it;
  s.converged = true;
  return s;
}

// ---- convolution fixed point ---------------------------------------------------

struct KernelOptions {
  double tau = 0.5;
  int max_sweeps = 50;
  double tol = 1e-13;
};

namespace detail {

/// Phase gradient from the continuity equation div((r0^2 + eta) grad phi) = (c/2) d1 eta.
inline std::vector<RField> phase_from_density(const RField& eta, double c, double r0_sq) {
  const Grid& g = eta.grid;
  const int n = g.ndim;
  std::vector<RField> grad(n, RField(g));
  if (n == 1) {
    for (std::size_t i = 0; i < g.size(); ++i) grad[0].v[i] = 0.5 * c * eta.v[i] / (r0_sq + eta.v[i]);
    return grad;
  }
  const CField src = fft_forward(eta);
  CField phi(g, cplx{}, Space::Fourier);
  const double scale = std::max(max_abs(eta), 1e-300);
  for (int it = 0; it < 200; ++it) {
    // flux correction div(eta grad phi)
    CField flux(g, cplx{}, Space::Fourier);
    for (int a = 0; a < n; ++a) {
      RField j = grad[a];
      for (std::size_t i = 0; i < g.size(); ++i) j.v[i] *= eta.v[i];
      CField jh = fft_forward(j);
      multiply_spectrum(jh, [&](const Vec3& xi) { return I * xi[a]; });
      flux += jh;
    }
    CField next(g, cplx{}, Space::Fourier);
    for_each_mode(g, [&](std::size_t i, const Vec3& xi) {
      const double k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
      next.v[i] = k2 == 0.0 ? cplx{} : -(0.5 * c * I * xi[0] * src.v[i] - flux.v[i]) / (r0_sq * k2);
    });
    double change = 0.0;
    for (int a = 0; a < n; ++a) {
      CField d = next;
      multiply_spectrum(d, [&](const Vec3& xi) { return I * xi[a]; });
      RField ga = real_part(fft_inverse(d));
      for (std::size_t i = 0; i < g.size(); ++i) change = std::max(change, std::abs(ga.v[i] - grad[a].v[i]));
      grad[a] = std::move(ga);
    }
    phi = std::move(next);
    if (change <= 1e-15 * std::max(1.0, scale)) break;
  }
  return grad;
}

/// Periodic x1-antiderivative; zero on the xi1 = 0 modes.
inline RField x1_antiderivative(const RField& f) {
  CField h = fft_forward(f);
  multiply_spectrum(h, [](const Vec3& xi) { return xi[0] == 0.0 ? cplx{} : 1.0 / (I * xi[0]); });
  return real_part(fft_inverse(h));
}

/// Phase solving the continuity equation in 2D/3D (the gradient field is exact).
inline RField rebuild_phase(const RField& eta, double c, double r0_sq) { return x1_antiderivative(phase_from_density(eta, c, r0_sq)[0]); }

inline CField rebuild(const RField& eta, double c, double r0_sq) {
  const Grid& g = eta.grid;
  RField rho(g);
  for (std::size_t i = 0; i < g.size(); ++i) rho.v[i] = std::sqrt(r0_sq + eta.v[i]);
  if (g.ndim == 1) return rebuild_1d(rho, c, r0_sq);
  const RField phi = rebuild_phase(eta, c, r0_sq);
  CField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u.v[i] = rho.v[i] * std::exp(I * phi.v[i]);
  return u;
}

}  // namespace detail

/// Damped fixed point of the convolution form of the fourth-order density
/// equation, eta = rho^2 - r0^2, with the kernel denominator D_eps written in
/// physical wavenumbers. The Petviashvili factor M^2 removes the unstable
/// amplitude direction.
inline TwSolution solve_kernel_fixedpoint(const Nonlinearity& nl, double c, const Grid& grid, const TwSolution& seed,
                                          const KernelOptions& opt = {}) {
  if (!seed.u.grid.same(grid)) fail(ErrorCode::GridMismatch, "seed lives on a different grid");
  const double r0_sq = nl.r0_sq(), cs = nl.c_s();
  if (!(detail::min_abs(seed.u) > 0.5 * nl.r0())) fail(ErrorCode::LiftingLost, "seed modulus drops below r0/2");
  const double eps = speed_eps(nl, c);
  const int n = grid.ndim;
  RField eta(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) eta.v[i] = std::norm(seed.u.v[i]) - r0_sq;

  auto sweep = [&](const RField& e, double& mult) {
    for (double x : e.v)
      if (!(r0_sq + x > 0.25 * r0_sq)) fail(ErrorCode::LiftingLost, "modulus dropped below r0/2 during the sweep");
    const auto g = detail::phase_from_density(e, c, r0_sq);
    RField stuff(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double s = r0_sq + e.v[i];
      double g2 = 0.0;
      for (int a = 0; a < n; ++a) g2 += g[a].v[i] * g[a].v[i];
      stuff.v[i] = 2.0 * s * g2 - 2.0 * c * e.v[i] * g[0].v[i] - 2.0 * s * nl.F(s) - cs * cs * e.v[i];
    }
    for (int a = 0; a < n; ++a) {
      const RField de = derivative(e, a);
      for (std::size_t i = 0; i < grid.size(); ++i) stuff.v[i] += de.v[i] * de.v[i] / (2.0 * (r0_sq + e.v[i]));
    }
    const CField sh = fft_forward(stuff);
    std::vector<CField> jh;
    for (int a = 0; a < n; ++a) {
      RField j = g[a];
      for (std::size_t i = 0; i < grid.size(); ++i) j.v[i] *= e.v[i];
      jh.push_back(fft_forward(j));
    }
    const CField eh = fft_forward(e);
    CField num(grid, cplx{}, Space::Fourier), out(grid, cplx{}, Space::Fourier);
    std::vector<double> den(grid.size());
    double lin = 0.0, non = 0.0;
    for_each_mode(grid, [&](std::size_t i, const Vec3& xi) {
      const double k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
      if (n == 1) {
        num.v[i] = -(sh.v[i] + 2.0 * c * jh[0].v[i]);
        den[i] = k2 + eps * eps;
      } else {
        cplx flux{};
        for (int a = 0; a < n; ++a) flux += xi[a] * jh[a].v[i];
        num.v[i] = -(k2 * sh.v[i] + 2.0 * c * xi[0] * flux);
        // eps^4 D_eps at the slow wavevector
        den[i] = std::pow(eps, 4) * kernel_denominator({xi[0] / eps, xi[1] / (eps * eps), xi[2] / (eps * eps)}, eps, cs);
      }
      if (den[i] > 0.0) {
        lin += den[i] * std::norm(eh.v[i]);
        non += std::real(num.v[i] * std::conj(eh.v[i]));
      }
    });
    mult = non != 0.0 ? lin / non : 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) out.v[i] = den[i] > 0.0 ? mult * mult * num.v[i] / den[i] : eh.v[i];
    return real_part(fft_inverse(out));
  };

  double best = tw_residual(seed.u, c, nl);
  const double start = best;
  RField best_eta = eta;
  int it = 0;
  double mult = 1.0;
  for (; it < opt.max_sweeps; ++it) {
    const RField next = sweep(eta, mult);
    double change = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      change = std::max(change, std::abs(next.v[i] - eta.v[i]));
      eta.v[i] = (1.0 - opt.tau) * eta.v[i] + opt.tau * next.v[i];
    }
    const double res = tw_residual(detail::rebuild(eta, c, r0_sq), c, nl);
    if (!std::isfinite(res) || res > 1e3 * std::max(start, 1e-12)) fail(ErrorCode::Diverged, "fixed point diverged");
    if (res < best) {
      best = res;
      best_eta = eta;
    }
    if (change <= opt.tol * std::max(1.0, max_abs(eta))) {
      ++it;
      break;
    }
  }
  TwSolution s = make_solution(detail::rebuild(best_eta, c, r0_sq), c, nl);
  s.iterations = it;
  s.multiplier = mult;
  s.converged = s.residual <= start;
  return s;
}

// ---- variational machinery in modulus/phase variables ------------------------

namespace detail {

/// rho = r0 + a, psi = rho exp(i phi); both fields periodic.
struct Madelung {
  RField a;
  RField phi;

  Madelung& operator+=(const Madelung& o) {
    a += o.a;
    phi += o.phi;
    return *this;
  }
  Madelung scaled(double t) const { return {a * t, phi * t}; }
  friend Madelung operator+(Madelung x, const Madelung& y) { return x += y; }
  friend Madelung operator-(Madelung x, const Madelung& y) { return x += y.scaled(-1.0); }
  const Grid& grid() const { return a.grid; }
};

inline double inner(const Madelung& x, const Madelung& y) { return twaves::inner(x.a, y.a) + twaves::inner(x.phi, y.phi); }
inline double norm2_sq(const Madelung& x) { return inner(x, x); }

inline DVec pack(const Madelung& m) {
  DVec v(m.a.v);
  v.insert(v.end(), m.phi.v.begin(), m.phi.v.end());
  return v;
}

inline Madelung unpack(const DVec& v, const Grid& g) {
  Madelung m{RField(g), RField(g)};
  std::copy(v.begin(), v.begin() + static_cast<long>(g.size()), m.a.v.begin());
  std::copy(v.begin() + static_cast<long>(g.size()), v.end(), m.phi.v.begin());
  return m;
}

/// Modulus even in every axis; phase odd in x1, even transversally.
inline Madelung symmetrize(const Madelung& m) {
  const Grid& g = m.grid();
  Madelung out{RField(g), RField(g)};
  const int count = 1 << g.ndim;
  for (int mask = 0; mask < count; ++mask) {
    const std::array<bool, 3> ax{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    out.a += reflect(m.a, ax);
    RField p = reflect(m.phi, ax);
    if (ax[0]) p *= -1.0;
    out.phi += p;
  }
  return out.scaled(1.0 / count);
}

/// Phase taken from its smooth x1 gradient, so it never wraps.
inline Madelung to_madelung(const CField& u, double r0) {
  Madelung m{RField(u.grid), x1_antiderivative(phase_gradient(u, 0))};
  for (std::size_t i = 0; i < u.size(); ++i) m.a.v[i] = std::abs(u.v[i]) - r0;
  return m;
}

inline CField to_field(const Madelung& m, double r0) {
  CField u(m.grid());
  for (std::size_t i = 0; i < u.size(); ++i) u.v[i] = (r0 + m.a.v[i]) * std::exp(I * m.phi.v[i]);
  return u;
}

/// L = alpha K + beta int V + gamma Q with K = int |grad psi|^2 and
/// Q = -int (rho^2 - r0^2) d1 phi, all in modulus/phase form.
struct Lagrangian {
  const Nonlinearity& nl;
  double alpha = 1.0, beta = 1.0, gamma = 1.0;
  double alpha_perp = std::numeric_limits<double>::quiet_NaN();  // transverse kinetic weight, alpha if unset

  double weight(int axis) const { return axis == 0 || std::isnan(alpha_perp) ? alpha : alpha_perp; }
  double r0() const { return nl.r0(); }
  RField density(const RField& a) const {
    RField d(a.grid);
    const double r0v = r0();
    for (std::size_t i = 0; i < a.size(); ++i) d.v[i] = 2.0 * r0v * a.v[i] + a.v[i] * a.v[i];
    return d;
  }
  double kinetic_axis(const Madelung& m, int axis) const {
    const RField da = derivative(m.a, axis), dp = derivative(m.phi, axis);
    const double r0v = r0();
    double s = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
      const double rho = r0v + m.a.v[i];
      s += da.v[i] * da.v[i] + rho * rho * dp.v[i] * dp.v[i];
    }
    return s * da.grid.cell_volume();
  }
  double kinetic(const Madelung& m, int first_axis = 0) const {
    double s = 0.0;
    for (int a = first_axis; a < m.grid().ndim; ++a) s += kinetic_axis(m, a);
    return s;
  }
  double potential(const Madelung& m) const {
    const RField d = density(m.a);
    double s = 0.0;
    for (double x : d.v) s += nl.V_shift(x);
    return s * d.grid.cell_volume();
  }
  double momentum(const Madelung& m) const {
    const RField d = density(m.a), p1 = derivative(m.phi, 0);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s -= d.v[i] * p1.v[i];
    return s * d.grid.cell_volume();
  }
  double value(const Madelung& m) const {
    double kin = 0.0;
    for (int ax = 0; ax < m.grid().ndim; ++ax) kin += weight(ax) * kinetic_axis(m, ax);
    return kin + beta * potential(m) + gamma * momentum(m);
  }

  Madelung gradient(const Madelung& m) const {
    const Grid& g = m.grid();
    const int n = g.ndim;
    const double r0v = r0();
    const RField d = density(m.a);
    Madelung out{RField(g), derivative(d, 0) * gamma};
    const RField p1 = derivative(m.phi, 0);
    RField grad_sq(g);
    for (int ax = 0; ax < n; ++ax) {
      const double w = weight(ax);
      if (w == 0.0) continue;
      out.a -= derivative(m.a, ax, 2) * (2.0 * w);
      const RField dp = derivative(m.phi, ax);
      RField flux(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        grad_sq.v[i] += w * dp.v[i] * dp.v[i];
        flux.v[i] = (r0v * r0v + d.v[i]) * dp.v[i];
      }
      out.phi -= derivative(flux, ax) * (2.0 * w);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double rho = r0v + m.a.v[i];
      out.a.v[i] += 2.0 * rho * grad_sq.v[i] - 2.0 * beta * rho * nl.F_shift(d.v[i]) - 2.0 * gamma * rho * p1.v[i];
    }
    return out;
  }

  /// Gradient of K alone.
  Madelung kinetic_gradient(const Madelung& m) const { return Lagrangian{nl, 1.0, 0.0, 0.0}.gradient(m); }

  /// Second variation at m applied to h.
  Madelung hessian(const Madelung& m, const Madelung& h) const {
    const Grid& g = m.grid();
    const int n = g.ndim;
    const double r0v = r0(), r0sq = nl.r0_sq();
    const RField d = density(m.a);
    const RField p1 = derivative(m.phi, 0), h1 = derivative(h.phi, 0);
    Madelung out{RField(g), RField(g)};
    RField grad_sq(g), cross(g), rho_h(g);
    for (std::size_t i = 0; i < g.size(); ++i) rho_h.v[i] = 2.0 * (r0v + m.a.v[i]) * h.a.v[i];
    for (int ax = 0; ax < n; ++ax) {
      const double w = weight(ax);
      if (w == 0.0) continue;
      out.a -= derivative(h.a, ax, 2) * (2.0 * w);
      const RField dp = derivative(m.phi, ax), dh = derivative(h.phi, ax);
      RField flux(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        grad_sq.v[i] += w * dp.v[i] * dp.v[i];
        cross.v[i] += w * dp.v[i] * dh.v[i];
        flux.v[i] = rho_h.v[i] * dp.v[i] + (r0sq + d.v[i]) * dh.v[i];
      }
      out.phi -= derivative(flux, ax) * (2.0 * w);
    }
    out.phi += derivative(rho_h, 0) * gamma;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double rho = r0v + m.a.v[i];
      const double s = r0sq + d.v[i];
      out.a.v[i] += 2.0 * h.a.v[i] * grad_sq.v[i] + 4.0 * rho * cross.v[i] -
                    2.0 * beta * (nl.F_shift(d.v[i]) + 2.0 * s * nl.dF(s)) * h.a.v[i] -
                    2.0 * gamma * (h.a.v[i] * p1.v[i] + rho * h1.v[i]);
    }
    return out;
  }

  /// Inverse of the second variation at the background.
  Madelung background_inverse(const Madelung& r) const {
    const Grid& g = r.grid();
    const double cs = nl.c_s(), r0v = r0();
    const CField ah = fft_forward(r.a), ph = fft_forward(r.phi);
    CField ao(g, cplx{}, Space::Fourier), po(g, cplx{}, Space::Fourier);
    for_each_mode(g, [&](std::size_t i, const Vec3& xi) {
      const double k2 = weight(0) * xi[0] * xi[0] + weight(1) * (xi[1] * xi[1] + xi[2] * xi[2]);
      const double b11 = 2.0 * k2 + 2.0 * beta * cs * cs, b22 = 2.0 * r0v * r0v * k2;
      const cplx b12 = -2.0 * gamma * r0v * I * xi[0], b21 = -b12;
      if (k2 == 0.0) {
        ao.v[i] = ah.v[i] / b11;
        return;
      }
      const cplx det = b11 * b22 - b12 * b21;
      ao.v[i] = (b22 * ah.v[i] - b12 * ph.v[i]) / det;
      po.v[i] = (-b21 * ah.v[i] + b11 * ph.v[i]) / det;
    });
    return {real_part(fft_inverse(ao)), real_part(fft_inverse(po))};
  }

  /// Common factor t with K(t m) = k (K is a quartic polynomial in t).
  double retraction_factor(const Madelung& m, double k) const {
    const Grid& g = m.grid();
    const double r0v = r0();
    double a2 = 0.0, p0 = 0.0, p1 = 0.0, p2 = 0.0;
    for (int ax = 0; ax < g.ndim; ++ax) {
      const RField da = derivative(m.a, ax), dp = derivative(m.phi, ax);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double q = dp.v[i] * dp.v[i];
        a2 += da.v[i] * da.v[i];
        p0 += q;
        p1 += m.a.v[i] * q;
        p2 += m.a.v[i] * m.a.v[i] * q;
      }
    }
    const double cv = g.cell_volume();
    a2 *= cv, p0 *= cv, p1 *= cv, p2 *= cv;
    auto kin = [&](double t) { return t * t * (a2 + r0v * r0v * p0 + 2.0 * r0v * t * p1 + t * t * p2); };
    auto dkin = [&](double t) { return 2.0 * t * (a2 + r0v * r0v * p0) + 6.0 * r0v * t * t * p1 + 4.0 * t * t * t * p2; };
    double t = std::sqrt(k / kin(1.0));
    for (int it = 0; it < 50; ++it) {
      const double step = (kin(t) - k) / dkin(t);
      t -= step;
      if (std::abs(step) < 1e-16 * t) break;
    }
    return t;
  }
};

inline void note(const std::function<void(const std::string&)>& log, const std::string& msg) {
  if (log) log(msg);
}

/// KP-I ansatz rho = r0 (1 + eps^2 (cs/c) W), phi = eps cs d1^-1 W, sampled on
/// a grid whose slow coordinates coincide with those of W.
inline Madelung kpi_ansatz(const RField& w, double eps, double c, const Nonlinearity& nl, const Grid& target) {
  const double cs = nl.c_s(), r0 = nl.r0();
  const RField phi = inv_dz1(remove_line_means(w), 1e-8);
  Madelung m{RField(target), RField(target)};
  for (std::size_t i = 0; i < w.size(); ++i) {
    m.a.v[i] = r0 * eps * eps * (cs / c) * w.v[i];
    m.phi.v[i] = eps * cs * phi.v[i];
  }
  return m;
}

/// Moves samples of a decaying field to a box with new lengths.
inline RField resample_box(const RField& f, const Vec3& len) {
  RField out = f;
  for (int a = 0; a < f.grid.ndim; ++a) out = dilate_axis(out, a, f.grid.len[a] / len[a]);
  out.grid = f.grid.with_lengths(len);
  return out;
}

inline Madelung resample_box(const Madelung& m, const Vec3& len) { return {resample_box(m.a, len), resample_box(m.phi, len)}; }

}  // namespace detail

struct FixedKineticOptions {
  BoxAuto box;
  double tol = 1e-11;          // Lagrange residual relative to the objective gradient
  int descent_iter = 20;
  int newton_iter = 30;
  int box_iter = 10;
  double box_tol = 1e-10;
  double constraint_tol = 1e-8;
  GmresOptions gmres{1e-6, 60, 600};
  std::function<void(const std::string&)> log;
};

namespace detail {

struct LagrangeState {
  Madelung m;
  double theta = 0.0;
  double c_pre = 1.0;  // speed used by the background preconditioner
  double rel = 1.0;
  int iterations = 0;
};

/// L = I - theta K in psi variables, i.e. alpha = -theta, beta = gamma = 1.
inline Lagrangian fixed_kinetic_lagrangian(const Nonlinearity& nl, double theta) { return {nl, -theta, 1.0, 1.0}; }

/// Bordered Newton-Krylov on grad I = theta grad K, K = k, in the symmetric subspace.
inline void bordered_newton(const Nonlinearity& nl, LagrangeState& st, double k, const FixedKineticOptions& opt) {
  const Grid& g = st.m.grid();
  const Lagrangian obj{nl, 0.0, 1.0, 1.0};
  const Lagrangian pre = fixed_kinetic_lagrangian(nl, -1.0 / (st.c_pre * st.c_pre));
  for (int it = 0; it < opt.newton_iter; ++it) {
    const Lagrangian lag = fixed_kinetic_lagrangian(nl, st.theta);
    const Madelung gi = obj.gradient(st.m), gk = obj.kinetic_gradient(st.m);
    const Madelung r = lag.gradient(st.m);
    st.rel = std::sqrt(norm2_sq(r) / norm2_sq(gi));
    note(opt.log, "newton " + std::to_string(it) + " rel " + std::to_string(st.rel) + " theta " + std::to_string(st.theta));
    if (st.rel < opt.tol) return;
    auto jac = [&](const DVec& in, DVec& out) { out = pack(lag.hessian(st.m, unpack(in, g))); };
    auto prec = [&](const DVec& in, DVec& out) { out = pack(pre.background_inverse(unpack(in, g))); };
    DVec rhs = pack(r);
    for (auto& x : rhs) x = -x;
    DVec a(rhs.size(), 0.0), b(rhs.size(), 0.0);
    const auto ga = gmres(jac, prec, rhs, a, opt.gmres);
    const auto gb = gmres(jac, prec, pack(gk), b, opt.gmres);
    note(opt.log, "  gmres " + std::to_string(ga.iterations) + " " + std::to_string(ga.rel_residual) + " / " + std::to_string(gb.iterations) + " " +
                      std::to_string(gb.rel_residual));
    const Madelung fa = unpack(a, g), fb = unpack(b, g);
    const double dtheta = (k - obj.kinetic(st.m) - inner(gk, fa)) / inner(gk, fb);
    Madelung next = symmetrize(st.m + fa + fb.scaled(dtheta));
    st.m = next.scaled(obj.retraction_factor(next, k));
    st.theta += dtheta;
    ++st.iterations;
  }
  const Madelung r = fixed_kinetic_lagrangian(nl, st.theta).gradient(st.m);
  st.rel = std::sqrt(norm2_sq(r) / norm2_sq(obj.gradient(st.m)));
}

/// Preconditioned projected gradient descent of I on K = k with Armijo backtracking.
inline void projected_descent(const Nonlinearity& nl, LagrangeState& st, double k, const FixedKineticOptions& opt) {
  const Lagrangian obj{nl, 0.0, 1.0, 1.0};
  const Lagrangian pre = fixed_kinetic_lagrangian(nl, -1.0 / (st.c_pre * st.c_pre));
  double value = obj.value(st.m);
  for (int it = 0; it < opt.descent_iter; ++it) {
    const Madelung gi = obj.gradient(st.m), gk = obj.kinetic_gradient(st.m);
    const Madelung pk = pre.background_inverse(gk);
    st.theta = inner(gi, pk) / inner(gk, pk);
    const Madelung r = gi - gk.scaled(st.theta);
    st.rel = std::sqrt(norm2_sq(r) / norm2_sq(gi));
    const Madelung dir = symmetrize(pre.background_inverse(r)).scaled(-1.0);
    const double slope = inner(r, dir);
    note(opt.log, "descent " + std::to_string(it) + " I " + std::to_string(value) + " rel " + std::to_string(st.rel));
    if (st.rel < 1e-6 || !(slope < 0.0)) return;
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      Madelung trial = st.m + dir.scaled(step);
      trial = trial.scaled(obj.retraction_factor(trial, k));
      const double tv = obj.value(trial);
      if (tv <= value + 1e-4 * step * slope) {
        st.m = std::move(trial);
        value = tv;
        moved = true;
        break;
      }
    }
    ++st.iterations;
    if (!moved) return;
  }
}

}  // namespace detail

/// Minimizer of I(psi) = int V(|psi|^2) + Q(psi) at fixed kinetic energy
/// int |grad psi|^2 = k in 2D. The multiplier theta of the constraint gives
/// the speed c = 1/sqrt(-theta) and U(x) = psi(x/c). With box_auto the
/// physical box of U is (l1/eps, lperp/eps^2); otherwise it is the grid's box.
inline TwSolution solve_2d_fixed_kinetic(const Nonlinearity& nl, double k, const Grid& grid, const FixedKineticOptions& opt = {},
                                         bool box_auto = true, const std::optional<TwSolution>& seed = std::nullopt) {
  if (grid.ndim != 2) fail(ErrorCode::UnsupportedDimension, "fixed-kinetic mode needs a 2D grid");
  if (!(k > 0.0)) fail(ErrorCode::ValidationError, "kinetic level must be positive");
  const double cs = nl.c_s(), r0 = nl.r0(), gam = nl.gamma();
  check_gamma(gam);
  const detail::Lagrangian obj{nl, 0.0, 1.0, 1.0};
  const std::vector<std::size_t> sizes{grid.n[0], grid.n[1]};
  auto target = [&](double eps) {
    if (!box_auto) return grid.len;
    return auto_box(eps, sizes, opt.box).len;
  };

  detail::LagrangeState st;
  double c0 = 0.0;
  if (seed) {
    check_lifting(seed->u, nl);
    if (!seed->u.grid.same_shape(grid)) fail(ErrorCode::GridMismatch, "seed grid differs from the requested grid");
    c0 = seed->c;
    st.m = detail::to_madelung(seed->u, r0);
    Vec3 len = seed->u.grid.len;
    for (int a = 0; a < 2; ++a) len[a] /= c0;
    st.m.a.grid = st.m.phi.grid = seed->u.grid.with_lengths(len);
  } else {
    const Grid slow = Grid::make(sizes, {opt.box.l1, opt.box.lperp});
    const KpiWave gs = petviashvili_ground_state(slow, cs, gam);
    double mass = 0.0;
    for (double x : gs.w.v) mass += x * x;
    mass *= slow.cell_volume();
    const double eps0 = k / (nl.r0_sq() * cs * cs * mass);
    if (!(eps0 < 0.5 * cs)) fail(ErrorCode::ValidationError, "kinetic level too large for the transonic ansatz");
    c0 = std::sqrt(cs * cs - eps0 * eps0);
    Vec3 len = target(eps0);
    for (int a = 0; a < 2; ++a) len[a] /= c0;
    st.m = detail::kpi_ansatz(gs.w, eps0, c0, nl, grid.with_lengths(len));
  }
  st.m = detail::symmetrize(st.m);
  st.m = st.m.scaled(obj.retraction_factor(st.m, k));
  st.theta = -1.0 / (c0 * c0);
  st.c_pre = c0;

  detail::projected_descent(nl, st, k, opt);
  int rounds = 0;
  for (; rounds < opt.box_iter; ++rounds) {
    detail::bordered_newton(nl, st, k, opt);
    if (!(st.theta < 0.0)) fail(ErrorCode::Stalled, "constraint multiplier has the wrong sign");
    const double c = 1.0 / std::sqrt(-st.theta);
    if (!(c < cs)) fail(ErrorCode::Stalled, "multiplier gives a supersonic speed");
    st.c_pre = c;
    Vec3 len = target(std::sqrt(cs * cs - c * c));
    double mismatch = 0.0;
    for (int a = 0; a < 2; ++a) {
      len[a] /= c;
      mismatch = std::max(mismatch, std::abs(len[a] / st.m.grid().len[a] - 1.0));
    }
    detail::note(opt.log, "box mismatch " + std::to_string(mismatch));
    if (mismatch <= opt.box_tol) break;
    st.m = detail::symmetrize(detail::resample_box(st.m, len));
    st.m = st.m.scaled(obj.retraction_factor(st.m, k));
  }
  const double c = 1.0 / std::sqrt(-st.theta);
  const double kin = obj.kinetic(st.m);
  if (std::abs(kin - k) > opt.constraint_tol * k) fail(ErrorCode::ConstraintLost, "kinetic constraint drifted to " + std::to_string(kin));
  CField u = detail::to_field(st.m, r0);
  u.grid = u.grid.with_lengths({u.grid.len[0] * c, u.grid.len[1] * c, 1.0});
  TwSolution sol = make_solution(std::move(u), c, nl);
  sol.multiplier = st.theta;
  sol.iterations = st.iterations;
  sol.converged = st.rel < std::max(opt.tol, 1e-8) && rounds < opt.box_iter;
  if (!sol.converged) fail(ErrorCode::Stalled, "Lagrange residual stalled at " + std::to_string(st.rel));
  check_lifting(sol.u, nl);
  return sol;
}

// ---- 3D: Pohozaev manifold ----------------------------------------------------

struct PohozaevOptions {
  int descent_iter = 300;
  double descent_tol = 1e-3;  // projected gradient relative to grad E_c
  int newton_iter = 30;
  double tol_residual = 1e-6;
  double tol_pohozaev = 1e-6;  // relative to E
  GmresOptions gmres{1e-6, 80, 800};
  std::function<void(const std::string&)> log;
};

/// Smallest positive root a of d1 + a cq + a^2 v = 0 (x1-dilation onto P_c = 0).
inline double dilation_root(double d1, double cq, double v) {
  if (std::abs(v) <= 1e-14 * (std::abs(d1) + std::abs(cq))) {
    if (cq < 0.0) return -d1 / cq;
    fail(ErrorCode::NoPositiveRoot, "affine dilation equation has no positive root");
  }
  const double disc = cq * cq - 4.0 * d1 * v;
  if (disc < 0.0) fail(ErrorCode::NoPositiveRoot, "negative discriminant for d1 " + std::to_string(d1) + ", cQ " + std::to_string(cq) + ", V " + std::to_string(v));
  const double sq = std::sqrt(disc);
  // roots without cancellation
  const double q = -0.5 * (cq + std::copysign(sq, cq));
  double r1 = q / v, r2 = q != 0.0 ? d1 / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (r1 > 0.0) return r1;
  if (r2 > 0.0) return r2;
  fail(ErrorCode::NoPositiveRoot, "both dilation roots are non-positive");
}

namespace detail {

inline Madelung scale_axes(Madelung m, double along, double across) {
  Vec3 len = m.grid().len;
  len[0] *= along;
  for (int a = 1; a < m.grid().ndim; ++a) len[a] *= across;
  m.a.grid = m.phi.grid = m.a.grid.with_lengths(len);
  return m;
}

struct PohozaevProblem {
  const Nonlinearity& nl;
  double c;
  Lagrangian action() const { return {nl, 1.0, 1.0, c}; }
  Lagrangian constraint() const { return {nl, 1.0, 1.0, c, 0.0}; }
  Madelung project(const Madelung& m) const {
    const Lagrangian ops{nl};
    return scale_axes(m, dilation_root(ops.kinetic_axis(m, 0), c * ops.momentum(m), ops.potential(m)), 1.0);
  }
};

/// Preconditioned descent of E_c along P_c = 0; returns the last constraint multiplier.
inline double pohozaev_descent(const PohozaevProblem& pb, Madelung& m, const PohozaevOptions& opt, int& iterations) {
  const Lagrangian act = pb.action(), con = pb.constraint();
  m = pb.project(m);
  double value = act.value(m), lambda = 0.0;
  for (int it = 0; it < opt.descent_iter; ++it) {
    const Madelung ge = act.gradient(m), gp = con.gradient(m);
    const Madelung pg = act.background_inverse(gp);
    lambda = inner(ge, pg) / inner(gp, pg);
    const Madelung r = ge - gp.scaled(lambda);
    const double rel = std::sqrt(norm2_sq(r) / norm2_sq(ge));
    const Madelung dir = symmetrize(act.background_inverse(r)).scaled(-1.0);
    const double slope = inner(ge, dir);
    if (it % 10 == 0) note(opt.log, "pohozaev descent " + std::to_string(it) + " Ec " + std::to_string(value) + " rel " + std::to_string(rel));
    if (rel < opt.descent_tol || !(slope < 0.0)) break;
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      try {
        Madelung trial = pb.project(m + dir.scaled(step));
        const double tv = act.value(trial);
        if (tv <= value + 1e-4 * step * slope) {
          m = std::move(trial);
          value = tv;
          moved = true;
          break;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoPositiveRoot) throw;
      }
    }
    ++iterations;
    if (!moved) break;
  }
  return lambda;
}

/// Newton-Krylov on grad E_c = 0 in the symmetric subspace at fixed speed.
inline double fixed_speed_newton(const Nonlinearity& nl, double c, Madelung& m, const PohozaevOptions& opt, int& iterations) {
  const Lagrangian act{nl, 1.0, 1.0, c};
  const Grid g = m.grid();
  auto resid = [&](const Madelung& x) { return tw_residual(to_field(x, nl.r0()), c, nl); };
  double res = resid(m);
  const double g0 = std::sqrt(norm2_sq(act.gradient(m)));
  for (int it = 0; it < opt.newton_iter; ++it) {
    const Madelung r = act.gradient(m);
    const double gn = std::sqrt(norm2_sq(r));
    note(opt.log, "speed newton " + std::to_string(it) + " residual " + std::to_string(res) + " gradient " + std::to_string(gn / g0));
    if (res < 1e-2 * opt.tol_residual || gn < 1e-8 * g0) break;
    auto jac = [&](const DVec& in, DVec& out) { out = pack(act.hessian(m, unpack(in, g))); };
    auto prec = [&](const DVec& in, DVec& out) { out = pack(act.background_inverse(unpack(in, g))); };
    DVec rhs = pack(r);
    for (auto& x : rhs) x = -x;
    DVec sol(rhs.size(), 0.0);
    const auto gr = gmres(jac, prec, rhs, sol, opt.gmres);
    note(opt.log, "  gmres " + std::to_string(gr.iterations) + " " + std::to_string(gr.rel_residual));
    if (gr.rel_residual > 1e-2) break;
    const Madelung step = symmetrize(unpack(sol, g));
    const double gnorm = norm2_sq(r);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      Madelung trial = m + step.scaled(t);
      if (norm2_sq(act.gradient(trial)) < gnorm) {
        m = std::move(trial);
        res = resid(m);
        moved = true;
        break;
      }
    }
    ++iterations;
    if (!moved) break;
  }
  return res;
}

inline DVec pack(const CField& u) {
  DVec v(2 * u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    v[i] = u.v[i].real();
    v[u.size() + i] = u.v[i].imag();
  }
  return v;
}

inline CField unpack_field(const DVec& v, const Grid& g) {
  CField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u.v[i] = {v[i], v[u.size() + i]};
  return u;
}

/// Real part even in every axis, imaginary part odd in x1 and even transversally.
inline CField symmetrize_field(const CField& u) {
  const Grid& g = u.grid;
  CField out(g);
  const int count = 1 << g.ndim;
  for (int mask = 0; mask < count; ++mask) {
    const std::array<bool, 3> ax{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    CField r = reflect(u, ax);
    if (ax[0])
      for (auto& z : r.v) z = std::conj(z);
    out += r;
  }
  for (auto& z : out.v) z /= static_cast<double>(count);
  return out;
}

/// Inverse of the travelling-wave linearization at the background u = r0.
inline CField background_inverse_field(const CField& r, double c, double cs) {
  const Grid& g = r.grid;
  const CField ph = fft_forward(real_part(r)), qh = fft_forward(imag_part(r));
  CField po(g, cplx{}, Space::Fourier), qo(g, cplx{}, Space::Fourier);
  for_each_mode(g, [&](std::size_t i, const Vec3& xi) {
    const double k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if (k2 == 0.0) {
      po.v[i] = -ph.v[i] / (cs * cs);
      return;
    }
    const cplx a = -k2 - cs * cs, b = I * c * xi[0], cc = -b, d = -k2;
    const cplx det = a * d - b * cc;
    po.v[i] = (d * ph.v[i] - b * qh.v[i]) / det;
    qo.v[i] = (-cc * ph.v[i] + a * qh.v[i]) / det;
  });
  const RField p = real_part(fft_inverse(po)), q = real_part(fft_inverse(qo));
  CField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = {p.v[i], q.v[i]};
  return out;
}

/// Newton-Krylov on the travelling-wave equation for the field itself.
inline double field_newton(const Nonlinearity& nl, double c, CField& u, const PohozaevOptions& opt, int& iterations) {
  const Grid g = u.grid;
  const double cs = nl.c_s();
  double res = tw_residual(u, c, nl);
  for (int it = 0; it < opt.newton_iter; ++it) {
    note(opt.log, "field newton " + std::to_string(it) + " residual " + std::to_string(res));
    if (res < 1e-2 * opt.tol_residual) break;
    const CField r = tw_operator(u, c, nl);
    std::vector<double> f(u.size()), df(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double s = std::norm(u.v[i]);
      f[i] = nl.F(s);
      df[i] = nl.dF(s);
    }
    auto jac = [&](const DVec& in, DVec& out) {
      const CField h = unpack_field(in, g);
      CField o = tw_laplacian(h);
      const CField d1 = tw_derivative(h, 0);
      for (std::size_t i = 0; i < u.size(); ++i)
        o.v[i] += -I * c * d1.v[i] + f[i] * h.v[i] + 2.0 * df[i] * std::real(std::conj(u.v[i]) * h.v[i]) * u.v[i];
      out = pack(o);
    };
    auto prec = [&](const DVec& in, DVec& out) { out = pack(background_inverse_field(unpack_field(in, g), c, cs)); };
    DVec rhs = pack(r);
    for (auto& x : rhs) x = -x;
    DVec sol(rhs.size(), 0.0);
    const auto gr = gmres(jac, prec, rhs, sol, opt.gmres);
    note(opt.log, "  gmres " + std::to_string(gr.iterations) + " " + std::to_string(gr.rel_residual));
    const CField step = symmetrize_field(unpack_field(sol, g));
    const double rnorm = norm2_sq(r);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      CField trial = u;
      for (std::size_t i = 0; i < u.size(); ++i) trial.v[i] += t * step.v[i];
      if (norm2_sq(tw_operator(trial, c, nl)) < rnorm) {
        u = std::move(trial);
        res = tw_residual(u, c, nl);
        moved = true;
        break;
      }
    }
    ++iterations;
    if (!moved) break;
  }
  return res;
}

}  // namespace detail

/// Transonic 3D wave of speed c: minimizer of E + cQ on the Pohozaev manifold
/// P_c = 0, transversally rescaled so that it solves the travelling-wave
/// equation, then polished by Newton at fixed speed on the requested box.
inline TwSolution solve_3d_pohozaev(const Nonlinearity& nl, double c, const Grid& grid, const PohozaevOptions& opt = {},
                                    const std::optional<TwSolution>& seed = std::nullopt) {
  if (grid.ndim != 3) fail(ErrorCode::UnsupportedDimension, "Pohozaev mode needs a 3D grid");
  const double eps = speed_eps(nl, c);
  const double cs = nl.c_s(), r0 = nl.r0(), gam = nl.gamma();
  check_gamma(gam);
  detail::Madelung m;
  if (seed) {
    check_lifting(seed->u, nl);
    m = detail::resample_box(detail::to_madelung(seed->u, r0), grid.len);
  } else {
    // KP-I ground state on the slow image of the requested box
    const Grid slow = grid.with_lengths({grid.len[0] * eps, grid.len[1] * eps * eps, grid.len[2] * eps * eps});
    const KpiWave gs = petviashvili_ground_state(slow, cs, gam);
    m = detail::kpi_ansatz(center_wave(gs.w), eps, c, nl, grid);
    // phase from the continuity equation; amplitude raised until a dilation reaches P_c = 0
    const detail::Lagrangian ops{nl};
    const RField eta = ops.density(m.a);
    for (double amp = 1.0;; amp *= 1.1) {
      if (amp > 4.0) fail(ErrorCode::NoPositiveRoot, "no seed amplitude reaches the Pohozaev manifold");
      RField scaled = eta * amp;
      if (*std::min_element(scaled.v.begin(), scaled.v.end()) <= -nl.r0_sq()) fail(ErrorCode::NoPositiveRoot, "no seed amplitude reaches the Pohozaev manifold");
      detail::Madelung trial{RField(grid), detail::rebuild_phase(scaled, c, nl.r0_sq())};
      for (std::size_t i = 0; i < grid.size(); ++i) trial.a.v[i] = std::sqrt(nl.r0_sq() + scaled.v[i]) - r0;
      const double d1 = ops.kinetic_axis(trial, 0), cq = c * ops.momentum(trial), v = ops.potential(trial);
      if (cq * cq > 4.0 * d1 * v * 1.01) {
        detail::note(opt.log, "seed amplitude " + std::to_string(amp));
        m = std::move(trial);
        break;
      }
    }
  }
  m = detail::symmetrize(m);
  const detail::PohozaevProblem pb{nl, c};
  int iterations = 0;
  const double lambda = detail::pohozaev_descent(pb, m, opt, iterations);
  detail::note(opt.log, "constraint multiplier " + std::to_string(lambda));

  // transverse rescale U(x1, sigma x_perp), sigma by golden section on the residual
  auto residual_at = [&](double sigma) { return tw_residual(detail::to_field(detail::scale_axes(m, 1.0, 1.0 / sigma), r0), c, nl); };
  const boost::uintmax_t max_eval = 60;
  boost::uintmax_t evals = max_eval;
  const auto best = boost::math::tools::brent_find_minima(residual_at, 0.5, 2.0, 30, evals);
  detail::note(opt.log, "sigma " + std::to_string(best.first) + " residual " + std::to_string(best.second));
  m = detail::symmetrize(detail::resample_box(detail::scale_axes(m, 1.0, 1.0 / best.first), grid.len));

  detail::fixed_speed_newton(nl, c, m, opt, iterations);
  CField u = detail::to_field(m, r0);
  const double res = detail::field_newton(nl, c, u, opt, iterations);
  TwSolution sol = make_solution(std::move(u), c, nl);
  sol.iterations = iterations;
  sol.multiplier = lambda;
  sol.converged = res <= opt.tol_residual && std::abs(sol.pohozaev_p) <= opt.tol_pohozaev * sol.energy;
  check_lifting(sol.u, nl);
  if (!sol.converged) fail(ErrorCode::Stalled, "residual " + std::to_string(res) + ", P_c/E " + std::to_string(sol.pohozaev_p / sol.energy));
  return sol;
}

}  // namespace twaves
