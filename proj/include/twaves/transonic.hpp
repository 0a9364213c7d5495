#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "twaves/kpi.hpp"
#include "twaves/nlstw.hpp"

namespace twaves {

/// Slow-variable profiles of a wave u = r0 (1 + eps^2 A) exp(i eps phi), with
/// z1 = eps x1 and z_perp = eps^2 x_perp.
struct TransonicProfiles {
  double eps = 0.0;
  double c = 0.0;
  double r0 = 1.0;
  RField a_eps;       // A
  RField frak_a_eps;  // rho^2 = r0^2 (1 + eps^2 frak_a)
  RField phi_eps;     // zero mean
  RField w_proxy;     // d_z1 phi / c_s
};

inline Grid slow_grid(const Grid& g, double eps) {
  Vec3 len = g.len;
  len[0] *= eps;
  for (int a = 1; a < g.ndim; ++a) len[a] *= eps * eps;
  return g.with_lengths(len);
}

inline Grid physical_grid(const Grid& slow, double eps) {
  Vec3 len = slow.len;
  len[0] /= eps;
  for (int a = 1; a < slow.ndim; ++a) len[a] /= eps * eps;
  return slow.with_lengths(len);
}

namespace detail {

/// Phase with the given x1 gradient: periodic antiderivative plus the linear
/// part carried by the line means (a net phase jump across the box).
inline RField phase_from_x1_gradient(const RField& g1) {
  const std::vector<double> means = line_means(g1);
  RField phi = x1_antiderivative(remove_line_means(g1));
  const Grid& g = g1.grid;
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k) phi.v[g.index(i, j, k)] += means[j * g.n[2] + k] * g.coord(0, i);
  return phi;
}

inline void remove_mean(RField& f) {
  double m = 0.0;
  for (double x : f.v) m += x;
  m /= static_cast<double>(f.size());
  for (double& x : f.v) x -= m;
}

}  // namespace detail

/// Lifts a solution to slow variables. With expected_box set, the physical box
/// must be the auto-sized box for the solution's eps.
inline TransonicProfiles rescale_to_slow(const TwSolution& sol, const std::optional<BoxAuto>& expected_box = BoxAuto{}) {
  const Nonlinearity& nl = sol.nl;
  check_lifting(sol.u, nl);
  const double eps = sol.eps;
  if (!(eps > 0.0)) fail(ErrorCode::ValidationError, "solution has no positive eps");
  const Grid& g = sol.u.grid;
  if (expected_box) {
    std::vector<std::size_t> sizes(g.n.begin(), g.n.begin() + g.ndim);
    const Grid ref = auto_box(eps, sizes, *expected_box);
    for (int a = 0; a < g.ndim; ++a)
      if (std::abs(g.len[a] / ref.len[a] - 1.0) > 1e-8)
        fail(ErrorCode::BoxNotCommensurate, "box length " + std::to_string(g.len[a]) + " on axis " + std::to_string(a) + " is not the auto box " +
                                                std::to_string(ref.len[a]));
  }
  const Grid slow = slow_grid(g, eps);
  const double r0 = nl.r0(), e2 = eps * eps;
  TransonicProfiles p{eps, sol.c, r0, RField(slow), RField(slow), RField(slow), RField(slow)};
  const RField g1 = phase_gradient(sol.u, 0);
  RField phi = detail::phase_from_x1_gradient(g1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double rho = std::abs(sol.u.v[i]);
    p.a_eps.v[i] = (rho / r0 - 1.0) / e2;
    p.frak_a_eps.v[i] = (rho * rho / (r0 * r0) - 1.0) / e2;
    p.phi_eps.v[i] = phi.v[i] / eps;
    // d_z1 phi_eps = d_x1 phi / eps^2
    p.w_proxy.v[i] = g1.v[i] / (e2 * nl.c_s());
  }
  p.phi_eps.grid = slow;
  detail::remove_mean(p.phi_eps);
  return p;
}

/// Inverse of rescale_to_slow (up to the constant phase).
inline CField reconstruct(const TransonicProfiles& p) {
  const Grid g = physical_grid(p.a_eps.grid, p.eps);
  CField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u.v[i] = p.r0 * (1.0 + p.eps * p.eps * p.a_eps.v[i]) * std::exp(I * p.eps * p.phi_eps.v[i]);
  return u;
}

/// Leading-order profiles A = (c_s / c) w, phi = c_s d_z1^-1 w of a KP-I wave.
inline TransonicProfiles ansatz_profiles(const RField& w, double eps, const Nonlinearity& nl) {
  const double cs = nl.c_s(), c = std::sqrt(cs * cs - eps * eps), e2 = eps * eps;
  TransonicProfiles p{eps, c, nl.r0(), RField(w.grid), RField(w.grid), RField(w.grid), RField(w.grid)};
  // a line keeps its net phase jump; in 2D/3D the phase stays periodic
  const bool line = w.grid.ndim == 1;
  p.phi_eps = line ? detail::phase_from_x1_gradient(w) : inv_dz1(remove_line_means(w), 1e-8);
  p.phi_eps *= cs;
  detail::remove_mean(p.phi_eps);
  const RField d1 = line ? w * cs : derivative(p.phi_eps, 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = cs / c * w.v[i];
    p.a_eps.v[i] = a;
    p.frak_a_eps.v[i] = 2.0 * a + e2 * a * a;
    p.w_proxy.v[i] = d1.v[i] / cs;
  }
  return p;
}

/// Test function of the variational upper bound: the ansatz of a KP-I wave on the physical grid.
inline CField test_function(const RField& w, double eps, const Nonlinearity& nl) { return reconstruct(ansatz_profiles(w, eps, nl)); }

struct GroundStateComparison {
  double err_a = 0.0;
  double err_w = 0.0;
  double err_phase_constraint = 0.0;
  Vec3 shift{};  // translation applied to the profiles
};

/// Translation s maximizing the correlation of f(. + s) with g; integer peak refined by parabolas.
inline Vec3 correlation_shift(const RField& f, const RField& g) {
  const Grid& grid = f.grid;
  CField fh = fft_forward(f);
  const CField gh = fft_forward(g);
  for (std::size_t i = 0; i < fh.size(); ++i) fh.v[i] *= std::conj(gh.v[i]);
  const RField corr = real_part(fft_inverse(fh));
  const std::size_t best = static_cast<std::size_t>(std::max_element(corr.v.begin(), corr.v.end()) - corr.v.begin());
  std::array<std::size_t, 3> idx{best / (grid.n[1] * grid.n[2]), (best / grid.n[2]) % grid.n[1], best % grid.n[2]};
  Vec3 shift{};
  for (int a = 0; a < grid.ndim; ++a) {
    auto at = [&](long off) {
      auto j = idx;
      j[a] = static_cast<std::size_t>((static_cast<long>(idx[a]) + off + static_cast<long>(grid.n[a])) % static_cast<long>(grid.n[a]));
      return corr.v[grid.index(j[0], j[1], j[2])];
    };
    const double ym = at(-1), y0 = at(0), yp = at(1);
    const double den = ym - 2.0 * y0 + yp;
    const double frac = den != 0.0 ? 0.5 * (ym - yp) / den : 0.0;
    double k = static_cast<double>(idx[a]) + frac;
    if (k > 0.5 * static_cast<double>(grid.n[a])) k -= static_cast<double>(grid.n[a]);
    shift[a] = k * grid.spacing(a);
  }
  return shift;
}

inline GroundStateComparison compare_to_ground_state(const TransonicProfiles& p, const KpiWave& w) {
  const Grid& g = w.w.grid;
  if (!p.a_eps.grid.same(g)) fail(ErrorCode::GridMismatch, "profiles and ground state live on different slow grids");
  GroundStateComparison out;
  out.shift = correlation_shift(p.a_eps, w.w);
  const Vec3 back{-out.shift[0], -out.shift[1], -out.shift[2]};
  const RField a = translate(p.a_eps, back), wp = translate(p.w_proxy, back);
  const double cs = w.c_s;
  const double wn = std::sqrt(norm2_sq(w.w));
  double ea = 0.0, ew = 0.0, ep = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    ea += (a.v[i] - w.w.v[i]) * (a.v[i] - w.w.v[i]);
    ew += (wp.v[i] - w.w.v[i]) * (wp.v[i] - w.w.v[i]);
    const double r = cs * wp.v[i] - p.c * a.v[i];
    ep += r * r;
  }
  const double cv = g.cell_volume();
  out.err_a = std::sqrt(ea * cv) / wn;
  out.err_w = std::sqrt(ew * cv) / wn;
  out.err_phase_constraint = std::sqrt(ep * cv) / (cs * wn);
  return out;
}

/// Sup norms of the two slow-variable equations of the modulus/phase system.
inline std::pair<double, double> madelung_residuals(const TransonicProfiles& p, const Nonlinearity& nl) {
  const Grid& g = p.a_eps.grid;
  const int n = g.ndim;
  const double e2 = p.eps * p.eps, e4 = e2 * e2, c = p.c, r0sq = nl.r0_sq();
  // x1 slope from w_proxy: phi_eps may carry a net jump across the box
  const RField a1 = derivative(p.a_eps, 0), p1 = p.w_proxy * nl.c_s();
  const RField a11 = derivative(p.a_eps, 0, 2), p11 = derivative(p1, 0);
  RField cross(g), grad_sq(g), lap_a(g), lap_p(g);
  for (int ax = 1; ax < n; ++ax) {
    const RField da = derivative(p.a_eps, ax), dp = derivative(p.phi_eps, ax);
    lap_a += derivative(p.a_eps, ax, 2);
    lap_p += derivative(p.phi_eps, ax, 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
      cross.v[i] += dp.v[i] * da.v[i];
      grad_sq.v[i] += dp.v[i] * dp.v[i];
    }
  }
  double r1 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = p.a_eps.v[i], m = 1.0 + e2 * a;
    const double eq1 = -c * a1.v[i] + 2.0 * e2 * p1.v[i] * a1.v[i] + 2.0 * e4 * cross.v[i] + m * (p11.v[i] + e2 * lap_p.v[i]);
    const double f = nl.F_shift(r0sq * (m * m - 1.0));
    const double eq2 = -c * p1.v[i] + e2 * p1.v[i] * p1.v[i] + e4 * grad_sq.v[i] - f / e2 - e2 * (a11.v[i] + e2 * lap_a.v[i]) / m;
    r1 = std::max(r1, std::abs(eq1));
    r2 = std::max(r2, std::abs(eq2));
  }
  return {r1, r2};
}

// ---- asymptotic laws --------------------------------------------------------

struct CurvePoint {
  double c = 0.0, eps = 0.0, E = 0.0, Q = 0.0, E_plus_cQ = 0.0, k = 0.0, T_c_estimate = 0.0, min_modulus = 0.0;
  bool accepted = true;
  std::string flags;
};

inline CurvePoint curve_point(const TwSolution& s) {
  CurvePoint p;
  p.c = s.c;
  p.eps = s.eps;
  p.E = s.energy;
  p.Q = s.momentum;
  p.E_plus_cQ = s.energy + s.c * s.momentum;
  p.k = s.kinetic;
  // on the Pohozaev manifold E + cQ = (2 / (N - 1)) int |grad_perp U|^2
  const int n = s.u.grid.ndim;
  p.T_c_estimate = n > 1 ? 2.0 / (n - 1) * s.kinetic_perp : p.E_plus_cQ;
  p.min_modulus = s.min_modulus;
  return p;
}

struct PowerFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double target_exponent = 0.0;
  double target_prefactor = 0.0;
};

struct FitReport {
  PowerFit energy, momentum, energy_plus_cq;
};

inline PowerFit power_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(ErrorCode::ValidationError, "log-log fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  PowerFit f;
  f.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.prefactor = std::exp((sy - f.exponent * sx) / n);
  return f;
}

/// Log-log fits of E, -Q and E + cQ against eps with the leading-order targets.
inline FitReport asymptotic_fit(const std::vector<CurvePoint>& points, int dim, double s_min, const Nonlinearity& nl) {
  if (points.size() < 4) fail(ErrorCode::InsufficientPoints, "a fit needs at least four points");
  std::vector<double> eps, e, q, ecq;
  for (const auto& p : points) {
    eps.push_back(p.eps);
    e.push_back(p.E);
    q.push_back(-p.Q);
    ecq.push_back(p.E_plus_cQ);
  }
  const double cs = nl.c_s(), r0sq = nl.r0_sq(), m = 7.0 - 2.0 * dim;
  FitReport r{power_fit(eps, e), power_fit(eps, q), power_fit(eps, ecq)};
  r.energy.target_exponent = r.momentum.target_exponent = 5.0 - 2.0 * dim;
  r.energy_plus_cq.target_exponent = m;
  r.energy.target_prefactor = r0sq * std::pow(cs, 4) * m * s_min;
  r.momentum.target_prefactor = r0sq * std::pow(cs, 3) * m * s_min;
  r.energy_plus_cq.target_prefactor = cs * cs * r0sq * s_min;
  return r;
}

// ---- sweeps -----------------------------------------------------------------

struct SweepResult {
  std::vector<CurvePoint> points;  // sorted by decreasing eps
  std::vector<TwSolution> solutions;
  bool q_negative = true;
  bool speed_decreasing_in_k = true;  // 2D
  bool tc_decreasing_in_c = true;     // 3D
  bool secant_inequality = true;      // 3D
};

struct SweepOptions {
  FixedKineticOptions fixed_kinetic;
  PohozaevOptions pohozaev;
  bool warm_start = true;
  unsigned threads = 1;  // worker cap when points are independent
};

/// Monotonicity flags over the accepted points.
inline void sweep_flags(SweepResult& r, int dim) {
  std::vector<const CurvePoint*> ok;
  for (const auto& p : r.points)
    if (p.accepted) ok.push_back(&p);
  for (const auto* p : ok)
    if (!(p->Q < 0.0)) r.q_negative = false;
  // ordered by increasing c
  std::sort(ok.begin(), ok.end(), [](const CurvePoint* a, const CurvePoint* b) { return a->c < b->c; });
  for (std::size_t i = 1; i < ok.size(); ++i) {
    const CurvePoint &lo = *ok[i - 1], &hi = *ok[i];
    if (dim == 2 && !(hi.k < lo.k)) r.speed_decreasing_in_k = false;
    if (dim == 3) {
      if (!(hi.T_c_estimate < lo.T_c_estimate)) r.tc_decreasing_in_c = false;
      const double left = lo.T_c_estimate * lo.T_c_estimate / (lo.Q * lo.Q) - lo.c * lo.c;
      const double right = hi.T_c_estimate * hi.T_c_estimate / (hi.Q * hi.Q) - hi.c * hi.c;
      if (!(left >= right)) r.secant_inequality = false;
    }
  }
}

/// Energy-momentum sweep: kinetic levels in 2D, speeds in 3D. Points are solved
/// from large to small eps, each seeded by the previous accepted solution.
inline SweepResult jones_roberts_sweep(const Nonlinearity& nl, int dim, std::vector<double> values, const Grid& grid, const SweepOptions& opt = {}) {
  if (dim != 2 && dim != 3) fail(ErrorCode::UnsupportedDimension, "sweeps run in 2D or 3D");
  if (values.size() < 2) fail(ErrorCode::InsufficientPoints, "a sweep needs at least two values");
  // large eps first: large k in 2D, small c in 3D
  if (dim == 2) std::sort(values.rbegin(), values.rend());
  else std::sort(values.begin(), values.end());
  SweepResult r;
  std::vector<CurvePoint> pts(values.size());
  std::vector<std::optional<TwSolution>> sols(values.size());
  auto solve_point = [&](std::size_t i, const std::optional<TwSolution>& seed) {
    const double v = values[i];
    auto run = [&](const std::optional<TwSolution>& from) {
      return dim == 2 ? solve_2d_fixed_kinetic(nl, v, grid, opt.fixed_kinetic, true, from) : solve_3d_pohozaev(nl, v, grid, opt.pohozaev, from);
    };
    try {
      TwSolution s = [&] {
        if (!seed) return run(std::nullopt);
        // a neighbour on a different box can fail where a fresh start works
        try {
          return run(seed);
        } catch (const Error&) {
          return run(std::nullopt);
        }
      }();
      pts[i] = curve_point(s);
      sols[i] = std::move(s);
    } catch (const Error& e) {
      pts[i].accepted = false;
      pts[i].flags = e.what();
      if (dim == 2) pts[i].k = v;
      else {
        pts[i].c = v;
        pts[i].eps = std::sqrt(std::max(0.0, nl.c_s() * nl.c_s() - v * v));
      }
    }
  };
  if (opt.warm_start || opt.threads <= 1) {
    std::optional<TwSolution> seed;
    for (std::size_t i = 0; i < values.size(); ++i) {
      solve_point(i, opt.warm_start ? seed : std::nullopt);
      if (opt.warm_start && sols[i]) seed = sols[i];
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(opt.threads, values.size()); ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < values.size();) solve_point(i, std::nullopt);
      });
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.points.push_back(pts[i]);
    if (sols[i]) r.solutions.push_back(std::move(*sols[i]));
  }
  std::sort(r.points.begin(), r.points.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.eps > b.eps; });
  sweep_flags(r, dim);
  return r;
}

}  // namespace twaves
