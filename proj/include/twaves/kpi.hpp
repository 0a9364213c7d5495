#pragma once

#include <cmath>
#include <optional>

#include "twaves/spectral.hpp"

namespace twaves {

/// Candidate solitary wave of the KP-I profile equation in slow variables.
struct KpiWave {
  RField w;
  double c_s = 0.0;
  double gamma = 0.0;
  double action = 0.0;
  double energy = 0.0;
  double ynorm_sq = 0.0;
  // solver diagnostics
  int iterations = 0;
  double multiplier = 1.0;
  double update = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// The four integrals the KP-I functionals are built from.
struct KpiIntegrals {
  double deriv = 0.0;       // int (d1 w)^2
  double transverse = 0.0;  // int |grad_perp d1^-1 w|^2
  double cubic = 0.0;       // int w^3
  double mass = 0.0;        // int w^2
};

inline KpiIntegrals kpi_integrals(const RField& w) {
  KpiIntegrals t;
  const Grid& g = w.grid;
  if (g.ndim > 1) {
    const auto m = line_means(w);
    const double scale = std::max(1.0, max_abs(w));
    for (double x : m)
      if (std::abs(x) > 1e-8 * scale) fail(ErrorCode::NotZeroMean, "wave has nonzero axis-0 line mean");
  }
  const CField s = fft_forward(w);
  const double norm = g.cell_volume() / static_cast<double>(g.size());
  for_each_mode(g, [&](std::size_t i, const Vec3& xi) {
    const double a = std::norm(s.v[i]);
    t.deriv += xi[0] * xi[0] * a;
    if (g.ndim > 1 && xi[0] != 0.0) t.transverse += (xi[1] * xi[1] + xi[2] * xi[2]) / (xi[0] * xi[0]) * a;
  });
  t.deriv *= norm;
  t.transverse *= norm;
  for (double x : w.v) {
    t.cubic += x * x * x;
    t.mass += x * x;
  }
  t.cubic *= g.cell_volume();
  t.mass *= g.cell_volume();
  return t;
}

inline double kpi_energy(const RField& w, double c_s, double gamma) {
  const auto t = kpi_integrals(w);
  return t.deriv / (c_s * c_s) + t.transverse + gamma / 3.0 * t.cubic;
}

inline void check_gamma(double gamma) {
  if (!(std::abs(gamma) > 1e-8)) fail(ErrorCode::DegenerateGamma, "degenerate nonlinearity coefficient");
}

/// Sup norm of the profile equation residual, with a dealiased product.
inline double sw_residual(const RField& w, double c_s, double gamma) {
  const Grid& g = w.grid;
  if (g.ndim > 1) {
    const auto m = line_means(w);
    const double scale = std::max(1.0, max_abs(w));
    for (double x : m)
      if (std::abs(x) > 1e-8 * scale) fail(ErrorCode::NotZeroMean, "wave has nonzero axis-0 line mean");
  }
  RField sq(g);
  for (std::size_t i = 0; i < w.size(); ++i) sq.v[i] = w.v[i] * w.v[i];
  CField q = fft_forward(sq);
  dealias_spectrum(q);
  CField s = fft_forward(w);
  const double ics2 = 1.0 / (c_s * c_s);
  for_each_mode(g, [&](std::size_t i, const Vec3& xi) {
    const double k1 = xi[0];
    const double kp = xi[1] * xi[1] + xi[2] * xi[2];
    cplx lin = I * ics2 * (k1 + k1 * k1 * k1);
    if (k1 != 0.0) lin += I * kp / k1;
    s.v[i] = lin * s.v[i] + 0.5 * gamma * I * k1 * q.v[i];
  });
  return max_abs(real_part(fft_inverse(std::move(s))));
}

inline double sw_residual(const KpiWave& w) { return sw_residual(w.w, w.c_s, w.gamma); }

/// Fills the functional values of a wave.
inline KpiWave make_kpi_wave(RField w, double c_s, double gamma) {
  KpiWave out;
  const auto t = kpi_integrals(w);
  out.w = std::move(w);
  out.c_s = c_s;
  out.gamma = gamma;
  const double ics2 = 1.0 / (c_s * c_s);
  out.energy = ics2 * t.deriv + t.transverse + gamma / 3.0 * t.cubic;
  out.action = out.energy + ics2 * t.mass;
  out.ynorm_sq = ics2 * t.mass + ics2 * t.deriv + t.transverse;
  return out;
}

/// Closed-form KdV soliton -3 / (c_s^2 gamma cosh^2(z/2)) centred in the box.
inline KpiWave kdv_soliton(const Grid& grid, double c_s, double gamma) {
  if (grid.ndim != 1) fail(ErrorCode::UnsupportedDimension, "the KdV soliton lives on a 1D grid");
  check_gamma(gamma);
  const double amp = -3.0 / (c_s * c_s * gamma);
  auto w = sample(grid, [&](const Vec3& z) {
    const double c = std::cosh(0.5 * z[0]);
    return amp / (c * c);
  });
  auto out = make_kpi_wave(std::move(w), c_s, gamma);
  out.converged = true;
  return out;
}

struct PetviashviliOptions {
  double tol = 1e-10;
  double residual_tol = 1e-8;
  int max_iter = 2000;
  double exponent = 2.0;
};

/// Default initial guess: -sign(gamma) exp(-z1^2/4 - |zp|^2/16).
inline RField petviashvili_guess(const Grid& grid, double gamma) {
  const double sgn = gamma > 0 ? -1.0 : 1.0;
  auto w = sample(grid, [&](const Vec3& z) {
    return sgn * std::exp(-z[0] * z[0] / 4.0 - (z[1] * z[1] + z[2] * z[2]) / 16.0);
  });
  return grid.ndim > 1 ? remove_line_means(std::move(w)) : w;
}

inline KpiWave petviashvili_ground_state(const Grid& grid, double c_s, double gamma, const PetviashviliOptions& opt = {},
                                         std::optional<RField> initial = std::nullopt) {
  check_gamma(gamma);
  RField w = initial ? *initial : petviashvili_guess(grid, gamma);
  if (!w.grid.same(grid)) fail(ErrorCode::SizeMismatch, "initial guess grid differs");
  if (max_abs(w) == 0.0) fail(ErrorCode::ZeroInitialGuess, "initial guess is identically zero");

  const bool multi = grid.ndim > 1;
  const std::size_t n = grid.size();
  std::vector<double> lsym(n);
  for_each_mode(grid, [&](std::size_t i, const Vec3& xi) {
    const double k1 = xi[0];
    if (multi && k1 == 0.0) {
      lsym[i] = 0.0;
      return;
    }
    lsym[i] = (1.0 + k1 * k1) / (c_s * c_s);
    if (multi) lsym[i] += (xi[1] * xi[1] + xi[2] * xi[2]) / (k1 * k1);
  });
  const auto keep = dealias_mask(grid);

  CField what = fft_forward(w);
  for (std::size_t i = 0; i < n; ++i)
    if (lsym[i] == 0.0) what.v[i] = 0.0;

  KpiWave result;
  double m = 1.0, update = 1.0;
  int it = 0;
  bool done = false;
  RField sq(grid);
  while (it < opt.max_iter) {
    ++it;
    const RField cur = real_part(fft_inverse(what));
    for (std::size_t i = 0; i < n; ++i) sq.v[i] = cur.v[i] * cur.v[i];
    CField nhat = fft_forward(sq);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nhat.v[i] = keep[i] ? -0.5 * gamma * nhat.v[i] : cplx{};
      num += lsym[i] * std::norm(what.v[i]);
      den += (nhat.v[i] * std::conj(what.v[i])).real();
    }
    if (den == 0.0) fail(ErrorCode::DivergedIteration, "nonlinear term vanished");
    m = num / den;
    const double factor = std::pow(m, opt.exponent);
    double diff = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx nw = lsym[i] == 0.0 ? cplx{} : factor * nhat.v[i] / lsym[i];
      diff += std::norm(nw - what.v[i]);
      tot += std::norm(nw);
      what.v[i] = nw;
    }
    update = std::sqrt(diff / std::max(tot, 1e-300));
    if (!std::isfinite(update)) fail(ErrorCode::DivergedIteration, "non-finite iterate");
    if (update < opt.tol) {
      const RField cand = real_part(fft_inverse(what));
      if (sw_residual(cand, c_s, gamma) < opt.residual_tol) {
        done = true;
        break;
      }
    }
  }
  if (!done && std::abs(m - 1.0) > 0.1)
    fail(ErrorCode::DivergedIteration, "multiplier drifted to " + std::to_string(m));
  RField final_w = real_part(fft_inverse(what));
  if (multi) final_w = remove_line_means(std::move(final_w));
  result = make_kpi_wave(std::move(final_w), c_s, gamma);
  result.iterations = it;
  result.multiplier = m;
  result.update = update;
  result.residual = sw_residual(result);
  result.converged = done;
  return result;
}

/// Location of max |w| refined by a three-point parabola on each axis.
inline Vec3 peak_location(const RField& w) {
  const Grid& g = w.grid;
  std::size_t best = 0;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (std::abs(w.v[i]) > std::abs(w.v[best])) best = i;
  const std::size_t idx[3] = {best / (g.n[1] * g.n[2]), (best / g.n[2]) % g.n[1], best % g.n[2]};
  Vec3 x{0, 0, 0};
  for (int a = 0; a < g.ndim; ++a) {
    std::size_t lo[3] = {idx[0], idx[1], idx[2]}, hi[3] = {idx[0], idx[1], idx[2]};
    lo[a] = (idx[a] + g.n[a] - 1) % g.n[a];
    hi[a] = (idx[a] + 1) % g.n[a];
    const double fm = std::abs(w.v[g.index(lo[0], lo[1], lo[2])]);
    const double f0 = std::abs(w.v[best]);
    const double fp = std::abs(w.v[g.index(hi[0], hi[1], hi[2])]);
    const double den = fm - 2.0 * f0 + fp;
    const double off = den == 0.0 ? 0.0 : 0.5 * (fm - fp) / den;
    x[a] = g.coord(a, idx[a]) + off * g.spacing(a);
  }
  return x;
}

/// Translates w so its peak sits at the box midpoint.
inline RField center_wave(const RField& w) {
  const Vec3 p = peak_location(w);
  return translate(w, {-p[0], -p[1], -p[2]});
}

struct PohozaevRatios {
  double r_deriv = 0.0;
  double r_cubic = 0.0;
  double r_mass = 0.0;
};

/// Ratios of the dilation identities; all equal 1 for exact solutions. In 1D
/// r_cubic is the balance of the single multiplier identity, while r_deriv
/// and r_mass use the x1-dilation identity in its 1D form.
inline PohozaevRatios pohozaev_ratios(const KpiWave& w, int dim) {
  if (dim >= 4) fail(ErrorCode::UnsupportedDimension, "no nontrivial solitary waves for dimension >= 4");
  if (dim != w.w.grid.ndim) fail(ErrorCode::InvalidArgument, "dimension does not match the wave grid");
  const auto t = kpi_integrals(w.w);
  const double ics2 = 1.0 / (w.c_s * w.c_s);
  const double g = w.gamma;
  PohozaevRatios r;
  if (dim == 1) {
    const double cub = g * t.cubic;
    if (std::abs(cub) < 1e-300) fail(ErrorCode::DivisionByZero, "vanishing cubic term");
    r.r_cubic = -0.5 * cub / (ics2 * (t.deriv + t.mass));
    r.r_deriv = ics2 * t.deriv / (-cub / 12.0);
    r.r_mass = ics2 * t.mass / (-5.0 * cub / 12.0);
    return r;
  }
  if (t.transverse < 1e-14) fail(ErrorCode::DivisionByZero, "transverse energy vanishes");
  const double nm1 = dim - 1.0;
  r.r_deriv = ics2 * t.deriv / (dim / nm1 * t.transverse);
  r.r_cubic = (g / 6.0) * t.cubic / (-(2.0 / nm1) * t.transverse);
  r.r_mass = ics2 * t.mass / ((7.0 - 2.0 * dim) / nm1 * t.transverse);
  return r;
}

struct ActionEstimate {
  double action = 0.0;
  double mu = 0.0;   // (1/c_s^2) int w^2
  double gap = 0.0;  // 2D: |mu - 1.5 S|, 3D: |S - transverse|
};

inline ActionEstimate s_min_estimate(const KpiWave& w, int dim, double ratio_tol = 1e-3) {
  const auto r = pohozaev_ratios(w, dim);
  for (double x : {r.r_deriv, r.r_cubic, r.r_mass})
    if (!(std::abs(x - 1.0) <= ratio_tol)) fail(ErrorCode::NotConverged, "identity ratio off by " + std::to_string(x - 1.0));
  const auto t = kpi_integrals(w.w);
  ActionEstimate e;
  e.action = w.action;
  e.mu = t.mass / (w.c_s * w.c_s);
  if (dim == 2) e.gap = std::abs(e.mu - 1.5 * e.action);
  if (dim == 3) e.gap = std::abs(e.action - t.transverse);
  return e;
}

}  // namespace twaves
