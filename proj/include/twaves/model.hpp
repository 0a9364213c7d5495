#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "twaves/error.hpp"

namespace twaves {

// F(s) = 1 - s
struct GrossPitaevskii {};

// F(s) = -a1 + a3 s - a5 s^2
struct CubicQuintic {
  double a1 = 1.0, a3 = 3.0, a5 = 2.0;
};

// F(s) = b exp(-s/alpha) - a, with a < b
struct Saturating {
  double a = 0.5, b = 1.0, alpha = 1.0;
};

// F(s) = alpha s^nu - beta s^(2 nu)
struct PowerSum {
  double alpha = 1.0, beta = 1.0, nu = 1.0;
};

/// User supplied nonlinearity. Derivative maps are optional; when empty they
/// are replaced by central differences.
struct Custom {
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> f_second;
};

using ModelKind = std::variant<GrossPitaevskii, CubicQuintic, Saturating, PowerSum, Custom>;

namespace detail {

inline double eval_f(const ModelKind& kind, double s) {
  return std::visit(
      [s](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GrossPitaevskii>) {
          return 1.0 - s;
        } else if constexpr (std::is_same_v<M, CubicQuintic>) {
          return -m.a1 + s * (m.a3 - m.a5 * s);
        } else if constexpr (std::is_same_v<M, Saturating>) {
          return m.b * std::exp(-s / m.alpha) - m.a;
        } else if constexpr (std::is_same_v<M, PowerSum>) {
          const double p = std::pow(s, m.nu);
          return m.alpha * p - m.beta * p * p;
        } else {
          return m.f(s);
        }
      },
      kind);
}

inline double fd_step(double s) { return 1e-5 * std::max(std::abs(s), 1e-3); }

inline double eval_df(const ModelKind& kind, double s) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GrossPitaevskii>) {
          return -1.0;
        } else if constexpr (std::is_same_v<M, CubicQuintic>) {
          return m.a3 - 2.0 * m.a5 * s;
        } else if constexpr (std::is_same_v<M, Saturating>) {
          return -m.b / m.alpha * std::exp(-s / m.alpha);
        } else if constexpr (std::is_same_v<M, PowerSum>) {
          if (s <= 0.0) return m.nu == 1.0 ? m.alpha : 0.0;
          const double p = std::pow(s, m.nu);
          return m.nu * (m.alpha * p - 2.0 * m.beta * p * p) / s;
        } else {
          if (m.f_prime) return m.f_prime(s);
          const double h = fd_step(s);
          return (m.f(s + h) - m.f(s - h)) / (2.0 * h);
        }
      },
      kind);
}

inline double eval_d2f(const ModelKind& kind, double s, double scale) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GrossPitaevskii>) {
          return 0.0;
        } else if constexpr (std::is_same_v<M, CubicQuintic>) {
          return -2.0 * m.a5;
        } else if constexpr (std::is_same_v<M, Saturating>) {
          return m.b / (m.alpha * m.alpha) * std::exp(-s / m.alpha);
        } else if constexpr (std::is_same_v<M, PowerSum>) {
          const double p = std::pow(s, m.nu);
          const double nu = m.nu;
          return (m.alpha * nu * (nu - 1.0) * p - m.beta * 2.0 * nu * (2.0 * nu - 1.0) * p * p) / (s * s);
        } else {
          if (m.f_second) return m.f_second(s);
          const double h = 1e-5 * scale;
          return (m.f(s + h) - 2.0 * m.f(s) + m.f(s - h)) / (h * h);
        }
      },
      kind);
}

}  // namespace detail

/// Largest root of F on (0, s_max] with negative slope.
inline double find_background(const ModelKind& kind, double s_max = 100.0) {
  if (const auto* c = std::get_if<Custom>(&kind); c && !c->f) fail(ErrorCode::InvalidArgument, "custom model without f");
  constexpr int kScan = 4000;
  const double h = s_max / kScan;
  std::vector<std::pair<double, double>> brackets;
  double s_prev = h * 1e-3;
  double f_prev = detail::eval_f(kind, s_prev);
  for (int i = 1; i <= kScan; ++i) {
    const double s = i * h;
    const double f = detail::eval_f(kind, s);
    if (f == 0.0) {
      brackets.emplace_back(s, s);
    } else if (f_prev != 0.0 && (f > 0.0) != (f_prev > 0.0)) {
      brackets.emplace_back(s_prev, s);
    }
    s_prev = s;
    f_prev = f;
  }
  if (brackets.empty()) fail(ErrorCode::NoBackgroundRoot, "F has no sign change on (0, " + std::to_string(s_max) + "]");

  auto refine = [&](std::pair<double, double> br) {
    if (br.first == br.second) return br.first;
    boost::uintmax_t iters = 200;
    auto f = [&](double s) { return detail::eval_f(kind, s); };
    auto tol = [](double a, double b) { return std::abs(a - b) <= 4e-16 * std::max(std::abs(a), std::abs(b)); };
    auto r = boost::math::tools::toms748_solve(f, br.first, br.second, tol, iters);
    const double s = 0.5 * (r.first + r.second);
    return std::abs(f(r.first)) < std::abs(f(s)) ? r.first : (std::abs(f(r.second)) < std::abs(f(s)) ? r.second : s);
  };

  for (auto it = brackets.rbegin(); it != brackets.rend(); ++it) {
    const double s = refine(*it);
    const double slope = detail::eval_df(kind, s);
    if (slope < 0.0) {
      if (slope >= -1e-10) fail(ErrorCode::DegenerateRoot, "F'(r0^2) too close to zero");
      return s;
    }
  }
  fail(ErrorCode::DegenerateRoot, "no root of F with negative slope");
}

struct TaylorData {
  double v4_bound = 0.0;
  double f3_bound = 0.0;
};

class Nonlinearity {
 public:
  explicit Nonlinearity(ModelKind kind = GrossPitaevskii{}, double s_max = 100.0)
      : kind_(std::move(kind)), r0_sq_(find_background(kind_, s_max)) {}

  /// Skips root finding; no validation of the root.
  Nonlinearity(ModelKind kind, double r0_sq, std::in_place_t) : kind_(std::move(kind)), r0_sq_(r0_sq) {}

  const ModelKind& kind() const { return kind_; }
  double r0_sq() const { return r0_sq_; }
  double r0() const { return std::sqrt(r0_sq_); }

  double F(double s) const { return detail::eval_f(kind_, s); }
  double dF(double s) const { return detail::eval_df(kind_, s); }
  double d2F(double s) const { return detail::eval_d2f(kind_, s, r0_sq_); }

  double c_s() const;
  double gamma() const;
  double V(double s) const;
  /// F and V at r0^2 + d, accurate for small d.
  double F_shift(double d) const;
  double V_shift(double d) const;

  std::string id() const {
    switch (kind_.index()) {
      case 0: return "gp";
      case 1: return "cubic-quintic";
      case 2: return "saturating";
      case 3: return "power-sum";
      default: return "custom";
    }
  }

 private:
  ModelKind kind_;
  double r0_sq_;
};

inline double sound_speed(const Nonlinearity& nl) {
  const double slope = nl.dF(nl.r0_sq());
  if (!(slope < 0.0)) fail(ErrorCode::DegenerateSoundSpeed, "F'(r0^2) >= 0");
  return std::sqrt(-2.0 * nl.r0_sq() * slope);
}

inline double gamma_coeff(const Nonlinearity& nl) {
  const double cs = sound_speed(nl);
  const double r2 = nl.r0_sq();
  return 6.0 - 4.0 * r2 * r2 / (cs * cs) * nl.d2F(r2);
}

/// F(r0^2 + d) evaluated without cancellation near the background.
inline double nonlinearity_shifted(const Nonlinearity& nl, double d) {
  const double r2 = nl.r0_sq();
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GrossPitaevskii>) {
          return -d;
        } else if constexpr (std::is_same_v<M, CubicQuintic>) {
          return (m.a3 - 2.0 * m.a5 * r2) * d - m.a5 * d * d;
        } else if constexpr (std::is_same_v<M, Saturating>) {
          return m.a * std::expm1(-d / m.alpha);
        } else if constexpr (std::is_same_v<M, PowerSum>) {
          const double t = d / r2;
          return -(m.alpha * m.alpha / m.beta) * std::pow(1.0 + t, m.nu) * std::expm1(m.nu * std::log1p(t));
        } else {
          return m.f(r2 + d) - m.f(r2);
        }
      },
      nl.kind());
}

inline double potential_shifted(const Nonlinearity& nl, double d);

/// V(s) = integral of F from s to r0^2.
inline double potential(const Nonlinearity& nl, double s) {
  const double r2 = nl.r0_sq();
  const double d = s - r2;
  return potential_shifted(nl, d);
}

inline double potential_shifted(const Nonlinearity& nl, double d) {
  const double r2 = nl.r0_sq();
  const double s = r2 + d;
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GrossPitaevskii>) {
          return 0.5 * d * d;
        } else if constexpr (std::is_same_v<M, CubicQuintic>) {
          // exact Taylor expansion about r0^2 (F(r0^2) = 0)
          const double f1 = m.a3 - 2.0 * m.a5 * r2;
          const double f2 = -2.0 * m.a5;
          return -(f1 * d * d / 2.0 + f2 * d * d * d / 6.0);
        } else if constexpr (std::is_same_v<M, Saturating>) {
          const double x = d / m.alpha;
          double g;
          if (std::abs(x) < 1e-3) {
            g = x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
          } else {
            g = std::expm1(-x) + x;
          }
          return m.a * m.alpha * g;
        } else if constexpr (std::is_same_v<M, PowerSum>) {
          if (std::abs(d) < 1e-2 * r2)
            return -boost::math::quadrature::gauss<double, 10>::integrate([&](double t) { return nonlinearity_shifted(nl, t); }, 0.0, d);
          auto prim = [&](double t) {
            return m.alpha * std::pow(t, m.nu + 1.0) / (m.nu + 1.0) -
                   m.beta * std::pow(t, 2.0 * m.nu + 1.0) / (2.0 * m.nu + 1.0);
          };
          return prim(r2) - prim(s);
        } else {
          if (d == 0.0) return 0.0;
          double err = 0.0;
          const double lo = std::min(s, r2), hi = std::max(s, r2);
          const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
              m.f, lo, hi, 15, 1e-14, &err);
          return s < r2 ? v : -v;
        }
      },
      nl.kind());
}

inline double Nonlinearity::c_s() const { return sound_speed(*this); }
inline double Nonlinearity::gamma() const { return gamma_coeff(*this); }
inline double Nonlinearity::V(double s) const { return potential(*this, s); }
inline double Nonlinearity::F_shift(double d) const { return nonlinearity_shifted(*this, d); }
inline double Nonlinearity::V_shift(double d) const { return potential_shifted(*this, d); }

/// Sampled bounds of the quartic remainder of V and the cubic remainder of F
/// near the background, over |alpha| <= 1e-2.
inline TaylorData taylor_data(const Nonlinearity& nl) {
  const double r2 = nl.r0_sq();
  const double cs = nl.c_s();
  const double g = nl.gamma();
  const double cs2 = cs * cs;
  TaylorData t;
  for (int i = -20; i <= 20; ++i) {
    if (std::abs(i) < 2) continue;
    const double a = 5e-4 * i;
    const double v = nl.V(r2 * (1.0 + a) * (1.0 + a)) / (r2 * cs2);
    const double rem = v - a * a - (g / 3.0 - 1.0) * a * a * a;
    t.v4_bound = std::max(t.v4_bound, std::abs(rem) / (a * a * a * a));

    const double s = a * r2;
    const double f3 = 2.0 * (s + r2) * nl.F(s + r2) + cs2 * s +
                      cs2 / r2 * (1.0 - r2 * r2 * nl.d2F(r2) / cs2) * s * s;
    t.f3_bound = std::max(t.f3_bound, std::abs(f3 / r2) / std::abs(s * s * s));
  }
  return t;
}

// ---- catalog ---------------------------------------------------------------

inline const std::vector<std::string>& model_catalog() {
  static const std::vector<std::string> ids{"gp", "cubic-quintic", "saturating", "power-sum"};
  return ids;
}

/// Builds a catalog model from its id and key-value parameters. Unknown keys
/// are rejected. Defaults for the optics models are illustrative.
inline Nonlinearity make_model(std::string_view id, const std::map<std::string, double>& params = {}) {
  auto take = [&](std::initializer_list<std::pair<const char*, double*>> slots) {
    for (const auto& [k, v] : params) {
      bool known = false;
      for (auto& [name, dst] : slots) {
        if (k == name) {
          *dst = v;
          known = true;
        }
      }
      if (!known) fail(ErrorCode::ValidationError, "unknown parameter '" + k + "' for model " + std::string(id));
    }
  };
  if (id == "gp") {
    take({});
    return Nonlinearity(GrossPitaevskii{});
  }
  if (id == "cubic-quintic") {
    CubicQuintic m;
    take({{"a1", &m.a1}, {"a3", &m.a3}, {"a5", &m.a5}});
    return Nonlinearity(m);
  }
  if (id == "saturating") {
    Saturating m;
    take({{"a", &m.a}, {"b", &m.b}, {"alpha", &m.alpha}});
    if (!(m.a < m.b)) fail(ErrorCode::ValidationError, "saturating model requires a < b");
    return Nonlinearity(m);
  }
  if (id == "power-sum") {
    PowerSum m;
    take({{"alpha", &m.alpha}, {"beta", &m.beta}, {"nu", &m.nu}});
    return Nonlinearity(m);
  }
  std::string names;
  for (const auto& n : model_catalog()) names += (names.empty() ? "" : ", ") + n;
  fail(ErrorCode::ValidationError, "unknown model id '" + std::string(id) + "' (catalog: " + names + ")");
}

}  // namespace twaves
