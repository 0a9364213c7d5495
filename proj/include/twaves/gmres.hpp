#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace twaves {

using DVec = std::vector<double>;

struct GmresOptions {
  double rtol = 1e-8;
  int restart = 40;
  int max_iter = 400;
};

struct GmresResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

inline double dot(const DVec& a, const DVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const DVec& a) { return std::sqrt(dot(a, a)); }

/// Right-preconditioned restarted GMRES for A x = b. `apply_a` and
/// `apply_prec` write their result into the second argument. x holds the
/// initial guess on entry.
inline GmresResult gmres(const std::function<void(const DVec&, DVec&)>& apply_a,
                         const std::function<void(const DVec&, DVec&)>& apply_prec, const DVec& b, DVec& x,
                         const GmresOptions& opt = {}) {
  const std::size_t n = b.size();
  GmresResult res;
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  const int m = opt.restart;
  DVec r(n), w(n), z(n);
  std::vector<DVec> v(m + 1, DVec(n));
  std::vector<DVec> h(m + 1, DVec(m, 0.0));
  DVec cs(m), sn(m), g(m + 1);

  while (res.iterations < opt.max_iter) {
    apply_a(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double beta = norm(r);
    res.rel_residual = beta / bnorm;
    if (res.rel_residual <= opt.rtol) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < m && res.iterations < opt.max_iter; ++k) {
      ++res.iterations;
      apply_prec(v[k], z);
      apply_a(z, w);
      for (int j = 0; j <= k; ++j) {
        h[j][k] = dot(w, v[j]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= h[j][k] * v[j][i];
      }
      // one reorthogonalization pass
      for (int j = 0; j <= k; ++j) {
        const double c = dot(w, v[j]);
        h[j][k] += c;
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * v[j][i];
      }
      h[k + 1][k] = norm(w);
      if (h[k + 1][k] > 0.0)
        for (std::size_t i = 0; i < n; ++i) v[k + 1][i] = w[i] / h[k + 1][k];
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
        h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
        h[j][k] = t;
      }
      const double den = std::hypot(h[k][k], h[k + 1][k]);
      cs[k] = den == 0.0 ? 1.0 : h[k][k] / den;
      sn[k] = den == 0.0 ? 0.0 : h[k + 1][k] / den;
      h[k][k] = den;
      h[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      res.rel_residual = std::abs(g[k + 1]) / bnorm;
      if (res.rel_residual <= opt.rtol) {
        ++k;
        break;
      }
    }
    // back substitution and update
    DVec y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[i][j] * y[j];
      y[i] = h[i][i] == 0.0 ? 0.0 : s / h[i][i];
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) w[i] += y[j] * v[j][i];
    apply_prec(w, z);
    for (std::size_t i = 0; i < n; ++i) x[i] += z[i];
    if (res.rel_residual <= opt.rtol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace twaves
