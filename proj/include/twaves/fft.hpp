#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "twaves/field.hpp"

namespace twaves {

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class PlanCache {
 public:
  ~PlanCache() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const Grid& g, int sign) {
    const auto key = std::make_tuple(g.ndim, g.n[0], g.n[1], g.n[2], sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    int dims[3];
    for (int a = 0; a < g.ndim; ++a) dims[a] = static_cast<int>(g.n[a]);
    std::vector<cplx> scratch(g.size());
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p;
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      p = fftw_plan_dft(g.ndim, dims, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::map<std::tuple<int, std::size_t, std::size_t, std::size_t, int>, fftw_plan> plans_;
};

inline PlanCache& plan_cache() {
  thread_local PlanCache cache;
  return cache;
}

inline void execute(const Grid& g, std::vector<cplx>& data, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_cache().get(g, sign), buf, buf);
}

}  // namespace detail

/// Unnormalized forward transform.
template <class T>
CField fft_forward(const Field<T>& f) {
  if (f.v.size() != f.grid.size()) fail(ErrorCode::SizeMismatch, "field length does not match grid");
  if (f.space != Space::Physical) fail(ErrorCode::InvalidArgument, "fft_forward expects a physical-space field");
  CField out(f.grid, cplx{}, Space::Fourier);
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i];
  detail::execute(f.grid, out.v, FFTW_FORWARD);
  return out;
}

/// Inverse transform, normalized so that fft_inverse(fft_forward(f)) == f.
inline CField fft_inverse(CField f) {
  if (f.v.size() != f.grid.size()) fail(ErrorCode::SizeMismatch, "field length does not match grid");
  if (f.space != Space::Fourier) fail(ErrorCode::InvalidArgument, "fft_inverse expects a Fourier-space field");
  detail::execute(f.grid, f.v, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(f.grid.size());
  for (auto& x : f.v) x *= s;
  f.space = Space::Physical;
  return f;
}

/// Visits every Fourier mode with its flat index and wavevector.
template <class Fn>
void for_each_mode(const Grid& g, Fn&& fn) {
  const auto k0 = g.wavenumbers(0), k1 = g.wavenumbers(1), k2 = g.wavenumbers(2);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j)
      for (std::size_t k = 0; k < g.n[2]; ++k, ++idx) fn(idx, Vec3{k0[i], k1[j], k2[k]});
}

/// Truncates an output that should be real. The imaginary residue is
/// compared against `scale` (default: the largest real value).
inline RField checked_real(const CField& f, double rtol = 1e-12, double scale = 0.0) {
  double re = 0.0, im = 0.0;
  for (const auto& x : f.v) {
    re = std::max(re, std::abs(x.real()));
    im = std::max(im, std::abs(x.imag()));
  }
  const double ref = std::max(scale, re);
  if (im > rtol * ref && im > 1e-300)
    fail(ErrorCode::NonRealResult, "imaginary residue " + std::to_string(im) + " relative to " + std::to_string(ref));
  return real_part(f);
}

/// Multiplies the spectrum by symbol(xi). Real input gives real output; the
/// residue check is relative to the l1 mass of the filtered spectrum.
template <class T, class Sym>
Field<T> apply_multiplier(const Field<T>& f, Sym&& symbol) {
  CField s = fft_forward(f);
  double mass = 0.0;
  for_each_mode(f.grid, [&](std::size_t i, const Vec3& xi) {
    s.v[i] *= symbol(xi);
    mass += std::abs(s.v[i]);
  });
  CField out = fft_inverse(std::move(s));
  if constexpr (std::is_same_v<T, double>) {
    return checked_real(out, 1e-12, mass / static_cast<double>(f.grid.size()));
  } else {
    return out;
  }
}

/// Same, but the field is already in Fourier space and stays there.
template <class Sym>
void multiply_spectrum(CField& s, Sym&& symbol) {
  for_each_mode(s.grid, [&](std::size_t i, const Vec3& xi) { s.v[i] *= symbol(xi); });
}

}  // namespace twaves
