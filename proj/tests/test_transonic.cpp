#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "twaves/transonic.hpp"

using namespace twaves;

namespace {

const Nonlinearity kGp{};
const double kCs = std::sqrt(2.0);

template <class Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

double speed(double eps) { return std::sqrt(2.0 - eps * eps); }

TwSolution soliton(double eps) { return solve_1d(kGp, speed(eps), auto_box(eps, {4096})); }

double sech2(double z) {
  const double c = std::cosh(z);
  return 1.0 / (c * c);
}

// closed forms of the GP dark soliton
double soliton_energy(double eps) { return 2.0 / 3.0 * eps * eps * eps; }
double soliton_momentum(double eps) { return speed(eps) * eps - 2.0 * std::atan(eps / speed(eps)); }

const KpiWave& lump_128() {
  static const KpiWave w = [] {
    const KpiWave g = petviashvili_ground_state(Grid::make({128, 128}, {60.0, 120.0}), kCs, 6.0);
    return make_kpi_wave(center_wave(g.w), kCs, 6.0);
  }();
  return w;
}

double max_diff(const RField& a, const RField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace

TEST(Rescale, BackgroundGivesZeroProfiles) {
  const double eps = 0.3;
  const TwSolution s = make_solution(CField(auto_box(eps, {256}), cplx{1.0, 0.0}), speed(eps), kGp);
  const auto p = rescale_to_slow(s);
  EXPECT_EQ(max_abs(p.a_eps), 0.0);
  EXPECT_EQ(max_abs(p.phi_eps), 0.0);
  EXPECT_NEAR(p.a_eps.grid.len[0], 400.0, 1e-9);
}

TEST(Rescale, DarkSolitonProfiles) {
  for (double eps : {0.5, 0.1}) {
    const auto p = rescale_to_slow(soliton(eps));
    const Grid& g = p.a_eps.grid;
    double err_frak = 0.0, err_id = 0.0, err_kdv = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = g.coord(0, i), a = p.a_eps.v[i];
      err_frak = std::max(err_frak, std::abs(p.frak_a_eps.v[i] + 0.5 * sech2(0.5 * z)));
      err_id = std::max(err_id, std::abs(p.frak_a_eps.v[i] - 2.0 * a - eps * eps * a * a));
      err_kdv = std::max(err_kdv, std::abs(a + 0.25 * sech2(0.5 * z)));
      EXPECT_GT(1.0 + eps * eps * a, 0.0);
    }
    EXPECT_LE(err_frak, 1e-8) << eps;
    EXPECT_LE(err_id, 1e-10) << eps;
    // largest at the centre, where frak = -1/2
    EXPECT_NEAR(err_kdv, (1.0 - std::sqrt(1.0 - 0.5 * eps * eps)) / (eps * eps) - 0.25, 1e-8) << eps;
  }
}

TEST(Rescale, ReconstructRoundTrip) {
  const TwSolution s = soliton(0.3);
  const auto p = rescale_to_slow(s);
  const CField u = reconstruct(p);
  ASSERT_TRUE(u.grid.same(s.u.grid));
  const cplx gauge = u.v[0] / s.u.v[0];
  double err = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(u.v[i] - gauge * s.u.v[i]));
  EXPECT_LE(err, 1e-10);
  EXPECT_NEAR(std::abs(gauge), 1.0, 1e-12);
  // and back again
  const auto q = rescale_to_slow(make_solution(u, s.c, kGp));
  EXPECT_LE(max_diff(q.a_eps, p.a_eps), 1e-10);
  EXPECT_LE(max_diff(q.phi_eps, p.phi_eps), 1e-10);
}

TEST(Rescale, Errors) {
  const double eps = 0.3;
  CField u(auto_box(eps, {256}), cplx{1.0, 0.0});
  u.v[128] = 0.1;
  expect_code(ErrorCode::VortexDetected, [&] { rescale_to_slow(make_solution(u, speed(eps), kGp)); });
  const TwSolution off = make_solution(CField(Grid::make({256}, {100.0}), cplx{1.0, 0.0}), speed(eps), kGp);
  expect_code(ErrorCode::BoxNotCommensurate, [&] { rescale_to_slow(off); });
  EXPECT_NO_THROW(rescale_to_slow(off, std::nullopt));
}

TEST(Compare, AnsatzAgainstItself) {
  const KpiWave& w = lump_128();
  const double eps = 0.2;
  const auto p = ansatz_profiles(w.w, eps, kGp);
  // A = (c_s / c) W exactly, so the reference built from A itself is matched up to roundoff
  const KpiWave ref = make_kpi_wave(cyclic_shift(p.a_eps, {5, -3, 0}), kCs, 6.0);
  const auto r = compare_to_ground_state(p, ref);
  EXPECT_LE(r.err_a, 1e-10);
  EXPECT_NEAR(r.shift[0], -5.0 * w.w.grid.spacing(0), 1e-9);
  EXPECT_NEAR(r.shift[1], 3.0 * w.w.grid.spacing(1), 1e-9);
  // against W the only gap is the speed factor
  const auto s = compare_to_ground_state(p, w);
  EXPECT_NEAR(s.err_a, kCs / p.c - 1.0, 1e-10);
  EXPECT_LE(s.err_w, 1e-6);
}

TEST(Compare, AlignmentIsIdempotent) {
  const KpiWave& w = lump_128();
  const auto p = ansatz_profiles(translate(w.w, {2.2, 3.1, 0.0}), 0.2, kGp);
  const auto first = compare_to_ground_state(p, w);
  TransonicProfiles q = p;
  const Vec3 back{-first.shift[0], -first.shift[1], 0.0};
  q.a_eps = translate(p.a_eps, back);
  q.w_proxy = translate(p.w_proxy, back);
  const auto second = compare_to_ground_state(q, w);
  EXPECT_LT(std::abs(second.shift[0]), 0.5 * w.w.grid.spacing(0));
  EXPECT_LT(std::abs(second.shift[1]), 0.5 * w.w.grid.spacing(1));
}

TEST(Compare, DilationIsNotAbsorbed) {
  const KpiWave& w = lump_128();
  const Grid& g = w.w.grid;
  const RField dilated = sample(g, [&](const Vec3& z) { return oracle::Lump{kCs, 6.0}(2.0 * z[0], z[1]); });
  const auto p = ansatz_profiles(dilated, 0.1, kGp);
  EXPECT_GT(compare_to_ground_state(p, w).err_a, 0.3);
}

TEST(Compare, PhaseConstraintIsSecondOrder) {
  const Grid slow = Grid::make({4096}, {400.0});
  const KpiWave kdv = kdv_soliton(slow, kCs, 6.0);
  const auto a = compare_to_ground_state(rescale_to_slow(soliton(0.4)), kdv);
  const auto b = compare_to_ground_state(rescale_to_slow(soliton(0.2)), kdv);
  const double ratio = a.err_phase_constraint / b.err_phase_constraint;
  EXPECT_GT(ratio, 4.0 / 1.5);
  EXPECT_LT(ratio, 4.0 * 1.5);
  EXPECT_LT(b.err_w, a.err_w);
  expect_code(ErrorCode::GridMismatch, [&] { compare_to_ground_state(rescale_to_slow(soliton(0.2)), kdv_soliton(Grid::make({2048}, {400.0}), kCs, 6.0)); });
}

TEST(MadelungResiduals, ExactSolutionAndAnsatz) {
  for (double eps : {0.4, 0.2}) {
    const auto r = madelung_residuals(rescale_to_slow(soliton(eps)), kGp);
    EXPECT_LE(r.first, 1e-8) << eps;
    EXPECT_LE(r.second, 1e-8) << eps;
  }
  const KpiWave kdv = kdv_soliton(Grid::make({4096}, {400.0}), kCs, 6.0);
  const auto big = madelung_residuals(ansatz_profiles(kdv.w, 0.2, kGp), kGp);
  const auto small = madelung_residuals(ansatz_profiles(kdv.w, 0.1, kGp), kGp);
  const double ratio = std::max(big.first, big.second) / std::max(small.first, small.second);
  EXPECT_GT(ratio, 4.0 / 1.5);
  EXPECT_LT(ratio, 4.0 * 1.5);
  TransonicProfiles zero{0.2, speed(0.2), 1.0, RField(kdv.w.grid), RField(kdv.w.grid), RField(kdv.w.grid), RField(kdv.w.grid)};
  const auto z = madelung_residuals(zero, kGp);
  EXPECT_EQ(z.first, 0.0);
  EXPECT_EQ(z.second, 0.0);
}

TEST(TestFunction, ActionLimit) {
  const KpiWave& w = lump_128();
  std::vector<double> gap;
  for (double eps : {0.2, 0.1, 0.05}) {
    const CField u = test_function(w.w, eps, kGp);
    const double c = speed(eps);
    // algebraic tails reach the box boundary
    const double ec = energy(u, kGp, 1.0) + c * momentum(u, kGp);
    gap.push_back(std::abs(ec / (kCs * kCs * eps * eps * eps) / w.action - 1.0));
  }
  EXPECT_LE(gap.back(), 0.1);
  EXPECT_LT(gap[1], gap[0]);
  EXPECT_LT(gap[2], gap[1]);
}

TEST(AsymptoticFit, OneDimensionalClosedForms) {
  std::vector<CurvePoint> pts;
  for (double eps : {0.04, 0.03, 0.02, 0.01}) {
    CurvePoint p;
    p.eps = eps;
    p.c = speed(eps);
    p.E = soliton_energy(eps);
    p.Q = soliton_momentum(eps);
    p.E_plus_cQ = p.E + p.c * p.Q;
    pts.push_back(p);
  }
  const auto fit = asymptotic_fit(pts, 1, 1.0 / 30.0, kGp);
  EXPECT_NEAR(fit.energy.exponent, 3.0, 1e-3);
  EXPECT_NEAR(fit.energy.prefactor, 2.0 / 3.0, 1e-3);
  EXPECT_NEAR(fit.energy.target_exponent, 3.0, 1e-15);
  EXPECT_NEAR(fit.energy.target_prefactor, 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(fit.energy_plus_cq.exponent, 5.0, 1e-3);
  EXPECT_NEAR(fit.energy_plus_cq.prefactor, 1.0 / 15.0, 1e-3);
  EXPECT_NEAR(fit.energy_plus_cq.target_prefactor, 1.0 / 15.0, 1e-15);
  EXPECT_NEAR(fit.momentum.exponent, 3.0, 1e-3);
  EXPECT_NEAR(fit.momentum.prefactor, fit.momentum.target_prefactor, 1e-3);
}

TEST(AsymptoticFit, SolverPointsAndErrors) {
  std::vector<CurvePoint> pts;
  for (double eps : {0.4, 0.3, 0.2, 0.1}) {
    const auto p = curve_point(soliton(eps));
    EXPECT_NEAR(p.E / soliton_energy(eps), 1.0, 1e-8);
    EXPECT_NEAR(p.Q / soliton_momentum(eps), 1.0, 1e-8);
    EXPECT_NEAR(p.eps * p.eps + p.c * p.c, 2.0, 1e-12);
    pts.push_back(p);
  }
  // transonic law: -c_s Q / E -> 1
  EXPECT_NEAR(-kCs * pts[2].Q / pts[2].E, 1.0, 0.05);
  expect_code(ErrorCode::InsufficientPoints, [&] { asymptotic_fit({pts[0]}, 1, 1.0 / 30.0, kGp); });
}

TEST(Sweep, FlagsOnSyntheticCurves) {
  SweepResult r;
  for (double c : {1.20, 1.27, 1.34}) {
    CurvePoint p;
    p.c = c;
    p.eps = std::sqrt(2.0 - c * c);
    p.Q = -100.0 / p.eps;
    p.T_c_estimate = 10.0 * p.eps;
    r.points.push_back(p);
  }
  sweep_flags(r, 3);
  EXPECT_TRUE(r.q_negative);
  EXPECT_TRUE(r.tc_decreasing_in_c);
  EXPECT_TRUE(r.secant_inequality);
  SweepResult bad = r;
  bad.points[1].T_c_estimate = 100.0;
  bad.points[2].Q = 1.0;
  sweep_flags(bad, 3);
  EXPECT_FALSE(bad.q_negative);
  EXPECT_FALSE(bad.tc_decreasing_in_c);
  expect_code(ErrorCode::UnsupportedDimension, [] { jones_roberts_sweep(kGp, 1, {1.0, 1.1}, Grid::make({64}, {10.0})); });
  expect_code(ErrorCode::InsufficientPoints, [] { jones_roberts_sweep(kGp, 2, {0.1}, Grid::make({64, 64}, {1.0, 1.0})); });
}

TEST(Sweep, TwoDimensionalSpeedOrdering) {
  SweepOptions opt;
  const auto r = jones_roberts_sweep(kGp, 2, {0.08, 0.06}, Grid::make({128, 128}, {1.0, 1.0}), opt);
  ASSERT_EQ(r.points.size(), 2u);
  for (const auto& p : r.points) {
    EXPECT_TRUE(p.accepted) << p.flags;
    EXPECT_LT(p.Q, 0.0);
    // eps comparable to k
    EXPECT_GE(p.eps / p.k, 0.05);
    EXPECT_LE(p.eps / p.k, 20.0);
  }
  EXPECT_TRUE(r.q_negative);
  EXPECT_TRUE(r.speed_decreasing_in_k);
  EXPECT_GT(r.points[0].eps, r.points[1].eps);
}
