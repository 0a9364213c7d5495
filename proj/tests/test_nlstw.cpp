#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "twaves/nlstw.hpp"

using namespace twaves;

namespace {

const Nonlinearity kGp{};

template <class Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

Grid soliton_grid(double c) {
  const double eps = std::sqrt(2.0 - c * c);
  return Grid::make({4096}, {400.0 / eps});
}

const TwSolution& soliton_12() {
  static const TwSolution s = solve_1d(kGp, 1.2, soliton_grid(1.2));
  return s;
}

// u = rho exp(i phi), rho = 1 - 0.2 g, phi = 0.3 x g, g = exp(-(x^2 + y^2) / 4)
struct Bump {
  static double g(double x, double y) { return std::exp(-(x * x + y * y) / 4.0); }
  static double rho(double x, double y) { return 1.0 - 0.2 * g(x, y); }
  static double phi(double x, double y) { return 0.3 * x * g(x, y); }
  static double rx(double x, double y) { return 0.1 * x * g(x, y); }
  static double ry(double x, double y) { return 0.1 * y * g(x, y); }
  static double px(double x, double y) { return 0.3 * g(x, y) * (1.0 - 0.5 * x * x); }
  static double py(double x, double y) { return -0.15 * x * y * g(x, y); }
  static double integrate(const std::function<double(double, double)>& f) {
    return oracle::panel_quad([&](double x) { return oracle::panel_quad([&](double y) { return f(x, y); }, -20.0, 20.0); }, -20.0, 20.0);
  }
  CField field(const Grid& grid) const {
    CField u(grid);
    for (std::size_t i = 0; i < grid.n[0]; ++i)
      for (std::size_t j = 0; j < grid.n[1]; ++j) {
        const double x = grid.coord(0, i), y = grid.coord(1, j);
        u.v[grid.index(i, j)] = rho(x, y) * std::exp(I * phi(x, y));
      }
    return u;
  }
};

detail::Madelung random_bump(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-0.2, 0.2);
  const double a1 = amp(rng), a2 = amp(rng), p1 = amp(rng);
  detail::Madelung m{RField(g), RField(g)};
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j) {
      const double x = g.coord(0, i), y = g.coord(1, j);
      const double e = std::exp(-(x * x + 0.5 * y * y) / 6.0);
      m.a.v[g.index(i, j)] = (a1 + a2 * x * y) * e;
      m.phi.v[g.index(i, j)] = p1 * x * e;
    }
  return m;
}

}  // namespace

TEST(Functionals, BackgroundIsZero) {
  const Grid g = Grid::make({32, 32}, {10.0, 10.0});
  const CField u(g, cplx{1.0, 0.0});
  EXPECT_EQ(energy(u, kGp), 0.0);
  EXPECT_EQ(momentum(u, kGp), 0.0);
  EXPECT_EQ(pohozaev_p(u, 1.0, kGp), 0.0);
  EXPECT_EQ(tw_residual(u, 1.0, kGp), 0.0);
}

TEST(Functionals, GaussianBumpAgainstQuadrature) {
  const Grid g = Grid::make({256, 256}, {40.0, 40.0});
  const CField u = Bump{}.field(g);
  const double c = 0.7;
  const double grad = Bump::integrate([](double x, double y) {
    const double r = Bump::rho(x, y);
    return Bump::rx(x, y) * Bump::rx(x, y) + Bump::ry(x, y) * Bump::ry(x, y) +
           r * r * (Bump::px(x, y) * Bump::px(x, y) + Bump::py(x, y) * Bump::py(x, y));
  });
  const double perp = Bump::integrate([](double x, double y) {
    const double r = Bump::rho(x, y);
    return Bump::ry(x, y) * Bump::ry(x, y) + r * r * Bump::py(x, y) * Bump::py(x, y);
  });
  const double pot = Bump::integrate([](double x, double y) {
    const double d = 1.0 - Bump::rho(x, y) * Bump::rho(x, y);
    return 0.5 * d * d;
  });
  const double q = Bump::integrate([](double x, double y) { return (1.0 - Bump::rho(x, y) * Bump::rho(x, y)) * Bump::px(x, y); });
  EXPECT_NEAR(energy(u, kGp), grad + pot, 1e-10);
  EXPECT_NEAR(momentum(u, kGp), q, 1e-10);
  EXPECT_NEAR(pohozaev_p(u, c, kGp), grad + pot + c * q - 2.0 * perp, 1e-10);
}

TEST(Functionals, BoundaryMismatch) {
  const Grid g = Grid::make({64, 64}, {8.0, 8.0});
  expect_code(ErrorCode::BoundaryMismatch, [&] { energy(Bump{}.field(g), kGp); });
}

TEST(Functionals, GinzburgLandauCutoff) {
  const Grid g = Grid::make({8, 8}, {1.0, 1.0});
  const CField u(g, cplx{5.0, 0.0});
  EXPECT_NEAR(gl_energy(u, kGp), 64.0, 1e-12);
  EXPECT_DOUBLE_EQ(gl_cutoff(1.5, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(gl_cutoff(5.0, 1.0), 3.0);
  EXPECT_NEAR(gl_cutoff(3.0, 1.0), 2.75, 1e-15);
}

TEST(Functionals, VortexBlocksLifting) {
  const Grid g = Grid::make({64, 64}, {20.0, 20.0});
  const CField u = sample<cplx>(g, [](const Vec3& x) -> cplx {
    const double r = std::hypot(x[0], x[1]);
    return std::tanh(r) * std::exp(I * std::atan2(x[1], x[0]));
  });
  expect_code(ErrorCode::VortexDetected, [&] { momentum(u, kGp); });
  expect_code(ErrorCode::VortexDetected, [&] { lift(u, kGp); });
}

TEST(Speed, SupersonicRejected) {
  expect_code(ErrorCode::SupersonicSpeed, [] { speed_eps(kGp, 1.45); });
  EXPECT_NEAR(speed_eps(kGp, 1.0), 1.0, 1e-15);
}

TEST(Newton1d, DarkSolitonEnergyAndMomentum) {
  const auto& s = soliton_12();
  const oracle::DarkSoliton ref{1.2};
  ASSERT_TRUE(s.converged);
  EXPECT_LE(s.residual, 1e-10);
  EXPECT_NEAR(s.energy / ref.energy(), 1.0, 1e-8);
  EXPECT_NEAR(s.momentum / ref.momentum(), 1.0, 1e-8);
  EXPECT_LE(std::abs(s.pohozaev_p), 1e-10 * s.energy);
  EXPECT_NEAR(2.0 * norm2_sq(modulus_gradient(s.u, 0)), 2.0 * ref.grad_rho_sq(), 1e-10);
}

TEST(Newton1d, UnitSpeedEnergyIsTwoThirds) {
  const auto s = solve_1d(kGp, 1.0, soliton_grid(1.0));
  EXPECT_NEAR(s.energy, 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(s.min_modulus, std::sqrt(0.5), 1e-6);
  // the modulus dips below 3 r0 / 4
  expect_code(ErrorCode::VortexDetected, [&] { tools_identities(s.u, 1.0, kGp); });
}

TEST(Newton1d, ToolsIdentities) {
  const auto& s = soliton_12();
  const auto gaps = tools_identities(s.u, 1.2, kGp);
  EXPECT_LE(gaps.gap_energy, 1e-10);
  EXPECT_LE(gaps.gap_phase, 1e-10);
}

TEST(Newton1d, SmallAmplitudeLaw) {
  // -c_s Q / E -> 1 as eps -> 0
  const double c = std::sqrt(2.0 - 0.04);
  const auto s = solve_1d(kGp, c, soliton_grid(c));
  EXPECT_NEAR(-std::sqrt(2.0) * s.momentum / s.energy, 1.0, 0.05);
}

TEST(Newton1d, WrongSpeedLeavesResidual) {
  const auto& s = soliton_12();
  EXPECT_GT(tw_residual(s.u, 1.3, kGp), 1e-2);
}

TEST(Newton1d, NonGpModel) {
  const Nonlinearity cq{CubicQuintic{}};
  const double c = 0.9 * cq.c_s();
  const auto s = solve_1d(cq, c, Grid::make({4096}, {400.0 / speed_eps(cq, c)}));
  EXPECT_LE(s.residual, 1e-9);
  EXPECT_LE(std::abs(s.pohozaev_p), 1e-9 * s.energy);
}

TEST(Newton1d, Errors) {
  expect_code(ErrorCode::UnsupportedDimension, [] { solve_1d(kGp, 1.2, Grid::make({16, 16}, {10.0, 10.0})); });
  expect_code(ErrorCode::SonicDegenerate, [] { solve_1d(kGp, 1.2, Grid::make({256}, {20.0})); });
  expect_code(ErrorCode::SupersonicSpeed, [] { solve_1d(kGp, 1.5, Grid::make({256}, {200.0})); });
}

TEST(Invariance, GaugeAndReflection) {
  const auto& s = soliton_12();
  CField rotated = s.u;
  for (auto& z : rotated.v) z *= std::exp(I * 0.7);
  EXPECT_NEAR(energy(rotated, kGp), s.energy, 1e-12);
  EXPECT_NEAR(momentum(rotated, kGp), s.momentum, 1e-12);
  EXPECT_NEAR(tw_residual(rotated, 1.2, kGp), s.residual, 1e-12);
  const CField mirrored = reflect_x1(s.u);
  EXPECT_NEAR(momentum(mirrored, kGp), -s.momentum, 1e-12);
  EXPECT_LE(tw_residual(mirrored, -1.2, kGp), 1e-9);
}

TEST(KernelFixedPoint, ExactSeedIsStationary) {
  const auto& s = soliton_12();
  const auto out = solve_kernel_fixedpoint(kGp, 1.2, s.u.grid, s);
  EXPECT_LE(out.residual, 10.0 * s.residual + 1e-12);
  EXPECT_NEAR(out.multiplier, 1.0, 1e-10);
}

TEST(KernelFixedPoint, PerturbedSeedContracts) {
  TwSolution seed = soliton_12();
  for (std::size_t i = 0; i < seed.u.size(); ++i) {
    const double x = seed.u.grid.coord(0, i);
    seed.u.v[i] *= 1.0 + 0.01 * std::exp(-x * x / 20.0);
  }
  seed = make_solution(seed.u, 1.2, kGp);
  const auto out = solve_kernel_fixedpoint(kGp, 1.2, seed.u.grid, seed);
  EXPECT_LE(out.residual, 1e-2 * seed.residual);
}

TEST(KernelFixedPoint, Errors) {
  const auto& s = soliton_12();
  TwSolution bad = s;
  bad.u.v[bad.u.size() / 2] = 0.0;
  expect_code(ErrorCode::LiftingLost, [&] { solve_kernel_fixedpoint(kGp, 1.2, s.u.grid, bad); });
  expect_code(ErrorCode::GridMismatch, [&] { solve_kernel_fixedpoint(kGp, 1.2, Grid::make({2048}, {100.0}), s); });
}

TEST(Madelung, GradientMatchesFiniteDifference) {
  const Grid g = Grid::make({64, 64}, {30.0, 40.0});
  const detail::Lagrangian lag{kGp, 0.7, 1.0, 1.1};
  const auto m = random_bump(g, 3), h = random_bump(g, 4);
  const double dt = 1e-5;
  const double fd = (lag.value(m + h.scaled(dt)) - lag.value(m - h.scaled(dt))) / (2.0 * dt);
  EXPECT_NEAR(detail::inner(lag.gradient(m), h) / fd, 1.0, 1e-6);
  const auto hv = lag.hessian(m, h);
  const auto fdh = (lag.gradient(m + h.scaled(dt)) - lag.gradient(m - h.scaled(dt))).scaled(0.5 / dt);
  EXPECT_LE(std::sqrt(detail::norm2_sq(hv - fdh) / detail::norm2_sq(hv)), 1e-6);
}

TEST(Madelung, GradientVanishesOnTravellingWave) {
  // the equations in modulus/phase form are the travelling-wave equation
  const Grid g = Grid::make({128, 128}, {40.0, 40.0});
  const auto m = random_bump(g, 7);
  const double c = 0.9;
  const detail::Lagrangian act{kGp, 1.0, 1.0, c};
  const auto grad = act.gradient(m);
  const CField op = tw_operator(detail::to_field(m, 1.0), c, kGp);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx z = op.v[i] * std::exp(-I * m.phi.v[i]);
    err = std::max(err, std::abs(z.real() + 0.5 * grad.a.v[i]));
    err = std::max(err, std::abs(z.imag() * (1.0 + m.a.v[i]) + 0.5 * grad.phi.v[i]));
  }
  EXPECT_LE(err, 1e-10);
}

TEST(Madelung, RetractionHitsLevel) {
  const Grid g = Grid::make({64, 64}, {30.0, 40.0});
  const detail::Lagrangian lag{kGp, 1.0, 0.0, 0.0};
  const auto m = random_bump(g, 5);
  const double t = lag.retraction_factor(m, 0.01);
  EXPECT_NEAR(lag.kinetic(m.scaled(t)), 0.01, 1e-14);
}

TEST(DilationRoot, FixedPointAndAffineCase) {
  // P_c = 0 already: d1 + cQ + V = 0 with the other root at 2
  EXPECT_NEAR(dilation_root(2.0, -3.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(dilation_root(1.0, -3.0, 2.0), 0.5, 1e-15);
  // vanishing quadratic coefficient: d1 + c0 Q = 0 at c0, so a(c) = c0 / c
  const double c0 = 1.1, c = 1.3, q = -2.0, d1 = -c0 * q;
  EXPECT_NEAR(dilation_root(d1, c * q, 0.0), c0 / c, 1e-15);
  expect_code(ErrorCode::NoPositiveRoot, [] { dilation_root(1.0, -1.0, 1.0); });
  expect_code(ErrorCode::NoPositiveRoot, [] { dilation_root(1.0, 1.0, 0.0); });
}

TEST(FixedKinetic, TransonicSolutions) {
  const Grid g = Grid::make({128, 128}, {1.0, 1.0});
  const double cs = std::sqrt(2.0);
  double c_prev = 0.0;
  for (double k : {0.04, 0.08}) {
    const auto s = solve_2d_fixed_kinetic(kGp, k, g);
    ASSERT_TRUE(s.converged);
    EXPECT_GT(s.c, 0.0);
    EXPECT_LT(s.c, cs);
    EXPECT_LT(s.momentum, 0.0);
    EXPECT_NEAR(s.kinetic, k, 1e-8 * k);
    EXPECT_LE(std::abs(s.pohozaev_p), 1e-6 * s.energy);
    EXPECT_LE(std::abs(s.energy - 2.0 * norm2_sq(tw_derivative(s.u, 0))), 2e-6 * s.energy);
    EXPECT_GT(s.min_modulus, 0.5);
    // -Q is comparable to k
    EXPECT_GT(-s.momentum, 0.5 * k);
    EXPECT_LT(-s.momentum, 2.0 * k);
    // minimal value below the leading-order bound
    const double c2 = s.c * s.c;
    const double i_min = (potential_integral(s.u, kGp) / c2 + s.momentum / s.c);
    EXPECT_LE(i_min, -k / (cs * cs));
    if (c_prev > 0.0) EXPECT_LT(s.c, c_prev);
    c_prev = s.c;
  }
}

TEST(FixedKinetic, Errors) {
  expect_code(ErrorCode::UnsupportedDimension, [] { solve_2d_fixed_kinetic(kGp, 0.05, Grid::make({64}, {1.0})); });
  expect_code(ErrorCode::ValidationError, [] { solve_2d_fixed_kinetic(kGp, -1.0, Grid::make({64, 64}, {1.0, 1.0})); });
}
