#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "twaves/model.hpp"

using namespace twaves;

TEST(Background, GrossPitaevskii) { EXPECT_NEAR(find_background(GrossPitaevskii{}), 1.0, 1e-14); }

TEST(Background, CubicQuinticPicksStableRoot) {
  // roots of -1 + 3s - 2s^2 are 1/2 and 1
  EXPECT_NEAR(find_background(CubicQuintic{1, 3, 2}), 1.0, 1e-13);
}

TEST(Background, NoRoot) {
  try {
    find_background(Custom{[](double) { return 1.0; }, {}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoBackgroundRoot);
  }
}

TEST(Background, DegenerateRootRejected) {
  // slope map reports a flat root
  Custom m{[](double s) { return 1.0 - s; }, [](double) { return 0.0; }, {}};
  try {
    find_background(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRoot);
  }
}

TEST(Background, Saturating) {
  Nonlinearity nl(Saturating{0.5, 1.0, 1.0});
  EXPECT_NEAR(nl.r0_sq(), std::log(2.0), 1e-13);
  EXPECT_NEAR(nl.F(nl.r0_sq()), 0.0, 1e-12);
}

TEST(SoundSpeed, Values) {
  EXPECT_NEAR(Nonlinearity(GrossPitaevskii{}).c_s(), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(Nonlinearity(CubicQuintic{1, 3, 2}).c_s(), std::sqrt(2.0), 1e-12);
}

TEST(SoundSpeed, Degenerate) {
  Nonlinearity nl(Custom{[](double s) { return 1.0 - s; }, [](double) { return 0.0; }, {}}, 1.0, std::in_place);
  try {
    sound_speed(nl);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSoundSpeed);
  }
}

TEST(Gamma, Values) {
  EXPECT_NEAR(Nonlinearity(GrossPitaevskii{}).gamma(), 6.0, 1e-14);
  EXPECT_NEAR(Nonlinearity(CubicQuintic{1, 3, 2}).gamma(), 14.0, 1e-11);
  // a/b = e^-3 gives the degenerate value
  Nonlinearity sat(Saturating{std::exp(-3.0), 1.0, 1.0});
  EXPECT_NEAR(sat.gamma(), 0.0, 1e-11);
  Nonlinearity sat2(Saturating{0.25, 1.0, 2.0});
  EXPECT_NEAR(sat2.gamma(), 6.0 + 2.0 * std::log(0.25), 1e-11);
}

TEST(Gamma, FiniteDifferenceInvariance) {
  const CubicQuintic cq{1, 3, 2};
  Nonlinearity exact(cq);
  Custom fd{[cq](double s) { return -cq.a1 + cq.a3 * s - cq.a5 * s * s; }, {}, {}};
  Nonlinearity approx(fd);
  EXPECT_NEAR(approx.r0_sq(), exact.r0_sq(), 1e-12);
  EXPECT_NEAR(approx.c_s() / exact.c_s(), 1.0, 1e-5);
  EXPECT_NEAR(approx.gamma() / exact.gamma(), 1.0, 1e-5);

  Saturating sm{0.3, 1.0, 1.5};
  Nonlinearity es(sm);
  Nonlinearity as(Custom{[sm](double s) { return sm.b * std::exp(-s / sm.alpha) - sm.a; }, {}, {}});
  EXPECT_NEAR(as.c_s() / es.c_s(), 1.0, 1e-5);
  EXPECT_NEAR(as.gamma() / es.gamma(), 1.0, 1e-5);
}

TEST(Potential, GrossPitaevskii) {
  Nonlinearity nl;
  EXPECT_NEAR(nl.V(0.0), 0.5, 1e-15);
  EXPECT_NEAR(nl.V(1.0), 0.0, 1e-15);
  EXPECT_NEAR(nl.V(4.0), 4.5, 1e-12);
}

TEST(Potential, CustomQuadratureMatchesClosedForm) {
  Nonlinearity custom(Custom{[](double s) { return 1.0 - s; }, {}, {}});
  EXPECT_NEAR(custom.V(4.0), 4.5, 1e-12);
  EXPECT_NEAR(custom.V(0.0), 0.5, 1e-12);
  EXPECT_NEAR(custom.V(custom.r0_sq()), 0.0, 1e-14);
}

TEST(Potential, VanishesAtBackground) {
  for (const auto& nl : {Nonlinearity(GrossPitaevskii{}), Nonlinearity(CubicQuintic{1, 3, 2}),
                         Nonlinearity(Saturating{0.5, 1.0, 1.0}), Nonlinearity(PowerSum{1.0, 2.0, 0.5})})
    EXPECT_NEAR(nl.V(nl.r0_sq()), 0.0, 1e-14);
}

TEST(Potential, DerivativeIsMinusF) {
  std::mt19937 rng(7);
  for (const auto& nl : {Nonlinearity(GrossPitaevskii{}), Nonlinearity(CubicQuintic{1, 3, 2}),
                         Nonlinearity(Saturating{0.5, 1.0, 1.0}), Nonlinearity(PowerSum{1.0, 2.0, 0.5}),
                         Nonlinearity(Custom{[](double s) { return std::tanh(2.0 - s); }, {}, {}})}) {
    std::uniform_real_distribution<double> dist(0.02 * nl.r0_sq(), 2.0 * nl.r0_sq());
    for (int i = 0; i < 100; ++i) {
      const double s = dist(rng);
      const double h = 1e-5 * nl.r0_sq();
      const double dv = (nl.V(s + h) - nl.V(s - h)) / (2.0 * h);
      const double f = nl.F(s);
      EXPECT_LE(std::abs(dv + f), 1e-6 * std::max(std::abs(f), 1e-2)) << nl.id() << " s=" << s;
    }
  }
}

TEST(Potential, TaylorRemainderBounded) {
  for (const auto& nl : {Nonlinearity(GrossPitaevskii{}), Nonlinearity(CubicQuintic{1, 3, 2}),
                         Nonlinearity(Saturating{0.5, 1.0, 1.0})}) {
    const auto t = taylor_data(nl);
    EXPECT_GE(t.v4_bound, 0.0);
    EXPECT_LT(t.v4_bound, 50.0) << nl.id();
    EXPECT_LT(t.f3_bound, 1e3) << nl.id();
  }
  // GP remainder is exactly alpha^4 / 2 divided by c_s^2 = 2
  EXPECT_NEAR(taylor_data(Nonlinearity()).v4_bound, 0.25, 1e-6);
}

TEST(Catalog, MakeModel) {
  EXPECT_NEAR(make_model("gp").c_s(), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(make_model("cubic-quintic", {{"a1", 1}, {"a3", 3}, {"a5", 2}}).gamma(), 14.0, 1e-11);
  EXPECT_EQ(make_model("saturating").id(), "saturating");
  EXPECT_NEAR(make_model("power-sum", {{"alpha", 2.0}, {"beta", 1.0}, {"nu", 1.0}}).r0_sq(), 2.0, 1e-12);
  try {
    make_model("bogus");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationError);
    EXPECT_NE(std::string(e.what()).find("gp"), std::string::npos);
  }
}
