#include <gtest/gtest.h>

#include <cmath>

#include "droplet/shape_calculus.hpp"
#include "droplet/mode_spectrum.hpp"

using namespace droplet;

namespace {

const PhysicalParams kDefault{3, 2.0, 1.0, 0.0};

template <class F>
double window_spread(int lo, int hi, F f) {
  double mn = INFINITY, mx = 0.0;
  for (int m = lo; m <= hi; ++m) {
    mn = std::min(mn, f(m));
    mx = std::max(mx, f(m));
  }
  return mx / mn - 1.0;
}

}  // namespace

TEST(InteriorSeries, RecursionValues) {
  const auto b = interior_series(2, PhysicalParams{3, 2.0, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(b[0], 1.0);
  EXPECT_NEAR(b[1], 1.0 / 14.0, 1e-17);
  EXPECT_NEAR(b[2], 1.0 / 504.0, 1e-18);
  EXPECT_THROW(interior_series(1, kDefault), InvalidArgument);
  EXPECT_THROW(interior_series(0, kDefault), InvalidArgument);
}

TEST(InteriorSeries, MatchesGroundStateAtDegreeZero) {
  const auto s = radial_series(0, 3, 1.0);
  double fact = 1.0;
  for (std::size_t i = 1; i < 8; ++i) {
    fact *= (2.0 * i) * (2.0 * i + 1.0);
    EXPECT_NEAR(s[i], 1.0 / fact, 1e-14);
  }
}

TEST(InteriorSeries, ConvergesWithinThirtyTerms) {
  for (double bk : {1.01, 2.0, 10.0})
    for (int m : {2, 10, 60}) {
      const auto b = radial_series(m, 3, bk, 1e-16);
      double partial = 0.0;
      for (std::size_t i = 0; i < std::min<std::size_t>(30, b.size()); ++i) partial += b[i];
      double full = 0.0;
      for (double v : b) full += v;
      EXPECT_LE(std::abs(full - partial), 1e-16 * full) << "bK=" << bk << " m=" << m;
    }
}

TEST(ModeSolution, HomogeneousDataGivesZero) {
  const auto s = solve_mode(4, kDefault, {0.0, 0.0});
  EXPECT_EQ(s.C, 0.0);
  EXPECT_EQ(s.A, 0.0);
}

TEST(ModeSolution, JumpConditionsAndOde) {
  const BallState st = solve_ball(kDefault);
  const double bk = kDefault.beta_K();
  for (int m : {2, 3, 7, 20}) {
    const auto s = solve_mode(m, st);
    EXPECT_NEAR(s.R1(1.0) - s.R2(1.0), s.c1, 1e-10);
    EXPECT_NEAR(kDefault.beta * s.dR1(1.0) - s.dR2(1.0), s.c2, 1e-10);
    EXPECT_LE(s.residual, 1e-10);
    const double lam = -laplace_beltrami_eigenvalue(m);
    for (int i = 1; i <= 20; ++i) {
      const double r = i / 20.0;
      const double res = s.d2R1(r) + 2.0 * s.dR1(r) / r + (-1.0 / bk + lam / (r * r)) * s.R1(r);
      EXPECT_NEAR(res, 0.0, 1e-8) << "m=" << m << " r=" << r;
    }
  }
}

TEST(ModeSolution, JumpDataFromBall) {
  const BallState st = solve_ball(kDefault);
  const auto row = second_variation(3, st);
  EXPECT_DOUBLE_EQ(row.c1, -(st.dpsi_in - st.dpsi_out));
  EXPECT_DOUBLE_EQ(row.c2, -(kDefault.beta * st.d2psi_in - st.d2psi_out));
  EXPECT_DOUBLE_EQ(row.chat3, -(kDefault.beta - 1.0) * st.dpsi_in);
}

// |R2'(1)| ~ a + b m with a visible offset at these degrees; see the README.
TEST(ModeSolution, ExteriorSlopeRatioWindow) {
  const BallState st = solve_ball(kDefault);
  const double spread = window_spread(20, 60, [&](int m) { return std::abs(solve_mode(m, st).d_exterior) / m; });
  EXPECT_LT(spread, 0.10);
}

TEST(ModeSolution, ExteriorDerivativeGrowsLinearly) {
  const BallState st = solve_ball(kDefault);
  double prev = 0.0;
  for (int m = 2; m <= 200; ++m) {
    const double d = std::abs(solve_mode(m, st).d_exterior);
    EXPECT_GT(d, prev);
    prev = d;
  }
  const double r100 = std::abs(solve_mode(100, st).d_exterior) / 100;
  const double r200 = std::abs(solve_mode(200, st).d_exterior) / 200;
  EXPECT_LT(std::abs(r100 / r200 - 1.0), 0.03);
}

TEST(Spectrum, RowsSlopeAndDeterminism) {
  const BallState st = solve_ball(kDefault);
  const auto rows = spectrum(60, st);
  ASSERT_EQ(rows.size(), 59u);
  EXPECT_EQ(rows.front().m, 2);
  const auto again = spectrum(60, st);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].value, again[i].value);
  const auto sum = summarize_spectrum(rows, 3, 20);
  EXPECT_GT(sum.slope, 0.0);
  for (std::size_t i = 25; i < rows.size(); ++i) EXPECT_GT(std::abs(rows[i].value), std::abs(rows[i - 1].value));
  EXPECT_THROW(spectrum(1, st), InvalidArgument);
}

TEST(Spectrum, HalfOrderBoundFittedOnLowModesHoldsAbove) {
  const BallState st = solve_ball(kDefault);
  const auto low = summarize_spectrum(spectrum(30, st), 3, 2);
  for (int m = 31; m <= 120; ++m) {
    const double v = second_variation(m, st).value;
    EXPECT_GE(v, -low.h_half_constant * std::sqrt(1.0 + laplace_beltrami_eigenvalue(m))) << m;
  }
}

TEST(Spectrum, TruncationRefinement) {
  const BallState st = solve_ball(kDefault);
  for (int m : {2, 10, 40}) {
    const auto a = solve_mode(m, kDefault, jump_data(st), 1e-12);
    const auto b = solve_mode(m, kDefault, jump_data(st), 5e-13);
    EXPECT_LE(std::abs(a.A - b.A), 1e-12);
    EXPECT_LE(std::abs(a.C - b.C), 1e-12 * std::abs(a.C));
  }
}

TEST(Spectrum, Thresholds) {
  EXPECT_FALSE(stability_threshold(4, 0.0).has_value());
  EXPECT_FALSE(stability_threshold(4, 0.3).has_value());
  for (int m : {2, 3, 4, 5}) EXPECT_DOUBLE_EQ(perimeter_second_variation(m), m * (m + 1.0) - 2.0);
  const BallState st = solve_ball(kDefault);
  const auto q20 = stability_threshold(20, st);
  const auto q60 = stability_threshold(60, st);
  ASSERT_TRUE(q20 && q60);
  EXPECT_GT(*q60, *q20);
  EXPECT_NEAR(*q20, std::sqrt(perimeter_second_variation(20) / (-2.0 * second_variation(20, st).value)), 1e-12);
}

TEST(Spectrum, MatchesFieldSolverSecondDifference) {
  const BallState st = solve_ball(kDefault);
  for (int m = 2; m <= 8; ++m) {
    const double fd = fd_second_variation(m, kDefault, 256, 0.02);
    const double v = second_variation(m, st).value;
    EXPECT_LE(std::abs(fd - v) / std::abs(fd), 0.02) << "m=" << m << " fd=" << fd << " formula=" << v;
  }
}
