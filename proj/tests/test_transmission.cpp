#include <gtest/gtest.h>

#include <cmath>

#include "droplet/mode_spectrum.hpp"
#include "droplet/transmission.hpp"

using namespace droplet;

namespace {

const PhysicalParams kDefault{3, 2.0, 1.0, 0.0};

SolverOptions zonal_opts(int n_r) {
  SolverOptions o;
  o.n_r = n_r;
  o.zonal = true;
  return o;
}

ShapeCoeffs y20(double eps) { return ShapeCoeffs::single_mode(2, 2, 0, eps); }

}  // namespace

TEST(DomainMap, IdentityForBall) {
  const auto basis = cached_basis(4);
  const DomainMap map(ShapeCoeffs::zero(4), basis);
  for (double rho : {0.0, 0.3, 0.7, 0.97, 1.0, 1.2, 1.8, 3.0})
    for (std::size_t k = 0; k < basis->node_count(); k += 5) {
      const auto p = map.at(rho, k);
      EXPECT_NEAR(p.R, rho, 1e-15);
      EXPECT_NEAR(p.R_rho, 1.0, 1e-14);
      EXPECT_EQ(p.s[0], 0.0);
      EXPECT_EQ(p.s[1], 0.0);
      EXPECT_NEAR(map.jacobian(rho, k), 1.0, 1e-14);
      if (rho > 0.0) {
        const auto a = map.metric(rho, k);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) EXPECT_NEAR(a[i][j], i == j ? 1.0 : 0.0, 1e-14);
      }
    }
}

TEST(DomainMap, BoundaryAndVolumePreservingBand) {
  const auto shape = y20(0.1);
  const auto basis = cached_basis(4);
  const DomainMap map(shape, basis);
  const auto surf = sample_surface(shape, *basis);
  for (std::size_t k = 0; k < basis->node_count(); ++k) {
    EXPECT_NEAR(map.at(1.0, k).R, 1.0 + surf.phi[k], 1e-12);
    for (double rho : {0.95, 0.97, 0.99, 1.0, 1.02, 1.05}) EXPECT_NEAR(map.jacobian(rho, k), 1.0, 1e-12) << rho;
    EXPECT_EQ(map.at(2.0, k).R, 2.0);
  }
}

TEST(DomainMap, NonDegenerateOnRandomShape) {
  const auto shape = project_constraints(random_shape(4, 4, 0.2));
  const auto basis = cached_basis(8, 12);
  const DomainMap map(shape, basis);
  for (int i = 1; i <= 200; ++i) {
    const double rho = 2.0 * i / 200.0;
    for (std::size_t k = 0; k < basis->node_count(); ++k) {
      ASSERT_GT(map.jacobian(rho, k), 0.0);
      const auto a = map.metric(rho, k);
      // leading minors of a symmetric 3x3 matrix
      const double m1 = a[0][0];
      const double m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
      const double m3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                        a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                        a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
      ASSERT_GT(m1, 0.0);
      ASSERT_GT(m2, 0.0);
      ASSERT_GT(m3, 0.0);
    }
  }
}

TEST(DomainMap, DegenerateShapeIsRejected) {
  const auto shrunk = ShapeCoeffs::single_mode(2, 0, 0, -0.45 * std::sqrt(4.0 * std::numbers::pi));
  try {
    (void)solve_field(shrunk, kDefault, zonal_opts(64));
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("theta"), std::string::npos);
  }
}

TEST(SolveField, BallMatchesClosedForm) {
  const BallState st = solve_ball(kDefault);
  const auto f = solve_field(ShapeCoeffs::zero(2), kDefault, zonal_opts(512));
  EXPECT_NEAR(f.J_E, st.J_ball, 1e-6);
  EXPECT_TRUE(f.monotone);
  const auto g = g_energy(f);
  const auto e = ball_energies(st, 0.0);
  EXPECT_NEAR(g.G_half, e.G_half, 1e-6);
  EXPECT_DOUBLE_EQ(g.G_paper, 2.0 * g.G_half);
}

TEST(SolveField, ExteriorIsExactlyHarmonic) {
  SolverOptions o = zonal_opts(512);
  const auto f = solve_field(ShapeCoeffs::zero(2), kDefault, o);
  const auto& grid = f.problem->grid();
  int half = 0;
  for (int i = 0; i < grid.nodes(); ++i)
    if (std::abs(grid.rho[i] - o.r_inf / 2) < std::abs(grid.rho[half] - o.r_inf / 2)) half = i;
  const int last = grid.nodes() - 1;
  const double y0 = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  const double A = f.value(last, 0) * y0 * grid.rho[last];
  const double at_half = f.value(half, 0) * y0;
  EXPECT_LE(std::abs(at_half - A / grid.rho[half]) / std::abs(at_half), 1e-8);
}

TEST(SolveField, SecondOrderRefinement) {
  const auto shape = project_constraints(y20(0.1));
  const double j64 = solve_field(shape, kDefault, zonal_opts(64)).J_E;
  const double j128 = solve_field(shape, kDefault, zonal_opts(128)).J_E;
  const double j256 = solve_field(shape, kDefault, zonal_opts(256)).J_E;
  EXPECT_GE(std::abs(j64 - j128) / std::abs(j128 - j256), 3.0);
}

TEST(SolveField, RandomShapesAndInvariance) {
  const auto shape = project_constraints(random_shape(3, 4, 0.1));
  const auto f = solve_field(shape, kDefault);
  EXPECT_LE(f.J_E, 0.0);
  EXPECT_TRUE(f.monotone);
  EXPECT_LE(f.residual, 1e-8);
  EXPECT_GT(f.iterations, 0);
  EXPECT_NEAR(f.volume, volume(shape), 1e-10);
  const double jr = j_energy(rotate(shape, swap_xy()), kDefault);
  EXPECT_NEAR(jr, f.J_E, 1e-8);
}

TEST(SolveField, MapIndependence) {
  const auto shape = project_constraints(random_shape(2, 3, 0.1));
  SolverOptions a;
  a.n_r = 128;
  SolverOptions b = a;
  b.blend = {0.3, 0.9, 1.1, 1.6};
  SolverOptions a2 = a;
  a2.n_r = 256;
  const double ja = j_energy(shape, kDefault, a);
  const double jb = j_energy(shape, kDefault, b);
  const double ja2 = j_energy(shape, kDefault, a2);
  // both blends discretize the same continuum value
  EXPECT_LE(std::abs(ja - jb), 4.0 * std::abs(ja - ja2));
  EXPECT_LE(std::abs(ja - jb), 1e-5);
}

TEST(SolveField, RejectsBadOptions) {
  SolverOptions o;
  o.n_r = 30;
  EXPECT_THROW(solve_field(ShapeCoeffs::zero(2), kDefault, o), InvalidArgument);
  o = SolverOptions{};
  o.zonal = true;
  EXPECT_THROW(solve_field(ShapeCoeffs::single_mode(2, 2, 1, 0.1), kDefault, o), InvalidArgument);
  EXPECT_THROW(solve_field(ShapeCoeffs::zero(2), PhysicalParams{4, 2.0, 1.0, 0.0}), InvalidArgument);
}

TEST(SolveField, SecondVariationAgainstSpectrum) {
  const BallState st = solve_ball(kDefault);
  const double eps = 1e-2;
  const double j0 = solve_field(ShapeCoeffs::zero(3), kDefault, zonal_opts(256)).J_E;
  for (int m : {2, 3}) {
    SolverOptions o = zonal_opts(256);
    o.l_max = 3 * m + 4;
    const double j = j_energy(project_constraints(ShapeCoeffs::single_mode(m, m, 0, eps)), kDefault, o);
    const double predicted = 0.5 * eps * eps * second_variation(m, st).value;
    EXPECT_NEAR(j0 - j, predicted, 0.03 * std::abs(predicted)) << m;
  }
}

TEST(Duality, BallAndShapes) {
  const BallState st = solve_ball(kDefault);
  EXPECT_LE(duality_residual(st), 1e-6);
  const auto shape = project_constraints(y20(0.1));
  double prev = INFINITY;
  for (int n_r : {128, 256, 512}) {
    const double r = duality_residual(solve_field(shape, kDefault, zonal_opts(n_r)));
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_LE(prev, 1e-3);
}

TEST(RecoverPair, IdentitiesAndBounds) {
  const auto shape = project_constraints(random_shape(6, 4, 0.1));
  const auto f = solve_field(shape, PhysicalParams{3, 3.0, 0.5, 0.0});
  const auto pair = recover_pair(f);
  EXPECT_NEAR(pair.rho_integral, 1.0, 1e-8);
  EXPECT_LE(pair.identity_spread, 1e-12);
  for (std::size_t i = 0; i < pair.u.size(); ++i) {
    if (pair.inside[i]) {
      EXPECT_GE(pair.u[i], 0.0);
      EXPECT_LE(pair.u[i], pair.G_paper);
      EXPECT_GE(0.5 * pair.rho[i], 0.0);
      EXPECT_LE(0.5 * pair.rho[i], pair.G_paper);
    } else {
      EXPECT_EQ(pair.rho[i], 0.0);
    }
  }
}
