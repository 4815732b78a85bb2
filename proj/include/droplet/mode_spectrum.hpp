#pragma once

// Second variation of G_half at the ball, one spherical-harmonic degree at a
// time. Dimension-generic: only radial series and boundary data are used.
//
// For a unit-L^2 harmonic Y_m the first-order potential perturbation is
// R(r) Y_m with
//   R1(r) = C sum_i b_{m+2i} r^{m+2i}          (inside)
//   R2(r) = A r^{-(m+n-2)}                     (outside)
// where b_m = 1 and b_{m+2i} 2i(2i+2m+n-2) = b_{m+2i-2}/(beta K), so that
// R1'' + (n-1) R1'/r - m(m+n-2) R1/r^2 = R1/(beta K). The jump conditions
//   C sum b - A = c1,   beta C sum (m+2i) b + (m+n-2) A = c2
// with c1 = -(psi+'(1) - psi-'(1)) and c2 = -(beta psi+''(1) - psi-''(1))
// fix (C, A). The second variation is then
//   value = chat1 + chat2 * (R1(1) + psi+'(1)) + chat3 * R2'(1)
//         = chat1 + chat2 (A + psi-'(1)) - chat3 (m+n-2) A
// with
//   chat1 = -P psi+'(1) + beta psi+'(1) psi+''(1) - psi-'(1) psi-''(1)
//           - psi(1) psi+'(1) / K,
//   chat2 = -P - psi(1)/K,      chat3 = -(beta-1) psi+'(1),
//   P = (1 - 2|B_1| J(B_1)/K) / |B_1|.
// chat2 multiplies the material trace of the interior perturbation (R1(1)
// plus the transport term psi+'(1)), not R1(1) alone. This assembly was
// fixed by matching finite differences of the field solver; see the
// mode-spectrum tests.
// `value` equals -d^2/de^2 J(E_e) at e = 0 along volume-preserving
// perturbations r = 1 + e Y_m + O(e^2), i.e. J(E_e) = J(B_1) - e^2 value/2.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "droplet/ball.hpp"
#include "droplet/params.hpp"
#include "droplet/sphere_basis.hpp"

namespace droplet {

/// b_{m+2i}, i = 0, 1, ... for degree m (m >= 2).
inline std::vector<double> interior_series(int m, const PhysicalParams& params, double tol = 1e-16) {
  if (m < 2) throw InvalidArgument("mode degree must be >= 2, got " + std::to_string(m));
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  params.validate();
  return radial_series(m, params.n, params.beta_K(), tol);
}

struct ModeSolution {
  int m = 0;
  int n = 3;
  std::vector<double> series;
  double C = 0.0;
  double A = 0.0;
  double d_exterior = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  /// |jump residuals| of the 2x2 system.
  double residual = 0.0;

  [[nodiscard]] double R1(double r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) v += series[i] * std::pow(r, m + 2.0 * i);
    return C * v;
  }
  [[nodiscard]] double dR1(double r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double p = m + 2.0 * i;
      v += p * series[i] * std::pow(r, p - 1.0);
    }
    return C * v;
  }
  [[nodiscard]] double d2R1(double r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double p = m + 2.0 * i;
      v += p * (p - 1.0) * series[i] * std::pow(r, p - 2.0);
    }
    return C * v;
  }
  [[nodiscard]] double R2(double r) const { return A * std::pow(r, -(m + n - 2.0)); }
  [[nodiscard]] double dR2(double r) const { return -(m + n - 2.0) * A * std::pow(r, -(m + n - 1.0)); }
};

struct JumpData {
  double c1;
  double c2;
};

inline JumpData jump_data(const BallState& ball) {
  return {-(ball.dpsi_in - ball.dpsi_out), -(ball.params.beta * ball.d2psi_in - ball.d2psi_out)};
}

/// Solves the 2x2 jump system with explicit data (c1, c2).
inline ModeSolution solve_mode(int m, const PhysicalParams& params, JumpData jumps, double tol = 1e-16) {
  ModeSolution s;
  s.m = m;
  s.n = params.n;
  s.series = interior_series(m, params, tol);
  s.c1 = jumps.c1;
  s.c2 = jumps.c2;
  double sb = 0.0;
  double sdb = 0.0;
  for (std::size_t i = 0; i < s.series.size(); ++i) {
    sb += s.series[i];
    sdb += (m + 2.0 * i) * s.series[i];
  }
  const double mn = m + params.n - 2.0;
  Eigen::Matrix2d M;
  M << sb, -1.0, params.beta * sdb, mn;
  const Eigen::Vector2d rhs(jumps.c1, jumps.c2);
  const double det = M.determinant();
  if (!(det > 0.0)) throw SolverError("mode system is singular");
  const Eigen::Vector2d x = M.partialPivLu().solve(rhs);
  s.C = x[0];
  s.A = x[1];
  s.d_exterior = -mn * s.A;
  s.residual = (M * x - rhs).cwiseAbs().maxCoeff();
  return s;
}

inline ModeSolution solve_mode(int m, const BallState& ball) { return solve_mode(m, ball.params, jump_data(ball)); }

struct SecondVariationRow {
  int m = 0;
  double value = 0.0;
  double chat1 = 0.0;
  double chat2 = 0.0;
  double chat3 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double A = 0.0;
  double C = 0.0;
  double d_exterior = 0.0;
  /// Charge at which Q^2 G_paper cancels the perimeter curvature of the mode;
  /// exploratory, present only when value < 0.
  std::optional<double> Q_c;
};

struct SecondVariationConstants {
  double chat1;
  double chat2;
  double chat3;
};

inline SecondVariationConstants second_variation_constants(const BallState& ball) {
  const double K = ball.params.K;
  const double beta = ball.params.beta;
  const double vol = ball.ball_volume();
  const double pref = (1.0 - 2.0 * vol * ball.J_ball / K) / vol;
  SecondVariationConstants c{};
  c.chat1 = -pref * ball.dpsi_in + (beta * ball.dpsi_in * ball.d2psi_in - ball.dpsi_out * ball.d2psi_out) -
            ball.trace * ball.dpsi_in / K;
  c.chat2 = -pref - ball.trace / K;
  c.chat3 = -(beta - 1.0) * ball.dpsi_in;
  return c;
}

/// Second variation of the perimeter of the unit sphere S^{n-1} along a
/// volume-preserving unit-L^2 harmonic of degree m.
inline double perimeter_second_variation(int m, int n = 3) {
  return m * (m + n - 2.0) - (n - 1.0);
}

inline std::optional<double> stability_threshold(int m, double value, int n = 3) {
  if (value >= 0.0) return std::nullopt;
  return std::sqrt(perimeter_second_variation(m, n) / (-2.0 * value));
}

inline SecondVariationRow second_variation(int m, const BallState& ball) {
  const ModeSolution mode = solve_mode(m, ball);
  const auto k = second_variation_constants(ball);
  SecondVariationRow row;
  row.m = m;
  row.chat1 = k.chat1;
  row.chat2 = k.chat2;
  row.chat3 = k.chat3;
  row.c1 = mode.c1;
  row.c2 = mode.c2;
  row.A = mode.A;
  row.C = mode.C;
  row.d_exterior = mode.d_exterior;
  row.value = k.chat1 + k.chat2 * (mode.R1(1.0) + ball.dpsi_in) + k.chat3 * mode.dR2(1.0);
  row.Q_c = stability_threshold(m, row.value, ball.params.n);
  return row;
}

inline std::optional<double> stability_threshold(int m, const BallState& ball) {
  return second_variation(m, ball).Q_c;
}

inline std::vector<SecondVariationRow> spectrum(int m_max, const BallState& ball) {
  if (m_max < 2) throw InvalidArgument("m_max must be >= 2");
  std::vector<SecondVariationRow> rows;
  rows.reserve(m_max - 1);
  for (int m = 2; m <= m_max; ++m) rows.push_back(second_variation(m, ball));
  return rows;
}

struct SpectrumSummary {
  /// Least-squares slope of |value| against m on [m_lo, m_max].
  double slope = 0.0;
  /// max over m of |value| / m on [m_lo, m_max] divided by the min, minus 1.
  double ratio_spread = 0.0;
  /// Smallest c with value >= -c (1 + m(m+n-2))^{1/2} for every row.
  double h_half_constant = 0.0;
  int m_lo = 20;
};

inline SpectrumSummary summarize_spectrum(const std::vector<SecondVariationRow>& rows, int n = 3, int m_lo = 20) {
  SpectrumSummary s;
  s.m_lo = m_lo;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  double rmin = INFINITY, rmax = 0.0;
  for (const auto& r : rows) {
    const double bound = std::sqrt(1.0 + laplace_beltrami_eigenvalue(r.m, n));
    s.h_half_constant = std::max(s.h_half_constant, -r.value / bound);
    if (r.m < m_lo) continue;
    const double y = std::abs(r.value);
    sx += r.m;
    sy += y;
    sxx += static_cast<double>(r.m) * r.m;
    sxy += r.m * y;
    ++cnt;
    rmin = std::min(rmin, y / r.m);
    rmax = std::max(rmax, y / r.m);
  }
  if (cnt >= 2) {
    s.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    s.ratio_spread = rmax / rmin - 1.0;
  }
  return s;
}

}  // namespace droplet

namespace droplet {

/// Bound on (J(B_1) - J(E)) / |phi|_{H^1}^2 predicted by the spectrum: the
/// largest per-mode quotient value / (2 (1 + m(m+n-2))), relaxed by `slack`
/// times its magnitude.
inline double taylor_constant(const std::vector<SecondVariationRow>& rows, int n = 3, double slack = 0.2) {
  double c = -INFINITY;
  for (const auto& r : rows) c = std::max(c, r.value / (2.0 * (1.0 + laplace_beltrami_eigenvalue(r.m, n))));
  return c + slack * std::abs(c);
}

}  // namespace droplet
