#pragma once

// Independent reference computations used only by the tests.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "droplet/params.hpp"

namespace oracle {

/// Radical-inverse (Halton) point in [0,1)^3 with bases 2, 3, 5.
inline std::array<double, 3> halton(std::uint64_t index) {
  std::array<double, 3> out{};
  const int bases[3] = {2, 3, 5};
  for (int d = 0; d < 3; ++d) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t i = index; i > 0; i /= bases[d]) {
      f /= bases[d];
      r += f * static_cast<double>(i % bases[d]);
    }
    out[d] = r;
  }
  return out;
}

/// Rejection sampling of int_E g - int_{B_1} g over the shell r in [r_lo, r_hi],
/// where E = {r < R(omega)}. Points are uniform in volume (r^3, cos theta, phi).
inline double shell_difference(const std::function<double(double, double)>& radius,
                               const std::function<double(const std::array<double, 3>&)>& g, double r_lo,
                               double r_hi, std::uint64_t samples) {
  const double a = r_lo * r_lo * r_lo;
  const double b = r_hi * r_hi * r_hi;
  double sum = 0.0;
  for (std::uint64_t i = 1; i <= samples; ++i) {
    const auto u = halton(i);
    const double r = std::cbrt(a + (b - a) * u[0]);
    const double ct = 2.0 * u[1] - 1.0;
    const double theta = std::acos(ct);
    const double phi = 2.0 * std::numbers::pi * u[2];
    const double inside_e = r < radius(theta, phi) ? 1.0 : 0.0;
    const double inside_b = r < 1.0 ? 1.0 : 0.0;
    if (inside_e == inside_b) continue;
    const double st = std::sqrt(1.0 - ct * ct);
    const std::array<double, 3> x{r * st * std::cos(phi), r * st * std::sin(phi), r * ct};
    sum += (inside_e - inside_b) * g(x);
  }
  const double shell = 4.0 * std::numbers::pi / 3.0 * (b - a);
  return shell * sum / static_cast<double>(samples);
}

struct RadialMinimum {
  double J;
  std::vector<double> r;
  std::vector<double> psi;
};

/// Piecewise-linear finite elements for the radial (n = 3) dual problem on
/// [0, r_inf] with `cells` uniform cells and the exact exterior energy
/// 2 pi r_inf psi(r_inf)^2 beyond the truncation. The rank-one term is
/// handled by Sherman-Morrison around the tridiagonal part.
inline RadialMinimum radial_fd_minimum(const droplet::PhysicalParams& p, double r_inf = 20.0, int cells = 10000) {
  const double pi = std::numbers::pi;
  const int N = cells + 1;
  const double h = r_inf / cells;
  std::vector<double> diag(N, 0.0), off(N - 1, 0.0), w(N, 0.0);
  const double vol = 4.0 * pi / 3.0;
  for (int c = 0; c < cells; ++c) {
    const double r0 = c * h, r1 = (c + 1) * h;
    const bool inside = r1 <= 1.0 + 1e-12;
    const double a = inside ? p.beta : 1.0;
    // int_{r0}^{r1} r^2 dr and the P1 moments against r^2
    const double m2 = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
    const double stiff = 4.0 * pi * a * m2 / (h * h);
    diag[c] += stiff;
    diag[c + 1] += stiff;
    off[c] -= stiff;
    if (!inside) continue;
    // exact P1 mass and load with weight r^2 (basis l0 = (r1-r)/h, l1 = (r-r0)/h)
    auto moment = [&](int i, int j) {
      // int l_i l_j r^2 dr by 5-point Gauss-Legendre, exact for degree <= 9
      static const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                   0.9061798459386640};
      static const double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                   0.2369268850561891};
      double s = 0.0;
      for (int q = 0; q < 5; ++q) {
        const double r = 0.5 * (r0 + r1) + 0.5 * h * xg[q];
        const double l[2] = {(r1 - r) / h, (r - r0) / h};
        const double li = i < 0 ? 1.0 : l[i];
        s += 0.5 * h * wg[q] * li * l[j] * r * r;
      }
      return 4.0 * pi * s;
    };
    diag[c] += moment(0, 0) / p.K;
    diag[c + 1] += moment(1, 1) / p.K;
    off[c] += moment(0, 1) / p.K;
    w[c] += moment(-1, 0);
    w[c + 1] += moment(-1, 1);
  }
  diag[N - 1] += 4.0 * pi * r_inf;
  // Thomas solve T y = w
  std::vector<double> cp(N), dp(N), y(N);
  cp[0] = off[0] / diag[0];
  dp[0] = w[0] / diag[0];
  for (int i = 1; i < N; ++i) {
    const double den = diag[i] - off[i - 1] * cp[i - 1];
    cp[i] = i < N - 1 ? off[i] / den : 0.0;
    dp[i] = (w[i] - off[i - 1] * dp[i - 1]) / den;
  }
  y[N - 1] = dp[N - 1];
  for (int i = N - 2; i >= 0; --i) y[i] = dp[i] - cp[i] * y[i + 1];
  double wy = 0.0;
  for (int i = 0; i < N; ++i) wy += w[i] * y[i];
  const double alpha = -1.0 / (vol * (1.0 - wy / (vol * p.K)));
  RadialMinimum out;
  out.r.resize(N);
  out.psi.resize(N);
  double wx = 0.0;
  for (int i = 0; i < N; ++i) {
    out.r[i] = i * h;
    out.psi[i] = alpha * y[i];
    wx += w[i] * out.psi[i];
  }
  out.J = 0.5 * wx / vol;
  return out;
}

}  // namespace oracle
