#pragma once

// Radial ground state of the dual problem on the unit ball B_1 in R^n.
//
// Inside, psi = K*lambda + c*S(r) where S is the regular solution of
// S'' + (n-1) S'/r = S/(beta K), S(0) = 1; outside, psi = A r^{2-n}.
// Continuity, the flux condition beta psi+' = psi-' and the self-consistency
// of lambda fix (c, A, lambda).

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "droplet/params.hpp"
#include "droplet/quadrature.hpp"

namespace droplet {

/// Even power series sum s_k r^{2k} of the regular radial solution of
/// S'' + (n-1) S'/r + (lambda_m / r^2) S = S/(beta K) behaving like r^m;
/// m = 0 gives the ground-state profile (sinh(kappa r)/(kappa r) for n = 3).
/// Terms are generated until the next one is below `tol` relative to the sum.
inline std::vector<double> radial_series(int m, int n, double beta_K, double tol = 1e-16) {
  std::vector<double> s{1.0};
  double sum = 1.0;
  for (int i = 1; i < 400; ++i) {
    const double next = s.back() / (beta_K * 2.0 * i * (2.0 * i + 2.0 * m + n - 2.0));
    s.push_back(next);
    sum += next;
    if (std::abs(next) < tol * std::abs(sum)) break;
  }
  return s;
}

struct BallState {
  PhysicalParams params;
  double kappa = 0.0;
  double lambda_const = 0.0;
  double interior_amp = 0.0;
  double exterior_amp = 0.0;
  double J_ball = 0.0;
  double trace = 0.0;
  double dpsi_in = 0.0;
  double dpsi_out = 0.0;
  double d2psi_in = 0.0;
  double d2psi_out = 0.0;
  /// Coefficients of S(r) = sum series[k] r^{2k}.
  std::vector<double> series;
  /// int_{B_1} S.
  double series_integral = 0.0;
  /// Residuals of continuity, flux, and self-consistency.
  Eigen::Vector3d residuals = Eigen::Vector3d::Zero();

  [[nodiscard]] double ball_volume() const { return unit_ball_volume(params.n); }

  [[nodiscard]] double S(double r) const {
    double v = 0.0;
    double p = 1.0;
    for (double c : series) {
      v += c * p;
      p *= r * r;
    }
    return v;
  }
  [[nodiscard]] double dS(double r) const {
    double v = 0.0;
    for (std::size_t k = 1; k < series.size(); ++k) v += 2.0 * k * series[k] * std::pow(r, 2.0 * k - 1.0);
    return v;
  }
  [[nodiscard]] double d2S(double r) const {
    double v = 0.0;
    for (std::size_t k = 1; k < series.size(); ++k)
      v += 2.0 * k * (2.0 * k - 1.0) * series[k] * std::pow(r, 2.0 * k - 2.0);
    return v;
  }

  /// psi_0(r); r <= 1 uses the interior branch.
  [[nodiscard]] double psi(double r) const {
    if (r <= 1.0) return params.K * lambda_const + interior_amp * S(r);
    return exterior_amp * std::pow(r, 2.0 - params.n);
  }
  [[nodiscard]] double dpsi(double r) const {
    if (r <= 1.0) return interior_amp * dS(r);
    return (2.0 - params.n) * exterior_amp * std::pow(r, 1.0 - params.n);
  }
  /// int_{B_1} psi_0.
  [[nodiscard]] double psi_integral() const {
    return params.K * lambda_const * ball_volume() + interior_amp * series_integral;
  }
};

/// Closed-form ground state; `tol` bounds the series truncation and is
/// checked against the residuals of the three defining conditions.
inline BallState solve_ball(const PhysicalParams& params, double tol = 1e-13) {
  params.validate();
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  const int n = params.n;
  const double bk = params.beta_K();
  BallState st;
  st.params = params;
  st.kappa = 1.0 / std::sqrt(bk);
  st.series = radial_series(0, n, bk, std::min(tol, 1e-16));
  double integral = 0.0;
  for (std::size_t k = 0; k < st.series.size(); ++k) integral += st.series[k] / (2.0 * k + n);
  st.series_integral = unit_sphere_area(n) * integral;

  const double S1 = st.S(1.0);
  const double dS1 = st.dS(1.0);
  Eigen::Matrix3d M;
  M << S1, -1.0, params.K, params.beta * dS1, n - 2.0, 0.0, st.series_integral / params.K, 0.0, 0.0;
  const Eigen::Vector3d rhs(0.0, 0.0, 1.0);
  const Eigen::Vector3d x = M.fullPivLu().solve(rhs);
  if (!x.allFinite()) throw SolverError("ball system is singular");
  st.interior_amp = x[0];
  st.exterior_amp = x[1];
  st.lambda_const = x[2];
  st.residuals = (M * x - rhs).cwiseAbs();
  if (st.residuals.maxCoeff() > tol) throw SolverError("ball system residual above tolerance");

  const double vol = st.ball_volume();
  st.J_ball = 0.5 * (params.K * st.lambda_const + params.K / vol);
  st.trace = st.exterior_amp;
  st.dpsi_in = st.interior_amp * dS1;
  st.dpsi_out = -(n - 2.0) * st.exterior_amp;
  st.d2psi_in = -(n - 1.0) * st.dpsi_in + (st.trace - params.K * st.lambda_const) / bk;
  st.d2psi_out = (n - 2.0) * (n - 1.0) * st.exterior_amp;
  return st;
}

struct BoundaryData {
  double trace;
  double dpsi_in;
  double dpsi_out;
  double d2psi_in;
  double d2psi_out;
};

inline BoundaryData boundary_data(const BallState& st) {
  return {st.trace, st.dpsi_in, st.dpsi_out, st.d2psi_in, st.d2psi_out};
}

struct BallEnergies {
  double J;
  /// K/(2|B_1|) - J.
  double G_half;
  /// 2 G_half: the energy with no 1/2 factors.
  double G_paper;
  /// Perimeter plus Q^2 G_paper.
  double F;
};

inline BallEnergies ball_energies(const BallState& st, double Q) {
  if (!(Q >= 0.0)) throw InvalidArgument("Q must be >= 0");
  BallEnergies e{};
  e.J = st.J_ball;
  e.G_half = st.params.K / (2.0 * st.ball_volume()) - st.J_ball;
  e.G_paper = 2.0 * e.G_half;
  e.F = unit_sphere_area(st.params.n) + Q * Q * e.G_paper;
  return e;
}

/// Recovered potential u = -psi and charge density rho on radial samples.
struct PairField {
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> rho;
  double G_paper = 0.0;
  /// int rho, by Gauss-Legendre quadrature of the profile.
  double rho_integral = 0.0;
};

/// rho inside B_1 for the ball state.
inline double ball_rho(const BallState& st, double r) {
  if (r > 1.0) return 0.0;
  const double K = st.params.K;
  return (st.psi(r) + (K - st.psi_integral()) / st.ball_volume()) / K;
}

inline PairField recover_pair_ball(const BallState& st, int samples = 201, double r_max = 3.0) {
  PairField p;
  p.G_paper = ball_energies(st, 0.0).G_paper;
  for (int i = 0; i < samples; ++i) {
    const double r = r_max * i / (samples - 1.0);
    p.r.push_back(r);
    p.u.push_back(-st.psi(r));
    p.rho.push_back(ball_rho(st, r));
  }
  const GaussRule gl = gauss_legendre(64, 0.0, 1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i)
    sum += gl.weights[i] * ball_rho(st, gl.nodes[i]) * std::pow(gl.nodes[i], st.params.n - 1.0);
  p.rho_integral = unit_sphere_area(st.params.n) * sum;
  return p;
}

/// int a |grad u|^2 + K int rho^2 evaluated on the recovered ball pair.
inline double direct_G_paper(const BallState& st) {
  const int n = st.params.n;
  const GaussRule gl = gauss_legendre(64, 0.0, 1.0);
  double grad = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double r = gl.nodes[i];
    const double w = gl.weights[i] * std::pow(r, n - 1.0);
    grad += w * st.dpsi(r) * st.dpsi(r);
    const double rho = ball_rho(st, r);
    mass += w * rho * rho;
  }
  const double area = unit_sphere_area(n);
  const double exterior = area * st.exterior_amp * st.exterior_amp * (n - 2.0);
  return st.params.beta * area * grad + exterior + st.params.K * area * mass;
}

}  // namespace droplet
