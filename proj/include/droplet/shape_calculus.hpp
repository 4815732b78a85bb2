#pragma once

// Shape gradients of P, J and F = P + Q^2 G_paper with respect to the
// harmonic coefficients of phi, and a constrained gradient flow on F.
//
// A coefficient perturbation delta phi moves the boundary with normal flux
// delta phi (1 + phi)^2 per unit solid angle, the same weight as in the
// volume gradient, so every boundary density g enters as
//   dJ/da_j = int_{S^2} g (1 + phi)^2 Y_j.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "droplet/ball.hpp"
#include "droplet/params.hpp"
#include "droplet/shape.hpp"
#include "droplet/transmission.hpp"

namespace droplet {

/// One-sided traces of psi and its physical gradient on the boundary of E,
/// at the angular nodes of the solver basis.
struct BoundaryTraces {
  std::vector<double> psi;
  /// |grad psi|^2 from inside / outside.
  std::vector<double> grad2_in;
  std::vector<double> grad2_out;
  /// normal derivatives from inside / outside.
  std::vector<double> dnu_in;
  std::vector<double> dnu_out;
  /// (1 + phi)^2 at the nodes.
  std::vector<double> weight;
};

inline BoundaryTraces boundary_traces(const FieldSolution& field) {
  const auto& P = *field.problem;
  if (!(field.residual <= 1e-6)) throw SolverError("boundary traces need a converged field");
  const auto& b = P.basis();
  const auto& g = P.grid();
  const std::size_t nh = P.harmonics();
  const std::size_t nn = b.node_count();
  const int N = g.interface;
  const double h_in = g.h(N - 1);
  const double h_out = g.h(N);
  auto nodal = [&](int i, std::vector<double>& f, std::vector<double>& t, std::vector<double>& p) {
    f.resize(nn);
    t.resize(nn);
    p.resize(nn);
    b.synthesize(std::span<const double>(field.psi).subspan(i * nh, nh), f, t, p);
  };
  std::vector<double> f0, t0, p0, fm1, fm2, fp1, fp2, scratch1, scratch2;
  nodal(N, f0, t0, p0);
  nodal(N - 1, fm1, scratch1, scratch2);
  nodal(N - 2, fm2, scratch1, scratch2);
  nodal(N + 1, fp1, scratch1, scratch2);
  nodal(N + 2, fp2, scratch1, scratch2);
  const auto surf = sample_surface(P.shape(), b);

  BoundaryTraces tr;
  tr.psi = f0;
  tr.grad2_in.resize(nn);
  tr.grad2_out.resize(nn);
  tr.dnu_in.resize(nn);
  tr.dnu_out.resize(nn);
  tr.weight.resize(nn);
  for (std::size_t k = 0; k < nn; ++k) {
    const double u = 1.0 + surf.phi[k];
    const std::array<double, 2> s{surf.grad_theta[k], surf.grad_phi[k]};
    // at rho = 1 the map is R^3 = rho^3 + G: R = 1 + phi, R_rho = (1 + phi)^-2
    const double q_in = (3.0 * f0[k] - 4.0 * fm1[k] + fm2[k]) / (2.0 * h_in);
    const double q_out = (-3.0 * f0[k] + 4.0 * fp1[k] - fp2[k]) / (2.0 * h_out);
    const double nrm = std::sqrt(1.0 + (s[0] * s[0] + s[1] * s[1]) / (u * u));
    auto physical = [&](double q, double& grad2, double& dnu) {
      const double pr = q * u * u;
      const double tt = (t0[k] - pr * s[0]) / u;
      const double tp = (p0[k] - pr * s[1]) / u;
      grad2 = pr * pr + tt * tt + tp * tp;
      dnu = (pr - (tt * s[0] + tp * s[1]) / u) / nrm;
    };
    physical(q_in, tr.grad2_in[k], tr.dnu_in[k]);
    physical(q_out, tr.grad2_out[k], tr.dnu_out[k]);
    tr.weight[k] = u * u;
  }
  return tr;
}

/// Coefficient gradient of J at the shape the field was solved on, in
/// harmonic_index order of the shape degree.
inline std::vector<double> j_gradient(const FieldSolution& field) {
  const auto& P = *field.problem;
  const auto& b = P.basis();
  const double K = P.params().K;
  const double beta = P.params().beta;
  const double vol = field.volume;
  const double I = field.psi_integral;
  const auto tr = boundary_traces(field);
  // explicit dependence of the functional on |E| at fixed psi
  const double c_vol = -I / (vol * vol) + I * I / (2.0 * K * vol * vol);
  const auto w = b.weights();
  std::vector<double> dens(b.node_count());
  for (std::size_t k = 0; k < dens.size(); ++k) {
    const double psi = tr.psi[k];
    const double g = (1.0 - I / K) * psi / vol + 0.5 * (beta * tr.grad2_in[k] - tr.grad2_out[k]) +
                     psi * psi / (2.0 * K) - tr.dnu_out[k] * (tr.dnu_in[k] - tr.dnu_out[k]);
    dens[k] = w[k] * (g + c_vol) * tr.weight[k];
  }
  std::vector<double> out(b.size(), 0.0);
  b.synthesize_adjoint(dens, {}, {}, out);
  return to_shape_order(out, b, P.shape().l_max());
}

struct ShapeGradient {
  std::vector<double> dP;
  std::vector<double> dJ;
  std::vector<double> dF;
  std::vector<double> dV;
  std::array<std::vector<double>, 3> dB;
  /// dF with its component in span{dV, dB} removed (Euclidean).
  std::vector<double> projected;
};

/// Removes from g its Euclidean projection on span(constraints).
inline std::vector<double> project_out(std::span<const double> g, const std::vector<std::vector<double>>& constraints) {
  const std::size_t n = g.size();
  Eigen::MatrixXd C(n, constraints.size());
  for (std::size_t c = 0; c < constraints.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) C(i, c) = constraints[c][i];
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), n);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, qr.rank());
  const Eigen::VectorXd r = gv - Q * (Q.transpose() * gv);
  return {r.data(), r.data() + n};
}

inline std::vector<std::vector<double>> constraint_gradients(const ShapeCoeffs& shape) {
  auto dB = barycenter_gradient(shape);
  return {volume_gradient(shape), dB[0], dB[1], dB[2]};
}

/// Gradient of F = P + Q^2 (K/|E| - 2 J). With Q = 0 the field may be null.
inline ShapeGradient f_gradient(const ShapeCoeffs& shape, const PhysicalParams& params, const FieldSolution* field) {
  ShapeGradient sg;
  sg.dP = perimeter_gradient(shape);
  sg.dV = volume_gradient(shape);
  sg.dB = barycenter_gradient(shape);
  sg.dF = sg.dP;
  sg.dJ.assign(sg.dP.size(), 0.0);
  if (params.Q > 0.0) {
    if (field == nullptr) throw InvalidArgument("f_gradient with Q > 0 needs a field solution");
    sg.dJ = j_gradient(*field);
    const double Q2 = params.Q * params.Q;
    const double vol = field->volume;
    for (std::size_t j = 0; j < sg.dF.size(); ++j)
      sg.dF[j] += -Q2 * params.K / (vol * vol) * sg.dV[j] - 2.0 * Q2 * sg.dJ[j];
  }
  sg.projected = project_out(sg.dF, {sg.dV, sg.dB[0], sg.dB[1], sg.dB[2]});
  return sg;
}

struct FlowConfig {
  double step = 1.0;
  double shrink = 0.5;
  int max_steps = 500;
  /// Stop when the H^1-dual norm of the projected gradient falls below this.
  double tol_g = 2e-4;
  double armijo = 1e-4;
  double min_step = 1e-10;

  void validate() const {
    if (!(step > 0.0)) throw InvalidArgument("flow step must be positive");
    if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidArgument("flow shrink must lie in (0, 1)");
    if (max_steps <= 0) throw InvalidArgument("flow max_steps must be positive");
    if (!(tol_g > 0.0)) throw InvalidArgument("flow tol_g must be positive");
    if (!(armijo > 0.0 && armijo < 0.5)) throw InvalidArgument("flow armijo constant must lie in (0, 1/2)");
    if (!(min_step > 0.0)) throw InvalidArgument("flow min_step must be positive");
  }
};

struct FlowIterate {
  int step = 0;
  ShapeCoeffs shape;
  double F = 0.0;
  double P = 0.0;
  /// Absent when Q = 0 (no field solve is needed).
  std::optional<double> J;
  double h1_norm = 0.0;
  double grad_norm = 0.0;
  double volume_drift = 0.0;
  double barycenter_drift = 0.0;
};

enum class FlowStatus { converged, max_steps, step_underflow };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::converged:
      return "converged";
    case FlowStatus::max_steps:
      return "max_steps";
    case FlowStatus::step_underflow:
      return "step_underflow";
  }
  return "unknown";
}

struct FlowTrace {
  std::vector<FlowIterate> iterates;
  FlowStatus status = FlowStatus::max_steps;
  bool monotone = true;
};

/// Evaluates F at a shape, reusing `warm` as CG initial guess when sizes match.
struct EnergyEvaluation {
  double F;
  double P;
  std::optional<double> J;
  std::optional<FieldSolution> field;
};

inline EnergyEvaluation evaluate_energy(const ShapeCoeffs& shape, const PhysicalParams& params,
                                        const SolverOptions& opts, const std::vector<double>* warm = nullptr) {
  EnergyEvaluation e;
  e.P = perimeter(shape);
  e.F = e.P;
  if (params.Q > 0.0) {
    FieldSolution f = solve_field(shape, params, opts, warm);
    e.J = f.J_E;
    e.F += params.Q * params.Q * g_energy(f).G_paper;
    e.field = std::move(f);
  }
  return e;
}

/// Projected gradient descent on F in the H^1 metric S = diag(1 + l(l+1)),
/// with Armijo backtracking and re-projection of every trial shape.
inline FlowTrace run_flow(const ShapeCoeffs& shape0, const PhysicalParams& params, const SolverOptions& opts,
                          const FlowConfig& cfg) {
  params.validate();
  cfg.validate();
  const double target = unit_ball_volume(3);
  ShapeCoeffs shape = project_constraints(shape0);
  const int L = shape.l_max();
  std::vector<double> s_inv(harmonic_count(L));
  for (int l = 0; l <= L; ++l)
    for (int k = -l; k <= l; ++k) s_inv[harmonic_index(l, k)] = 1.0 / (1.0 + laplace_beltrami_eigenvalue(l));

  FlowTrace trace;
  EnergyEvaluation cur = evaluate_energy(shape, params, opts);
  double t = cfg.step;
  for (int it = 0;; ++it) {
    const ShapeGradient sg = f_gradient(shape, params, cur.field ? &*cur.field : nullptr);
    // S-metric projection of -S^{-1} dF onto the constraint tangent space
    const std::vector<std::vector<double>> cons{sg.dV, sg.dB[0], sg.dB[1], sg.dB[2]};
    const std::size_t n = sg.dF.size();
    Eigen::MatrixXd C(n, cons.size());
    for (std::size_t c = 0; c < cons.size(); ++c)
      for (std::size_t i = 0; i < n; ++i) C(i, c) = cons[c][i];
    Eigen::VectorXd g(n), Sg(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = sg.dF[i];
      Sg[i] = s_inv[i] * g[i];
    }
    Eigen::MatrixXd SC = C;
    for (std::size_t i = 0; i < n; ++i) SC.row(i) *= s_inv[i];
    const Eigen::MatrixXd gram = C.transpose() * SC;
    const Eigen::VectorXd lam = gram.completeOrthogonalDecomposition().solve(C.transpose() * Sg);
    const Eigen::VectorXd dir = -(Sg - SC * lam);
    const double gnorm = std::sqrt(std::max(0.0, -g.dot(dir)));

    FlowIterate rec;
    rec.step = it;
    rec.shape = shape;
    rec.F = cur.F;
    rec.P = cur.P;
    rec.J = cur.J;
    rec.h1_norm = sobolev_norm(shape);
    rec.grad_norm = gnorm;
    rec.volume_drift = std::abs(volume(shape) - target);
    const auto bc = barycenter(shape);
    rec.barycenter_drift = std::sqrt(bc[0] * bc[0] + bc[1] * bc[1] + bc[2] * bc[2]);
    if (!trace.iterates.empty() && rec.F > trace.iterates.back().F) trace.monotone = false;
    trace.iterates.push_back(rec);

    if (gnorm < cfg.tol_g) {
      trace.status = FlowStatus::converged;
      return trace;
    }
    if (it >= cfg.max_steps) {
      trace.status = FlowStatus::max_steps;
      return trace;
    }
    const double slope = g.dot(dir);
    t = std::min(cfg.step, t / cfg.shrink);
    bool accepted = false;
    while (t >= cfg.min_step) {
      std::vector<double> a = shape.coeffs();
      for (std::size_t i = 0; i < n; ++i) a[i] += t * dir[i];
      try {
        ShapeCoeffs trial = project_constraints(ShapeCoeffs(L, std::move(a)));
        const std::vector<double>* warm = cur.field ? &cur.field->x : nullptr;
        EnergyEvaluation next = evaluate_energy(trial, params, opts, warm);
        if (next.F <= cur.F + cfg.armijo * t * slope) {
          shape = std::move(trial);
          cur = std::move(next);
          accepted = true;
          break;
        }
      } catch (const InvalidArgument&) {
        // trial left the nearly-spherical class; shrink
      }
      t *= cfg.shrink;
    }
    if (!accepted) {
      trace.status = FlowStatus::step_underflow;
      return trace;
    }
  }
}

/// F(E) - F(B_1) with the same discretization for both.
inline double energy_gap(const ShapeCoeffs& shape, const PhysicalParams& params, const SolverOptions& opts = {}) {
  params.validate();
  const double e = evaluate_energy(shape, params, opts).F;
  const double e0 = evaluate_energy(ShapeCoeffs::zero(shape.l_max()), params, opts).F;
  return e - e0;
}

struct RatioReport {
  double ratio = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// (J(B_1) - J(E)) / |phi|_{H^1}^2 against the bound `c_fit` (0/0 := 0).
inline RatioReport taylor_check(const ShapeCoeffs& shape, const PhysicalParams& params, double c_fit,
                                const SolverOptions& opts = {}) {
  RatioReport r;
  r.bound = c_fit;
  const double h1 = sobolev_norm(shape);
  if (h1 == 0.0) {
    r.ratio = 0.0;
  } else {
    const double j = j_energy(shape, params, opts);
    const double j0 = j_energy(ShapeCoeffs::zero(shape.l_max()), params, opts);
    r.ratio = (j0 - j) / (h1 * h1);
  }
  r.pass = r.ratio <= r.bound;
  return r;
}

/// (P(E) - P(B_1)) / |phi|_{H^1}^2; passes when strictly positive.
inline RatioReport fuglede_check(const ShapeCoeffs& shape) {
  RatioReport r;
  const double h1 = sobolev_norm(shape);
  if (h1 == 0.0) return r;
  r.ratio = (perimeter(shape) - unit_sphere_area(3)) / (h1 * h1);
  r.pass = r.ratio > 0.0;
  return r;
}

/// Finite-difference second variation of G_half for Y_{m,0} from zonal field
/// solves: -(J(E_e) - 2 J(B_1) + J(E_-e)) / e^2 with volume/barycenter projection.
inline double fd_second_variation(int m, const PhysicalParams& params, int n_r = 512, double eps = 0.01) {
  SolverOptions o;
  o.n_r = n_r;
  o.l_max = 3 * m + 4;
  o.quad_degree = 4 * m + 8;
  o.zonal = true;
  PhysicalParams p = params;
  p.Q = 0.0;
  const double jp = j_energy(project_constraints(ShapeCoeffs::single_mode(m, m, 0, eps)), p, o);
  const double jm = j_energy(project_constraints(ShapeCoeffs::single_mode(m, m, 0, -eps)), p, o);
  const double j0 = j_energy(ShapeCoeffs::zero(m), p, o);
  return -(jp - 2.0 * j0 + jm) / (eps * eps);
}

}  // namespace droplet
