// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails.
//
//   acceptance                 all criteria
//   acceptance --criterion 4   a single one (6 runs 6a and 6b)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "droplet/droplet.hpp"
#include "oracles.hpp"

using namespace droplet;

namespace {

const PhysicalParams kBase{3, 2.0, 1.0, 0.0};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAIL]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> direction(std::size_t n, double phase) {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::sin(1.3 * i + phase);
  return d;
}

ShapeCoeffs moved(const ShapeCoeffs& s, const std::vector<double>& d, double e) {
  auto a = s.coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += e * d[i];
  return {s.l_max(), a};
}

template <class F>
double richardson(F f, double h) {
  const double d1 = (f(h) - f(-h)) / (2 * h);
  const double d2 = (f(2 * h) - f(-2 * h)) / (4 * h);
  return (4 * d1 - d2) / 3;
}

ShapeCoeffs sample_shape(std::uint64_t seed) { return project_constraints(random_shape(seed, 4, 0.1)); }

SolverOptions radial(int n_r) {
  SolverOptions o;
  o.n_r = n_r;
  return o;
}

Outcome ball_oracle() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const BallState st = solve_ball(kBase);
  const auto fd = oracle::radial_fd_minimum(kBase, 20.0, 10000);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rel = std::abs(fd.J - st.J_ball) / std::abs(st.J_ball);
  out.require(rel <= 1e-5, "J rel diff " + num(rel) + " <= 1e-5");
  out.require(secs <= 1.0, "time " + num(secs) + " s <= 1 s");
  return out;
}

Outcome duality() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const double ball = duality_residual(solve_ball(kBase));
  out.require(ball <= 1e-6, "ball " + num(ball) + " <= 1e-6");
  double worst = 0.0;
  bool decreasing = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = sample_shape(seed);
    double prev = INFINITY;
    for (int n_r : {128, 256, 512}) {
      const double r = duality_residual(solve_field(s, kBase, radial(n_r)));
      decreasing = decreasing && r < prev;
      prev = r;
    }
    worst = std::max(worst, prev);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.require(worst <= 1e-3, "10 shapes at N_r=512 max " + num(worst) + " <= 1e-3");
  out.require(decreasing, "decreasing over N_r 128/256/512");
  out.require(secs <= 60.0, "time " + num(secs) + " s <= 60 s");
  return out;
}

Outcome pair_identities() {
  Outcome out;
  const BallState st = solve_ball(kBase);
  const PairField bp = recover_pair_ball(st);
  double ball_spread = 0.0;
  bool ball_bounds = true;
  for (std::size_t i = 0; i < bp.r.size(); ++i) {
    if (bp.r[i] > 1.0) continue;
    const double u = bp.u[i], krho = kBase.K * bp.rho[i];
    ball_spread = std::max(ball_spread, std::abs(u + krho - bp.G_paper));
    ball_bounds = ball_bounds && u >= 0.0 && krho >= 0.0 && u <= bp.G_paper && krho <= bp.G_paper;
  }
  out.require(std::abs(bp.rho_integral - 1.0) <= 1e-8, "ball int rho - 1 = " + num(bp.rho_integral - 1.0));
  out.require(ball_spread <= 1e-8, "ball u + K rho spread " + num(ball_spread));
  out.require(ball_bounds, "ball 0 <= u, K rho <= G");

  double rho_err = 0.0, spread_ratio = 0.0;
  bool bounds = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = solve_field(sample_shape(seed), kBase);
    const auto p = recover_pair(f);
    rho_err = std::max(rho_err, std::abs(p.rho_integral - 1.0));
    // discretization error of G measured by the duality gap of the same solve
    const double disc = duality_residual(f) * p.G_paper;
    spread_ratio = std::max(spread_ratio, p.identity_spread / (2.0 * disc));
    for (std::size_t i = 0; i < p.u.size(); ++i) {
      if (!p.inside[i]) continue;
      const double krho = kBase.K * p.rho[i];
      bounds = bounds && p.u[i] >= 0.0 && krho >= 0.0 && p.u[i] <= p.G_paper && krho <= p.G_paper;
    }
  }
  out.require(rho_err <= 1e-8, "shapes int rho error " + num(rho_err) + " <= 1e-8");
  out.require(spread_ratio <= 1.0, "shapes spread / (2 x discretization error) " + num(spread_ratio) + " <= 1");
  out.require(bounds, "shapes 0 <= u, K rho <= G");
  return out;
}

Outcome first_variation() {
  Outcome out;
  const PhysicalParams charged{3, 2.0, 1.0, 0.1};
  const auto zero = ShapeCoeffs::zero(4);
  const auto f0 = solve_field(zero, charged);
  const auto g0 = f_gradient(zero, charged, &f0);
  const auto cons = constraint_gradients(zero);
  const double nP = norm(project_out(g0.dP, cons));
  const double nJ = norm(project_out(g0.dJ, cons));
  const double nF = norm(g0.projected);
  out.require(std::max({nP, nJ, nF}) <= 1e-6,
              "ball projected |dP| " + num(nP) + " |dJ| " + num(nJ) + " |dF| " + num(nF) + " <= 1e-6");

  double geo = 0.0, anal = 0.0;
  const auto opts = radial(256);
  for (std::uint64_t seed : {3, 9}) {
    const auto s = sample_shape(seed);
    const auto d = direction(s.coeffs().size(), 0.7 * seed);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    geo = std::max(geo, rel(dot(perimeter_gradient(s), d), richardson([&](double e) { return perimeter(moved(s, d, e)); }, 1e-6)));
    geo = std::max(geo, rel(dot(volume_gradient(s), d), richardson([&](double e) { return volume(moved(s, d, e)); }, 1e-6)));
    const auto f = solve_field(s, charged, opts);
    const auto g = f_gradient(s, charged, &f);
    anal = std::max(anal, rel(dot(g.dJ, d), richardson([&](double e) { return solve_field(moved(s, d, e), charged, opts, &f.x).J_E; }, 1e-4)));
    anal = std::max(anal, rel(dot(g.dF, d), richardson([&](double e) { return evaluate_energy(moved(s, d, e), charged, opts, &f.x).F; }, 1e-4)));
  }
  out.require(geo <= 1e-8, "geometric rel error " + num(geo) + " <= 1e-8");
  out.require(anal <= 1e-3, "J, F rel error " + num(anal) + " <= 1e-3");
  return out;
}

Outcome calibration() {
  Outcome out;
  const BallState st = solve_ball(kBase);
  double worst = 0.0;
  for (int m = 2; m <= 8; ++m) {
    const double fd = fd_second_variation(m, kBase, 256, 0.02);
    worst = std::max(worst, std::abs(fd - second_variation(m, st).value) / std::abs(fd));
  }
  out.require(worst <= 0.02, "FD vs formula m <= 8 max rel " + num(worst) + " <= 2%");
  const auto s = radial_series(0, 3, 1.0);
  double fact = 1.0, sinh_err = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    if (i > 0) fact *= (2.0 * i) * (2.0 * i + 1.0);
    sinh_err = std::max(sinh_err, std::abs(s[i] - 1.0 / fact));
  }
  out.require(sinh_err <= 1e-14, "m=0 sinh coefficients " + num(sinh_err) + " <= 1e-14");
  const double b4 = interior_series(2, PhysicalParams{3, 2.0, 0.5, 0.0})[1];
  out.require(b4 == 1.0 / 14.0, "b4 = " + num(b4) + " == 1/14");
  return out;
}

Outcome growth() {
  Outcome out;
  const BallState st = solve_ball(kBase);
  const auto rows = spectrum(60, st);
  const auto sum = summarize_spectrum(rows, 3, 20);
  out.require(sum.slope > 0.0, "|value| slope over [20,60] " + num(sum.slope) + " > 0");
  bool holds = true;
  for (const auto& r : rows) holds = holds && r.value >= -sum.h_half_constant * std::sqrt(1.0 + laplace_beltrami_eigenvalue(r.m));
  // the constant fitted on [2,30] must also cover [31,120]
  const double c_low = summarize_spectrum(spectrum(30, st), 3, 2).h_half_constant;
  for (int m = 31; m <= 120; ++m)
    holds = holds && second_variation(m, st).value >= -c_low * std::sqrt(1.0 + laplace_beltrami_eigenvalue(m));
  out.require(holds, "H^1/2 bound with c = " + num(sum.h_half_constant));
  return out;
}

Outcome ratio_spread() {
  Outcome out;
  const auto sum = summarize_spectrum(spectrum(60, solve_ball(kBase)), 3, 20);
  out.require(sum.ratio_spread < 0.15, "|value|/m spread over [20,60] " + num(sum.ratio_spread) + " < 15%");
  return out;
}

Outcome fuglede() {
  Outcome out;
  double fmin = INFINITY;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) fmin = std::min(fmin, fuglede_check(sample_shape(seed)).ratio);
  out.require(fmin > 0.0, "100 shapes min ratio " + num(fmin) + " > 0");
  double worst = 0.0;
  for (int l = 2; l <= 10; ++l) {
    const double expect = (l * (l + 1.0) - 2.0) / (2.0 * (1.0 + l * (l + 1.0)));
    const double r = fuglede_check(project_constraints(ShapeCoeffs::single_mode(l, l, 0, 1e-3))).ratio;
    worst = std::max(worst, std::abs(r - expect) / expect);
  }
  out.require(worst <= 0.02, "single modes l <= 10 max rel " + num(worst) + " <= 2%");
  return out;
}

Outcome ball_minimality() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_h1 = 0.0, min_gap = INFINITY;
  int converged = 0, total = 0;
  for (double Q : {0.0, 0.05, 0.1}) {
    PhysicalParams p = kBase;
    p.Q = Q;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s0 = sample_shape(seed);
      const auto tr = run_flow(s0, p, {}, {});
      ++total;
      converged += tr.status == FlowStatus::converged;
      worst_h1 = std::max(worst_h1, tr.iterates.back().h1_norm);
      min_gap = std::min(min_gap, energy_gap(s0, p));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.require(converged == total, std::to_string(converged) + "/" + std::to_string(total) + " flows converged");
  out.require(worst_h1 <= 1e-3, "max final |phi|_H1 " + num(worst_h1) + " <= 1e-3");
  out.require(min_gap > 0.0, "min energy gap " + num(min_gap) + " > 0");
  out.require(secs <= 300.0, "time " + num(secs) + " s <= 300 s");
  return out;
}

Outcome taylor() {
  Outcome out;
  const double c = taylor_constant(spectrum(60, solve_ball(kBase)));
  double worst = -INFINITY;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) worst = std::max(worst, taylor_check(sample_shape(seed), kBase, c).ratio);
  out.require(worst <= c, "max (J(B1) - J(E))/|phi|^2 " + num(worst) + " <= " + num(c));
  return out;
}

struct Criterion {
  const char* id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"1", "ball oracle agreement", ball_oracle},
      {"2", "duality", duality},
      {"3", "pair identities", pair_identities},
      {"4", "first variation", first_variation},
      {"5", "mode-spectrum calibration", calibration},
      {"6a", "asymptotics: growth and H^1/2 bound", growth},
      {"6b", "asymptotics: |value|/m window", ratio_spread},
      {"7", "Fuglede", fuglede},
      {"8", "ball minimality by flows", ball_minimality},
      {"9", "Taylor bound", taylor},
  };
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--criterion ID]\n", argv[0]);
      return 2;
    }
  }
  bool ok = true;
  int ran = 0;
  for (const auto& c : all) {
    const std::string id = c.id;
    if (!only.empty() && id != only && !(only == "6" && id.starts_with("6"))) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = c.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %-2s %s  %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    ok = ok && o.pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion %s\n", only.c_str());
    return 2;
  }
  return ok ? 0 : 1;
}
