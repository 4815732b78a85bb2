#pragma once

// Batch experiments behind droplet-cli: JSON configuration and the ball,
// spectrum, flow, sweep and verify commands. Every file written carries the
// hash of the canonical configuration.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "droplet/ball.hpp"
#include "droplet/mode_spectrum.hpp"
#include "droplet/shape.hpp"
#include "droplet/shape_calculus.hpp"
#include "droplet/transmission.hpp"

namespace droplet {

using nlohmann::json;

/// Raised for malformed or out-of-range configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct SweepConfig {
  std::vector<double> Q_values{0.0, 0.05, 0.1};
  int m_max = 60;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int shape_l_max = 4;
  double amplitude = 0.1;
};

struct ExperimentConfig {
  PhysicalParams params{3, 2.0, 1.0, 0.1};
  SolverOptions solver{};
  FlowConfig flow{};
  SweepConfig sweep{};
  std::string output = "out";

  void validate() const {
    try {
      params.validate();
      solver.validate();
      flow.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (params.n != 3) throw ConfigError("experiments run in n = 3");
    if (sweep.Q_values.empty()) throw ConfigError("sweep.Q must be non-empty");
    if (sweep.seeds.empty()) throw ConfigError("sweep.seeds must be non-empty");
    for (double q : sweep.Q_values)
      if (!(q >= 0.0)) throw ConfigError("sweep.Q values must be >= 0");
    if (sweep.m_max < 2) throw ConfigError("sweep.m_max must be >= 2");
    if (sweep.shape_l_max < 2) throw ConfigError("sweep.shape_L_max must be >= 2");
    if (!(sweep.amplitude > 0.0 && sweep.amplitude < 0.5)) throw ConfigError("sweep.amplitude must lie in (0, 1/2)");
    if (output.empty()) throw ConfigError("output directory must be non-empty");
  }
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["params"] = {{"n", c.params.n}, {"beta", c.params.beta}, {"K", c.params.K}, {"Q", c.params.Q}};
  j["solver"] = {{"L_max", c.solver.l_max},           {"quad_degree", c.solver.quad_degree},
                 {"N_r", c.solver.n_r},               {"R_inf", c.solver.r_inf},
                 {"cg_tol", c.solver.cg_tol},         {"max_iter", c.solver.max_iter},
                 {"blend", {c.solver.blend.inner_lo, c.solver.blend.inner_hi, c.solver.blend.outer_lo,
                            c.solver.blend.outer_hi}}};
  j["flow"] = {{"step", c.flow.step},         {"shrink", c.flow.shrink},   {"max_steps", c.flow.max_steps},
               {"tol_g", c.flow.tol_g},       {"armijo", c.flow.armijo},   {"min_step", c.flow.min_step}};
  j["sweep"] = {{"Q", c.sweep.Q_values},
                {"m_max", c.sweep.m_max},
                {"seeds", c.sweep.seeds},
                {"shape_L_max", c.sweep.shape_l_max},
                {"amplitude", c.sweep.amplitude}};
  j["output"] = c.output;
  return j;
}

namespace detail {

template <class T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  detail::check_keys(j, {"params", "solver", "flow", "sweep", "output"}, "config");
  if (j.contains("params")) {
    const auto& p = j.at("params");
    detail::check_keys(p, {"n", "beta", "K", "Q"}, "params");
    detail::read_field(p, "n", c.params.n);
    detail::read_field(p, "beta", c.params.beta);
    detail::read_field(p, "K", c.params.K);
    detail::read_field(p, "Q", c.params.Q);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::check_keys(s, {"L_max", "quad_degree", "N_r", "R_inf", "cg_tol", "max_iter", "blend"}, "solver");
    detail::read_field(s, "L_max", c.solver.l_max);
    detail::read_field(s, "quad_degree", c.solver.quad_degree);
    detail::read_field(s, "N_r", c.solver.n_r);
    detail::read_field(s, "R_inf", c.solver.r_inf);
    detail::read_field(s, "cg_tol", c.solver.cg_tol);
    detail::read_field(s, "max_iter", c.solver.max_iter);
    if (s.contains("blend")) {
      std::vector<double> b;
      detail::read_field(s, "blend", b);
      if (b.size() != 4) throw ConfigError("solver.blend needs four radii");
      c.solver.blend = {b[0], b[1], b[2], b[3]};
    }
  }
  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    detail::check_keys(f, {"step", "shrink", "max_steps", "tol_g", "armijo", "min_step"}, "flow");
    detail::read_field(f, "step", c.flow.step);
    detail::read_field(f, "shrink", c.flow.shrink);
    detail::read_field(f, "max_steps", c.flow.max_steps);
    detail::read_field(f, "tol_g", c.flow.tol_g);
    detail::read_field(f, "armijo", c.flow.armijo);
    detail::read_field(f, "min_step", c.flow.min_step);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::check_keys(s, {"Q", "m_max", "seeds", "shape_L_max", "amplitude"}, "sweep");
    detail::read_field(s, "Q", c.sweep.Q_values);
    detail::read_field(s, "m_max", c.sweep.m_max);
    detail::read_field(s, "seeds", c.sweep.seeds);
    detail::read_field(s, "shape_L_max", c.sweep.shape_l_max);
    detail::read_field(s, "amplitude", c.sweep.amplitude);
  }
  detail::read_field(j, "output", c.output);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// The configuration as recorded in output files (without the output path).
inline json hashed_config(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output");
  return j;
}

/// FNV-1a of the canonical (sorted-key) JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = hashed_config(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json shape_json(const ShapeCoeffs& s) {
  return {{"n", s.n()}, {"L_max", s.l_max()}, {"coeffs", s.coeffs()}};
}

inline ShapeCoeffs shape_from_json(const json& j) {
  if (j.at("n").get<int>() != 3) throw InvalidArgument("shape JSON must have n = 3");
  return {j.at("L_max").get<int>(), j.at("coeffs").get<std::vector<double>>()};
}

/// Serialized writer: one file at a time, created under `dir`.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    std::filesystem::create_directories(dir_);
  }

  [[nodiscard]] const std::string& hash() const { return hash_; }
  [[nodiscard]] const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& content) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << content;
  }

  void write_json(const std::string& name, json j) const {
    j["config_hash"] = hash_;
    if (!j.contains("seed")) j["seed"] = nullptr;
    write(name, j.dump(2) + "\n");
  }

  /// CSV with a leading "# config_hash=..., seed=..." line and a header row.
  void write_csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows,
                 const std::string& seed = "none") const {
    std::string s = "# config_hash=" + hash_ + ", seed=" + seed + "\n" + header + "\n";
    for (const auto& r : rows) s += r + "\n";
    write(name, s);
  }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  mutable std::mutex mutex_;
};

/// Runs task(i) for i in [0, count) on `threads` workers.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr err;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline std::string seeds_label(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? ";" : "") + std::to_string(seeds[i]);
  return s;
}

// ---------------------------------------------------------------- commands

inline json ball_report(const ExperimentConfig& cfg) {
  const BallState st = solve_ball(cfg.params);
  const BallEnergies e = ball_energies(st, cfg.params.Q);
  return {{"n", cfg.params.n},
          {"beta", cfg.params.beta},
          {"K", cfg.params.K},
          {"Q", cfg.params.Q},
          {"J_ball", e.J},
          {"G_half", e.G_half},
          {"G_paper", e.G_paper},
          {"F", e.F},
          {"trace", st.trace},
          {"dpsi_in", st.dpsi_in},
          {"dpsi_out", st.dpsi_out},
          {"d2psi_in", st.d2psi_in},
          {"d2psi_out", st.d2psi_out},
          {"convention", "J and G_half carry 1/2 factors; G_paper = 2 G_half; F = 4 pi + Q^2 G_paper"},
          {"config", hashed_config(cfg)}};
}

inline void cmd_ball(const ExperimentConfig& cfg, const OutputDir& out) { out.write_json("ball.json", ball_report(cfg)); }

inline void cmd_spectrum(const ExperimentConfig& cfg, const OutputDir& out) {
  const BallState st = solve_ball(cfg.params);
  const auto rows = spectrum(cfg.sweep.m_max, st);
  std::vector<std::string> lines;
  for (const auto& r : rows) {
    lines.push_back(std::to_string(r.m) + "," + fmt(r.value) + "," + fmt(r.chat1) + "," + fmt(r.chat2) + "," +
                    fmt(r.chat3) + "," + fmt(r.c1) + "," + fmt(r.c2) + "," + fmt(r.A) + "," + fmt(r.C) + "," +
                    fmt(r.d_exterior) + "," + (r.Q_c ? fmt(*r.Q_c) : std::string()));
  }
  out.write_csv("spectrum.csv", "m,value,chat1,chat2,chat3,c1,c2,A,C,d_exterior,Q_c", lines);

  const auto sum = summarize_spectrum(rows, cfg.params.n, std::min(20, cfg.sweep.m_max));
  json calib = json::array();
  for (int m = 2; m <= std::min(8, cfg.sweep.m_max); ++m) {
    const double fd = fd_second_variation(m, cfg.params, 256);
    const double v = rows[m - 2].value;
    calib.push_back({{"m", m}, {"fd", fd}, {"formula", v}, {"rel_diff", std::abs(fd - v) / std::abs(fd)}});
  }
  out.write_json("spectrum_summary.json",
                 {{"m_max", cfg.sweep.m_max},
                  {"rows", rows.size()},
                  {"fit_range", {sum.m_lo, cfg.sweep.m_max}},
                  {"slope", sum.slope},
                  {"ratio_spread", sum.ratio_spread},
                  {"h_half_constant", sum.h_half_constant},
                  {"fd_calibration", calib},
                  {"Q_c_note", "EXPLORATORY: per-mode charge where Q^2 G_paper cancels the perimeter curvature; "
                               "not a threshold claimed by the model analysis"},
                  {"config", hashed_config(cfg)}});
}

struct SweepRow {
  double Q = 0.0;
  std::uint64_t seed = 0;
  double initial_h1 = 0.0;
  double final_h1 = 0.0;
  double initial_gap = 0.0;
  double final_gap = 0.0;
  int iterations = 0;
  std::string status;
  std::string trace;
};

inline std::string trace_jsonl(const FlowTrace& tr, const std::string& hash, std::uint64_t seed, double Q) {
  std::string s;
  for (const auto& it : tr.iterates) {
    json j{{"config_hash", hash}, {"seed", seed},         {"Q", Q},
           {"step", it.step},     {"F", it.F},            {"P", it.P},
           {"J", it.J ? json(*it.J) : json(nullptr)},     {"h1_norm", it.h1_norm},
           {"grad_norm", it.grad_norm},                   {"volume_drift", it.volume_drift},
           {"barycenter_drift", it.barycenter_drift},     {"shape", shape_json(it.shape)}};
    s += j.dump() + "\n";
  }
  return s;
}

inline SweepRow run_sweep_row(const ExperimentConfig& cfg, double Q, std::uint64_t seed, const std::string& hash) {
  PhysicalParams p = cfg.params;
  p.Q = Q;
  const ShapeCoeffs shape0 = project_constraints(random_shape(seed, cfg.sweep.shape_l_max, cfg.sweep.amplitude));
  const FlowTrace tr = run_flow(shape0, p, cfg.solver, cfg.flow);
  SweepRow row;
  row.Q = Q;
  row.seed = seed;
  row.initial_h1 = tr.iterates.front().h1_norm;
  row.final_h1 = tr.iterates.back().h1_norm;
  const double f_ball = evaluate_energy(ShapeCoeffs::zero(cfg.sweep.shape_l_max), p, cfg.solver).F;
  row.initial_gap = tr.iterates.front().F - f_ball;
  row.final_gap = tr.iterates.back().F - f_ball;
  row.iterations = static_cast<int>(tr.iterates.size()) - 1;
  row.status = to_string(tr.status);
  row.trace = trace_jsonl(tr, hash, seed, Q);
  return row;
}

inline std::string sweep_csv_row(const SweepRow& r) {
  return fmt(r.Q) + "," + std::to_string(r.seed) + "," + fmt(r.initial_h1) + "," + fmt(r.final_h1) + "," +
         fmt(r.initial_gap) + "," + fmt(r.final_gap) + "," + std::to_string(r.iterations) + "," + r.status;
}

inline const char* kSweepHeader = "Q,seed,initial_h1,final_h1,initial_gap,final_gap,iterations,status";

struct FlowBatch {
  std::vector<SweepRow> rows;
  /// Some row threw from the solver; its status reads "aborted: ...".
  bool aborted = false;
};

/// One flow per (Q, seed), rows sorted by (Q, seed) whatever the completion order.
inline FlowBatch run_flows(const ExperimentConfig& cfg, const OutputDir& out, const std::vector<double>& Qs,
                           const std::string& summary_name, int threads) {
  struct Job {
    double Q;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double q : Qs)
    for (auto s : cfg.sweep.seeds) jobs.push_back({q, s});
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return a.Q != b.Q ? a.Q < b.Q : a.seed < b.seed;
  });
  FlowBatch batch;
  batch.rows.resize(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    SweepRow& row = batch.rows[i];
    try {
      row = run_sweep_row(cfg, jobs[i].Q, jobs[i].seed, out.hash());
    } catch (const SolverError& e) {
      row = SweepRow{};
      row.Q = jobs[i].Q;
      row.seed = jobs[i].seed;
      row.initial_h1 = row.final_h1 = row.initial_gap = row.final_gap = NAN;
      row.status = std::string("aborted: ") + e.what();
      std::replace(row.status.begin(), row.status.end(), ',', ';');
    }
    char name[96];
    std::snprintf(name, sizeof name, "trace_Q%s_seed%llu.jsonl", fmt(jobs[i].Q).c_str(),
                  static_cast<unsigned long long>(jobs[i].seed));
    out.write(name, row.trace);
  });
  std::vector<std::string> lines;
  for (const auto& r : batch.rows) {
    lines.push_back(sweep_csv_row(r));
    batch.aborted = batch.aborted || r.status.starts_with("aborted");
  }
  out.write_csv(summary_name, kSweepHeader, lines, seeds_label(cfg.sweep.seeds));
  return batch;
}

inline FlowBatch cmd_flow(const ExperimentConfig& cfg, const OutputDir& out, int threads = 1) {
  return run_flows(cfg, out, {cfg.params.Q}, "flow_summary.csv", threads);
}

inline FlowBatch cmd_sweep(const ExperimentConfig& cfg, const OutputDir& out, int threads = 1) {
  std::vector<double> qs = cfg.sweep.Q_values;
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  return run_flows(cfg, out, qs, "sweep_summary.csv", threads);
}

/// Harmonic coefficients of the field as rows r,l,k,coefficient.
inline std::string field_csv(const FieldSolution& f, const std::string& hash) {
  const auto& P = *f.problem;
  const auto& b = P.basis();
  std::string s = "# config_hash=" + hash + ", seed=none\nr,l,k,coefficient\n";
  for (int i = 0; i < P.grid().nodes(); ++i)
    for (std::size_t j = 0; j < P.harmonics(); ++j)
      s += fmt(P.grid().rho[i]) + "," + std::to_string(b.degree(j)) + "," + std::to_string(b.order(j)) + "," +
           fmt(f.value(i, j)) + "\n";
  return s;
}

inline json field_summary(const FieldSolution& f) {
  const auto& o = f.problem->options();
  return {{"J_E", f.J_E},
          {"residual", f.residual},
          {"iterations", f.iterations},
          {"volume", f.volume},
          {"grid", {{"N_r", o.n_r}, {"R_inf", o.r_inf}, {"nodes", f.problem->grid().nodes()},
                    {"harmonics", f.problem->harmonics()}}},
          {"shape", shape_json(f.problem->shape())}};
}

struct CheckRow {
  std::string name;
  double measured;
  double bound;
  /// "le": measured <= bound, "gt": measured > bound.
  std::string relation;
  [[nodiscard]] bool pass() const {
    if (!std::isfinite(measured)) return false;
    return relation == "gt" ? measured > bound : measured <= bound;
  }
};

/// Property suite on the configured parameters; returns the manifest rows.
inline std::vector<CheckRow> verify_checks(const ExperimentConfig& cfg) {
  std::vector<CheckRow> rows;
  PhysicalParams p = cfg.params;
  const BallState st = solve_ball(p);
  const PairField pair = recover_pair_ball(st);
  rows.push_back({"ball_J_nonpositive", st.J_ball, 0.0, "le"});
  rows.push_back({"ball_duality_residual", duality_residual(st), 1e-6, "le"});
  rows.push_back({"ball_rho_integral_error", std::abs(pair.rho_integral - 1.0), 1e-10, "le"});
  double spread = 0.0, lo_u = INFINITY, hi_u = -INFINITY;
  for (std::size_t i = 0; i < pair.r.size(); ++i) {
    if (pair.r[i] > 1.0) continue;
    spread = std::max(spread, std::abs(pair.u[i] + p.K * pair.rho[i] - pair.G_paper));
    lo_u = std::min(lo_u, std::min(pair.u[i], p.K * pair.rho[i]));
    hi_u = std::max(hi_u, std::max(pair.u[i], p.K * pair.rho[i]));
  }
  rows.push_back({"ball_pair_identity", spread, 1e-8, "le"});
  rows.push_back({"ball_pair_lower_bound", -lo_u, 0.0, "le"});
  rows.push_back({"ball_pair_upper_bound", hi_u - pair.G_paper, 1e-12, "le"});

  SolverOptions ball_opts = cfg.solver;
  ball_opts.n_r = std::max(ball_opts.n_r, 512);
  const FieldSolution f0 = solve_field(ShapeCoeffs::zero(2), p, ball_opts);
  rows.push_back({"solver_ball_J_error", std::abs(f0.J_E - st.J_ball), 1e-6, "le"});

  const int L = cfg.sweep.shape_l_max;
  const std::uint64_t seed = cfg.sweep.seeds.front();
  const ShapeCoeffs shape = project_constraints(random_shape(seed, L, cfg.sweep.amplitude));
  const FieldSolution f = solve_field(shape, p, cfg.solver);
  rows.push_back({"shape_J_nonpositive", f.J_E, 0.0, "le"});
  rows.push_back({"shape_duality_residual", duality_residual(f), 1e-3, "le"});
  const FieldPair fp = recover_pair(f);
  rows.push_back({"shape_rho_integral_error", std::abs(fp.rho_integral - 1.0), 1e-8, "le"});
  double umin = INFINITY;
  for (std::size_t i = 0; i < fp.u.size(); ++i)
    if (fp.inside[i]) umin = std::min(umin, std::min(fp.u[i], p.K * fp.rho[i]));
  rows.push_back({"shape_pair_lower_bound", -umin, 0.0, "le"});

  // gradients against central differences
  std::vector<double> dir(shape.coeffs().size());
  for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = std::sin(1.7 * i + 0.3);
  auto moved = [&](double e) {
    auto a = shape.coeffs();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += e * dir[i];
    return ShapeCoeffs(L, a);
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  {
    const double h = 1e-5;
    const double fd = (perimeter(moved(h)) - perimeter(moved(-h))) / (2.0 * h);
    const double an = dot(perimeter_gradient(shape), dir);
    rows.push_back({"perimeter_gradient_rel_error", std::abs(an - fd) / std::abs(fd), 1e-8, "le"});
  }
  {
    // the continuum gradient matches the discrete J to O(h^2) in radius
    SolverOptions fine = cfg.solver;
    fine.n_r = std::max(fine.n_r, 256);
    const FieldSolution ff = solve_field(shape, p, fine);
    const double h = 1e-4;
    auto J = [&](double e) { return solve_field(moved(e), p, fine, &ff.x).J_E; };
    const double d1 = (J(h) - J(-h)) / (2.0 * h);
    const double d2 = (J(2.0 * h) - J(-2.0 * h)) / (4.0 * h);
    const double fd = (4.0 * d1 - d2) / 3.0;
    const double an = dot(j_gradient(ff), dir);
    rows.push_back({"j_gradient_rel_error", std::abs(an - fd) / std::abs(fd), 1e-3, "le"});
  }
  {
    PhysicalParams pq = p;
    pq.Q = std::max(p.Q, 0.1);
    const ShapeCoeffs ball = ShapeCoeffs::zero(L);
    const FieldSolution fb = solve_field(ball, pq, cfg.solver);
    const auto g = f_gradient(ball, pq, &fb);
    double n2 = 0.0;
    for (double v : g.projected) n2 += v * v;
    rows.push_back({"ball_projected_dF_norm", std::sqrt(n2), 1e-6, "le"});
  }
  for (int m = 2; m <= 4; ++m) {
    const double fd = fd_second_variation(m, p, 256);
    const double v = second_variation(m, st).value;
    rows.push_back({"mode_" + std::to_string(m) + "_fd_rel_diff", std::abs(fd - v) / std::abs(fd), 0.02, "le"});
  }
  rows.push_back({"shape_pair_identity_spread", fp.identity_spread, 1e-10, "le"});
  {
    const double c = taylor_constant(spectrum(cfg.sweep.m_max, st), p.n);
    double worst = -INFINITY;
    for (auto s : cfg.sweep.seeds)
      worst = std::max(worst,
                       taylor_check(project_constraints(random_shape(s, L, cfg.sweep.amplitude)), p, c, cfg.solver).ratio);
    rows.push_back({"taylor_max_ratio", worst, c, "le"});
  }
  double fug = INFINITY;
  for (auto s : cfg.sweep.seeds)
    fug = std::min(fug, fuglede_check(project_constraints(random_shape(s, L, cfg.sweep.amplitude))).ratio);
  rows.push_back({"fuglede_min_ratio", fug, 0.0, "gt"});
  return rows;
}

inline bool cmd_verify(const ExperimentConfig& cfg, const OutputDir& out) {
  const auto rows = verify_checks(cfg);
  std::vector<std::string> lines;
  bool ok = true;
  for (const auto& r : rows) {
    lines.push_back(r.name + "," + fmt(r.measured) + "," + r.relation + "," + fmt(r.bound) + "," +
                    (r.pass() ? "PASS" : "FAIL"));
    ok = ok && r.pass();
  }
  out.write_csv("verify.csv", "check,measured,relation,bound,status", lines, seeds_label(cfg.sweep.seeds));
  const FieldSolution f = solve_field(
      project_constraints(random_shape(cfg.sweep.seeds.front(), cfg.sweep.shape_l_max, cfg.sweep.amplitude)),
      cfg.params, cfg.solver);
  out.write("field.csv", field_csv(f, out.hash()));
  json summary = field_summary(f);
  summary["seed"] = cfg.sweep.seeds.front();
  out.write_json("field.json", summary);
  return ok;
}

}  // namespace droplet
