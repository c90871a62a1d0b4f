// Command-line front end: Gaussian Schroedinger bridge solving, bridge
// sampling, entropic couplings, flow/score training, simulation-based data
// generation, iterated reference refitting, metrics, and the benchmark
// pipelines. One JSON config per run; flags override scalars only. Outputs
// are written atomically and every run leaves a manifest.

#include <chrono>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ousb/experiments.hpp"
#include "ousb/io.hpp"
#include "ousb/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ousb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitInternal = 5;

struct RunContext {
  json config;
  fs::path config_dir;
  fs::path out_dir;
  uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> artifacts;

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return out_dir / name;
  }

  void finish() {
    Manifest manifest;
    manifest.config_hash = config_hash(config);
    manifest.seed = seed;
    manifest.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.artifacts = artifacts;
    fs::create_directories(out_dir);
    write_manifest(out_dir, manifest);
  }
};

double get_num(const json& j, const char* key, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("config: missing key '") + key + "'");
  }
  if (!j.at(key).is_number())
    throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, std::optional<int> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("config: missing key '") + key + "'");
  }
  if (!j.at(key).is_number_integer())
    throw ConfigError(std::string("config: '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

fs::path resolve(const RunContext& ctx, const std::string& path) {
  fs::path p(path);
  return p.is_absolute() ? p : ctx.config_dir / p;
}

OUProcess load_process(const RunContext& ctx) {
  const bool inline_proc = ctx.config.contains("process");
  const bool file_proc = ctx.config.contains("process_file");
  if (inline_proc == file_proc)
    throw ConfigError("config: exactly one of 'process' or 'process_file' is required");
  if (inline_proc) return process_from_json(ctx.config.at("process"));
  return process_from_json(
      read_json_file(resolve(ctx, ctx.config.at("process_file").get<std::string>())));
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ConfigError(std::string("config: '") + what + "' must be a nonempty array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

std::vector<double> times_from(const json& cfg, double horizon) {
  if (cfg.contains("times")) {
    const auto& t = cfg.at("times");
    if (!t.is_array() || t.empty()) throw ConfigError("config: 'times' must be a nonempty array");
    return t.get<std::vector<double>>();
  }
  const int n = get_int(cfg, "n_times", 101);
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = horizon * (n == 1 ? 0.0 : static_cast<double>(k) / (n - 1));
  return out;
}

TrainConfig train_config_from(const json& cfg, uint64_t seed, int cache_grid) {
  TrainConfig config;
  config.seed = seed;
  config.cache_grid = cache_grid;
  if (cfg.contains("train")) {
    const json& t = cfg.at("train");
    require_known_keys(t,
                       {"batch", "learning_rate", "iterations", "beta1", "beta2", "weight_decay",
                        "adam_eps", "score_weight", "score_weight_value", "hidden_width"},
                       "train");
    config.batch = get_int(t, "batch", config.batch);
    config.learning_rate = get_num(t, "learning_rate", config.learning_rate);
    config.iterations = get_int(t, "iterations", config.iterations);
    config.beta1 = get_num(t, "beta1", config.beta1);
    config.beta2 = get_num(t, "beta2", config.beta2);
    config.weight_decay = get_num(t, "weight_decay", config.weight_decay);
    config.adam_eps = get_num(t, "adam_eps", config.adam_eps);
    config.score_weight_value = get_num(t, "score_weight_value", config.score_weight_value);
    config.hidden_width = get_int(t, "hidden_width", config.hidden_width);
    if (t.contains("score_weight")) {
      const std::string mode = t.at("score_weight").get<std::string>();
      if (mode == "constant")
        config.score_weight = ScoreWeight::kConstant;
      else if (mode == "omega_trace")
        config.score_weight = ScoreWeight::kOmegaTrace;
      else
        throw ConfigError("config: train.score_weight must be 'constant' or 'omega_trace'");
    }
  }
  if (cfg.contains("sinkhorn")) {
    const json& s = cfg.at("sinkhorn");
    require_known_keys(s, {"epsilon", "max_iters", "tol"}, "sinkhorn");
    config.sinkhorn_epsilon = get_num(s, "epsilon", config.sinkhorn_epsilon);
    config.sinkhorn_max_iters = get_int(s, "max_iters", config.sinkhorn_max_iters);
    config.sinkhorn_tol = get_num(s, "tol", config.sinkhorn_tol);
  }
  config.validate();
  return config;
}

std::vector<Snapshot> load_snapshot_files(const RunContext& ctx) {
  if (!ctx.config.contains("snapshots")) throw ConfigError("config: missing key 'snapshots'");
  std::vector<std::string> files;
  const auto& s = ctx.config.at("snapshots");
  if (s.is_string())
    files.push_back(s.get<std::string>());
  else if (s.is_array())
    for (const auto& f : s) files.push_back(f.get<std::string>());
  else
    throw ConfigError("config: 'snapshots' must be a path or list of paths");
  std::vector<Snapshot> all;
  for (const auto& f : files) {
    auto part = read_snapshots_csv(resolve(ctx, f));
    all.insert(all.end(), part.begin(), part.end());
  }
  std::sort(all.begin(), all.end(),
            [](const Snapshot& a, const Snapshot& b) { return a.time < b.time; });
  for (size_t i = 1; i < all.size(); ++i)
    if (all[i].time == all[i - 1].time)
      throw DataError("snapshots: duplicate snapshot time " + format_double(all[i].time));
  return all;
}

Matrix single_snapshot(const RunContext& ctx, const char* key) {
  if (!ctx.config.contains(key))
    throw ConfigError(std::string("config: missing key '") + key + "'");
  const auto snaps = read_snapshots_csv(resolve(ctx, ctx.config.at(key).get<std::string>()));
  if (snaps.size() != 1)
    throw DataError(std::string(key) + ": expected a single snapshot (one distinct t)");
  return snaps[0].samples;
}

// ---------------------------------------------------------------------------

int cmd_gsb_solve(RunContext& ctx) {
  require_known_keys(ctx.config,
                     {"process", "process_file", "T", "grid", "seed", "threads", "out", "rho0",
                      "rhoT", "times", "n_times", "jitter", "drift_csv"},
                     "gsb-solve config");
  const OUProcess process = load_process(ctx);
  const double horizon = get_num(ctx.config, "T");
  const int grid = get_int(ctx.config, "grid", 512);
  const double jitter = get_num(ctx.config, "jitter", 0.0);
  if (!ctx.config.contains("rho0") || !ctx.config.contains("rhoT"))
    throw ConfigError("config: gsb-solve requires 'rho0' and 'rhoT'");
  Gaussian rho0 = gaussian_from_json(ctx.config.at("rho0"));
  Gaussian rhoT = gaussian_from_json(ctx.config.at("rhoT"));
  if (jitter > 0.0) {
    rho0.cov += jitter * Matrix::Identity(process.dim, process.dim);
    rhoT.cov += jitter * Matrix::Identity(process.dim, process.dim);
  }
  GSBSolution sol(GSBProblem{process, rho0, rhoT, horizon, grid});
  const auto times = times_from(ctx.config, horizon);

  std::ostringstream csv;
  const int d = process.dim;
  csv << "t";
  for (int i = 1; i <= d; ++i) csv << ",nu_" << i;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) csv << ",Xi_" << i << j;
  csv << "\n";
  for (double t : times) {
    const Vector nu = sol.mean(t);
    const Matrix xi = sol.var(t);
    csv << format_double(t);
    for (int i = 0; i < d; ++i) csv << "," << format_double(nu[i]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) csv << "," << format_double(xi(i, j));
    csv << "\n";
  }
  atomic_write(ctx.artifact("marginals.csv"), csv.str());

  if (ctx.config.value("drift_csv", false)) {
    std::ostringstream drift;
    drift << "t";
    for (int i = 1; i <= d; ++i) drift << ",nudot_" << i;
    for (int i = 1; i <= d; ++i)
      for (int j = 1; j <= d; ++j) drift << ",M_" << i << j;
    drift << "\n";
    for (double t : times) {
      const double tc = sol.cache().clamp_time(t);
      const Vector nudot = sol.mean_dot(tc);
      const Matrix m = sol.drift_matrix(tc);
      drift << format_double(t);
      for (int i = 0; i < d; ++i) drift << "," << format_double(nudot[i]);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) drift << "," << format_double(m(i, j));
      drift << "\n";
    }
    atomic_write(ctx.artifact("drift.csv"), drift.str());
  }
  return kExitOk;
}

int cmd_bridge_sample(RunContext& ctx) {
  require_known_keys(ctx.config,
                     {"process", "process_file", "T", "grid", "seed", "threads", "out", "pin",
                      "times", "n_times", "n_samples"},
                     "bridge-sample config");
  const OUProcess process = load_process(ctx);
  const double horizon = get_num(ctx.config, "T");
  const int grid = get_int(ctx.config, "grid", 512);
  const int n_samples = get_int(ctx.config, "n_samples", 100);
  if (!ctx.config.contains("pin")) throw ConfigError("config: missing key 'pin'");
  require_known_keys(ctx.config.at("pin"), {"x0", "xT"}, "pin");
  const BridgePin pin = BridgePin::create(vector_from(ctx.config.at("pin").at("x0"), "pin.x0"),
                                          vector_from(ctx.config.at("pin").at("xT"), "pin.xT"),
                                          horizon);
  KernelCache cache(process, horizon, grid);
  const auto times = times_from(ctx.config, horizon);

  std::vector<Snapshot> out;
  Rng rng(ctx.seed);
  for (double t : times) {
    Snapshot snap;
    snap.time = t;
    snap.samples.resize(n_samples, process.dim);
    for (int i = 0; i < n_samples; ++i)
      snap.samples.row(i) = bridge_sample(cache, pin, t, rng).transpose();
    out.push_back(std::move(snap));
  }
  write_snapshots_csv(ctx.artifact("samples.csv"), out);
  return kExitOk;
}

int cmd_eot(RunContext& ctx) {
  require_known_keys(ctx.config,
                     {"process", "process_file", "T", "grid", "seed", "threads", "out", "x0_csv",
                      "xT_csv", "sinkhorn"},
                     "eot config");
  const OUProcess process = load_process(ctx);
  const double horizon = get_num(ctx.config, "T");
  const int grid = get_int(ctx.config, "grid", 512);
  const Matrix x0 = single_snapshot(ctx, "x0_csv");
  const Matrix xT = single_snapshot(ctx, "xT_csv");
  double epsilon = 1.0;
  int max_iters = 10000;
  double tol = 1e-8;
  if (ctx.config.contains("sinkhorn")) {
    const json& s = ctx.config.at("sinkhorn");
    require_known_keys(s, {"epsilon", "max_iters", "tol"}, "sinkhorn");
    epsilon = get_num(s, "epsilon", epsilon);
    max_iters = get_int(s, "max_iters", max_iters);
    tol = get_num(s, "tol", tol);
  }

  KernelCache cache(process, horizon, grid);
  const Matrix cost = mvou_cost(cache, x0, xT);
  const int n = static_cast<int>(x0.rows()), m = static_cast<int>(xT.rows());
  const Coupling coupling = sinkhorn(cost, Vector::Constant(n, 1.0 / n),
                                     Vector::Constant(m, 1.0 / m), epsilon, max_iters, tol);

  std::ostringstream plan;
  plan << "i,j,mass\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (coupling.plan(i, j) > 1e-12)
        plan << i << "," << j << "," << format_double(coupling.plan(i, j)) << "\n";
  atomic_write(ctx.artifact("plan.csv"), plan.str());

  write_json_file(ctx.artifact("report.json"),
                  json{{"iterations", coupling.iterations},
                       {"marginal_error", coupling.marginal_error},
                       {"converged", coupling.converged},
                       {"epsilon", coupling.epsilon}});
  return coupling.converged ? kExitOk : kExitNumerical;
}

int cmd_train(RunContext& ctx) {
  require_known_keys(ctx.config,
                     {"process", "process_file", "grid", "seed", "threads", "out", "snapshots",
                      "train", "sinkhorn"},
                     "train config");
  const OUProcess process = load_process(ctx);
  const int grid = get_int(ctx.config, "grid", 512);
  const auto snapshots = load_snapshot_files(ctx);
  const TrainConfig config = train_config_from(ctx.config, ctx.seed, grid);
  const Checkpoint ckpt = train(snapshots, process, config);
  write_json_file(ctx.artifact("checkpoint.json"), json(ckpt));
  return kExitOk;
}

int cmd_sample(RunContext& ctx) {
  require_known_keys(
      ctx.config,
      {"seed", "threads", "out", "checkpoint", "init_csv", "mode", "steps", "n_record"},
      "sample config");
  if (!ctx.config.contains("checkpoint")) throw ConfigError("config: missing key 'checkpoint'");
  const Checkpoint ckpt = checkpoint_from_json(
      read_json_file(resolve(ctx, ctx.config.at("checkpoint").get<std::string>())));
  const Matrix init = single_snapshot(ctx, "init_csv");
  if (init.cols() != ckpt.process.dim)
    throw DataError("sample: init dimension does not match checkpoint");
  const std::string mode = ctx.config.value("mode", std::string("sde"));
  if (mode != "sde" && mode != "ode") throw ConfigError("config: 'mode' must be 'sde' or 'ode'");
  const int steps = get_int(ctx.config, "steps", 100);
  const int n_record = std::min(get_int(ctx.config, "n_record", 11), steps + 1);

  const auto grid = uniform_grid(ckpt.t_begin, ckpt.t_end, steps);
  std::vector<int> keep;
  for (int k = 0; k < n_record; ++k)
    keep.push_back(static_cast<int>(
        std::lround((n_record == 1 ? 0.0 : static_cast<double>(k) / (n_record - 1)) * steps)));

  std::vector<Trajectory> trajectories(init.rows());
  auto thin_out = [&](const Trajectory& full) {
    Trajectory thin;
    thin.seed = full.seed;
    thin.states.resize(static_cast<Eigen::Index>(keep.size()), init.cols());
    for (size_t k = 0; k < keep.size(); ++k) {
      thin.times.push_back(full.times[keep[k]]);
      thin.states.row(static_cast<Eigen::Index>(k)) = full.states.row(keep[k]);
    }
    return thin;
  };
  if (mode == "sde") {
    DriftField drift = [&](double t, const Vector& x) { return sb_drift(ckpt, t, x); };
    par::parallel_for(init.rows(), [&](int64_t i) {
      trajectories[i] = thin_out(euler_maruyama(drift, ckpt.process.sigma, init.row(i).transpose(),
                                                grid, Rng::derive(ctx.seed, i).next_u64()));
    });
  } else {
    // PF-ODE: deterministic transport by the flow field alone.
    const double span = ckpt.t_end - ckpt.t_begin;
    DriftField flow = [&](double t, const Vector& x) {
      const double t_norm = span > 0.0 ? (t - ckpt.t_begin) / span : 0.0;
      return net_forward(ckpt.flow_net, t_norm, x);
    };
    par::parallel_for(init.rows(), [&](int64_t i) {
      trajectories[i] = thin_out(rk4(flow, init.row(i).transpose(), grid));
    });
  }
  write_trajectories_csv(ctx.artifact("trajectories.csv"), trajectories);
  return kExitOk;
}

int cmd_simulate(RunContext& ctx) {
  require_known_keys(ctx.config,
                     {"process", "process_file", "seed", "threads", "out", "sim", "gamma"},
                     "simulate config");
  if (!ctx.config.contains("sim")) throw ConfigError("config: missing key 'sim'");
  const json& sim = ctx.config.at("sim");
  require_known_keys(sim,
                     {"experiment", "d", "n_samples", "n_per_snapshot", "n_snapshots", "t_end",
                      "dt", "snapshot_times", "x0", "T", "steps", "n_trajectories",
                      "repressilator"},
                     "sim");
  const std::string experiment = sim.value("experiment", std::string(""));
  if (experiment == "repressilator") {
    RepressilatorParams params;
    if (sim.contains("repressilator")) {
      const json& rp = sim.at("repressilator");
      require_known_keys(rp, {"beta", "n", "k", "gamma", "sigma"}, "sim.repressilator");
      params.beta = get_num(rp, "beta", params.beta);
      params.hill = get_num(rp, "n", params.hill);
      params.k = get_num(rp, "k", params.k);
      params.gamma = get_num(rp, "gamma", params.gamma);
      params.sigma = get_num(rp, "sigma", params.sigma);
    }
    const int n_per = get_int(sim, "n_per_snapshot", 100);
    const int n_snap = get_int(sim, "n_snapshots", 10);
    const double t_end = get_num(sim, "t_end", 10.0);
    const double dt = get_num(sim, "dt", 1e-3);
    std::vector<double> times;
    if (sim.contains("snapshot_times"))
      times = sim.at("snapshot_times").get<std::vector<double>>();
    else
      for (int k = 0; k < n_snap; ++k)
        times.push_back(t_end * static_cast<double>(k) / (n_snap - 1));
    const auto mats = repressilator_snapshots(params, n_per, times, ctx.seed, dt);
    std::vector<Snapshot> snaps;
    for (size_t k = 0; k < times.size(); ++k) snaps.push_back({times[k], mats[k]});
    write_snapshots_csv(ctx.artifact("snapshots.csv"), snaps);
    return kExitOk;
  }
  if (experiment == "gaussian-benchmark") {
    const int d = get_int(sim, "d", 2);
    const int n_samples = get_int(sim, "n_samples", 128);
    const GaussianBenchmark bench = gaussian_benchmark(d, ctx.seed, n_samples);
    write_snapshots_csv(ctx.artifact("snapshots.csv"),
                        {{0.0, bench.samples0}, {1.0, bench.samples1}});
    write_json_file(ctx.artifact("process.json"), json(bench.process));
    write_json_file(ctx.artifact("marginals.json"),
                    json{{"rho0", bench.rho0}, {"rho1", bench.rho1}});
    return kExitOk;
  }
  if (experiment == "gaussian-mixture") {
    const int d = get_int(sim, "d", 10);
    const int n_samples = get_int(sim, "n_samples", 128);
    const auto [x0, x1] = gaussian_mixture_data(d, ctx.seed, n_samples, n_samples);
    write_snapshots_csv(ctx.artifact("snapshots.csv"), {{0.0, x0}, {1.0, x1}});
    return kExitOk;
  }
  if (experiment == "ou") {
    OUProcess process = load_process(ctx);
    if (ctx.config.contains("gamma"))
      process = scale_drift(process, get_num(ctx.config, "gamma", 1.0));
    const double horizon = get_num(sim, "T", 1.0);
    const int steps = get_int(sim, "steps", 1000);
    const int n_traj = get_int(sim, "n_trajectories", 10);
    if (!sim.contains("x0")) throw ConfigError("config: sim.x0 required for the ou experiment");
    const Vector x0 = vector_from(sim.at("x0"), "sim.x0");
    const OUProcess run_process = process;
    DriftField drift = [&run_process](double, const Vector& x) {
      return run_process.drift * (x - run_process.target);
    };
    const auto grid = uniform_grid(0.0, horizon, steps);
    std::vector<Trajectory> trajectories(n_traj);
    par::parallel_for(n_traj, [&](int64_t i) {
      trajectories[i] =
          euler_maruyama(drift, run_process.sigma, x0, grid, Rng::derive(ctx.seed, i).next_u64());
    });
    write_trajectories_csv(ctx.artifact("trajectories.csv"), trajectories);
    return kExitOk;
  }
  throw ConfigError(
      "config: sim.experiment must be one of repressilator, gaussian-benchmark, "
      "gaussian-mixture, ou");
}

int cmd_refit(RunContext& ctx) {
  require_known_keys(ctx.config,
                     {"process", "process_file", "grid", "seed", "threads", "out", "snapshots",
                      "train", "sinkhorn", "refit"},
                     "refit config");
  const OUProcess initial = load_process(ctx);
  const int grid = get_int(ctx.config, "grid", 512);
  const auto snapshots = load_snapshot_files(ctx);
  const TrainConfig config = train_config_from(ctx.config, ctx.seed, grid);

  int outer_iters = 5;
  int em_steps = 100;
  bool loo = false;
  std::vector<double> lambda_grid = default_lambda_grid();
  if (ctx.config.contains("refit")) {
    const json& r = ctx.config.at("refit");
    require_known_keys(r, {"outer_iters", "em_steps", "loo", "lambda_grid"}, "refit");
    outer_iters = get_int(r, "outer_iters", outer_iters);
    em_steps = get_int(r, "em_steps", em_steps);
    loo = r.value("loo", false);
    if (r.contains("lambda_grid")) lambda_grid = r.at("lambda_grid").get<std::vector<double>>();
  }

  const RefitState state = iterated_refit(snapshots, initial, outer_iters, config, lambda_grid);
  json iterations = json::array();
  for (size_t k = 0; k < state.iterations.size(); ++k) {
    const auto& round = state.iterations[k];
    write_json_file(ctx.artifact("process_iter_" + std::to_string(k) + ".json"),
                    json(round.process));
    write_json_file(ctx.artifact("checkpoint_iter_" + std::to_string(k) + ".json"),
                    json(round.checkpoint));
    iterations.push_back(json{{"lambda", round.fit.lambda},
                              {"cv_mse", round.fit.cv_mse},
                              {"residual", round.fit.residual},
                              {"condition", round.fit.condition},
                              {"target_updated", round.fit.target_updated}});
  }
  write_json_file(ctx.artifact("process_final.json"), json(state.final_process));

  json metrics{{"iterations", iterations}};
  if (loo) {
    json per_holdout = json::array();
    for (int held = 1; held + 1 < static_cast<int>(snapshots.size()); ++held) {
      const auto result = leave_one_out(snapshots, held, initial, outer_iters, config, em_steps);
      per_holdout.push_back(json{{"held_out", held},
                                 {"time", snapshots[held].time},
                                 {"emd", result.emd},
                                 {"energy", result.energy}});
    }
    metrics["leave_one_out"] = per_holdout;
  }
  write_json_file(ctx.artifact("metrics.json"), metrics);
  return kExitOk;
}

int cmd_metrics(RunContext& ctx) {
  require_known_keys(ctx.config, {"seed", "threads", "out", "x_csv", "y_csv", "metrics"},
                     "metrics config");
  const Matrix x = single_snapshot(ctx, "x_csv");
  const Matrix y = single_snapshot(ctx, "y_csv");
  std::vector<std::string> which = {"emd", "energy", "bw2"};
  if (ctx.config.contains("metrics"))
    which = ctx.config.at("metrics").get<std::vector<std::string>>();

  json report;
  for (const auto& name : which) {
    if (name == "emd") {
      const MetricReport r = emd_report(x, y);
      report["emd"] = json{{"value", r.value}, {"approximate", r.approximate}};
    } else if (name == "energy") {
      report["energy"] = energy_distance(x, y);
    } else if (name == "bw2") {
      report["bw2"] = bw2(fit_gaussian(x), fit_gaussian(y));
    } else {
      throw ConfigError("config: unknown metric '" + name + "'");
    }
  }
  report["n_x"] = x.rows();
  report["n_y"] = y.rows();
  write_json_file(ctx.artifact("report.json"), report);
  return kExitOk;
}

int cmd_benchmark(RunContext& ctx, const std::string& experiment_flag, int d_flag, int seeds_flag) {
  require_known_keys(
      ctx.config,
      {"seed", "threads", "out", "experiment", "d", "seeds", "train", "sinkhorn", "grid", "refit"},
      "benchmark config");
  const std::string experiment = !experiment_flag.empty()
                                     ? experiment_flag
                                     : ctx.config.value("experiment", std::string("gaussian"));
  const int d = d_flag > 0 ? d_flag : get_int(ctx.config, "d", 2);
  const int n_seeds = seeds_flag > 0 ? seeds_flag : get_int(ctx.config, "seeds", 3);
  const int grid = get_int(ctx.config, "grid", 512);
  TrainConfig config = train_config_from(ctx.config, ctx.seed, grid);

  std::vector<uint64_t> seeds;
  for (int k = 0; k < n_seeds; ++k) seeds.push_back(ctx.seed + static_cast<uint64_t>(k));

  if (experiment == "gaussian") {
    const GaussianBenchmarkResult result = run_gaussian_benchmark(d, seeds, config);
    json runs = json::array();
    for (const auto& run : result.runs)
      runs.push_back(json{{"seed", run.seed},
                          {"mvou_otfm", {{"bw2", run.mvou_bw2}, {"force_error", run.mvou_force}}},
                          {"bm_otfm", {{"bw2", run.bm_bw2}, {"force_error", run.bm_force}}}});
    write_json_file(
        ctx.artifact("metrics.json"),
        json{{"experiment", "gaussian"},
             {"d", d},
             {"runs", runs},
             {"mvou_otfm",
              {{"bw2_mean", result.mvou_bw2_mean}, {"force_error_mean", result.mvou_force_mean}}},
             {"bm_otfm",
              {{"bw2_mean", result.bm_bw2_mean}, {"force_error_mean", result.bm_force_mean}}}});
    return kExitOk;
  }
  if (experiment == "repressilator") {
    int outer_iters = 3;
    if (ctx.config.contains("refit"))
      outer_iters = get_int(ctx.config.at("refit"), "outer_iters", outer_iters);
    if (!ctx.config.contains("train")) config.iterations = 1000;
    const RepressilatorLooResult result = run_repressilator_loo(seeds, config, outer_iters);
    std::vector<double> jac_flat, fit_flat;
    const Matrix jac = repressilator_jacobian(RepressilatorParams{});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        jac_flat.push_back(jac(i, j));
        fit_flat.push_back(result.fitted_drift(i, j));
      }
    write_json_file(ctx.artifact("metrics.json"),
                    json{{"experiment", "repressilator"},
                         {"energy_by_iterate", result.energy_by_iterate},
                         {"emd_by_iterate", result.emd_by_iterate},
                         {"fitted_A", fit_flat},
                         {"jacobian", jac_flat},
                         {"sign_pattern_ok", result.sign_pattern_ok}});
    return kExitOk;
  }
  if (experiment == "planted") {
    if (!ctx.config.contains("train")) config.iterations = 1000;
    const PlantedRecoveryResult result = run_planted_recovery(seeds, config);
    write_json_file(ctx.artifact("metrics.json"), json{{"experiment", "planted"},
                                                       {"rel_errors", result.rel_errors},
                                                       {"median", result.median}});
    return kExitOk;
  }
  throw ConfigError("config: benchmark experiment must be gaussian, repressilator, or planted");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schroedinger bridges with multivariate Ornstein-Uhlenbeck reference processes"};
  app.require_subcommand(1);

  std::string config_path, out_dir, experiment;
  int64_t seed_flag = -1;
  int threads_flag = 0, d_flag = 0, seeds_flag = 0;
  double epsilon_flag = 0.0, jitter_flag = -1.0, gamma_flag = -1.0;
  bool drift_flag = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config JSON");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed_flag, "Seed override");
    sub->add_option("--threads", threads_flag, "Worker cap (results are thread-count independent)");
    return sub;
  };

  auto* gsb_cmd = add_common(app.add_subcommand("gsb-solve", "Closed-form Gaussian SB marginals"));
  gsb_cmd->add_flag("--drift", drift_flag, "Also write the drift-matrix CSV");
  gsb_cmd->add_option("--jitter", jitter_flag, "Add jitter*I to both marginal covariances");
  add_common(app.add_subcommand("bridge-sample", "Sample the pinned bridge law"));
  auto* eot_cmd = add_common(app.add_subcommand("eot", "Entropic coupling of two snapshots"));
  eot_cmd->add_option("--epsilon", epsilon_flag, "Sinkhorn regularisation override");
  add_common(app.add_subcommand("train", "Train flow/score networks"));
  add_common(app.add_subcommand("sample", "Integrate a trained checkpoint"));
  auto* sim_cmd = add_common(app.add_subcommand("simulate", "Generate synthetic data"));
  sim_cmd->add_option("--gamma", gamma_flag, "Drift scale override");
  add_common(app.add_subcommand("refit", "Iterated reference refitting"));
  add_common(app.add_subcommand("metrics", "Compare two snapshot CSVs"));
  auto* bench_cmd = add_common(app.add_subcommand("benchmark", "Paper-protocol benchmark runs"));
  bench_cmd->add_option("--experiment", experiment, "gaussian | repressilator | planted");
  bench_cmd->add_option("--d", d_flag, "Problem dimension");
  bench_cmd->add_option("--seeds", seeds_flag, "Number of seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunContext ctx;
    if (!config_path.empty()) {
      ctx.config = read_json_file(config_path);
      ctx.config_dir = fs::absolute(fs::path(config_path)).parent_path();
    } else {
      ctx.config = json::object();
      ctx.config_dir = fs::current_path();
    }
    if (!ctx.config.is_object()) throw ConfigError("config: top level must be an object");

    // Flags override config scalars only.
    if (seed_flag >= 0) ctx.config["seed"] = static_cast<uint64_t>(seed_flag);
    if (!out_dir.empty()) ctx.config["out"] = out_dir;
    if (threads_flag > 0) ctx.config["threads"] = threads_flag;
    if (drift_flag) ctx.config["drift_csv"] = true;
    if (jitter_flag >= 0.0) ctx.config["jitter"] = jitter_flag;
    if (gamma_flag >= 0.0) ctx.config["gamma"] = gamma_flag;
    if (epsilon_flag > 0.0) {
      if (!ctx.config.contains("sinkhorn")) ctx.config["sinkhorn"] = json::object();
      ctx.config["sinkhorn"]["epsilon"] = epsilon_flag;
    }

    ctx.seed = ctx.config.value("seed", uint64_t{0});
    if (ctx.config.contains("threads")) par::set_thread_count(ctx.config.at("threads").get<int>());
    if (!ctx.config.contains("out")) throw ConfigError("config: missing output directory ('out')");
    ctx.out_dir = fs::path(ctx.config.at("out").get<std::string>());

    int code = kExitInternal;
    if (app.got_subcommand("gsb-solve"))
      code = cmd_gsb_solve(ctx);
    else if (app.got_subcommand("bridge-sample"))
      code = cmd_bridge_sample(ctx);
    else if (app.got_subcommand("eot"))
      code = cmd_eot(ctx);
    else if (app.got_subcommand("train"))
      code = cmd_train(ctx);
    else if (app.got_subcommand("sample"))
      code = cmd_sample(ctx);
    else if (app.got_subcommand("simulate"))
      code = cmd_simulate(ctx);
    else if (app.got_subcommand("refit"))
      code = cmd_refit(ctx);
    else if (app.got_subcommand("metrics"))
      code = cmd_metrics(ctx);
    else if (app.got_subcommand("benchmark"))
      code = cmd_benchmark(ctx, experiment, d_flag, seeds_flag);
    ctx.finish();
    return code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const DegenerateError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
