// cvf: generate datasets, train secant-field models, evaluate rollouts and
// profile consistency residuals. Every command writes one manifest.json into
// its output directory; `--manifest FILE` replays a recorded run.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cvf/app/manifest.hpp"
#include "cvf/checkpoint.hpp"
#include "cvf/datagen/dataset.hpp"
#include "cvf/datagen/linear_ode.hpp"
#include "cvf/datagen/wave.hpp"
#include "cvf/eval/diagnose.hpp"
#include "cvf/eval/metrics.hpp"
#include "cvf/eval/protocols.hpp"
#include "cvf/train/config.hpp"
#include "cvf/train/fit.hpp"

namespace fs = std::filesystem;
using cvf::app::RunManifest;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3 };

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string abs_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw cvf::IoError("cannot create output directory '" + dir + "'");
  return fs::absolute(dir).lexically_normal();
}

void finish(RunManifest& m, const fs::path& out, Clock::time_point start) {
  m.config_hash = cvf::app::hash_args(m.command, m.args);
  m.out_dir = out.string();
  m.wallclock = std::chrono::duration<double>(Clock::now() - start).count();
  cvf::app::write_manifest(out, m);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  } catch (const std::logic_error&) {
    throw cvf::ValidationError("bad number list '" + s + "'");
  }
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string out_dir, family = "wave";
  std::uint64_t seed = 0;
  std::optional<double> dt;
  std::optional<std::size_t> steps, traj;
  cvf::WaveConfig wave;
  std::string system = "damped-oscillator";
  double zeta = 0.2, omega = 1.0, gamma = 0.1, lambda = -1.0, radius = 1.0;
};

cvf::LinearSystem named_system(const std::string& name, double zeta, double omega, double gamma, double lambda) {
  if (name == "damped-oscillator") return cvf::damped_oscillator(zeta);
  if (name == "rotation") return cvf::rotation(omega);
  if (name == "damped-rotation") return cvf::damped_rotation(gamma, omega);
  if (name == "scalar-decay") return cvf::scalar_decay(lambda);
  throw cvf::ValidationError("unknown linear system '" + name +
                             "' (expected damped-oscillator|rotation|damped-rotation|scalar-decay)");
}

void add_system_options(CLI::App* c, std::string& system, double& zeta, double& omega, double& gamma, double& lambda) {
  c->add_option("--system", system, "damped-oscillator|rotation|damped-rotation|scalar-decay");
  c->add_option("--zeta", zeta, "damping of the oscillator");
  c->add_option("--omega", omega, "rotation rate");
  c->add_option("--gamma", gamma, "decay of the damped rotation");
  c->add_option("--lambda", lambda, "scalar decay rate");
}

int run_generate(const GenerateArgs& a) {
  const auto start = Clock::now();
  RunManifest m;
  m.command = "generate";
  m.seed = a.seed;
  cvf::TrajectoryDataset d;
  if (a.family == "wave") {
    auto w = a.wave;
    w.seed = a.seed;
    if (a.dt) w.dt = *a.dt;
    if (a.steps) w.n_steps = *a.steps;
    if (a.traj) w.n_traj = *a.traj;
    d = cvf::generate_wave2d(w);
    m.args = {"--family", "wave", "--seed", std::to_string(a.seed), "--n", std::to_string(w.n),
              "--length", num(w.length), "--c", num(w.c), "--dt", num(w.dt), "--steps", std::to_string(w.n_steps),
              "--traj", std::to_string(w.n_traj), "--packets", std::to_string(w.n_packets),
              "--sigma-min", num(w.sigma_min), "--sigma-max", num(w.sigma_max), "--amplitude", num(w.amplitude)};
  } else if (a.family == "linear") {
    const auto sys = named_system(a.system, a.zeta, a.omega, a.gamma, a.lambda);
    const double dt = a.dt.value_or(0.1);
    const std::size_t steps = a.steps.value_or(101), traj = a.traj.value_or(32);
    if (traj == 0) throw cvf::ValidationError("--traj must be positive");
    d = cvf::generate_linear_ode(sys, cvf::random_initial_states(traj, sys.dim, a.radius, a.seed), dt, steps);
    m.args = {"--family", "linear", "--seed", std::to_string(a.seed), "--system", a.system, "--zeta", num(a.zeta),
              "--omega", num(a.omega), "--gamma", num(a.gamma), "--lambda", num(a.lambda), "--radius", num(a.radius),
              "--dt", num(dt), "--steps", std::to_string(steps), "--traj", std::to_string(traj)};
  } else {
    throw cvf::ValidationError("unknown family '" + a.family + "' (expected wave|linear)");
  }
  const auto out = prepare_out_dir(a.out_dir);
  cvf::save_dataset((out / "dataset.cvfd").string(), d);
  m.outputs.push_back(cvf::app::record_output(out, "dataset.cvfd"));
  m.details = {{"family", a.family},     {"n_traj", d.n_traj},     {"n_steps", d.n_steps},
               {"channels", d.channels}, {"spatial", d.spatial},   {"state_dim", d.state_dim()},
               {"base_dt", d.base_dt}};
  finish(m, out, start);
  std::cout << "wrote " << (out / "dataset.cvfd").string() << " (" << d.n_traj << " x " << d.n_steps
            << " frames, state dim " << d.state_dim() << ")\n";
  return kOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string data, out_dir, resume, validation;
  std::vector<std::string> sets;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr, rupture_weight;
  std::optional<std::string> rupture, hidden, delta_min;
  std::optional<int> downsample;
  std::optional<std::uint64_t> seed;
};

cvf::TrainConfig resolve_train_config(const TrainArgs& a, const cvf::Checkpoint* resume) {
  cvf::TrainConfig c = resume ? cvf::parse_train_config(resume->config_echo) : cvf::TrainConfig{};
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw cvf::ValidationError("--set expects key=value, got '" + s + "'");
    cvf::apply_train_setting(c, cvf::detail::trim(s.substr(0, eq)), cvf::detail::trim(s.substr(eq + 1)));
  }
  if (a.epochs) c.epochs = *a.epochs;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.lr) c.base_lr = *a.lr;
  if (a.rupture_weight) c.rupture_weight = *a.rupture_weight;
  if (a.rupture) cvf::apply_train_setting(c, "rupture_mode", *a.rupture);
  if (a.hidden) cvf::apply_train_setting(c, "hidden", *a.hidden);
  if (a.delta_min) cvf::apply_train_setting(c, "delta_min", *a.delta_min);
  if (a.downsample) c.downsample = *a.downsample;
  if (a.seed) c.seed = *a.seed;
  c.validate();
  return c;
}

int run_train(const TrainArgs& a) {
  const auto start = Clock::now();
  const auto data = cvf::load_dataset(a.data);
  std::optional<cvf::Checkpoint> resume;
  if (!a.resume.empty()) resume = cvf::load_checkpoint(a.resume);
  std::optional<cvf::TrajectoryDataset> val;
  if (!a.validation.empty()) val = cvf::load_dataset(a.validation);
  const auto cfg = resolve_train_config(a, resume ? &*resume : nullptr);

  const auto out = prepare_out_dir(a.out_dir);
  std::ofstream csv(out / "metrics.csv", std::ios::trunc);
  if (!csv) throw cvf::IoError("cannot write metrics in '" + out.string() + "'");
  csv << "epoch,loss,match,rupture,val_rmse,lr,wallclock\n";
  csv.precision(17);

  cvf::FitOptions opts;
  opts.resume = resume ? &*resume : nullptr;
  opts.validation = val ? &*val : nullptr;
  opts.sink = [&](const cvf::EpochMetrics& e) {
    csv << e.epoch << ',' << e.loss << ',' << e.match << ',' << e.rupture << ',';
    if (e.val_rmse) csv << *e.val_rmse;
    csv << ',' << e.lr << ',' << e.wallclock << '\n';
  };
  const auto ckpt = cvf::fit(data, cfg, opts);
  csv.close();
  cvf::save_checkpoint((out / "checkpoint.cvfc").string(), ckpt);

  RunManifest m;
  m.command = "train";
  m.seed = cfg.seed;
  m.args = {"--data", abs_path(a.data)};
  m.inputs = {abs_path(a.data)};
  if (val) {
    m.args.insert(m.args.end(), {"--validation", abs_path(a.validation)});
    m.inputs.push_back(abs_path(a.validation));
  }
  if (resume) {
    m.args.insert(m.args.end(), {"--resume", abs_path(a.resume)});
    m.inputs.push_back(abs_path(a.resume));
  }
  std::stringstream echo(cvf::echo(cfg));
  for (std::string line; std::getline(echo, line);) m.args.insert(m.args.end(), {"--set", line});
  m.outputs.push_back(cvf::app::record_output(out, "checkpoint.cvfc"));
  m.outputs.push_back(cvf::app::record_output(out, "metrics.csv", {"wallclock"}));
  m.details = {{"start_epoch", resume ? resume->epoch : 0}, {"start_step", resume ? resume->step : 0},
               {"epoch", ckpt.epoch},                       {"step", ckpt.step},
               {"delta_min", ckpt.delta_min},               {"rupture_mode", cvf::to_string(cfg.rupture_mode)},
               {"downsample", cfg.downsample}};
  finish(m, out, start);
  std::cout << "trained " << ckpt.epoch << " epochs (" << ckpt.step << " steps), delta_min " << ckpt.delta_min
            << ", wrote " << (out / "checkpoint.cvfc").string() << "\n";
  return kOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> checkpoints, baselines;
  std::string data, out_dir, protocol = "informed", solver = "gcs", baseline_solver = "euler";
  std::size_t segment = 0, max_search_iters = 64;
  double fixed_dt = 0.0, probe_dt = 0.0, delta_min = 0.0, eta = cvf::kDefaultEta;
  double atol = 1e-4, rtol = 1e-3;
  std::optional<double> baseline_nfe, baseline_rmse;
  std::size_t threads = 1;
};

cvf::MetricsRecord eval_one(const cvf::Checkpoint& c, const cvf::TrajectoryDataset& d, const EvalArgs& a,
                            const std::string& solver, std::size_t segment) {
  cvf::EvalConfig cfg;
  cfg.solver = cvf::parse_solver_kind(solver);
  cfg.gcs.delta_min = a.delta_min > 0.0 ? a.delta_min : c.delta_min;
  cfg.gcs.eta = a.eta;
  cfg.gcs.max_search_iters = a.max_search_iters;
  cfg.fixed_dt = a.fixed_dt;
  cfg.probe_dt = a.probe_dt;
  cfg.rk45.atol = a.atol;
  cfg.rk45.rtol = a.rtol;
  cfg.threads = a.threads;
  if (c.model.state_dim != d.state_dim()) throw cvf::ValidationError("checkpoint does not match dataset state size");
  auto r = a.protocol == "informed" ? cvf::eval_time_informed(c.model, c.stats, d, cfg)
                                    : cvf::eval_direct_autoregressive(c.model, c.stats, d, segment, cfg);
  r.seed = c.seed;
  return r;
}

int run_eval(const EvalArgs& a) {
  const auto start = Clock::now();
  if (a.protocol != "informed" && a.protocol != "direct")
    throw cvf::ValidationError("unknown protocol '" + a.protocol + "' (expected informed|direct)");
  if (a.protocol == "informed" && a.segment > 1)
    throw cvf::ValidationError("the informed protocol always uses one interval per step; use --protocol direct");
  cvf::parse_solver_kind(a.solver);
  if (a.baseline_nfe.has_value() != a.baseline_rmse.has_value())
    throw cvf::ValidationError("--baseline-nfe and --baseline-rmse go together");
  if (!a.baselines.empty() && a.baselines.size() != 1 && a.baselines.size() != a.checkpoints.size())
    throw cvf::ValidationError("give one baseline checkpoint or one per checkpoint");
  const auto d = cvf::load_dataset(a.data);

  std::vector<cvf::MetricsRecord> rows;
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    const auto c = cvf::load_checkpoint(a.checkpoints[i]);
    auto r = eval_one(c, d, a, a.solver, a.segment);
    nlohmann::json row{{"checkpoint", abs_path(a.checkpoints[i])}, {"segments", r.segments},
                       {"diverged", r.diverged}, {"max_search_iters", r.max_search_iters}};
    if (!a.baselines.empty()) {
      const auto& bp = a.baselines[a.baselines.size() == 1 ? 0 : i];
      const auto b = eval_one(cvf::load_checkpoint(bp), d, a, a.baseline_solver, a.segment);
      cvf::attach_cped(r, b);
      row["baseline"] = {{"checkpoint", abs_path(bp)}, {"rollout_rmse", b.rollout_rmse}, {"nfe_avg", b.nfe_avg}};
    } else if (a.baseline_nfe) {
      r.cped = cvf::cped(r.nfe_avg, r.rollout_rmse, *a.baseline_nfe, *a.baseline_rmse);
      r.cped_undefined = !r.cped;
    }
    rows.push_back(r);
    per.push_back(row);
  }

  const auto out = prepare_out_dir(a.out_dir);
  {
    std::ofstream csv(out / "metrics.csv", std::ios::trunc);
    if (!csv) throw cvf::IoError("cannot write metrics in '" + out.string() + "'");
    cvf::write_metrics_csv(csv, rows, rows.size() > 1);
  }

  RunManifest m;
  m.command = "eval";
  m.args = {"--data", abs_path(a.data), "--protocol", a.protocol, "--segment", std::to_string(a.segment),
            "--solver", a.solver, "--fixed-dt", num(a.fixed_dt), "--probe-dt", num(a.probe_dt),
            "--delta-min", num(a.delta_min), "--eta", num(a.eta), "--max-search-iters",
            std::to_string(a.max_search_iters), "--rk45-atol", num(a.atol), "--rk45-rtol", num(a.rtol),
            "--threads", std::to_string(a.threads)};
  m.inputs = {abs_path(a.data)};
  for (const auto& c : a.checkpoints) {
    m.args.insert(m.args.end(), {"--checkpoint", abs_path(c)});
    m.inputs.push_back(abs_path(c));
  }
  for (const auto& b : a.baselines) {
    m.args.insert(m.args.end(), {"--baseline-checkpoint", abs_path(b)});
    m.inputs.push_back(abs_path(b));
  }
  if (!a.baselines.empty()) m.args.insert(m.args.end(), {"--baseline-solver", a.baseline_solver});
  if (a.baseline_nfe)
    m.args.insert(m.args.end(), {"--baseline-nfe", num(*a.baseline_nfe), "--baseline-rmse", num(*a.baseline_rmse)});
  m.outputs.push_back(cvf::app::record_output(out, "metrics.csv"));
  m.details = {{"rows", per}};
  finish(m, out, start);
  for (const auto& r : rows)
    std::cout << r.protocol << " seed " << (r.seed ? std::to_string(*r.seed) : "-") << ": rollout_rmse "
              << r.rollout_rmse << ", nfe_avg " << r.nfe_avg << (r.diverged ? " (diverged)" : "") << "\n";
  return kOk;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string checkpoint, data, out_dir, oracle_matrix, oracle_system, variant = "exact";
  double zeta = 0.2, omega = 1.0, gamma = 0.1, lambda = -1.0, kappa = 4.0;
  std::size_t samples = 64, points = 13;
  double dt_min = 0.01, dt_max = 1.0, radius = 1.0, eta = cvf::kDefaultEta;
  std::uint64_t seed = 0;
};

cvf::LinearSystem matrix_system(const std::string& text) {
  auto a = parse_list(text);
  const auto dim = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(a.size()))));
  cvf::LinearSystem sys{dim, std::move(a)};
  sys.validate();
  return sys;
}

std::vector<cvf::State> sample_states(const DiagnoseArgs& a, std::size_t dim, const cvf::NormStats& stats) {
  std::vector<cvf::State> out;
  cvf::Rng rng(a.seed);
  if (!a.data.empty()) {
    const auto d = cvf::load_dataset(a.data);
    if (d.state_dim() != dim) throw cvf::ValidationError("dataset state size does not match the field");
    for (std::size_t k = 0; k < a.samples; ++k) {
      const auto t = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(d.n_traj)) % d.n_traj;
      const auto s = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(d.n_steps)) % d.n_steps;
      out.push_back(cvf::normalize_state(stats, d.state(t, s)));
    }
  } else {
    for (std::size_t k = 0; k < a.samples; ++k) {
      cvf::State s(dim);
      for (double& v : s) v = rng.uniform(-a.radius, a.radius);
      out.push_back(cvf::normalize_state(stats, s));
    }
  }
  return out;
}

template <cvf::SecantField F>
std::vector<cvf::ProfileRow> profile(const F& field, const cvf::NormStats& stats, const DiagnoseArgs& a) {
  const auto states = sample_states(a, field.dimension(), stats);
  return cvf::rupture_profile(field, stats, states, cvf::log_spaced(a.dt_min, a.dt_max, a.points), a.eta);
}

int run_diagnose(const DiagnoseArgs& a) {
  const auto start = Clock::now();
  const int sources = !a.checkpoint.empty() + !a.oracle_matrix.empty() + !a.oracle_system.empty();
  if (sources != 1)
    throw cvf::ValidationError("give exactly one of --checkpoint, --oracle-matrix, --oracle-system");
  std::vector<cvf::ProfileRow> rows;
  RunManifest m;
  m.command = "diagnose";
  m.seed = a.seed;
  if (!a.checkpoint.empty()) {
    const auto c = cvf::load_checkpoint(a.checkpoint);
    rows = profile(c.model, c.stats, a);
    m.args = {"--checkpoint", abs_path(a.checkpoint)};
    m.inputs.push_back(abs_path(a.checkpoint));
  } else {
    const auto sys = a.oracle_matrix.empty() ? named_system(a.oracle_system, a.zeta, a.omega, a.gamma, a.lambda)
                                             : matrix_system(a.oracle_matrix);
    const auto field = cvf::oracle_variant_field(sys, cvf::parse_oracle_variant(a.variant), a.kappa);
    rows = profile(field, cvf::NormStats::identity(sys.dim), a);
    std::string mat;
    for (std::size_t i = 0; i < sys.a.size(); ++i) mat += (i ? "," : "") + num(sys.a[i]);
    m.args = {"--oracle-matrix", mat, "--oracle-variant", a.variant, "--kappa", num(a.kappa)};
  }
  if (!a.data.empty()) {
    m.args.insert(m.args.end(), {"--data", abs_path(a.data)});
    m.inputs.push_back(abs_path(a.data));
  }
  m.args.insert(m.args.end(), {"--samples", std::to_string(a.samples), "--radius", num(a.radius), "--dt-min",
                               num(a.dt_min), "--dt-max", num(a.dt_max), "--points", std::to_string(a.points),
                               "--eta", num(a.eta), "--seed", std::to_string(a.seed)});

  const auto out = prepare_out_dir(a.out_dir);
  {
    std::ofstream csv(out / "profile.csv", std::ios::trunc);
    if (!csv) throw cvf::IoError("cannot write profile in '" + out.string() + "'");
    cvf::write_profile_csv(csv, rows);
  }
  m.outputs.push_back(cvf::app::record_output(out, "profile.csv"));
  m.details = {{"states", a.samples}, {"points", rows.size()}};
  finish(m, out, start);
  double mean_nre = 0.0;
  for (const auto& r : rows) mean_nre += r.nre;
  std::cout << "profiled " << rows.size() << " dt values over " << a.samples << " states, mean NRE "
            << mean_nre / static_cast<double>(rows.size()) << "\n";
  return kOk;
}

// ------------------------------------------------------- argument assembly

bool takes_seed(const std::string& cmd) { return cmd == "generate" || cmd == "train" || cmd == "diagnose"; }

/// Config files hold `key = value` lines. For train the keys are training
/// settings; for the other commands they are long option names.
std::vector<std::string> config_args(const std::string& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cvf::IoError("cannot open config '" + path + "'");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    line = cvf::detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw cvf::ValidationError("config line without '=': " + line);
    auto key = cvf::detail::trim(line.substr(0, eq));
    const auto value = cvf::detail::trim(line.substr(eq + 1));
    if (cmd == "train") {
      out.insert(out.end(), {"--set", key + "=" + value});
    } else {
      std::replace(key.begin(), key.end(), '_', '-');
      out.insert(out.end(), {"--" + key, value});
    }
  }
  return out;
}

/// Take `--name value` or `--name=value` out of args.
std::optional<std::string> extract(std::vector<std::string>& args, const std::string& name) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == name) {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch(name + " needs a value");
      std::string v = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      return v;
    }
    if (args[i].rfind(name + "=", 0) == 0) {
      std::string v = args[i].substr(name.size() + 1);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      return v;
    }
  }
  return std::nullopt;
}

/// Final argument list: recorded or configured settings first, then the
/// CVF_SEED override, then the command line, so later values win.
std::vector<std::string> assemble(std::vector<std::string> args) {
  if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
  const std::string cmd = args[0];
  std::vector<std::string> rest(args.begin() + 1, args.end());
  const auto manifest = extract(rest, "--manifest");
  const auto config = extract(rest, "--config");
  std::vector<std::string> out{cmd};
  if (manifest) {
    const auto m = cvf::app::read_manifest(*manifest);
    if (m.command != cmd) throw cvf::ValidationError("manifest records '" + m.command + "', not '" + cmd + "'");
    out.insert(out.end(), m.args.begin(), m.args.end());
    if (config) {
      const auto c = config_args(cmd, *config);
      out.insert(out.end(), c.begin(), c.end());
    }
  } else {
    if (config) {
      const auto c = config_args(cmd, *config);
      out.insert(out.end(), c.begin(), c.end());
    }
    if (const char* env = std::getenv("CVF_SEED"); env && *env && takes_seed(cmd)) {
      if (cmd == "train") out.insert(out.end(), {"--set", std::string("seed=") + env});
      else out.insert(out.end(), {"--seed", env});
    }
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Consistent secant-field dynamics: data generation, training, evaluation, diagnostics"};
  app.set_version_flag("--version", cvf::app::kToolVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
  auto common = [](CLI::App* c, std::string& out_dir) {
    c->add_option("--out-dir", out_dir, "output directory")->required();
    c->add_option("--manifest", "replay the run recorded in this manifest");
    c->add_option("--config", "key = value settings; command-line flags win");
  };

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "write a trajectory dataset");
  common(gen, g.out_dir);
  gen->add_option("--family", g.family, "wave|linear");
  gen->add_option("--seed", g.seed, "random seed (CVF_SEED overrides config files)");
  gen->add_option("--dt", g.dt, "sampling interval");
  gen->add_option("--steps", g.steps, "frames per trajectory");
  gen->add_option("--traj", g.traj, "number of trajectories");
  gen->add_option("--n", g.wave.n, "wave grid side");
  gen->add_option("--length", g.wave.length, "wave domain length");
  gen->add_option("--c", g.wave.c, "wave speed");
  gen->add_option("--packets", g.wave.n_packets, "Gaussian packets per initial condition");
  gen->add_option("--sigma-min", g.wave.sigma_min, "smallest packet width (fraction of length)");
  gen->add_option("--sigma-max", g.wave.sigma_max, "largest packet width (fraction of length)");
  gen->add_option("--amplitude", g.wave.amplitude, "packet amplitude");
  add_system_options(gen, g.system, g.zeta, g.omega, g.gamma, g.lambda);
  gen->add_option("--radius", g.radius, "initial states are uniform in [-radius, radius]^d");

  TrainArgs t;
  auto* tr = app.add_subcommand("train", "fit a secant field to a dataset");
  common(tr, t.out_dir);
  tr->add_option("--data", t.data, "training dataset")->required();
  tr->add_option("--validation", t.validation, "validation dataset (defaults to the training set)");
  tr->add_option("--resume", t.resume, "continue from this checkpoint");
  tr->add_option("--set", t.sets, "training setting key=value (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  tr->add_option("--epochs", t.epochs, "total epochs");
  tr->add_option("--batch-size", t.batch_size, "pairs per step");
  tr->add_option("--lr", t.lr, "peak learning rate");
  tr->add_option("--rupture", t.rupture, "semigroup|bidirectional|off");
  tr->add_option("--rupture-weight", t.rupture_weight, "weight of the consistency penalty");
  tr->add_option("--downsample", t.downsample, "k<0 keeps every |k|-th frame, k>0 a random 1/k subset");
  tr->add_option("--hidden", t.hidden, "hidden widths, comma separated");
  tr->add_option("--delta-min", t.delta_min, "solver floor: min-pair or a positive value");
  tr->add_option("--seed", t.seed, "random seed");

  EvalArgs e;
  e.threads = cores;
  auto* ev = app.add_subcommand("eval", "roll out checkpoints and report errors");
  common(ev, e.out_dir);
  ev->add_option("--checkpoint", e.checkpoints, "model checkpoint (repeat for a seed sweep)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  ev->add_option("--data", e.data, "evaluation dataset")->required();
  ev->add_option("--protocol", e.protocol, "informed|direct");
  ev->add_option("--segment", e.segment, "grid intervals per direct step; 0 is the whole horizon");
  ev->add_option("--solver", e.solver, "gcs|euler|rk4|rk45");
  ev->add_option("--fixed-dt", e.fixed_dt, "step of euler/rk4; 0 uses delta_min");
  ev->add_option("--probe-dt", e.probe_dt, "tangent probe for classical solvers; 0 uses delta_min");
  ev->add_option("--delta-min", e.delta_min, "override the checkpoint floor; 0 keeps it");
  ev->add_option("--eta", e.eta, "NRE denominator guard");
  ev->add_option("--max-search-iters", e.max_search_iters, "GCS search round cap");
  ev->add_option("--rk45-atol", e.atol, "rk45 absolute tolerance");
  ev->add_option("--rk45-rtol", e.rtol, "rk45 relative tolerance");
  ev->add_option("--baseline-checkpoint", e.baselines, "baseline for CPED (one, or one per checkpoint)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  ev->add_option("--baseline-solver", e.baseline_solver, "solver used for the baseline");
  ev->add_option("--baseline-nfe", e.baseline_nfe, "baseline NFE for CPED");
  ev->add_option("--baseline-rmse", e.baseline_rmse, "baseline rollout RMSE for CPED");
  ev->add_option("--threads", e.threads, "worker threads");

  DiagnoseArgs dg;
  auto* di = app.add_subcommand("diagnose", "consistency residual profile over a dt sweep");
  common(di, dg.out_dir);
  di->add_option("--checkpoint", dg.checkpoint, "model checkpoint");
  di->add_option("--oracle-matrix", dg.oracle_matrix, "row-major A of ds/dt = A s, comma separated");
  di->add_option("--oracle-system", dg.oracle_system, "named linear system");
  di->add_option("--oracle-variant", dg.variant, "exact|frozen|dt-proportional");
  di->add_option("--kappa", dg.kappa, "gain of the dt-proportional variant");
  di->add_option("--zeta", dg.zeta);
  di->add_option("--omega", dg.omega);
  di->add_option("--gamma", dg.gamma);
  di->add_option("--lambda", dg.lambda);
  di->add_option("--data", dg.data, "draw states from this dataset");
  di->add_option("--samples", dg.samples, "number of sampled states");
  di->add_option("--radius", dg.radius, "box for random states when no dataset is given");
  di->add_option("--dt-min", dg.dt_min, "smallest dt");
  di->add_option("--dt-max", dg.dt_max, "largest dt");
  di->add_option("--points", dg.points, "dt grid size");
  di->add_option("--eta", dg.eta, "NRE denominator guard");
  di->add_option("--seed", dg.seed, "state sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }
  if (gen->parsed()) return run_generate(g);
  if (tr->parsed()) return run_train(t);
  if (ev->parsed()) return run_eval(e);
  return run_diagnose(dg);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    std::vector<std::string> raw(argv + 1, argv + argc);
    auto args = assemble(std::move(raw));
    args.insert(args.begin(), argv[0]);
    std::vector<char*> ptrs;
    for (auto& s : args) ptrs.push_back(s.data());
    return dispatch(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const cvf::NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kNumerical;
  } catch (const cvf::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  }
}
