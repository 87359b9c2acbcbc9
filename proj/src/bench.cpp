#include "dtd/bench.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dtd/coef_estimators.hpp"
#include "dtd/mlp_value.hpp"
#include "dtd/oracles.hpp"

namespace fs = std::filesystem;

namespace dtd {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string gshort(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Cell {
  TdMethod method;
  double noise = 0.0;
  double beta = 0.0;
  bool diffusion_term = true;
  std::uint64_t seed = 0;
  bool with_variant_tag = false;

  std::string group_name() const {
    std::string name = method_name(method);
    name += "_noise" + gshort(noise);
    name += "_beta" + gshort(beta);
    if (with_variant_tag) name += diffusion_term ? "_full" : "_nodiff";
    return name;
  }
  std::string name() const {
    return group_name() + "_seed" + std::to_string(seed);
  }
};

}  // namespace

TdMethod method_from_string(const std::string& name) {
  if (name == "td") return TdMethod::kTd;
  if (name == "naive_dtd") return TdMethod::kNaiveDtd;
  if (name == "dtd") return TdMethod::kDtd;
  if (name == "beta_dtd") return TdMethod::kBetaDtd;
  throw ConfigError("unknown method '" + name +
                    "' (expected td, naive_dtd, dtd or beta_dtd)");
}

std::string method_name(TdMethod method) {
  switch (method) {
    case TdMethod::kTd:
      return "td";
    case TdMethod::kNaiveDtd:
      return "naive_dtd";
    case TdMethod::kDtd:
      return "dtd";
    case TdMethod::kBetaDtd:
      return "beta_dtd";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  const Config cfg = Config::parse_file(path);
  return from_config(cfg, fs::path(path).parent_path().string());
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg,
                                               const std::string& base_dir) {
  ExperimentConfig out;
  const std::string sec = "experiment";

  const std::string system_ref = cfg.get_string(sec, "system");
  if (system_ref == "builtin:scalar_lqr") {
    out.system = scalar_lqr();
  } else if (system_ref == "builtin:lqr_2d") {
    out.system = lqr_2d();
  } else {
    fs::path p(system_ref);
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    out.system = LinearSystemConfig::from_file(p.string());
  }

  for (const std::string& m : cfg.get_string_list(sec, "methods")) {
    out.methods.push_back(method_from_string(m));
  }
  if (cfg.has(sec, "noise_coefs")) {
    out.noise_coefs = cfg.get_double_list(sec, "noise_coefs");
  }
  if (cfg.has(sec, "betas")) out.betas = cfg.get_double_list(sec, "betas");
  if (cfg.has(sec, "seeds")) {
    out.seeds.clear();
    for (double s : cfg.get_double_list(sec, "seeds")) {
      if (s < 0 || s != std::floor(s)) {
        throw ConfigError(cfg.origin() +
                          ": seeds must be nonnegative integers");
      }
      out.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  const std::string scaling = cfg.get_string_or(sec, "scaling", "discrete");
  if (scaling == "discrete") {
    out.scaling = RewardScaling::kDiscrete;
  } else if (scaling == "continuous") {
    out.scaling = RewardScaling::kContinuous;
  } else {
    throw ConfigError(cfg.origin() + ": scaling must be discrete or continuous");
  }
  out.model_kind = cfg.get_string_or(sec, "model", "quadratic");
  if (out.model_kind != "quadratic" && out.model_kind != "mlp") {
    throw ConfigError(cfg.origin() + ": model must be quadratic or mlp");
  }
  if (cfg.has(sec, "mlp_widths")) {
    out.mlp_widths.clear();
    for (double w : cfg.get_double_list(sec, "mlp_widths")) {
      out.mlp_widths.push_back(static_cast<int>(w));
    }
  }
  out.ablate_diffusion = cfg.get_bool_or(sec, "ablate_diffusion", false);
  out.perturb_before_reward =
      cfg.get_bool_or(sec, "perturb_before_reward", false);
  out.out_dir = cfg.get_string_or(sec, "out_dir", "");

  out.train.total_updates =
      static_cast<int>(cfg.get_int_or("train", "updates", 200));
  out.train.env_steps_per_update =
      static_cast<int>(cfg.get_int_or("train", "env_steps", 256));
  out.train.epochs_per_update =
      static_cast<int>(cfg.get_int_or("train", "epochs", 8));
  out.train.minibatch_size =
      static_cast<int>(cfg.get_int_or("train", "minibatch", 64));
  out.train.learning_rate = cfg.get_double_or("train", "lr", 1e-2);
  const std::string opt = cfg.get_string_or("train", "optimizer", "adam");
  if (opt == "adam") {
    out.train.optimizer = Optimizer::kAdam;
  } else if (opt == "sgd") {
    out.train.optimizer = Optimizer::kSgd;
  } else {
    throw ConfigError(cfg.origin() + ": optimizer must be adam or sgd");
  }

  if (out.methods.empty() || out.noise_coefs.empty() || out.betas.empty() ||
      out.seeds.empty()) {
    throw ConfigError(cfg.origin() + ": sweep lists must be non-empty");
  }
  for (double b : out.betas) {
    if (!(b >= 0.0 && b <= 1.0)) {
      throw ConfigError(cfg.origin() + ": betas must lie in [0, 1]");
    }
  }
  for (double c : out.noise_coefs) {
    if (c < 0.0) {
      throw ConfigError(cfg.origin() + ": noise_coefs must be >= 0");
    }
  }
  return out;
}

namespace {

struct CellOutcome {
  bool ran = false;
  std::string error;  // non-empty on runtime failure
};

TdConfig cell_td_config(const ExperimentConfig& exp, const Cell& cell) {
  TdConfig cfg =
      exp.scaling == RewardScaling::kDiscrete
          ? TdConfig::discrete_time(
                std::exp(-exp.system.gamma * exp.system.dt), exp.system.dt)
          : TdConfig::continuous_time(exp.system.gamma, exp.system.dt);
  cfg.method = cell.method;
  cfg.beta = cell.beta;
  cfg.diffusion_term = cell.diffusion_term;
  return cfg;
}

std::unique_ptr<ValueModel> make_model(const ExperimentConfig& exp,
                                       std::uint64_t seed) {
  if (exp.model_kind == "mlp") {
    return std::make_unique<MlpValue>(exp.system.n(), exp.mlp_widths,
                                      derive_seed(seed, 7));
  }
  return std::make_unique<QuadraticValue>(QuadraticValue::zero(exp.system.n()));
}

void run_cell(const ExperimentConfig& exp, const Cell& cell,
              const QuadraticValue& oracle, const fs::path& out_dir) {
  const ControlledSde sys = exp.system.sde();
  const GaussianPolicy policy = exp.system.policy();
  const TdConfig cfg = cell_td_config(exp, cell);

  TrainConfig tcfg = exp.train;
  tcfg.seed = derive_seed(cell.seed, 11);

  EvalOptions opts;
  opts.process_noise = NoiseSpec{cell.noise, derive_seed(cell.seed, 99)};
  opts.perturb_before_reward = exp.perturb_before_reward;
  opts.oracle_error = [&oracle](const ValueModel& m) {
    return value_shape_error(m, oracle);
  };

  std::unique_ptr<ValueModel> model = make_model(exp, cell.seed);
  const EvalReport report =
      evaluate_policy(sys, policy, *model, cfg, tcfg, opts);

  const fs::path csv_path = out_dir / (cell.name() + ".csv");
  {
    std::ofstream out(csv_path);
    if (!out) {
      throw std::runtime_error("cannot write '" + csv_path.string() + "'");
    }
    write_report_csv(out, report);
  }
  save_checkpoint(*model, (out_dir / (cell.name() + ".ckpt")).string());
  {
    std::ofstream marker(out_dir / (cell.name() + ".done"));
    marker << (report.diverged ? "diverged" : "ok") << "\n";
  }
}

struct SeedStats {
  std::vector<double> losses;
  std::vector<double> errs;
  bool any_diverged = false;
  bool all_markers = true;
};

SeedStats collect_group(const ExperimentConfig& exp, const Cell& proto,
                        const fs::path& out_dir) {
  SeedStats stats;
  for (std::uint64_t seed : exp.seeds) {
    Cell cell = proto;
    cell.seed = seed;
    const fs::path marker = out_dir / (cell.name() + ".done");
    std::ifstream min(marker);
    std::string status;
    if (!(min >> status)) {
      stats.all_markers = false;
      continue;
    }
    if (status != "ok") {
      stats.any_diverged = true;
      continue;
    }
    std::ifstream csv(out_dir / (cell.name() + ".csv"));
    std::string line;
    std::string last;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
      if (!line.empty()) last = line;
    }
    double loss = std::nan("");
    double err = std::nan("");
    if (!last.empty()) {
      std::istringstream ls(last);
      std::string tok;
      std::getline(ls, tok, ',');  // update index
      if (std::getline(ls, tok, ',')) loss = std::strtod(tok.c_str(), nullptr);
      if (std::getline(ls, tok, ',')) err = std::strtod(tok.c_str(), nullptr);
    }
    stats.losses.push_back(loss);
    stats.errs.push_back(err);
  }
  return stats;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  if (xs.empty()) {
    mean = std::nan("");
    sd = std::nan("");
    return;
  }
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  sd = 0.0;
  if (xs.size() > 1) {
    for (double x : xs) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
  }
}

}  // namespace

int run_experiment(const std::string& config_path, const RunOptions& opts,
                   std::ostream& log) {
  const ExperimentConfig exp = ExperimentConfig::from_file(config_path);

  std::string out_dir_str = opts.out_dir_override;
  if (out_dir_str.empty()) out_dir_str = exp.out_dir;
  if (out_dir_str.empty()) {
    if (const char* env = std::getenv("DTD_BENCH_OUT")) out_dir_str = env;
  }
  if (out_dir_str.empty()) out_dir_str = "dtd_results";
  fs::path out_dir(out_dir_str);
  if (out_dir.is_relative()) {
    out_dir = fs::path(config_path).parent_path() / out_dir;
  }
  fs::create_directories(out_dir);

  // The oracle must exist for the sweep to be meaningful; an unstable
  // closed loop is a configuration problem, not a runtime one.
  QuadraticValue oracle = QuadraticValue::zero(exp.system.n());
  try {
    oracle = lqr_value(LqrSpec::from(exp.system)).model();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("experiment system has no quadratic value "
                                  "oracle: ") +
                      e.what());
  }

  std::vector<Cell> group_protos;
  std::vector<Cell> todo;
  const std::vector<bool> variants = exp.ablate_diffusion
                                         ? std::vector<bool>{true, false}
                                         : std::vector<bool>{true};
  for (TdMethod method : exp.methods) {
    for (double noise : exp.noise_coefs) {
      for (double beta : exp.betas) {
        for (bool diffusion : variants) {
          Cell proto;
          proto.method = method;
          proto.noise = noise;
          proto.beta = beta;
          proto.diffusion_term = diffusion;
          proto.with_variant_tag = exp.ablate_diffusion;
          group_protos.push_back(proto);
          for (std::uint64_t seed : exp.seeds) {
            Cell cell = proto;
            cell.seed = seed;
            if (!fs::exists(out_dir / (cell.name() + ".done"))) {
              todo.push_back(cell);
            }
          }
        }
      }
    }
  }

  log << "experiment: " << group_protos.size() << " cells x "
      << exp.seeds.size() << " seeds (" << todo.size() << " runs pending) -> "
      << out_dir.string() << "\n";

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::string> failures;
  const int jobs = std::max(1, opts.jobs);
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const Cell& cell = todo[i];
      try {
        run_cell(exp, cell, oracle, out_dir);
        std::lock_guard<std::mutex> lock(mu);
        log << "  done " << cell.name() << "\n";
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back("cell " + cell.name() + ": " + e.what());
      }
    }
  };
  if (jobs == 1 || todo.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  if (!failures.empty()) {
    for (const std::string& f : failures) log << "FAILED " << f << "\n";
    return 2;
  }

  // Summary over seeds, regenerated from the cell outputs so reruns with
  // completed cells produce byte-identical bytes.
  const fs::path summary_path = out_dir / "summary.csv";
  std::ofstream summary(summary_path);
  if (!summary) {
    log << "FAILED cannot write " << summary_path.string() << "\n";
    return 2;
  }
  summary << "method,noise,beta,diffusion,n_seeds,final_loss_mean,"
             "final_loss_std,final_err_mean,final_err_std,status\n";
  for (const Cell& proto : group_protos) {
    const SeedStats stats = collect_group(exp, proto, out_dir);
    double loss_mean = 0.0, loss_sd = 0.0, err_mean = 0.0, err_sd = 0.0;
    mean_std(stats.losses, loss_mean, loss_sd);
    mean_std(stats.errs, err_mean, err_sd);
    const char* status = stats.any_diverged
                             ? "diverged"
                             : (stats.all_markers ? "ok" : "incomplete");
    summary << method_name(proto.method) << ',' << gshort(proto.noise) << ','
            << gshort(proto.beta) << ','
            << (proto.diffusion_term ? "full" : "nodiff") << ','
            << stats.losses.size() << ',' << g17(loss_mean) << ','
            << g17(loss_sd) << ',' << g17(err_mean) << ',' << g17(err_sd)
            << ',' << status << "\n";
  }
  log << "summary: " << summary_path.string() << "\n";
  return 0;
}

std::vector<DiagnoseRow> diagnose(const LinearSystemConfig& system,
                                  const std::vector<double>& dts,
                                  long n_samples, std::uint64_t seed) {
  if (dts.empty()) {
    throw std::invalid_argument("diagnose: need at least one dt");
  }
  system.validate();
  const ControlledSde sys = system.sde();
  const GaussianPolicy policy = system.policy();

  // Probe away from the origin so the drift is informative.
  Eigen::VectorXd s = system.s0;
  if (s.cwiseAbs().maxCoeff() == 0.0) s = Eigen::VectorXd::Ones(system.n());

  std::vector<DiagnoseRow> rows;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double dt = dts[i];
    if (!(dt > 0.0)) {
      throw std::invalid_argument("diagnose: dt values must be positive");
    }
    DiagnoseRow row;
    row.dt = dt;
    // Integrate each step at roughly 1e-3 resolution so the dt-bias of the
    // finite-difference limit is visible, not the integrator error.
    row.n_substeps = std::max(1, static_cast<int>(std::llround(dt / 1e-3)));
    const CoefEstimate est =
        estimate_coefficients(sys, policy, s, dt, n_samples,
                              derive_seed(seed, 100 + i), row.n_substeps);
    row.drift_hat = est.drift_hat;
    row.drift_declared = system.A * s + system.B * (system.K * s);
    row.drift_bias_inf =
        (est.drift_hat - row.drift_declared).cwiseAbs().maxCoeff();
    row.drift_se_inf = est.std_error.maxCoeff();
    row.diffusion_hat = est.diffusion_sq_hat;
    row.diffusion_declared = system.Sigma * system.Sigma.transpose();
    row.diffusion_err_inf =
        (est.diffusion_sq_hat - row.diffusion_declared).cwiseAbs().maxCoeff();
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_diagnose_table(std::ostream& out,
                          const std::vector<DiagnoseRow>& rows) {
  out << "dt          substeps  drift_bias_inf  drift_se_inf  diff_err_inf\n";
  char buf[128];
  for (const DiagnoseRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-10g  %-8d  %-14.6g  %-12.6g  %-12.6g\n",
                  row.dt, row.n_substeps, row.drift_bias_inf, row.drift_se_inf,
                  row.diffusion_err_inf);
    out << buf;
  }
}

}  // namespace dtd
