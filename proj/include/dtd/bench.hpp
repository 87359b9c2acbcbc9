#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtd/policy_eval.hpp"
#include "dtd/systems.hpp"
#include "dtd/td_engine.hpp"

namespace dtd {

TdMethod method_from_string(const std::string& name);
std::string method_name(TdMethod method);

// Sweep definition: the experiment runs the full cross product
// methods x noise_coefs x betas x seeds (doubled across the diffusion-term
// variants when ablate_diffusion is set), one learning run per cell.
struct ExperimentConfig {
  LinearSystemConfig system;
  std::vector<TdMethod> methods;
  std::vector<double> noise_coefs{0.0, 0.01, 0.05};
  std::vector<double> betas{0.5};
  std::vector<std::uint64_t> seeds{1};
  RewardScaling scaling = RewardScaling::kDiscrete;
  std::string model_kind = "quadratic";  // or "mlp"
  std::vector<int> mlp_widths{64, 64};
  bool ablate_diffusion = false;
  bool perturb_before_reward = false;
  std::string out_dir;
  TrainConfig train;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_config(const Config& cfg,
                                      const std::string& base_dir);
};

struct RunOptions {
  int jobs = 1;
  std::string out_dir_override;
};

// Executes every cell lacking a .done marker, then rebuilds summary.csv
// from the cell outputs (so reruns are byte-identical). Returns 0 on
// success, 2 when any cell failed at runtime; configuration problems throw
// ConfigError. Progress goes to `log`.
int run_experiment(const std::string& config_path, const RunOptions& opts,
                   std::ostream& log);

// Drift/diffusion recovery table for a system at several step sizes.
struct DiagnoseRow {
  double dt = 0.0;
  int n_substeps = 1;
  Eigen::VectorXd drift_hat;
  Eigen::VectorXd drift_declared;
  double drift_bias_inf = 0.0;
  double drift_se_inf = 0.0;
  Eigen::MatrixXd diffusion_hat;
  Eigen::MatrixXd diffusion_declared;
  double diffusion_err_inf = 0.0;
};

std::vector<DiagnoseRow> diagnose(const LinearSystemConfig& system,
                                  const std::vector<double>& dts,
                                  long n_samples, std::uint64_t seed);

void print_diagnose_table(std::ostream& out,
                          const std::vector<DiagnoseRow>& rows);

}  // namespace dtd
