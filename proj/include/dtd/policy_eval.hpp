#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "dtd/sde.hpp"
#include "dtd/td_engine.hpp"
#include "dtd/value_model.hpp"

namespace dtd {

// Transition store for one update step. All entries must share dt and the
// size can never exceed the declared capacity.
class Buffer {
 public:
  explicit Buffer(std::size_t capacity) : capacity_(capacity) {}

  void add(Transition tr);
  void clear() { transitions_.clear(); }
  std::size_t size() const { return transitions_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return transitions_[i]; }
  const std::vector<Transition>& transitions() const { return transitions_; }

 private:
  std::vector<Transition> transitions_;
  std::size_t capacity_;
};

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  int env_steps_per_update = 256;
  int epochs_per_update = 8;
  int minibatch_size = 64;
  int total_updates = 200;
  double learning_rate = 1e-2;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  // Initial-state draw per update; defaults to standard normal.
  std::function<Eigen::VectorXd(Rng&)> s0_sampler;
  NoiseSpec process_noise{};
  bool perturb_before_reward = false;
  // Per-update external error metric, e.g. distance to an analytic value.
  std::function<double(const ValueModel&)> oracle_error;
};

// Per-update curves. After a divergence the remaining entries are NaN and
// diverged_at names the offending update.
struct EvalReport {
  std::vector<double> loss;
  std::vector<double> oracle_err;
  std::vector<double> wall_ms;
  std::vector<double> second_order;  // mean |second-order prediction term|
  bool diverged = false;
  int diverged_at = -1;
  Eigen::VectorXd final_params;
};

// CSV with header update,loss,oracle_err,wall_ms.
void write_report_csv(std::ostream& out, const EvalReport& report);

// Shuffles indices 0..n-1 and splits them into floor(n / batch) disjoint
// minibatches (remainder dropped), so an epoch touches each transition at
// most once.
std::vector<std::vector<int>> epoch_minibatches(int n, int batch, Rng& rng);

// First-order parameter update; kAdam uses the standard moment estimates
// (0.9, 0.999, eps 1e-8) with bias correction.
class ParamOptimizer {
 public:
  ParamOptimizer(Optimizer kind, Eigen::Index n, double learning_rate);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);

 private:
  Optimizer kind_;
  double lr_;
  long t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

// Policy evaluation: for each of total_updates steps, clear the buffer,
// collect env_steps_per_update fresh transitions under the fixed policy,
// freeze the target parameters once, then run epochs of minibatch gradient
// descent on cfg.method's squared error.
EvalReport evaluate_policy(const ControlledSde& sys,
                           const GaussianPolicy& policy, ValueModel& model,
                           const TdConfig& cfg, const TrainConfig& tcfg,
                           const EvalOptions& opts = {});

struct ActorCriticConfig {
  TrainConfig critic;  // total_updates is ignored; one update per step
  double actor_learning_rate = 1e-2;
  int total_steps = 1000;
  std::uint64_t seed = 0;
};

struct ActorCriticResult {
  LinearGaussianPolicy policy;
  std::vector<Eigen::MatrixXd> gain_trace;  // K after each step
  bool diverged = false;
};

// One-step-advantage actor-critic for linear-Gaussian policies: the critic
// follows evaluate_policy's inner update, and the gain ascends
// E[advantage * grad_K log pi(a|s)] with the TD-variant error as advantage.
class ActorCritic {
 public:
  ActorCritic(const ControlledSde& sys, LinearGaussianPolicy policy,
              ValueModel& model, const TdConfig& cfg,
              const ActorCriticConfig& acfg, const EvalOptions& opts = {});

  // Collect, update critic, update gain. Returns false on divergence.
  bool step();

  const LinearGaussianPolicy& policy() const { return policy_; }
  double last_mean_abs_advantage() const { return last_mean_abs_adv_; }

 private:
  double advantage(const Transition& tr, const ValueModel& target) const;

  const ControlledSde& sys_;
  LinearGaussianPolicy policy_;
  ValueModel& model_;
  TdConfig cfg_;
  ActorCriticConfig acfg_;
  EvalOptions opts_;
  Eigen::MatrixXd cov_inv_;
  std::unique_ptr<ParamOptimizer> critic_opt_;
  Rng rng_;
  int step_index_ = 0;
  double last_mean_abs_adv_ = 0.0;
};

ActorCriticResult run_actor_critic(const ControlledSde& sys,
                                   const LinearGaussianPolicy& initial_policy,
                                   ValueModel& model, const TdConfig& cfg,
                                   const ActorCriticConfig& acfg,
                                   const EvalOptions& opts = {});

}  // namespace dtd
