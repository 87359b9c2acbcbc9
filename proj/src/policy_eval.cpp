#include "dtd/policy_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "dtd/numerics.hpp"

namespace dtd {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void check_train_config(const TrainConfig& tcfg) {
  if (tcfg.env_steps_per_update < 1 || tcfg.epochs_per_update < 1 ||
      tcfg.minibatch_size < 1 || tcfg.total_updates < 0) {
    throw std::invalid_argument("TrainConfig: counts must be positive");
  }
  if (!(tcfg.learning_rate >= 0.0)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  }
  if (tcfg.minibatch_size > tcfg.env_steps_per_update) {
    throw std::invalid_argument(
        "TrainConfig: minibatch_size must not exceed env_steps_per_update");
  }
}

Eigen::VectorXd default_s0(Rng& rng, int n) { return rng.gauss_vec(n); }

// Mean loss/gradient over one minibatch; the reduction order is fixed by
// the index order, so identical seeds give identical curves.
bool minibatch_grad(const ValueModel& target, const ValueModel& pred,
                    const Buffer& buf, const std::vector<int>& batch,
                    const TdConfig& cfg, double& loss_out,
                    Eigen::VectorXd& grad_out) {
  grad_out.setZero();
  double loss = 0.0;
  for (int idx : batch) {
    const LossGrad lg =
        method_loss_grad(target, pred, buf[static_cast<std::size_t>(idx)], cfg);
    loss += lg.loss;
    grad_out += lg.grad;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  loss *= inv;
  grad_out *= inv;
  loss_out = loss;
  return std::isfinite(loss) && grad_out.allFinite();
}

}  // namespace

void Buffer::add(Transition tr) {
  if (transitions_.size() >= capacity_) {
    throw std::invalid_argument("Buffer: capacity exceeded");
  }
  if (!transitions_.empty() &&
      std::abs(tr.dt - transitions_.front().dt) > 1e-15) {
    throw std::invalid_argument("Buffer: transitions must share dt");
  }
  transitions_.push_back(std::move(tr));
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "update,loss,oracle_err,wall_ms\n";
  std::string line;
  for (std::size_t i = 0; i < report.loss.size(); ++i) {
    line = std::to_string(i);
    line += ',';
    append_g17(line, report.loss[i]);
    line += ',';
    append_g17(line, report.oracle_err[i]);
    line += ',';
    append_g17(line, report.wall_ms[i]);
    line += '\n';
    out << line;
  }
}

std::vector<std::vector<int>> epoch_minibatches(int n, int batch, Rng& rng) {
  if (n < 1 || batch < 1 || batch > n) {
    throw std::invalid_argument("epoch_minibatches: need 1 <= batch <= n");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const int count = n / batch;
  std::vector<std::vector<int>> out(static_cast<std::size_t>(count));
  for (int b = 0; b < count; ++b) {
    out[static_cast<std::size_t>(b)].assign(
        order.begin() + static_cast<std::ptrdiff_t>(b) * batch,
        order.begin() + static_cast<std::ptrdiff_t>(b + 1) * batch);
  }
  return out;
}

ParamOptimizer::ParamOptimizer(Optimizer kind, Eigen::Index n,
                               double learning_rate)
    : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("ParamOptimizer: learning_rate must be >= 0");
  }
  if (kind_ == Optimizer::kAdam) {
    m_ = Eigen::VectorXd::Zero(n);
    v_ = Eigen::VectorXd::Zero(n);
  }
}

void ParamOptimizer::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  if (lr_ == 0.0) return;  // exact no-op, parameters stay bitwise identical
  if (kind_ == Optimizer::kSgd) {
    theta -= lr_ * grad;
    return;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  theta -= (lr_ / bc1) *
           (m_.array() / ((v_.array() / bc2).sqrt() + kEps)).matrix();
}

EvalReport evaluate_policy(const ControlledSde& sys,
                           const GaussianPolicy& policy, ValueModel& model,
                           const TdConfig& cfg, const TrainConfig& tcfg,
                           const EvalOptions& opts) {
  check_train_config(tcfg);

  const std::size_t updates = static_cast<std::size_t>(tcfg.total_updates);
  EvalReport report;
  report.loss.assign(updates, kNan);
  report.oracle_err.assign(updates, kNan);
  report.wall_ms.assign(updates, kNan);
  report.second_order.assign(updates, kNan);

  ParamOptimizer optimizer(tcfg.optimizer, model.param_count(),
                           tcfg.learning_rate);
  Rng env_rng(derive_seed(tcfg.seed, 1));
  Rng batch_rng(derive_seed(tcfg.seed, 2));

  RolloutOptions ropts;
  ropts.scaling = cfg.scaling;
  ropts.noise = opts.process_noise;
  ropts.perturb_before_reward = opts.perturb_before_reward;

  Buffer buffer(static_cast<std::size_t>(tcfg.env_steps_per_update));
  Eigen::VectorXd grad(model.param_count());

  for (std::size_t u = 0; u < updates; ++u) {
    const auto t_start = std::chrono::steady_clock::now();

    // Algorithm step 1: fresh buffer under the fixed policy.
    buffer.clear();
    const Eigen::VectorXd s0 = opts.s0_sampler
                                   ? opts.s0_sampler(env_rng)
                                   : default_s0(env_rng, sys.state_dim);
    const RolloutResult rr =
        rollout(sys, policy, s0, cfg.dt, tcfg.env_steps_per_update,
                env_rng.next_u64(), ropts);
    for (const Transition& tr : rr.transitions) buffer.add(tr);
    if (buffer.size() < static_cast<std::size_t>(tcfg.minibatch_size)) {
      report.diverged = true;
      report.diverged_at = static_cast<int>(u);
      break;
    }

    // Algorithm step 2: freeze the bootstrap parameters once per update.
    const std::unique_ptr<ValueModel> target = model.clone();

    double second_sum = 0.0;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      second_sum += std::abs(dtd_second_order(*target, buffer[i], cfg));
    }
    report.second_order[u] = second_sum / static_cast<double>(buffer.size());

    // Algorithm step 3: epochs of minibatch descent against the frozen
    // target.
    double loss_sum = 0.0;
    long batches = 0;
    bool finite = true;
    for (int e = 0; e < tcfg.epochs_per_update && finite; ++e) {
      const auto batches_idx = epoch_minibatches(
          static_cast<int>(buffer.size()), tcfg.minibatch_size, batch_rng);
      for (const std::vector<int>& batch : batches_idx) {
        double batch_loss = 0.0;
        if (!minibatch_grad(*target, model, buffer, batch, cfg, batch_loss,
                            grad)) {
          finite = false;
          break;
        }
        Eigen::VectorXd theta = model.params();
        optimizer.step(theta, grad);
        model.set_params(theta);
        loss_sum += batch_loss;
        ++batches;
      }
    }
    if (!finite || !model.params().allFinite()) {
      report.diverged = true;
      report.diverged_at = static_cast<int>(u);
      break;
    }

    report.loss[u] = batches > 0 ? loss_sum / static_cast<double>(batches)
                                 : kNan;
    if (opts.oracle_error) report.oracle_err[u] = opts.oracle_error(model);
    report.wall_ms[u] =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t_start)
            .count();
  }

  report.final_params = model.params();
  return report;
}

ActorCritic::ActorCritic(const ControlledSde& sys, LinearGaussianPolicy policy,
                         ValueModel& model, const TdConfig& cfg,
                         const ActorCriticConfig& acfg, const EvalOptions& opts)
    : sys_(sys),
      policy_(std::move(policy)),
      model_(model),
      cfg_(cfg),
      acfg_(acfg),
      opts_(opts),
      rng_(derive_seed(acfg.seed, 3)) {
  check_train_config(acfg_.critic);
  if (!(acfg_.actor_learning_rate >= 0.0)) {
    throw std::invalid_argument(
        "ActorCritic: actor_learning_rate must be >= 0");
  }
  if (policy_.cov.rows() != policy_.cov.cols() || policy_.cov.rows() == 0 ||
      asymmetry(policy_.cov) > 1e-12) {
    throw std::invalid_argument("ActorCritic: covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(policy_.cov);
  if (llt.info() != Eigen::Success ||
      policy_.cov.diagonal().minCoeff() <= 0.0) {
    throw std::invalid_argument(
        "ActorCritic: covariance must be positive definite (the log-density "
        "gradient is undefined for a deterministic policy)");
  }
  cov_inv_ = llt.solve(
      Eigen::MatrixXd::Identity(policy_.cov.rows(), policy_.cov.cols()));
  if (!cov_inv_.allFinite()) {
    throw std::invalid_argument(
        "ActorCritic: covariance must be positive definite (the log-density "
        "gradient is undefined for a deterministic policy)");
  }
  critic_opt_ = std::make_unique<ParamOptimizer>(acfg_.critic.optimizer,
                                                 model_.param_count(),
                                                 acfg_.critic.learning_rate);
}

double ActorCritic::advantage(const Transition& tr,
                              const ValueModel& target) const {
  // Sign convention: positive when the realized step beat the current value
  // estimate. TD-style errors are prediction - target, so they flip sign;
  // the dTD error already points the right way (its prediction side grows
  // with the realized improvement).
  switch (cfg_.method) {
    case TdMethod::kTd:
      return -td_terms(target, target, tr, cfg_).error;
    case TdMethod::kNaiveDtd:
      return -naive_dtd_terms(target, target, tr, cfg_).error;
    case TdMethod::kDtd:
      return dtd_terms(target, target, tr, cfg_).error;
    case TdMethod::kBetaDtd: {
      const double td_err = td_terms(target, target, tr, cfg_).error;
      const double dtd_err = dtd_terms(target, target, tr, cfg_).error;
      return (1.0 - cfg_.beta) * (-td_err) + cfg_.beta * dtd_err;
    }
  }
  throw std::logic_error("ActorCritic: unknown method");
}

bool ActorCritic::step() {
  const TrainConfig& tcfg = acfg_.critic;
  const GaussianPolicy pol = policy_.policy();

  Buffer buffer(static_cast<std::size_t>(tcfg.env_steps_per_update));
  RolloutOptions ropts;
  ropts.scaling = cfg_.scaling;
  ropts.noise = opts_.process_noise;
  ropts.perturb_before_reward = opts_.perturb_before_reward;
  const Eigen::VectorXd s0 = opts_.s0_sampler
                                 ? opts_.s0_sampler(rng_)
                                 : rng_.gauss_vec(sys_.state_dim);
  const RolloutResult rr = rollout(sys_, pol, s0, cfg_.dt,
                                   tcfg.env_steps_per_update, rng_.next_u64(),
                                   ropts);
  for (const Transition& tr : rr.transitions) buffer.add(tr);
  if (buffer.size() < static_cast<std::size_t>(tcfg.minibatch_size)) {
    return false;
  }

  // Critic update, identical to one evaluate_policy outer step.
  {
    const std::unique_ptr<ValueModel> target = model_.clone();
    Eigen::VectorXd grad(model_.param_count());
    for (int e = 0; e < tcfg.epochs_per_update; ++e) {
      const auto batches = epoch_minibatches(static_cast<int>(buffer.size()),
                                             tcfg.minibatch_size, rng_);
      for (const std::vector<int>& batch : batches) {
        double batch_loss = 0.0;
        if (!minibatch_grad(*target, model_, buffer, batch, cfg_, batch_loss,
                            grad)) {
          return false;
        }
        Eigen::VectorXd theta = model_.params();
        critic_opt_->step(theta, grad);
        model_.set_params(theta);
      }
    }
    if (!model_.params().allFinite()) return false;
  }

  // Actor update: ascend E[advantage * cov^{-1} (a - K s) s'] with the
  // freshly updated critic frozen as its own target.
  const std::unique_ptr<ValueModel> target = model_.clone();
  Eigen::MatrixXd gk = Eigen::MatrixXd::Zero(policy_.gain.rows(),
                                             policy_.gain.cols());
  double abs_adv = 0.0;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& tr = buffer[i];
    const double adv = advantage(tr, *target);
    gk.noalias() +=
        adv * (cov_inv_ * (tr.a - policy_.gain * tr.s)) * tr.s.transpose();
    abs_adv += std::abs(adv);
  }
  const double inv = 1.0 / static_cast<double>(buffer.size());
  gk *= inv;
  last_mean_abs_adv_ = abs_adv * inv;
  if (!gk.allFinite()) return false;
  policy_.gain += acfg_.actor_learning_rate * gk;
  ++step_index_;
  return policy_.gain.allFinite();
}

ActorCriticResult run_actor_critic(const ControlledSde& sys,
                                   const LinearGaussianPolicy& initial_policy,
                                   ValueModel& model, const TdConfig& cfg,
                                   const ActorCriticConfig& acfg,
                                   const EvalOptions& opts) {
  ActorCritic ac(sys, initial_policy, model, cfg, acfg, opts);
  ActorCriticResult result;
  result.gain_trace.reserve(static_cast<std::size_t>(acfg.total_steps));
  for (int i = 0; i < acfg.total_steps; ++i) {
    if (!ac.step()) {
      result.diverged = true;
      break;
    }
    result.gain_trace.push_back(ac.policy().gain);
  }
  result.policy = ac.policy();
  return result;
}

}  // namespace dtd
