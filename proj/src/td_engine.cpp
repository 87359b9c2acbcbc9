#include "dtd/td_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "dtd/numerics.hpp"

namespace dtd {

namespace {

void check_transition(const Transition& tr) {
  if (!(tr.dt > 0.0)) {
    throw std::invalid_argument("td_engine: transition dt must be positive");
  }
  if (tr.s.size() != tr.s_next.size()) {
    throw std::invalid_argument("td_engine: state size mismatch in transition");
  }
}

void check_gamma(const TdConfig& cfg) {
  if (!(cfg.gamma > 0.0)) {
    throw std::invalid_argument("td_engine: gamma must be positive");
  }
}

void check_gamma_discrete(const TdConfig& cfg) {
  if (!(cfg.gamma_discrete > 0.0) || !(cfg.gamma_discrete < 1.0)) {
    throw std::invalid_argument(
        "td_engine: gamma_discrete must lie in (0, 1)");
  }
}

double reward_rate_of(const Transition& tr, const TdConfig& cfg) {
  return cfg.scaling == RewardScaling::kDiscrete ? tr.reward / tr.dt
                                                 : tr.reward;
}

double discrete_reward_of(const Transition& tr, const TdConfig& cfg) {
  return cfg.scaling == RewardScaling::kDiscrete ? tr.reward
                                                 : tr.reward * tr.dt;
}

LossTerms finish(double target, double prediction) {
  return LossTerms{target, prediction, prediction - target};
}

}  // namespace

TdConfig TdConfig::continuous_time(double gamma, double dt) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("TdConfig: gamma must be positive");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("TdConfig: dt must be positive");
  }
  TdConfig cfg;
  cfg.gamma = gamma;
  cfg.dt = dt;
  cfg.gamma_discrete = std::exp(-gamma * dt);
  cfg.scaling = RewardScaling::kContinuous;
  return cfg;
}

TdConfig TdConfig::discrete_time(double gamma_discrete, double dt) {
  if (!(gamma_discrete > 0.0) || !(gamma_discrete < 1.0)) {
    throw std::invalid_argument("TdConfig: gamma_discrete must lie in (0, 1)");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("TdConfig: dt must be positive");
  }
  TdConfig cfg;
  cfg.gamma_discrete = gamma_discrete;
  cfg.dt = dt;
  cfg.gamma = -std::log(gamma_discrete) / dt;
  cfg.scaling = RewardScaling::kDiscrete;
  return cfg;
}

LossTerms td_terms(const ValueModel& target_model, const ValueModel& pred_model,
                   const Transition& tr, const TdConfig& cfg) {
  check_transition(tr);
  check_gamma_discrete(cfg);
  const double r = discrete_reward_of(tr, cfg);
  const double target = r + cfg.gamma_discrete * target_model.value(tr.s_next);
  return finish(target, pred_model.value(tr.s));
}

LossTerms naive_dtd_terms(const ValueModel& target_model,
                          const ValueModel& pred_model, const Transition& tr,
                          const TdConfig& cfg) {
  check_transition(tr);
  check_gamma(cfg);
  const double rho = reward_rate_of(tr, cfg);
  const Eigen::VectorXd ds = tr.s_next - tr.s;
  double bracket = rho + ds.dot(target_model.grad_s(tr.s)) / tr.dt;
  if (cfg.diffusion_term) {
    bracket += 0.5 * ds.dot(target_model.hvp_s(tr.s, ds)) / tr.dt;
  }
  return finish(bracket / cfg.gamma, pred_model.value(tr.s));
}

LossTerms dtd_terms(const ValueModel& target_model,
                    const ValueModel& pred_model, const Transition& tr,
                    const TdConfig& cfg) {
  check_transition(tr);
  const Eigen::VectorXd ds = tr.s_next - tr.s;
  double target = 0.0;
  double prediction = ds.dot(pred_model.grad_s(tr.s));
  if (cfg.diffusion_term) {
    prediction += 0.5 * ds.dot(pred_model.hvp_s(tr.s, ds));
  }
  if (cfg.scaling == RewardScaling::kContinuous) {
    check_gamma(cfg);
    target = -tr.reward + cfg.gamma * target_model.value(tr.s_next);
    prediction /= tr.dt;
  } else {
    check_gamma_discrete(cfg);
    target = -tr.reward -
             std::log(cfg.gamma_discrete) * target_model.value(tr.s_next);
  }
  return finish(target, prediction);
}

double beta_dtd_loss(const ValueModel& target_model,
                     const ValueModel& pred_model, const Transition& tr,
                     const TdConfig& cfg) {
  if (!(cfg.beta >= 0.0) || !(cfg.beta <= 1.0)) {
    throw std::invalid_argument("td_engine: beta must lie in [0, 1]");
  }
  // Endpoints must match the pure losses bitwise, so the zero-weight side
  // is not evaluated at all.
  if (cfg.beta == 0.0) {
    const double e = td_terms(target_model, pred_model, tr, cfg).error;
    return e * e;
  }
  if (cfg.beta == 1.0) {
    const double e = dtd_terms(target_model, pred_model, tr, cfg).error;
    return e * e;
  }
  const double td_err = td_terms(target_model, pred_model, tr, cfg).error;
  const double dtd_err = dtd_terms(target_model, pred_model, tr, cfg).error;
  return (1.0 - cfg.beta) * td_err * td_err + cfg.beta * dtd_err * dtd_err;
}

double dtd_second_order(const ValueModel& model, const Transition& tr,
                        const TdConfig& cfg) {
  check_transition(tr);
  const Eigen::VectorXd ds = tr.s_next - tr.s;
  double term = 0.5 * ds.dot(model.hvp_s(tr.s, ds));
  if (cfg.scaling == RewardScaling::kContinuous) term /= tr.dt;
  return term;
}

namespace {

// Parameter gradient of the squared error for the target/prediction split
// of one method. The target never contributes: it is a frozen constant.
LossGrad squared_value_loss(const ValueModel& pred_model, const LossTerms& lt,
                            const Transition& tr) {
  const Eigen::VectorXd zero_dir = Eigen::VectorXd::Zero(tr.s.size());
  LossGrad out;
  out.loss = lt.error * lt.error;
  out.grad = (2.0 * lt.error) *
             pred_model.param_grad_combo(tr.s, zero_dir, 1.0, 0.0, 0.0);
  return out;
}

LossGrad squared_dtd_loss(const ValueModel& pred_model, const LossTerms& lt,
                          const Transition& tr, const TdConfig& cfg) {
  const Eigen::VectorXd ds = tr.s_next - tr.s;
  const double scale =
      cfg.scaling == RewardScaling::kContinuous ? 1.0 / tr.dt : 1.0;
  const double c_grad = scale;
  const double c_curv = cfg.diffusion_term ? 0.5 * scale : 0.0;
  LossGrad out;
  out.loss = lt.error * lt.error;
  out.grad = (2.0 * lt.error) *
             pred_model.param_grad_combo(tr.s, ds, 0.0, c_grad, c_curv);
  return out;
}

}  // namespace

LossGrad method_loss_grad(const ValueModel& target_model,
                          const ValueModel& pred_model, const Transition& tr,
                          const TdConfig& cfg) {
  switch (cfg.method) {
    case TdMethod::kTd:
      return squared_value_loss(
          pred_model, td_terms(target_model, pred_model, tr, cfg), tr);
    case TdMethod::kNaiveDtd:
      return squared_value_loss(
          pred_model, naive_dtd_terms(target_model, pred_model, tr, cfg), tr);
    case TdMethod::kDtd:
      return squared_dtd_loss(
          pred_model, dtd_terms(target_model, pred_model, tr, cfg), tr, cfg);
    case TdMethod::kBetaDtd: {
      if (!(cfg.beta >= 0.0) || !(cfg.beta <= 1.0)) {
        throw std::invalid_argument("td_engine: beta must lie in [0, 1]");
      }
      // Skip zero-weight sides entirely so the endpoints reproduce the pure
      // methods bitwise (adding a 0-weighted term could still flip signed
      // zeros).
      if (cfg.beta == 0.0) {
        return squared_value_loss(
            pred_model, td_terms(target_model, pred_model, tr, cfg), tr);
      }
      if (cfg.beta == 1.0) {
        return squared_dtd_loss(
            pred_model, dtd_terms(target_model, pred_model, tr, cfg), tr, cfg);
      }
      const LossGrad td_part = squared_value_loss(
          pred_model, td_terms(target_model, pred_model, tr, cfg), tr);
      const LossGrad dtd_part = squared_dtd_loss(
          pred_model, dtd_terms(target_model, pred_model, tr, cfg), tr, cfg);
      LossGrad out;
      out.loss = (1.0 - cfg.beta) * td_part.loss + cfg.beta * dtd_part.loss;
      out.grad = (1.0 - cfg.beta) * td_part.grad + cfg.beta * dtd_part.grad;
      return out;
    }
  }
  throw std::logic_error("td_engine: unknown method");
}

double contraction_factor(const ContractionCertificate& cert) {
  if (!(cert.gamma > 0.0)) {
    throw std::invalid_argument("contraction_factor: gamma must be positive");
  }
  if (cert.state_dim < 1 || cert.noise_dim < 1) {
    throw std::invalid_argument(
        "contraction_factor: dimensions must be >= 1");
  }
  if (cert.mu0_inf < 0.0 || cert.sigma0_inf < 0.0 || cert.lip_mu < 0.0 ||
      cert.lip_sigma < 0.0 || cert.domain_bound < 0.0 ||
      cert.lip_value < 0.0 || cert.smooth_value < 0.0) {
    throw std::invalid_argument(
        "contraction_factor: constants must be nonnegative");
  }
  const double n = cert.state_dim;
  const double m = cert.noise_dim;
  const double b1 = cert.mu0_inf + cert.lip_mu * cert.domain_bound;
  const double s = cert.sigma0_inf + cert.lip_sigma * cert.domain_bound;
  const double b2 = s * s;
  return (n * cert.lip_value * b1 +
          0.5 * n * n * m * cert.smooth_value * b2) /
         cert.gamma;
}

double apply_hjb_operator(const ControlledSde& sys, double gamma,
                          const ValueModel& model, const Eigen::VectorXd& s,
                          const std::vector<Eigen::VectorXd>& actions) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("apply_hjb_operator: gamma must be positive");
  }
  if (actions.empty()) {
    throw std::invalid_argument("apply_hjb_operator: need at least one action");
  }
  const int n = sys.state_dim;
  const Eigen::VectorXd grad = model.grad_s(s);
  // Hessian columns via basis-vector products; the model never has to
  // expose a dense Hessian.
  Eigen::MatrixXd hcols(n, n);
  for (int j = 0; j < n; ++j) {
    hcols.col(j) = model.hvp_s(s, Eigen::VectorXd::Unit(n, j));
  }
  std::vector<double> vals(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Eigen::VectorXd& a = actions[i];
    const double rho = sys.reward_rate ? sys.reward_rate(s, a) : 0.0;
    const Eigen::VectorXd mu = sys.drift(s, a);
    const Eigen::MatrixXd sig = sys.diffusion(s, a);
    const Eigen::MatrixXd ssq = sig * sig.transpose();
    double trace = 0.0;
    for (int j = 0; j < n; ++j) trace += ssq.row(j).dot(hcols.col(j));
    vals[i] = rho + mu.dot(grad) + 0.5 * trace;
  }
  return pairwise_mean(vals) / gamma;
}

ContractionCheck empirical_contraction_check(
    const ControlledSde& sys, const GaussianPolicy& policy, double gamma,
    const QuadraticPairSampler& sampler, int n_pairs,
    const std::vector<Eigen::VectorXd>& grid, int n_action_samples,
    std::uint64_t seed) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument(
        "empirical_contraction_check: gamma must be positive");
  }
  if (n_pairs < 1 || grid.empty() || n_action_samples < 1) {
    throw std::invalid_argument(
        "empirical_contraction_check: need pairs, grid points and actions");
  }
  // One fixed action sample per grid state, shared by both models of every
  // pair, so the reward term cancels in the operator difference.
  Rng action_rng(derive_seed(seed, 1));
  std::vector<std::vector<Eigen::VectorXd>> actions(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    actions[g].reserve(static_cast<std::size_t>(n_action_samples));
    for (int i = 0; i < n_action_samples; ++i) {
      actions[g].push_back(policy.sample(grid[g], action_rng));
    }
  }

  Rng pair_rng(derive_seed(seed, 2));
  ContractionCheck out;
  for (int p = 0; p < n_pairs; ++p) {
    const auto [v1, v2] = sampler(pair_rng);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double t1 = apply_hjb_operator(sys, gamma, v1, grid[g], actions[g]);
      const double t2 = apply_hjb_operator(sys, gamma, v2, grid[g], actions[g]);
      num = std::max(num, std::abs(t1 - t2));
      den = std::max(den, std::abs(v1.value(grid[g]) - v2.value(grid[g])));
    }
    if (den <= 1e-14) {
      ++out.pairs_skipped;
      continue;
    }
    ++out.pairs_used;
    out.max_ratio = std::max(out.max_ratio, num / den);
  }
  return out;
}

QuadraticPairSampler certified_quadratic_pair_sampler(double lip_value,
                                                      double smooth_value,
                                                      double domain_bound) {
  if (!(lip_value > 0.0) || !(smooth_value > 0.0) || !(domain_bound > 0.0)) {
    throw std::invalid_argument(
        "certified_quadratic_pair_sampler: constants must be positive");
  }
  return [lip_value, smooth_value,
          domain_bound](Rng& rng) -> std::pair<QuadraticValue, QuadraticValue> {
    auto u = [&rng] { return 2.0 * rng.uniform() - 1.0; };
    const double p1 = u();
    const double b1 = u();
    const double c1 = u();
    // Difference D(s) = p s^2 + b s + c on [-B, B]:
    //   sup |D'| = 2|p|B + |b|, sup |D''| = 2|p|, sup |D| >= |D(0)| = |c|,
    // so choosing |c| = max(sup|D'| / L_V, sup|D''| / beta_V) puts the pair
    // inside the certified class as long as the grid contains 0.
    const double p = u();
    const double b = u();
    const double c = std::max(
        (2.0 * std::abs(p) * domain_bound + std::abs(b)) / lip_value,
        2.0 * std::abs(p) / smooth_value);
    Eigen::MatrixXd pm1(1, 1), pm2(1, 1);
    pm1 << p1;
    pm2 << p1 - p;
    Eigen::VectorXd bv1(1), bv2(1);
    bv1 << b1;
    bv2 << b1 - b;
    return {QuadraticValue(pm1, bv1, c1), QuadraticValue(pm2, bv2, c1 - c)};
  };
}

}  // namespace dtd
