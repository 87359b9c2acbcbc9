#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dtd/sde.hpp"
#include "dtd/value_model.hpp"

namespace dtd {

enum class TdMethod { kTd, kNaiveDtd, kDtd, kBetaDtd };

// Shared knobs for all temporal-difference error forms. Continuous scaling
// works with reward rates and per-time quantities; discrete scaling works
// with integrated step rewards and pre-multiplies targets and predictions
// by dt. The two are related by exactly that factor of dt.
struct TdConfig {
  double gamma = 1.0;           // continuous discount rate
  double gamma_discrete = 0.0;  // exp(-gamma * dt)
  double dt = 0.0;
  RewardScaling scaling = RewardScaling::kContinuous;
  TdMethod method = TdMethod::kTd;
  double beta = 0.0;            // mixing weight, only read by kBetaDtd
  bool diffusion_term = true;   // include the second-order (Ito) term

  static TdConfig continuous_time(double gamma, double dt);
  static TdConfig discrete_time(double gamma_discrete, double dt);
};

// One temporal-difference error split into the bootstrapped target (held
// fixed during an update) and the model prediction the optimizer moves.
struct LossTerms {
  double target = 0.0;
  double prediction = 0.0;
  double error = 0.0;  // prediction - target
};

// Classic TD(0): target r + gamma_d V_target(s'), prediction V(s).
LossTerms td_terms(const ValueModel& target_model, const ValueModel& pred_model,
                   const Transition& tr, const TdConfig& cfg);

// First-order-consistent but biased variant: the target differentiates the
// frozen model along the realized increment,
//   ((rho + <ds/dt, grad V_tgt> + <ds, H_tgt ds> / (2 dt)) / gamma),
// and the prediction is V(s). Both sides are values, so the result is the
// same under either scaling (the stored reward is converted to a rate).
LossTerms naive_dtd_terms(const ValueModel& target_model,
                          const ValueModel& pred_model, const Transition& tr,
                          const TdConfig& cfg);

// Differential TD: the derivatives move to the prediction side, where they
// carry parameter gradients. Continuous scaling:
//   target     = -rho + gamma V_target(s')
//   prediction = <ds/dt, grad V> + <ds, H ds> / (2 dt)
// Discrete scaling multiplies both sides by dt (the target becomes
// -r - ln(gamma_d) V_target(s')).
LossTerms dtd_terms(const ValueModel& target_model,
                    const ValueModel& pred_model, const Transition& tr,
                    const TdConfig& cfg);

// Convex mixture (1 - beta) td_error^2 + beta dtd_error^2 of the squared
// errors above, both evaluated under cfg's scaling. At beta = 0 or 1 the
// value is bitwise equal to the corresponding pure squared error.
double beta_dtd_loss(const ValueModel& target_model,
                     const ValueModel& pred_model, const Transition& tr,
                     const TdConfig& cfg);

// The second-order contribution <ds, H ds> / (2 dt) (times dt under
// discrete scaling) that dtd_terms adds on the prediction side.
double dtd_second_order(const ValueModel& model, const Transition& tr,
                        const TdConfig& cfg);

// Squared loss of cfg.method together with its gradient in the prediction
// model's parameters; the target model is treated as a constant.
struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};
LossGrad method_loss_grad(const ValueModel& target_model,
                          const ValueModel& pred_model, const Transition& tr,
                          const TdConfig& cfg);

// Sufficient condition for the expected one-step operator to contract:
//   B1 = |mu(0,0)|_inf + L_mu B,  B2 = (|sigma(0,0)|_inf + L_sigma B)^2,
//   factor = (n L_V B1 + n^2 m B2 beta_V / 2) / gamma < 1.
struct ContractionCertificate {
  int state_dim = 0;
  int noise_dim = 0;
  double gamma = 0.0;
  double mu0_inf = 0.0;     // |mu(0, 0)|_inf
  double sigma0_inf = 0.0;  // |sigma(0, 0)|_inf
  double lip_mu = 0.0;
  double lip_sigma = 0.0;
  double domain_bound = 0.0;  // B, sup-norm radius of the state domain
  double lip_value = 0.0;     // L_V
  double smooth_value = 0.0;  // beta_V
};

double contraction_factor(const ContractionCertificate& cert);

inline bool is_contraction(const ContractionCertificate& cert) {
  return contraction_factor(cert) < 1.0;
}

// Expected infinitesimal operator (T V)(s) = (rho + <mu, grad V> +
// tr(sigma sigma' H V) / 2) / gamma, with the expectation over the policy
// approximated by the supplied action sample.
double apply_hjb_operator(const ControlledSde& sys, double gamma,
                          const ValueModel& model, const Eigen::VectorXd& s,
                          const std::vector<Eigen::VectorXd>& actions);

// Draws value-function pairs and measures the empirical sup-norm ratio
//   max_grid |T V1 - T V2| / max_grid |V1 - V2|
// using a shared action sample per grid state so the reward term cancels.
using QuadraticPairSampler =
    std::function<std::pair<QuadraticValue, QuadraticValue>(Rng&)>;

struct ContractionCheck {
  double max_ratio = 0.0;
  int pairs_used = 0;
  int pairs_skipped = 0;  // |V1 - V2| vanished on the whole grid
};

ContractionCheck empirical_contraction_check(
    const ControlledSde& sys, const GaussianPolicy& policy, double gamma,
    const QuadraticPairSampler& sampler, int n_pairs,
    const std::vector<Eigen::VectorXd>& grid, int n_action_samples,
    std::uint64_t seed);

// Sampler over 1-D quadratic pairs whose difference D satisfies
//   sup |D'| <= lip_value * sup |D|  and  sup |D''| <= smooth_value * sup |D|
// on [-domain_bound, domain_bound], the class the contraction bound
// applies to. The grid must contain 0 for the guarantee to hold.
QuadraticPairSampler certified_quadratic_pair_sampler(double lip_value,
                                                      double smooth_value,
                                                      double domain_bound);

}  // namespace dtd
