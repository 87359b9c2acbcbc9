#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "dtd/rng.hpp"

namespace dtd {

// How sampled rewards are stored on transitions: kDiscrete keeps the
// integrated step reward r = rho * dt, kContinuous keeps the rate rho itself.
enum class RewardScaling { kContinuous, kDiscrete };

using DriftFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using DiffusionFn =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using RewardRateFn =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Controlled diffusion dS = mu(S, A) dt + sigma(S, A) dB with state_dim
// states, action_dim controls and noise_dim Brownian components.
struct ControlledSde {
  int state_dim = 0;
  int action_dim = 0;
  int noise_dim = 0;
  DriftFn drift;
  DiffusionFn diffusion;
  RewardRateFn reward_rate;  // rho(s, a); treated as 0 if unset
};

struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  Eigen::VectorXd s_next;
  double reward = 0.0;  // rho * dt (kDiscrete) or rho (kContinuous)
  double dt = 0.0;
};

// State-conditional Gaussian action distribution a ~ N(mean(s), cov).
class GaussianPolicy {
 public:
  GaussianPolicy(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mean,
                 Eigen::MatrixXd covariance);

  Eigen::VectorXd mean(const Eigen::VectorXd& s) const { return mean_(s); }
  Eigen::VectorXd sample(const Eigen::VectorXd& s, Rng& rng) const;
  const Eigen::MatrixXd& covariance() const { return cov_; }
  int action_dim() const { return static_cast<int>(cov_.rows()); }

 private:
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd sqrt_cov_;
};

// Linear-Gaussian policy a = K s + xi, xi ~ N(0, cov). The gain matrix is
// the learnable object in actor-critic runs.
struct LinearGaussianPolicy {
  Eigen::MatrixXd gain;  // K, action_dim x state_dim
  Eigen::MatrixXd cov;   // action covariance, action_dim x action_dim

  GaussianPolicy policy() const;
};

// Multiplicative state perturbation: s_i -> s_i + coef * |s_i| * z_i.
struct NoiseSpec {
  double coef = 0.0;
  std::uint64_t rng_seed = 0;
};

// One Euler-Maruyama step s + mu dt + sigma sqrt(dt) z for a standard
// normal draw z. Throws std::invalid_argument on shape errors and
// std::runtime_error when a coefficient evaluates to a non-finite value.
Eigen::VectorXd em_step(const ControlledSde& sys, const Eigen::VectorXd& s,
                        const Eigen::VectorXd& a, double dt,
                        const Eigen::VectorXd& noise);

Eigen::VectorXd perturb_state(const Eigen::VectorXd& s, const NoiseSpec& spec,
                              const Eigen::VectorXd& noise);

struct RolloutOptions {
  RewardScaling scaling = RewardScaling::kDiscrete;
  NoiseSpec noise{};
  // When true the step reward is evaluated at the perturbed arrival state
  // (the injected noise lands before the reward); default evaluates the
  // rate at the departure state, before the arrival is perturbed.
  bool perturb_before_reward = false;
};

struct RolloutResult {
  std::vector<Transition> transitions;
  bool truncated = false;  // a non-finite state cut the trajectory short
};

// Simulates n_steps transitions from s0 under the policy. Dynamics and
// action draws come from `seed`; perturbation draws use their own stream
// (NoiseSpec::rng_seed), so toggling noise does not reshuffle the dynamics.
RolloutResult rollout(const ControlledSde& sys, const GaussianPolicy& policy,
                      const Eigen::VectorXd& s0, double dt, int n_steps,
                      std::uint64_t seed, const RolloutOptions& opts = {});

// CSV with header t,s_0,...,s_{n-1},a_0,...,a_{k-1},r; one row per
// transition, holding the departure state and the action taken there.
void write_trajectory_csv(std::ostream& out, const RolloutResult& result);

}  // namespace dtd
