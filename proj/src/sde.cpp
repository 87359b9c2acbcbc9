#include "dtd/sde.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dtd/numerics.hpp"

namespace dtd {

namespace {

void check_vector_size(const Eigen::VectorXd& v, int expected,
                       const char* what) {
  if (v.size() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected size " +
                                std::to_string(expected) + ", got " +
                                std::to_string(v.size()));
  }
}

void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

GaussianPolicy::GaussianPolicy(
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mean,
    Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  if (!mean_) {
    throw std::invalid_argument("GaussianPolicy: mean function is empty");
  }
  if (cov_.rows() != cov_.cols() || cov_.rows() == 0) {
    throw std::invalid_argument("GaussianPolicy: covariance must be square");
  }
  if (asymmetry(cov_) > 1e-12) {
    throw std::invalid_argument(
        "GaussianPolicy: covariance must be symmetric within 1e-12");
  }
  sqrt_cov_ = psd_sqrt(cov_);  // rejects negative eigenvalues
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& s,
                                       Rng& rng) const {
  Eigen::VectorXd m = mean_(s);
  check_vector_size(m, action_dim(), "GaussianPolicy: mean(s)");
  return m + sqrt_cov_ * rng.gauss_vec(cov_.rows());
}

GaussianPolicy LinearGaussianPolicy::policy() const {
  if (gain.rows() != cov.rows()) {
    throw std::invalid_argument(
        "LinearGaussianPolicy: gain rows must match covariance size");
  }
  const Eigen::MatrixXd k = gain;
  return GaussianPolicy(
      [k](const Eigen::VectorXd& s) -> Eigen::VectorXd { return k * s; }, cov);
}

Eigen::VectorXd em_step(const ControlledSde& sys, const Eigen::VectorXd& s,
                        const Eigen::VectorXd& a, double dt,
                        const Eigen::VectorXd& noise) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("em_step: dt must be positive");
  }
  check_vector_size(s, sys.state_dim, "em_step: state");
  check_vector_size(a, sys.action_dim, "em_step: action");
  check_vector_size(noise, sys.noise_dim, "em_step: noise");

  const Eigen::VectorXd mu = sys.drift(s, a);
  check_vector_size(mu, sys.state_dim, "em_step: drift output");
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!std::isfinite(mu[i])) {
      throw std::runtime_error("em_step: drift component " +
                               std::to_string(i) + " is non-finite");
    }
  }

  const Eigen::MatrixXd sig = sys.diffusion(s, a);
  if (sig.rows() != sys.state_dim || sig.cols() != sys.noise_dim) {
    throw std::invalid_argument("em_step: diffusion output must be " +
                                std::to_string(sys.state_dim) + "x" +
                                std::to_string(sys.noise_dim));
  }
  if (!sig.allFinite()) {
    throw std::runtime_error("em_step: diffusion output is non-finite");
  }

  return s + mu * dt + sig * (std::sqrt(dt) * noise);
}

Eigen::VectorXd perturb_state(const Eigen::VectorXd& s, const NoiseSpec& spec,
                              const Eigen::VectorXd& noise) {
  if (spec.coef < 0.0) {
    throw std::invalid_argument("perturb_state: noise coef must be >= 0");
  }
  check_vector_size(noise, static_cast<int>(s.size()), "perturb_state: noise");
  return s + spec.coef * s.cwiseAbs().cwiseProduct(noise);
}

RolloutResult rollout(const ControlledSde& sys, const GaussianPolicy& policy,
                      const Eigen::VectorXd& s0, double dt, int n_steps,
                      std::uint64_t seed, const RolloutOptions& opts) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rollout: dt must be positive");
  }
  if (n_steps < 0) {
    throw std::invalid_argument("rollout: n_steps must be >= 0");
  }
  check_vector_size(s0, sys.state_dim, "rollout: s0");
  if (policy.action_dim() != sys.action_dim) {
    throw std::invalid_argument("rollout: policy action size mismatch");
  }

  const bool perturbed = opts.noise.coef > 0.0;
  Rng rng(seed);
  Rng noise_rng(derive_seed(opts.noise.rng_seed, 0x706e));

  RolloutResult result;
  result.transitions.reserve(static_cast<std::size_t>(n_steps));
  Eigen::VectorXd s = s0;
  for (int step = 0; step < n_steps; ++step) {
    const Eigen::VectorXd a = policy.sample(s, rng);
    const Eigen::VectorXd z = rng.gauss_vec(sys.noise_dim);
    Eigen::VectorXd s_next;
    try {
      s_next = em_step(sys, s, a, dt, z);
    } catch (const std::runtime_error&) {
      result.truncated = true;
      break;
    }
    if (perturbed) {
      s_next = perturb_state(s_next, opts.noise, noise_rng.gauss_vec(s.size()));
    }
    const double rho = sys.reward_rate
                           ? sys.reward_rate(
                                 opts.perturb_before_reward ? s_next : s, a)
                           : 0.0;
    const double reward =
        opts.scaling == RewardScaling::kDiscrete ? rho * dt : rho;
    if (!s_next.allFinite() || !std::isfinite(reward)) {
      result.truncated = true;
      break;
    }
    result.transitions.push_back(Transition{s, a, s_next, reward, dt});
    s = s_next;
  }
  return result;
}

void write_trajectory_csv(std::ostream& out, const RolloutResult& result) {
  if (result.transitions.empty()) {
    out << "t,r\n";
    return;
  }
  const Eigen::Index n = result.transitions.front().s.size();
  const Eigen::Index k = result.transitions.front().a.size();
  std::string line = "t";
  for (Eigen::Index i = 0; i < n; ++i) line += ",s_" + std::to_string(i);
  for (Eigen::Index i = 0; i < k; ++i) line += ",a_" + std::to_string(i);
  line += ",r\n";
  out << line;

  double t = 0.0;
  for (const Transition& tr : result.transitions) {
    line.clear();
    append_g17(line, t);
    for (Eigen::Index i = 0; i < n; ++i) {
      line += ',';
      append_g17(line, tr.s[i]);
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      line += ',';
      append_g17(line, tr.a[i]);
    }
    line += ',';
    append_g17(line, tr.reward);
    line += '\n';
    out << line;
    t += tr.dt;
  }
}

}  // namespace dtd
