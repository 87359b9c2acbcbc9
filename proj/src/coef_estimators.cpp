#include "dtd/coef_estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dtd/numerics.hpp"
#include "dtd/rng.hpp"

namespace dtd {

CoefEstimate estimate_coefficients(const ControlledSde& sys,
                                   const GaussianPolicy& policy,
                                   const Eigen::VectorXd& s, double dt,
                                   long n_samples, std::uint64_t seed,
                                   int n_substeps) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("estimate_coefficients: dt must be positive");
  }
  if (n_samples < 2) {
    throw std::invalid_argument(
        "estimate_coefficients: n_samples must be >= 2");
  }
  if (n_substeps < 1) {
    throw std::invalid_argument(
        "estimate_coefficients: n_substeps must be >= 1");
  }
  if (s.size() != sys.state_dim) {
    throw std::invalid_argument("estimate_coefficients: state size mismatch");
  }

  const int n = sys.state_dim;
  const double h = dt / n_substeps;
  const std::size_t count = static_cast<std::size_t>(n_samples);
  Rng rng(seed);

  // Per-sample increments, stored per component so each reduction is an
  // order-stable pairwise sum.
  std::vector<std::vector<double>> delta(
      static_cast<std::size_t>(n), std::vector<double>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd a = policy.sample(s, rng);
    Eigen::VectorXd x = s;
    for (int sub = 0; sub < n_substeps; ++sub) {
      x = em_step(sys, x, a, h, rng.gauss_vec(sys.noise_dim));
    }
    for (int c = 0; c < n; ++c) {
      delta[static_cast<std::size_t>(c)][i] = x[c] - s[c];
    }
  }

  CoefEstimate est;
  est.n_samples = n_samples;
  est.dt = dt;
  est.drift_hat.resize(n);
  est.std_error.resize(n);
  for (int c = 0; c < n; ++c) {
    const auto& xs = delta[static_cast<std::size_t>(c)];
    const double mean = pairwise_mean(xs);
    est.drift_hat[c] = mean / dt;
    std::vector<double> sq(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double d = xs[i] / dt - est.drift_hat[c];
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(count - 1);
    est.std_error[c] = std::sqrt(var / static_cast<double>(count));
  }

  est.diffusion_sq_hat.resize(n, n);
  std::vector<double> prod(count);
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      const auto& xr = delta[static_cast<std::size_t>(r)];
      const auto& xc = delta[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < count; ++i) prod[i] = xr[i] * xc[i];
      const double m = pairwise_mean(prod) / dt;
      est.diffusion_sq_hat(r, c) = m;
      est.diffusion_sq_hat(c, r) = m;
    }
  }
  return est;
}

CoefEstimate estimate_drift(const ControlledSde& sys,
                            const GaussianPolicy& policy,
                            const Eigen::VectorXd& s, double dt, long n_samples,
                            std::uint64_t seed, int n_substeps) {
  return estimate_coefficients(sys, policy, s, dt, n_samples, seed, n_substeps);
}

CoefEstimate estimate_diffusion_sq(const ControlledSde& sys,
                                   const GaussianPolicy& policy,
                                   const Eigen::VectorXd& s, double dt,
                                   long n_samples, std::uint64_t seed,
                                   int n_substeps) {
  return estimate_coefficients(sys, policy, s, dt, n_samples, seed, n_substeps);
}

double ito_cross_moment(double dt, long n_samples, int k, int l,
                        std::uint64_t seed) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("ito_cross_moment: dt must be positive");
  }
  if (n_samples < 1) {
    throw std::invalid_argument("ito_cross_moment: n_samples must be >= 1");
  }
  if (k < 0 || l < 0) {
    throw std::invalid_argument("ito_cross_moment: indices must be >= 0");
  }
  Rng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n_samples));
  for (double& x : xs) {
    const double zk = rng.gauss();
    const double zl = (k == l) ? zk : rng.gauss();
    x = dt * zk * zl;
  }
  return pairwise_mean(xs);
}

}  // namespace dtd
