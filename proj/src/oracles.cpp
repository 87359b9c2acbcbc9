#include "dtd/oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dtd/numerics.hpp"
#include "dtd/rng.hpp"

namespace dtd {

namespace {

void check_sym_psd(const Eigen::MatrixXd& m, const char* name) {
  if (asymmetry(m) > 1e-10) {
    throw std::invalid_argument(std::string("LqrSpec: ") + name +
                                " must be symmetric within 1e-10");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument(std::string("LqrSpec: ") + name +
                                " must be positive semi-definite");
  }
}

}  // namespace

LqrSpec LqrSpec::from(const LinearSystemConfig& cfg) {
  cfg.validate();
  LqrSpec spec;
  spec.A = cfg.A;
  spec.B = cfg.B;
  spec.Sigma = cfg.Sigma;
  spec.Q = cfg.Q;
  spec.R = cfg.R;
  spec.K = cfg.K;
  spec.Sigma_a = cfg.Sigma_a;
  spec.gamma = cfg.gamma;
  return spec;
}

QuadraticSolution lqr_value(const LqrSpec& spec) {
  const Eigen::Index n = spec.A.rows();
  if (n == 0 || spec.A.cols() != n) {
    throw std::invalid_argument("lqr_value: A must be square and non-empty");
  }
  if (!(spec.gamma > 0.0)) {
    throw std::invalid_argument("lqr_value: gamma must be positive");
  }
  check_sym_psd(spec.Q, "Q");
  check_sym_psd(spec.R, "R");
  check_sym_psd(spec.Sigma_a, "Sigma_a");

  const Eigen::MatrixXd M = spec.closed_loop();
  const double abscissa = spectral_abscissa(M);
  if (!(abscissa < spec.gamma / 2.0)) {
    throw std::runtime_error(
        "lqr_value: unstable closed loop (spectral abscissa " +
        std::to_string(abscissa) + " >= gamma/2 = " +
        std::to_string(spec.gamma / 2.0) + "); no finite quadratic value");
  }

  // Vectorize M'P + P M - gamma P = C with C = Q + K'R K:
  //   (I (x) M' + M' (x) I - gamma I) vec(P) = vec(C).
  const Eigen::MatrixXd C = spec.Q + spec.K.transpose() * spec.R * spec.K;
  const Eigen::Index n2 = n * n;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n2, n2);
  const Eigen::MatrixXd mt = M.transpose();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  // Kronecker blocks: (I (x) M') has M' on the block diagonal and
  // (M' (x) I) has mt(i, j) * I in block (i, j).
  for (Eigen::Index j = 0; j < n; ++j) {
    lhs.block(j * n, j * n, n, n) += mt;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      lhs.block(i * n, j * n, n, n) += mt(i, j) * eye;
    }
  }
  lhs -= spec.gamma * Eigen::MatrixXd::Identity(n2, n2);

  Eigen::VectorXd rhs(n2);
  for (Eigen::Index j = 0; j < n; ++j) rhs.segment(j * n, n) = C.col(j);
  const Eigen::VectorXd vec_p = lhs.fullPivLu().solve(rhs);

  QuadraticSolution sol;
  sol.P.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) sol.P.col(j) = vec_p.segment(j * n, n);
  sol.P = 0.5 * (sol.P + sol.P.transpose()).eval();
  sol.residual = (mt * sol.P + sol.P * M - spec.gamma * sol.P - C)
                     .cwiseAbs()
                     .maxCoeff();
  if (!(sol.residual < 1e-8)) {
    throw std::runtime_error("lqr_value: residual " +
                             std::to_string(sol.residual) +
                             " exceeds 1e-8; solve failed");
  }
  sol.c = ((spec.Sigma * spec.Sigma.transpose() * sol.P).trace() -
           (spec.R * spec.Sigma_a).trace()) /
          spec.gamma;
  return sol;
}

McValue mc_value(const ControlledSde& sys, const GaussianPolicy& policy,
                 const Eigen::VectorXd& s0, double gamma, double dt,
                 double horizon, int n_rollouts, std::uint64_t seed) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("mc_value: gamma must be positive");
  }
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("mc_value: dt and horizon must be positive");
  }
  if (n_rollouts < 2) {
    throw std::invalid_argument("mc_value: n_rollouts must be >= 2");
  }
  const int n_steps = static_cast<int>(std::llround(horizon / dt));
  if (n_steps < 1) {
    throw std::invalid_argument("mc_value: horizon shorter than dt");
  }

  RolloutOptions ropts;
  ropts.scaling = RewardScaling::kContinuous;  // transitions carry rates

  std::vector<double> returns(static_cast<std::size_t>(n_rollouts));
  double rho_max = 0.0;
  for (int i = 0; i < n_rollouts; ++i) {
    const RolloutResult rr = rollout(sys, policy, s0, dt, n_steps,
                                     derive_seed(seed, 1000 + i), ropts);
    double acc = 0.0;
    double disc = 1.0;
    const double step_disc = std::exp(-gamma * dt);
    for (const Transition& tr : rr.transitions) {
      acc += disc * tr.reward * dt;
      disc *= step_disc;
      rho_max = std::max(rho_max, std::abs(tr.reward));
    }
    returns[static_cast<std::size_t>(i)] = acc;
  }

  McValue out;
  out.estimate = pairwise_mean(returns);
  std::vector<double> sq(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    const double d = returns[i] - out.estimate;
    sq[i] = d * d;
  }
  const double var =
      pairwise_sum(sq) / static_cast<double>(returns.size() - 1);
  out.std_error = std::sqrt(var / static_cast<double>(returns.size()));
  out.tail_bound = std::exp(-gamma * horizon) * rho_max / gamma;
  return out;
}

double optimal_gain_scan(const LqrSpec& base, double k_lo, double k_hi,
                         int n_grid) {
  if (base.n() != 1 || base.B.cols() != 1) {
    throw std::invalid_argument("optimal_gain_scan: scalar systems only");
  }
  if (!(k_hi > k_lo) || n_grid < 2) {
    throw std::invalid_argument("optimal_gain_scan: need k_hi > k_lo, grid >= 2");
  }
  // For scalar systems V_k(s) = p(k) s^2 + c(k) with p(k) entering every
  // initial-state average with a positive weight, so argmax_k of the value
  // is argmax_k p(k) over the stable gains.
  double best_k = 0.0;
  double best_p = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int i = 0; i < n_grid; ++i) {
    const double k =
        k_lo + (k_hi - k_lo) * static_cast<double>(i) / (n_grid - 1);
    LqrSpec spec = base;
    spec.K = Eigen::MatrixXd::Constant(1, 1, k);
    if (!(spectral_abscissa(spec.closed_loop()) < spec.gamma / 2.0)) continue;
    const double p = lqr_value(spec).P(0, 0);
    if (p > best_p) {
      best_p = p;
      best_k = k;
      found = true;
    }
  }
  if (!found) {
    throw std::runtime_error("optimal_gain_scan: no stable gain in range");
  }
  return best_k;
}

namespace {

std::vector<Eigen::VectorXd> shape_probes(int n, int n_probes,
                                          std::uint64_t seed) {
  std::vector<Eigen::VectorXd> probes;
  probes.reserve(static_cast<std::size_t>(n_probes) + 2 * n);
  for (int i = 0; i < n; ++i) {
    probes.push_back(Eigen::VectorXd::Unit(n, i));
    probes.push_back(-Eigen::VectorXd::Unit(n, i));
  }
  Rng rng(seed);
  for (int i = 0; i < n_probes; ++i) {
    Eigen::VectorXd z = rng.gauss_vec(n);
    const double norm = z.norm();
    if (norm < 1e-12) continue;
    // Alternate sphere and interior points for ball coverage.
    const double radius =
        (i % 2 == 0) ? 1.0
                     : std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    probes.push_back((radius / norm) * z);
  }
  return probes;
}

}  // namespace

double shape_distance(const ValueModel& a, const ValueModel& b, int n_probes,
                      std::uint64_t seed) {
  if (a.state_dim() != b.state_dim()) {
    throw std::invalid_argument("shape_distance: state dimension mismatch");
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(a.state_dim());
  const double a0 = a.value(zero);
  const double b0 = b.value(zero);
  double sup = 0.0;
  for (const Eigen::VectorXd& s : shape_probes(a.state_dim(), n_probes, seed)) {
    sup = std::max(sup, std::abs((a.value(s) - a0) - (b.value(s) - b0)));
  }
  return sup;
}

double shape_scale(const ValueModel& v, int n_probes, std::uint64_t seed) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(v.state_dim());
  const double v0 = v.value(zero);
  double sup = 0.0;
  for (const Eigen::VectorXd& s : shape_probes(v.state_dim(), n_probes, seed)) {
    sup = std::max(sup, std::abs(v.value(s) - v0));
  }
  return sup;
}

double value_shape_error(const ValueModel& model, const ValueModel& reference,
                         int n_probes, std::uint64_t seed) {
  const double scale = shape_scale(reference, n_probes, seed);
  if (scale <= 0.0) {
    throw std::invalid_argument(
        "value_shape_error: reference has zero shape scale");
  }
  return shape_distance(model, reference, n_probes, seed) / scale;
}

}  // namespace dtd
