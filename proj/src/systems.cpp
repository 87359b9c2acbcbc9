#include "dtd/systems.hpp"

#include <stdexcept>
#include <string>

#include "dtd/numerics.hpp"

namespace dtd {

namespace {

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows,
                 Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(
        std::string("LinearSystemConfig: ") + name + " must be " +
        std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void check_sym_psd(const Eigen::MatrixXd& m, const char* name) {
  if (asymmetry(m) > 1e-12) {
    throw std::invalid_argument(std::string("LinearSystemConfig: ") + name +
                                " must be symmetric within 1e-12");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument(std::string("LinearSystemConfig: ") + name +
                                " must be positive semi-definite");
  }
}

}  // namespace

void LinearSystemConfig::validate() const {
  const Eigen::Index nn = A.rows();
  const Eigen::Index kk = B.cols();
  if (nn == 0) {
    throw std::invalid_argument("LinearSystemConfig: A must be non-empty");
  }
  check_shape(A, nn, nn, "A");
  check_shape(B, nn, kk, "B");
  if (Sigma.rows() != nn || Sigma.cols() == 0) {
    throw std::invalid_argument(
        "LinearSystemConfig: Sigma must have one row per state");
  }
  check_shape(Q, nn, nn, "Q");
  check_shape(R, kk, kk, "R");
  check_shape(K, kk, nn, "K");
  check_shape(Sigma_a, kk, kk, "Sigma_a");
  check_sym_psd(Q, "Q");
  check_sym_psd(R, "R");
  check_sym_psd(Sigma_a, "Sigma_a");
  if (s0.size() != nn) {
    throw std::invalid_argument("LinearSystemConfig: s0 must have size n");
  }
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("LinearSystemConfig: gamma must be positive");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("LinearSystemConfig: dt must be positive");
  }
}

ControlledSde LinearSystemConfig::sde() const {
  validate();
  ControlledSde sys;
  sys.state_dim = n();
  sys.action_dim = k();
  sys.noise_dim = m();
  const Eigen::MatrixXd a_mat = A;
  const Eigen::MatrixXd b_mat = B;
  const Eigen::MatrixXd sig = Sigma;
  const Eigen::MatrixXd q_mat = Q;
  const Eigen::MatrixXd r_mat = R;
  sys.drift = [a_mat, b_mat](const Eigen::VectorXd& s,
                             const Eigen::VectorXd& a) -> Eigen::VectorXd {
    return a_mat * s + b_mat * a;
  };
  sys.diffusion = [sig](const Eigen::VectorXd&,
                        const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return sig;
  };
  sys.reward_rate = [q_mat, r_mat](const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& a) -> double {
    return -s.dot(q_mat * s) - a.dot(r_mat * a);
  };
  return sys;
}

GaussianPolicy LinearSystemConfig::policy() const {
  return linear_policy().policy();
}

LinearGaussianPolicy LinearSystemConfig::linear_policy() const {
  validate();
  return LinearGaussianPolicy{K, Sigma_a};
}

LinearSystemConfig LinearSystemConfig::from_config(const Config& cfg,
                                                   const std::string& sec) {
  LinearSystemConfig out;
  out.A = cfg.get_matrix(sec, "A");
  const Eigen::Index nn = out.A.rows();
  out.B = cfg.has(sec, "B") ? cfg.get_matrix(sec, "B")
                            : Eigen::MatrixXd::Zero(nn, 1);
  const Eigen::Index kk = out.B.cols();
  out.Sigma = cfg.has(sec, "Sigma") ? cfg.get_matrix(sec, "Sigma")
                                    : Eigen::MatrixXd::Zero(nn, 1);
  out.Q = cfg.has(sec, "Q") ? cfg.get_matrix(sec, "Q")
                            : Eigen::MatrixXd::Identity(nn, nn);
  out.R = cfg.has(sec, "R") ? cfg.get_matrix(sec, "R")
                            : Eigen::MatrixXd::Zero(kk, kk);
  out.K = cfg.has(sec, "K") ? cfg.get_matrix(sec, "K")
                            : Eigen::MatrixXd::Zero(kk, nn);
  out.Sigma_a = cfg.has(sec, "Sigma_a") ? cfg.get_matrix(sec, "Sigma_a")
                                        : Eigen::MatrixXd::Zero(kk, kk);
  out.gamma = cfg.get_double_or(sec, "gamma", 1.0);
  out.dt = cfg.get_double_or(sec, "dt", 1e-3);
  out.seed = cfg.get_u64_or(sec, "seed", 0);
  out.s0 = cfg.has(sec, "s0") ? cfg.get_vector(sec, "s0")
                              : Eigen::VectorXd::Zero(nn);
  try {
    out.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.origin() + ": [" + sec + "]: " + e.what());
  }
  return out;
}

LinearSystemConfig LinearSystemConfig::from_file(const std::string& path) {
  return from_config(Config::parse_file(path));
}

ControlledSde make_ou(double theta, double sigma) {
  if (!(theta > 0.0)) {
    throw std::invalid_argument("make_ou: theta must be positive");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("make_ou: sigma must be >= 0");
  }
  ControlledSde sys;
  sys.state_dim = 1;
  sys.action_dim = 1;
  sys.noise_dim = 1;
  sys.drift = [theta](const Eigen::VectorXd& s,
                      const Eigen::VectorXd&) -> Eigen::VectorXd {
    return -theta * s;
  };
  sys.diffusion = [sigma](const Eigen::VectorXd&,
                          const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Constant(1, 1, sigma);
  };
  sys.reward_rate = [](const Eigen::VectorXd& s,
                       const Eigen::VectorXd&) -> double {
    return -s.squaredNorm();
  };
  return sys;
}

LinearSystemConfig scalar_lqr() {
  LinearSystemConfig cfg;
  cfg.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  cfg.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  // Deterministic drift; randomness comes from the stochastic policy (and
  // any injected state perturbation).  Differential targets divide the state
  // increment by dt, so Brownian state noise of scale sigma contributes
  // O(sigma^2/dt) variance to the regression and drags the least-squares fit
  // toward zero; the reference training setups therefore keep Sigma = 0.
  cfg.Sigma = Eigen::MatrixXd::Zero(1, 1);
  cfg.Q = Eigen::MatrixXd::Identity(1, 1);
  cfg.R = Eigen::MatrixXd::Identity(1, 1);
  cfg.K = Eigen::MatrixXd::Zero(1, 1);
  cfg.Sigma_a = Eigen::MatrixXd::Constant(1, 1, 0.01);
  cfg.gamma = 1.0;
  cfg.dt = 1e-3;
  cfg.s0 = Eigen::VectorXd::Zero(1);
  return cfg;
}

LinearSystemConfig lqr_2d() {
  LinearSystemConfig cfg;
  cfg.A.resize(2, 2);
  cfg.A << -0.5, 1.0, -1.0, -0.5;
  cfg.B.resize(2, 1);
  cfg.B << 0.0, 1.0;
  cfg.Sigma = Eigen::MatrixXd::Zero(2, 2);  // see scalar_lqr note
  cfg.Q = Eigen::MatrixXd::Identity(2, 2);
  cfg.R = Eigen::MatrixXd::Identity(1, 1);
  cfg.K = Eigen::MatrixXd::Zero(1, 2);
  cfg.Sigma_a = Eigen::MatrixXd::Constant(1, 1, 0.01);
  cfg.gamma = 1.0;
  cfg.dt = 1e-3;
  cfg.s0 = Eigen::VectorXd::Zero(2);
  return cfg;
}

}  // namespace dtd
