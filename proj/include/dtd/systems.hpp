#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "dtd/config.hpp"
#include "dtd/sde.hpp"

namespace dtd {

// Linear dynamics ds = (A s + B a) dt + Sigma dB with quadratic reward rate
// rho(s, a) = -s'Q s - a'R a, evaluated under the fixed linear-Gaussian
// policy a = K s + xi, xi ~ N(0, Sigma_a), and discount rate gamma.
struct LinearSystemConfig {
  Eigen::MatrixXd A;        // n x n
  Eigen::MatrixXd B;        // n x k
  Eigen::MatrixXd Sigma;    // n x m state noise
  Eigen::MatrixXd Q;        // n x n, symmetric PSD
  Eigen::MatrixXd R;        // k x k, symmetric PSD
  Eigen::MatrixXd K;        // k x n policy gain
  Eigen::MatrixXd Sigma_a;  // k x k action covariance, symmetric PSD
  double gamma = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  Eigen::VectorXd s0;

  int n() const { return static_cast<int>(A.rows()); }
  int k() const { return static_cast<int>(B.cols()); }
  int m() const { return static_cast<int>(Sigma.cols()); }

  void validate() const;
  ControlledSde sde() const;
  GaussianPolicy policy() const;
  LinearGaussianPolicy linear_policy() const;

  static LinearSystemConfig from_config(const Config& cfg,
                                        const std::string& section = "system");
  static LinearSystemConfig from_file(const std::string& path);
};

// 1-D Ornstein-Uhlenbeck process ds = -theta s dt + sigma dB with a single
// ignored control input and reward rate rho = -s^2.
ControlledSde make_ou(double theta, double sigma);

// Scalar system ds = (a s + b u) dt used throughout the tests: a = -1,
// b = 1, q = r = 1, K = 0, Sigma = 0, Sigma_a = 0.01, gamma = 1.
LinearSystemConfig scalar_lqr();

// 2-D damped rotation with one control channel.
LinearSystemConfig lqr_2d();

}  // namespace dtd
