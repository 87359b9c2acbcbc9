#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "dtd/sde.hpp"

namespace dtd {

// Finite-difference estimates of the SDE coefficients at a fixed state:
// drift from E[dS] / dt and squared diffusion from E[dS dS'] / dt, using
// n_samples independent one-step simulations under the policy.
struct CoefEstimate {
  Eigen::VectorXd drift_hat;
  Eigen::MatrixXd diffusion_sq_hat;  // estimate of sigma sigma'
  Eigen::VectorXd std_error;         // per-component, for the drift
  long n_samples = 0;
  double dt = 0.0;
};

// Each sample holds one action for the whole step and integrates the state
// with n_substeps internal Euler-Maruyama steps of width dt / n_substeps,
// so the finite-difference bias in dt is visible independently of the
// integration error. Requires n_samples >= 2 and dt > 0.
CoefEstimate estimate_coefficients(const ControlledSde& sys,
                                   const GaussianPolicy& policy,
                                   const Eigen::VectorXd& s, double dt,
                                   long n_samples, std::uint64_t seed,
                                   int n_substeps = 1);

CoefEstimate estimate_drift(const ControlledSde& sys,
                            const GaussianPolicy& policy,
                            const Eigen::VectorXd& s, double dt,
                            long n_samples, std::uint64_t seed,
                            int n_substeps = 1);

CoefEstimate estimate_diffusion_sq(const ControlledSde& sys,
                                   const GaussianPolicy& policy,
                                   const Eigen::VectorXd& s, double dt,
                                   long n_samples, std::uint64_t seed,
                                   int n_substeps = 1);

// Sample mean of dB_k dB_l over n_samples Brownian increments of width dt;
// converges to dt for k == l and 0 otherwise.
double ito_cross_moment(double dt, long n_samples, int k, int l,
                        std::uint64_t seed);

}  // namespace dtd
