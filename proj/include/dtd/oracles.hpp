#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "dtd/sde.hpp"
#include "dtd/systems.hpp"
#include "dtd/value_model.hpp"

namespace dtd {

// Linear system + linear-Gaussian policy whose fixed-policy value function
// is exactly quadratic: V(s) = s'P s + c.
struct LqrSpec {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Q;        // symmetric PSD
  Eigen::MatrixXd R;        // symmetric PSD
  Eigen::MatrixXd K;
  Eigen::MatrixXd Sigma_a;  // symmetric PSD
  double gamma = 1.0;

  int n() const { return static_cast<int>(A.rows()); }
  Eigen::MatrixXd closed_loop() const { return A + B * K; }

  static LqrSpec from(const LinearSystemConfig& cfg);
};

struct QuadraticSolution {
  Eigen::MatrixXd P;
  double c = 0.0;
  double residual = 0.0;  // max-norm defect of the matrix equation

  QuadraticValue model() const {
    return QuadraticValue(P, Eigen::VectorXd::Zero(P.rows()), c);
  }
};

// Solves the fixed-policy value equation for the quadratic ansatz:
//   M'P + P M - gamma P = Q + K'R K,  M = A + B K,
//   c = (tr(Sigma Sigma' P) - tr(R Sigma_a)) / gamma,
// by vectorizing into an n^2 x n^2 linear system. Requires the closed loop
// to satisfy spectral abscissa(M) < gamma / 2; the returned residual is
// checked against 1e-8 independently of the solver.
QuadraticSolution lqr_value(const LqrSpec& spec);

struct McValue {
  double estimate = 0.0;
  double std_error = 0.0;
  double tail_bound = 0.0;  // e^{-gamma T} * max observed |rho| / gamma
};

// Discounted Riemann-sum return averaged over n_rollouts independent
// trajectories of physical length horizon.
McValue mc_value(const ControlledSde& sys, const GaussianPolicy& policy,
                 const Eigen::VectorXd& s0, double gamma, double dt,
                 double horizon, int n_rollouts, std::uint64_t seed);

// Brute-force optimal-gain search for scalar systems: evaluates lqr_value
// over a k grid and returns the argmax of the value coefficient p(k).
// Unstable gains are skipped.
double optimal_gain_scan(const LqrSpec& base, double k_lo, double k_hi,
                         int n_grid);

// Probe-based sup-norm comparison of value shapes over the unit ball,
// ignoring the constant offset (which several TD variants leave
// unidentified): shape_v(s) = v(s) - v(0).
double shape_distance(const ValueModel& a, const ValueModel& b, int n_probes,
                      std::uint64_t seed);
double shape_scale(const ValueModel& v, int n_probes, std::uint64_t seed);

// Relative shape error sup |shape_model - shape_ref| / sup |shape_ref|.
double value_shape_error(const ValueModel& model, const ValueModel& reference,
                         int n_probes = 256, std::uint64_t seed = 12345);

}  // namespace dtd
