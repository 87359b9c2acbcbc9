#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace dtd {

// Pairwise (tree) summation: deterministic for a fixed input order and
// O(log n) error growth instead of O(n) for the running sum.
double pairwise_sum(std::span<const double> xs);

inline double pairwise_mean(std::span<const double> xs) {
  return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

// Largest real part over the eigenvalues of a square matrix.
double spectral_abscissa(const Eigen::MatrixXd& m);

// Symmetric matrix square root of a positive semi-definite matrix.
// Eigenvalues in [-tol, 0) are clamped to zero; below -tol is an error.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol = 1e-10);

// Max absolute entry of A - A^T.
double asymmetry(const Eigen::MatrixXd& m);

}  // namespace dtd
