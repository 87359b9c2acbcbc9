#include "dtd/numerics.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dtd {

namespace {

double sum_range(const double* xs, std::size_t n) {
  if (n <= 8) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += xs[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return sum_range(xs, half) + sum_range(xs + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> xs) {
  return xs.empty() ? 0.0 : sum_range(xs.data(), xs.size());
}

double spectral_abscissa(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("spectral_abscissa: matrix must be square");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol) {
  if (asymmetry(m) > 1e-12) {
    throw std::invalid_argument("psd_sqrt: matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -tol) {
      throw std::invalid_argument("psd_sqrt: matrix has a negative eigenvalue");
    }
    if (lam[i] < 0.0) lam[i] = 0.0;
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

double asymmetry(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("asymmetry: matrix must be square");
  }
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace dtd
