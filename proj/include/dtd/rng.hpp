#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dtd {

// Deterministic random stream: a single generator with a fixed draw order,
// so identical (seed, call sequence) pairs produce identical values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double gauss() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }
  std::uint64_t next_u64() { return gen_(); }

  Eigen::VectorXd gauss_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss();
    return v;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stable sub-stream seed derivation (splitmix64 finalizer), so components
// can draw from independent streams without coordinating call order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace dtd
