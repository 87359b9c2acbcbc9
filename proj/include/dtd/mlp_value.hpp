#pragma once

#include <cstdint>
#include <vector>

#include "dtd/value_model.hpp"

namespace dtd {

// Fully-connected tanh network s -> hidden... -> scalar V(s).
//
// State derivatives are computed with a second-order directional jet: the
// forward pass carries (x, dx/de, d2x/de2) for the perturbation s + e*dir,
// which yields V, <dir, grad V> and <dir, H dir> in one sweep. Parameter
// gradients reverse through that jet program, and full Hessian-vector
// products use a tangent alongside the reverse sweep. No dense Hessian is
// ever formed; every operation is linear in the layer widths.
class MlpValue final : public ValueModel {
 public:
  MlpValue(int state_dim, std::vector<int> hidden_widths, std::uint64_t seed);

  // Hidden layers use uniform fan-in initialization; the output layer
  // starts at zero so a fresh model is identically V = 0.
  static MlpValue standard(int state_dim, std::uint64_t seed) {
    return MlpValue(state_dim, {64, 64}, seed);
  }

  // Re-draws every layer (output included) at the given scale; used to
  // build non-degenerate fixtures.
  void randomize(std::uint64_t seed, double scale = 1.0);

  const std::vector<int>& hidden_widths() const { return hidden_; }
  std::uint64_t init_seed() const { return seed_; }

  int state_dim() const override { return dims_.front(); }
  Eigen::Index param_count() const override { return theta_.size(); }
  const Eigen::VectorXd& params() const override { return theta_; }
  void set_params(const Eigen::VectorXd& theta) override;

  double value(const Eigen::VectorXd& s) const override;
  Eigen::VectorXd grad_s(const Eigen::VectorXd& s) const override;
  Eigen::VectorXd hvp_s(const Eigen::VectorXd& s,
                        const Eigen::VectorXd& v) const override;
  Eigen::VectorXd param_grad_combo(const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& dir, double c_value,
                                   double c_grad,
                                   double c_curv) const override;

  std::unique_ptr<ValueModel> clone() const override;
  void save(std::ostream& out) const override;

 private:
  int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  std::vector<int> hidden_;
  std::vector<int> dims_;  // state_dim, hidden..., 1
  std::vector<Eigen::Index> w_off_;
  std::vector<Eigen::Index> b_off_;
  std::uint64_t seed_ = 0;
  Eigen::VectorXd theta_;
};

}  // namespace dtd
