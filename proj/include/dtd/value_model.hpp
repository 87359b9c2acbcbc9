#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include <Eigen/Dense>

namespace dtd {

// Differentiable state-value function V(s; theta). Implementations expose
// first- and second-order state derivatives only through directional
// products (gradient, Hessian-vector), never a dense Hessian, so every
// operation stays linear in the state dimension.
class ValueModel {
 public:
  virtual ~ValueModel() = default;

  virtual int state_dim() const = 0;
  virtual Eigen::Index param_count() const = 0;
  virtual const Eigen::VectorXd& params() const = 0;
  virtual void set_params(const Eigen::VectorXd& theta) = 0;

  virtual double value(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd grad_s(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd hvp_s(const Eigen::VectorXd& s,
                                const Eigen::VectorXd& v) const = 0;

  // Parameter gradient of the scalar
  //   c_value * V(s) + c_grad * <dir, grad V(s)> + c_curv * <dir, H(s) dir>,
  // the combination every squared TD objective differentiates.
  virtual Eigen::VectorXd param_grad_combo(const Eigen::VectorXd& s,
                                           const Eigen::VectorXd& dir,
                                           double c_value, double c_grad,
                                           double c_curv) const = 0;

  virtual std::unique_ptr<ValueModel> clone() const = 0;
  virtual void save(std::ostream& out) const = 0;
};

// V(s) = s'P s + b's + c with P symmetric. Parameters are stored flat as
// [vec(P) column-major, b, c]; updates keep P symmetric because the
// parameter gradient is itself symmetric in the P block.
class QuadraticValue final : public ValueModel {
 public:
  QuadraticValue(Eigen::MatrixXd P, Eigen::VectorXd b, double c);
  static QuadraticValue zero(int state_dim);

  Eigen::MatrixXd P() const;
  Eigen::VectorXd b() const;
  double c() const;

  int state_dim() const override { return n_; }
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
  Eigen::Map<const Eigen::MatrixXd> p_map() const;

  int n_ = 0;
  Eigen::VectorXd theta_;
};

// Checkpoints are a short text header (model kind, dimensions, seed) plus
// the raw parameter doubles, so a save/load round trip is bit-exact.
void save_checkpoint(const ValueModel& model, const std::string& path);
std::unique_ptr<ValueModel> load_checkpoint(std::istream& in);
std::unique_ptr<ValueModel> load_checkpoint(const std::string& path);

}  // namespace dtd
