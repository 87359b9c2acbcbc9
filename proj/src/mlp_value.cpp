#include "dtd/mlp_value.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "dtd/rng.hpp"

namespace dtd {

namespace {

// tanh derivative chain evaluated from t = tanh(u):
//   phi'   = 1 - t^2
//   phi''  = -2 t phi'
//   phi''' = phi' (6 t^2 - 2)
inline Eigen::ArrayXd phi1_of(const Eigen::ArrayXd& t) { return 1.0 - t * t; }
inline Eigen::ArrayXd phi2_of(const Eigen::ArrayXd& t,
                              const Eigen::ArrayXd& p1) {
  return -2.0 * t * p1;
}
inline Eigen::ArrayXd phi3_of(const Eigen::ArrayXd& t,
                              const Eigen::ArrayXd& p1) {
  return p1 * (6.0 * t * t - 2.0);
}

}  // namespace

MlpValue::MlpValue(int state_dim, std::vector<int> hidden_widths,
                   std::uint64_t seed)
    : hidden_(std::move(hidden_widths)), seed_(seed) {
  if (state_dim < 1) {
    throw std::invalid_argument("MlpValue: state_dim must be >= 1");
  }
  if (hidden_.empty()) {
    throw std::invalid_argument("MlpValue: need at least one hidden layer");
  }
  dims_.push_back(state_dim);
  for (int w : hidden_) {
    if (w < 1) throw std::invalid_argument("MlpValue: widths must be >= 1");
    dims_.push_back(w);
  }
  dims_.push_back(1);

  Eigen::Index total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    w_off_.push_back(total);
    total += static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l];
    b_off_.push_back(total);
    total += dims_[l + 1];
  }
  theta_ = Eigen::VectorXd::Zero(total);

  Rng rng(seed);
  for (int l = 0; l < layer_count() - 1; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    const Eigen::Index w_count =
        static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l];
    for (Eigen::Index i = 0; i < w_count; ++i) {
      theta_[w_off_[l] + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    for (Eigen::Index i = 0; i < dims_[l + 1]; ++i) {
      theta_[b_off_[l] + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  // Output layer left at zero: a fresh model evaluates to V = 0 with zero
  // gradient and curvature everywhere.
}

void MlpValue::randomize(std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (int l = 0; l < layer_count(); ++l) {
    const double bound = scale / std::sqrt(static_cast<double>(dims_[l]));
    const Eigen::Index w_count =
        static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l];
    for (Eigen::Index i = 0; i < w_count; ++i) {
      theta_[w_off_[l] + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    for (Eigen::Index i = 0; i < dims_[l + 1]; ++i) {
      theta_[b_off_[l] + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
}

Eigen::Map<const Eigen::MatrixXd> MlpValue::weight(int layer) const {
  return Eigen::Map<const Eigen::MatrixXd>(theta_.data() + w_off_[layer],
                                           dims_[layer + 1], dims_[layer]);
}

Eigen::Map<const Eigen::VectorXd> MlpValue::bias(int layer) const {
  return Eigen::Map<const Eigen::VectorXd>(theta_.data() + b_off_[layer],
                                           dims_[layer + 1]);
}

void MlpValue::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) {
    throw std::invalid_argument("MlpValue: parameter size mismatch");
  }
  theta_ = theta;
}

double MlpValue::value(const Eigen::VectorXd& s) const {
  if (s.size() != dims_.front()) {
    throw std::invalid_argument("MlpValue: state size mismatch");
  }
  Eigen::VectorXd x = s;
  for (int l = 0; l < layer_count(); ++l) {
    Eigen::VectorXd u = weight(l) * x + bias(l);
    if (l + 1 < layer_count()) {
      x = u.array().tanh().matrix();
    } else {
      return u[0];
    }
  }
  return 0.0;  // unreachable
}

Eigen::VectorXd MlpValue::grad_s(const Eigen::VectorXd& s) const {
  if (s.size() != dims_.front()) {
    throw std::invalid_argument("MlpValue: state size mismatch");
  }
  const int L = layer_count();
  std::vector<Eigen::ArrayXd> p1(static_cast<std::size_t>(L));
  Eigen::VectorXd x = s;
  for (int l = 0; l + 1 < L; ++l) {
    const Eigen::ArrayXd t = (weight(l) * x + bias(l)).array().tanh();
    p1[static_cast<std::size_t>(l)] = phi1_of(t);
    x = t.matrix();
  }
  // Seed the scalar output adjoint and pull it back to the input.
  Eigen::VectorXd g = weight(L - 1).transpose() * Eigen::VectorXd::Ones(1);
  for (int l = L - 2; l >= 0; --l) {
    g = weight(l).transpose() *
        (p1[static_cast<std::size_t>(l)] * g.array()).matrix();
  }
  return g;
}

Eigen::VectorXd MlpValue::hvp_s(const Eigen::VectorXd& s,
                                const Eigen::VectorXd& v) const {
  if (s.size() != dims_.front() || v.size() != dims_.front()) {
    throw std::invalid_argument("MlpValue: state size mismatch");
  }
  const int L = layer_count();
  // Forward pass with a first-order tangent along v.
  std::vector<Eigen::ArrayXd> t(static_cast<std::size_t>(L - 1));
  std::vector<Eigen::ArrayXd> ud(static_cast<std::size_t>(L - 1));
  Eigen::VectorXd x = s;
  Eigen::VectorXd xd = v;
  for (int l = 0; l + 1 < L; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    t[li] = (weight(l) * x + bias(l)).array().tanh();
    ud[li] = (weight(l) * xd).array();
    const Eigen::ArrayXd p1 = phi1_of(t[li]);
    x = t[li].matrix();
    xd = (p1 * ud[li]).matrix();
  }
  // Reverse pass carrying (adjoint, adjoint tangent); the tangent of the
  // input adjoint is exactly H v.
  Eigen::VectorXd a = weight(L - 1).transpose() * Eigen::VectorXd::Ones(1);
  Eigen::VectorXd ad = Eigen::VectorXd::Zero(a.size());
  for (int l = L - 2; l >= 0; --l) {
    const std::size_t li = static_cast<std::size_t>(l);
    const Eigen::ArrayXd p1 = phi1_of(t[li]);
    const Eigen::ArrayXd p2 = phi2_of(t[li], p1);
    const Eigen::ArrayXd ub = p1 * a.array();
    const Eigen::ArrayXd ubd = p1 * ad.array() + p2 * ud[li] * a.array();
    a = weight(l).transpose() * ub.matrix();
    ad = weight(l).transpose() * ubd.matrix();
  }
  return ad;
}

Eigen::VectorXd MlpValue::param_grad_combo(const Eigen::VectorXd& s,
                                           const Eigen::VectorXd& dir,
                                           double c_value, double c_grad,
                                           double c_curv) const {
  if (s.size() != dims_.front() || dir.size() != dims_.front()) {
    throw std::invalid_argument("MlpValue: state size mismatch");
  }
  const int L = layer_count();
  const std::size_t ln = static_cast<std::size_t>(L);

  // Forward jet for x(e) = layer stack at s + e*dir, carrying value, first
  // and second derivative in e. xs[l] is the layer-l input.
  std::vector<Eigen::VectorXd> xs(ln + 1), xds(ln + 1), xdds(ln + 1);
  std::vector<Eigen::ArrayXd> t(ln), utd(ln), utdd(ln);
  xs[0] = s;
  xds[0] = dir;
  xdds[0] = Eigen::VectorXd::Zero(s.size());
  for (int l = 0; l < L; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    const Eigen::VectorXd u = weight(l) * xs[li] + bias(l);
    const Eigen::VectorXd ud = weight(l) * xds[li];
    const Eigen::VectorXd udd = weight(l) * xdds[li];
    utd[li] = ud.array();
    utdd[li] = udd.array();
    if (l + 1 < L) {
      t[li] = u.array().tanh();
      const Eigen::ArrayXd p1 = phi1_of(t[li]);
      const Eigen::ArrayXd p2 = phi2_of(t[li], p1);
      xs[li + 1] = t[li].matrix();
      xds[li + 1] = (p1 * ud.array()).matrix();
      xdds[li + 1] = (p2 * ud.array().square() + p1 * udd.array()).matrix();
    } else {
      xs[li + 1] = u;
      xds[li + 1] = ud;
      xdds[li + 1] = udd;
    }
  }

  // Reverse sweep over the jet program. (ub, ubd, ubdd) are the adjoints of
  // the pre-activation jet (u, du/de, d2u/de2) at the current layer.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  Eigen::VectorXd ub = Eigen::VectorXd::Constant(1, c_value);
  Eigen::VectorXd ubd = Eigen::VectorXd::Constant(1, c_grad);
  Eigen::VectorXd ubdd = Eigen::VectorXd::Constant(1, c_curv);
  for (int l = L - 1; l >= 0; --l) {
    const std::size_t li = static_cast<std::size_t>(l);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + w_off_[li], dims_[li + 1],
                                   dims_[li]);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_off_[li], dims_[li + 1]);
    gw.noalias() = ub * xs[li].transpose() + ubd * xds[li].transpose() +
                   ubdd * xdds[li].transpose();
    gb = ub;
    if (l == 0) break;

    Eigen::VectorXd yb = weight(l).transpose() * ub;
    Eigen::VectorXd ybd = weight(l).transpose() * ubd;
    Eigen::VectorXd ybdd = weight(l).transpose() * ubdd;

    // The layer below ends in y = tanh(u) with jet
    //   yd = phi' ud, ydd = phi'' ud^2 + phi' udd.
    const std::size_t pi = li - 1;
    const Eigen::ArrayXd p1 = phi1_of(t[pi]);
    const Eigen::ArrayXd p2 = phi2_of(t[pi], p1);
    const Eigen::ArrayXd p3 = phi3_of(t[pi], p1);
    const Eigen::ArrayXd& ud = utd[pi];
    const Eigen::ArrayXd& udd = utdd[pi];
    ub = (yb.array() * p1 + ybd.array() * p2 * ud +
          ybdd.array() * (p3 * ud.square() + p2 * udd))
             .matrix();
    ubd = (ybd.array() * p1 + ybdd.array() * 2.0 * p2 * ud).matrix();
    ubdd = (ybdd.array() * p1).matrix();
  }
  return grad;
}

std::unique_ptr<ValueModel> MlpValue::clone() const {
  return std::make_unique<MlpValue>(*this);
}

void MlpValue::save(std::ostream& out) const {
  out << "dtdckpt mlp 1\n";
  out << "state_dim " << dims_.front() << "\n";
  out << "widths " << hidden_.size();
  for (int w : hidden_) out << " " << w;
  out << "\n";
  out << "seed " << seed_ << "\n";
  out << "data " << theta_.size() << "\n";
  out.write(reinterpret_cast<const char*>(theta_.data()),
            static_cast<std::streamsize>(theta_.size() * sizeof(double)));
}

}  // namespace dtd
