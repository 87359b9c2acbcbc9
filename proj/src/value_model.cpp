#include "dtd/value_model.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dtd/mlp_value.hpp"
#include "dtd/numerics.hpp"

namespace dtd {

QuadraticValue::QuadraticValue(Eigen::MatrixXd P, Eigen::VectorXd b, double c)
    : n_(static_cast<int>(P.rows())) {
  if (P.rows() != P.cols() || P.rows() == 0) {
    throw std::invalid_argument("QuadraticValue: P must be square");
  }
  if (b.size() != P.rows()) {
    throw std::invalid_argument("QuadraticValue: b size must match P");
  }
  if (asymmetry(P) > 1e-12) {
    throw std::invalid_argument(
        "QuadraticValue: P must be symmetric within 1e-12");
  }
  theta_.resize(static_cast<Eigen::Index>(n_) * n_ + n_ + 1);
  Eigen::Map<Eigen::MatrixXd>(theta_.data(), n_, n_) = P;
  theta_.segment(static_cast<Eigen::Index>(n_) * n_, n_) = b;
  theta_[theta_.size() - 1] = c;
}

QuadraticValue QuadraticValue::zero(int state_dim) {
  return QuadraticValue(Eigen::MatrixXd::Zero(state_dim, state_dim),
                        Eigen::VectorXd::Zero(state_dim), 0.0);
}

Eigen::Map<const Eigen::MatrixXd> QuadraticValue::p_map() const {
  return Eigen::Map<const Eigen::MatrixXd>(theta_.data(), n_, n_);
}

Eigen::MatrixXd QuadraticValue::P() const { return p_map(); }

Eigen::VectorXd QuadraticValue::b() const {
  return theta_.segment(static_cast<Eigen::Index>(n_) * n_, n_);
}

double QuadraticValue::c() const { return theta_[theta_.size() - 1]; }

void QuadraticValue::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) {
    throw std::invalid_argument("QuadraticValue: parameter size mismatch");
  }
  theta_ = theta;
}

double QuadraticValue::value(const Eigen::VectorXd& s) const {
  return s.dot(p_map() * s) + b().dot(s) + c();
}

Eigen::VectorXd QuadraticValue::grad_s(const Eigen::VectorXd& s) const {
  return 2.0 * (p_map() * s) + b();
}

Eigen::VectorXd QuadraticValue::hvp_s(const Eigen::VectorXd&,
                                      const Eigen::VectorXd& v) const {
  return 2.0 * (p_map() * v);
}

Eigen::VectorXd QuadraticValue::param_grad_combo(const Eigen::VectorXd& s,
                                                 const Eigen::VectorXd& dir,
                                                 double c_value, double c_grad,
                                                 double c_curv) const {
  // d/dP [s'Ps] = ss', d/dP [<dir, 2Ps + b>] = dir s' + s dir',
  // d/dP [<dir, 2P dir>] = 2 dir dir'; all symmetric, so P stays symmetric
  // under gradient updates.
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta_.size());
  Eigen::Map<Eigen::MatrixXd> gp(g.data(), n_, n_);
  gp = c_value * (s * s.transpose()) +
       c_grad * (dir * s.transpose() + s * dir.transpose()) +
       c_curv * 2.0 * (dir * dir.transpose());
  g.segment(static_cast<Eigen::Index>(n_) * n_, n_) = c_value * s + c_grad * dir;
  g[g.size() - 1] = c_value;
  return g;
}

std::unique_ptr<ValueModel> QuadraticValue::clone() const {
  return std::make_unique<QuadraticValue>(*this);
}

namespace {

void write_params_blob(std::ostream& out, const Eigen::VectorXd& theta) {
  out << "data " << theta.size() << "\n";
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(theta.size() * sizeof(double)));
}

Eigen::VectorXd read_params_blob(std::istream& in) {
  std::string tag;
  Eigen::Index count = 0;
  if (!(in >> tag >> count) || tag != "data" || count < 0) {
    throw std::runtime_error("checkpoint: malformed data header");
  }
  in.ignore(1);  // newline before the raw block
  Eigen::VectorXd theta(count);
  in.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated parameter block");
  return theta;
}

}  // namespace

void QuadraticValue::save(std::ostream& out) const {
  out << "dtdckpt quadratic 1\n";
  out << "state_dim " << n_ << "\n";
  write_params_blob(out, theta_);
}

void save_checkpoint(const ValueModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
  }
  model.save(out);
  if (!out) {
    throw std::runtime_error("save_checkpoint: write failed for '" + path +
                             "'");
  }
}

std::unique_ptr<ValueModel> load_checkpoint(std::istream& in) {
  std::string magic;
  std::string kind;
  int version = 0;
  if (!(in >> magic >> kind >> version) || magic != "dtdckpt" || version != 1) {
    throw std::runtime_error("checkpoint: unrecognized header");
  }
  if (kind == "quadratic") {
    std::string tag;
    int n = 0;
    if (!(in >> tag >> n) || tag != "state_dim" || n <= 0) {
      throw std::runtime_error("checkpoint: malformed quadratic header");
    }
    Eigen::VectorXd theta = read_params_blob(in);
    if (theta.size() != static_cast<Eigen::Index>(n) * n + n + 1) {
      throw std::runtime_error("checkpoint: quadratic parameter count mismatch");
    }
    auto model = std::make_unique<QuadraticValue>(QuadraticValue::zero(n));
    model->set_params(theta);
    return model;
  }
  if (kind == "mlp") {
    std::string tag;
    int n = 0;
    if (!(in >> tag >> n) || tag != "state_dim" || n <= 0) {
      throw std::runtime_error("checkpoint: malformed mlp header");
    }
    int n_hidden = 0;
    if (!(in >> tag >> n_hidden) || tag != "widths" || n_hidden < 1) {
      throw std::runtime_error("checkpoint: malformed mlp widths");
    }
    std::vector<int> widths(static_cast<std::size_t>(n_hidden));
    for (int& w : widths) {
      if (!(in >> w) || w < 1) {
        throw std::runtime_error("checkpoint: malformed mlp widths");
      }
    }
    std::uint64_t seed = 0;
    if (!(in >> tag >> seed) || tag != "seed") {
      throw std::runtime_error("checkpoint: malformed mlp seed");
    }
    Eigen::VectorXd theta = read_params_blob(in);
    auto model = std::make_unique<MlpValue>(n, widths, seed);
    if (theta.size() != model->param_count()) {
      throw std::runtime_error("checkpoint: mlp parameter count mismatch");
    }
    model->set_params(theta);
    return model;
  }
  throw std::runtime_error("checkpoint: unknown model kind '" + kind + "'");
}

std::unique_ptr<ValueModel> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  }
  return load_checkpoint(in);
}

}  // namespace dtd
