#include "smbo/kernel.hpp"

#include <cmath>
#include <numbers>

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

bool is_stationary(KernelKind k) {
  return k == KernelKind::rbf || k == KernelKind::matern12 || k == KernelKind::matern32 ||
         k == KernelKind::matern52;
}

KernelKind kind_from_string(const std::string& s) {
  if (s == "rbf") return KernelKind::rbf;
  if (s == "matern12") return KernelKind::matern12;
  if (s == "matern32") return KernelKind::matern32;
  if (s == "matern52") return KernelKind::matern52;
  if (s == "linear") return KernelKind::linear;
  if (s == "periodic") return KernelKind::periodic;
  if (s == "categorical") return KernelKind::categorical;
  throw ValidationError("unknown kernel kind '" + s + "'");
}

// Index of the largest entry in each row of the block (first wins ties).
Eigen::VectorXi block_argmax(const Eigen::MatrixXd& A, const std::vector<int>& block) {
  Eigen::VectorXi out(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(block.size()); ++j) {
      if (A(i, block[j]) > A(i, block[best])) best = j;
    }
    out(i) = best;
  }
  return out;
}

double matern_value(KernelKind kind, double r) {
  switch (kind) {
    case KernelKind::matern12:
      return std::exp(-r);
    case KernelKind::matern32:
      return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
    case KernelKind::matern52:
      return (1.0 + kSqrt5 * r + 5.0 * r * r / 3.0) * std::exp(-kSqrt5 * r);
    default:
      return std::exp(-0.5 * r * r);
  }
}

// -(dk/dr) / r for the unit-variance profile; multiplies D_j / l_j^2 in the
// lengthscale derivative.
double matern_radial_factor(KernelKind kind, double r) {
  switch (kind) {
    case KernelKind::matern12:
      return r > 0.0 ? std::exp(-r) / r : 0.0;
    case KernelKind::matern32:
      return 3.0 * std::exp(-kSqrt3 * r);
    case KernelKind::matern52:
      return (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
    default:
      return std::exp(-0.5 * r * r);
  }
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::rbf:
      return "rbf";
    case KernelKind::matern12:
      return "matern12";
    case KernelKind::matern32:
      return "matern32";
    case KernelKind::matern52:
      return "matern52";
    case KernelKind::linear:
      return "linear";
    case KernelKind::periodic:
      return "periodic";
    case KernelKind::categorical:
      return "categorical";
  }
  return "unknown";
}

Kernel Kernel::rbf(double variance, std::vector<double> lengthscales, std::vector<int> dims) {
  Kernel k;
  k.kind_ = KernelKind::rbf;
  k.params_.push_back(variance);
  k.params_.insert(k.params_.end(), lengthscales.begin(), lengthscales.end());
  k.dims_ = std::move(dims);
  k.validate_leaf();
  return k;
}

Kernel Kernel::matern(double nu, double variance, std::vector<double> lengthscales, std::vector<int> dims) {
  Kernel k = rbf(variance, std::move(lengthscales), std::move(dims));
  if (nu == 0.5) {
    k.kind_ = KernelKind::matern12;
  } else if (nu == 1.5) {
    k.kind_ = KernelKind::matern32;
  } else if (nu == 2.5) {
    k.kind_ = KernelKind::matern52;
  } else {
    throw ValidationError("Matern smoothness must be 0.5, 1.5 or 2.5");
  }
  return k;
}

Kernel Kernel::linear(double bias, std::vector<int> dims) {
  Kernel k;
  k.kind_ = KernelKind::linear;
  k.params_ = {bias};
  k.dims_ = std::move(dims);
  k.validate_leaf();
  return k;
}

Kernel Kernel::periodic(double variance, double lengthscale, double period, int dim) {
  Kernel k;
  k.kind_ = KernelKind::periodic;
  k.params_ = {variance, lengthscale, period};
  k.dims_ = {dim};
  k.validate_leaf();
  return k;
}

Kernel Kernel::categorical(double theta, std::vector<int> block) {
  Kernel k;
  k.kind_ = KernelKind::categorical;
  k.params_ = {theta};
  k.dims_ = std::move(block);
  k.validate_leaf();
  return k;
}

Kernel Kernel::sum(std::vector<Kernel> children) {
  if (children.empty()) throw ValidationError("sum kernel needs at least one child");
  Kernel k;
  k.op_ = Op::sum;
  k.children_ = std::move(children);
  return k;
}

Kernel Kernel::product(std::vector<Kernel> children) {
  if (children.empty()) throw ValidationError("product kernel needs at least one child");
  Kernel k;
  k.op_ = Op::product;
  k.children_ = std::move(children);
  return k;
}

Kernel Kernel::scale(double coefficient, Kernel child) {
  if (!(coefficient >= 0.0) || !std::isfinite(coefficient)) {
    throw ValidationError("kernel scale coefficient must be finite and >= 0");
  }
  Kernel k;
  k.op_ = Op::scale;
  k.coefficient_ = coefficient;
  k.children_.push_back(std::move(child));
  return k;
}

Kernel operator+(Kernel a, Kernel b) { return Kernel::sum({std::move(a), std::move(b)}); }
Kernel operator*(Kernel a, Kernel b) { return Kernel::product({std::move(a), std::move(b)}); }
Kernel operator*(double c, Kernel k) { return Kernel::scale(c, std::move(k)); }

void Kernel::validate_leaf() const {
  if (dims_.empty()) throw ValidationError("kernel leaf must address at least one coordinate");
  for (int d : dims_) {
    if (d < 0) throw ValidationError("kernel coordinate indices must be non-negative");
  }
  for (double p : params_) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError(to_string(kind_) + " kernel parameters must be > 0");
  }
  if (is_stationary(kind_)) {
    const auto n_ls = params_.size() - 1;
    if (n_ls != 1 && n_ls != dims_.size()) {
      throw ValidationError("lengthscales must be shared (one) or one per coordinate");
    }
  }
  if (kind_ == KernelKind::periodic && dims_.size() != 1) {
    throw ValidationError("periodic kernel acts on exactly one coordinate");
  }
  if (kind_ == KernelKind::categorical && dims_.size() < 1) {
    throw ValidationError("categorical kernel needs a one-hot block");
  }
}

int Kernel::required_dim() const {
  int m = 0;
  if (op_ == Op::leaf) {
    for (int d : dims_) m = std::max(m, d + 1);
  } else {
    for (const auto& c : children_) m = std::max(m, c.required_dim());
  }
  return m;
}

Eigen::MatrixXd Kernel::leaf_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
  const auto n = A.rows();
  const auto m = B.rows();
  Eigen::MatrixXd K(n, m);
  if (is_stationary(kind_)) {
    const double variance = params_[0];
    const bool shared = params_.size() == 2;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, m);
    for (std::size_t j = 0; j < dims_.size(); ++j) {
      const double ls = shared ? params_[1] : params_[1 + j];
      const double inv = 1.0 / (ls * ls);
      const int d = dims_[j];
      for (Eigen::Index c = 0; c < m; ++c) {
        const double b = B(c, d);
        for (Eigen::Index r = 0; r < n; ++r) {
          const double diff = A(r, d) - b;
          S(r, c) += diff * diff * inv;
        }
      }
    }
    if (kind_ == KernelKind::rbf) {
      K = variance * (-0.5 * S.array()).exp();
    } else {
      for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) K(r, c) = variance * matern_value(kind_, std::sqrt(S(r, c)));
      }
    }
    return K;
  }
  switch (kind_) {
    case KernelKind::linear: {
      K.setConstant(params_[0]);
      for (int d : dims_) K.noalias() += A.col(d) * B.col(d).transpose();
      return K;
    }
    case KernelKind::periodic: {
      const double variance = params_[0], ls = params_[1], period = params_[2];
      const int d = dims_[0];
      for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
          const double s = std::sin(std::numbers::pi * std::abs(A(r, d) - B(c, d)) / period);
          K(r, c) = variance * std::exp(-2.0 * s * s / (ls * ls));
        }
      }
      return K;
    }
    case KernelKind::categorical: {
      const double off = std::exp(-params_[0]);
      const Eigen::VectorXi ca = block_argmax(A, dims_);
      const Eigen::VectorXi cb = block_argmax(B, dims_);
      for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) K(r, c) = ca(r) == cb(c) ? 1.0 : off;
      }
      return K;
    }
    default:
      break;
  }
  throw std::logic_error("unhandled kernel kind");
}

Eigen::MatrixXd Kernel::matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
  if (A.cols() != B.cols()) throw ValidationError("kernel inputs have mismatched dimensions");
  if (A.cols() < required_dim()) {
    throw ValidationError("kernel reads coordinate " + std::to_string(required_dim() - 1) + " but inputs have " +
                          std::to_string(A.cols()) + " columns");
  }
  switch (op_) {
    case Op::leaf:
      return leaf_matrix(A, B);
    case Op::sum: {
      Eigen::MatrixXd K = children_[0].matrix(A, B);
      for (std::size_t i = 1; i < children_.size(); ++i) K += children_[i].matrix(A, B);
      return K;
    }
    case Op::product: {
      Eigen::MatrixXd K = children_[0].matrix(A, B);
      for (std::size_t i = 1; i < children_.size(); ++i) K.array() *= children_[i].matrix(A, B).array();
      return K;
    }
    case Op::scale:
      return coefficient_ * children_[0].matrix(A, B);
  }
  throw std::logic_error("unhandled kernel op");
}

Eigen::MatrixXd Kernel::matrix(const Eigen::MatrixXd& A) const {
  Eigen::MatrixXd K = matrix(A, A);
  return 0.5 * (K + K.transpose());
}

Eigen::VectorXd Kernel::diagonal(const Eigen::MatrixXd& A) const {
  Eigen::VectorXd d(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const Eigen::MatrixXd row = A.row(i);
    d(i) = matrix(row, row)(0, 0);
  }
  return d;
}

double Kernel::operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b) const {
  if (a.size() != b.size()) throw ValidationError("kernel inputs have mismatched dimensions");
  const Eigen::MatrixXd A = a.transpose();
  const Eigen::MatrixXd B = b.transpose();
  return matrix(A, B)(0, 0);
}

void Kernel::leaf_gradients(const Eigen::MatrixXd& X, const Eigen::MatrixXd& K,
                            std::vector<Eigen::MatrixXd>& out) const {
  const auto n = X.rows();
  if (is_stationary(kind_)) {
    const double variance = params_[0];
    const bool shared = params_.size() == 2;
    out.push_back(K);  // d/dlog variance
    std::vector<Eigen::MatrixXd> scaled;  // D_j / l_j^2 per lengthscale
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < dims_.size(); ++j) {
      const double ls = shared ? params_[1] : params_[1 + j];
      const int d = dims_[j];
      Eigen::MatrixXd D(n, n);
      for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
          const double diff = X(r, d) - X(c, d);
          D(r, c) = diff * diff / (ls * ls);
        }
      }
      S += D;
      if (!shared) scaled.push_back(std::move(D));
    }
    if (shared) scaled.push_back(S);
    Eigen::MatrixXd radial(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) radial(r, c) = variance * matern_radial_factor(kind_, std::sqrt(S(r, c)));
    }
    for (auto& D : scaled) out.push_back((radial.array() * D.array()).matrix());
    return;
  }
  switch (kind_) {
    case KernelKind::linear:
      out.push_back(Eigen::MatrixXd::Constant(n, n, params_[0]));
      return;
    case KernelKind::periodic: {
      const double ls = params_[1], period = params_[2];
      const int d = dims_[0];
      Eigen::MatrixXd dls(n, n), dp(n, n);
      for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
          const double dist = std::abs(X(r, d) - X(c, d));
          const double arg = std::numbers::pi * dist / period;
          const double s = std::sin(arg);
          dls(r, c) = K(r, c) * 4.0 * s * s / (ls * ls);
          dp(r, c) = K(r, c) * 4.0 * s * std::cos(arg) * arg / (ls * ls);
        }
      }
      out.push_back(K);
      out.push_back(std::move(dls));
      out.push_back(std::move(dp));
      return;
    }
    case KernelKind::categorical: {
      const double theta = params_[0];
      out.push_back((K.array() < 1.0).select(-theta * K.array(), 0.0).matrix());
      return;
    }
    default:
      throw std::logic_error("unhandled kernel kind");
  }
}

std::vector<Eigen::MatrixXd> Kernel::log_gradients(const Eigen::MatrixXd& X) const {
  std::vector<Eigen::MatrixXd> out;
  switch (op_) {
    case Op::leaf:
      leaf_gradients(X, leaf_matrix(X, X), out);
      break;
    case Op::sum:
      for (const auto& c : children_) {
        auto g = c.log_gradients(X);
        std::move(g.begin(), g.end(), std::back_inserter(out));
      }
      break;
    case Op::product: {
      std::vector<Eigen::MatrixXd> mats;
      for (const auto& c : children_) mats.push_back(c.matrix(X, X));
      for (std::size_t i = 0; i < children_.size(); ++i) {
        Eigen::MatrixXd others = Eigen::MatrixXd::Ones(X.rows(), X.rows());
        for (std::size_t j = 0; j < children_.size(); ++j) {
          if (j != i) others.array() *= mats[j].array();
        }
        for (auto& g : children_[i].log_gradients(X)) out.push_back((g.array() * others.array()).matrix());
      }
      break;
    }
    case Op::scale:
      for (auto& g : children_[0].log_gradients(X)) out.push_back(coefficient_ * g);
      break;
  }
  return out;
}

std::size_t Kernel::num_params() const {
  if (op_ == Op::leaf) return params_.size();
  std::size_t n = 0;
  for (const auto& c : children_) n += c.num_params();
  return n;
}

Eigen::VectorXd Kernel::params() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(num_params()));
  if (op_ == Op::leaf) {
    for (std::size_t i = 0; i < params_.size(); ++i) out(static_cast<Eigen::Index>(i)) = params_[i];
    return out;
  }
  Eigen::Index pos = 0;
  for (const auto& c : children_) {
    const auto p = c.params();
    out.segment(pos, p.size()) = p;
    pos += p.size();
  }
  return out;
}

void Kernel::set_params(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (static_cast<std::size_t>(values.size()) != num_params()) {
    throw ValidationError("kernel parameter vector has wrong length");
  }
  if (op_ == Op::leaf) {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] = values(static_cast<Eigen::Index>(i));
    validate_leaf();
    return;
  }
  Eigen::Index pos = 0;
  for (auto& c : children_) {
    const auto n = static_cast<Eigen::Index>(c.num_params());
    c.set_params(values.segment(pos, n));
    pos += n;
  }
}

std::vector<HyperRole> Kernel::roles() const {
  std::vector<HyperRole> out;
  if (op_ != Op::leaf) {
    for (const auto& c : children_) {
      auto r = c.roles();
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }
  if (is_stationary(kind_)) {
    out.push_back(HyperRole::variance);
    out.insert(out.end(), params_.size() - 1, HyperRole::lengthscale);
  } else if (kind_ == KernelKind::linear) {
    out.push_back(HyperRole::bias);
  } else if (kind_ == KernelKind::periodic) {
    out = {HyperRole::variance, HyperRole::lengthscale, HyperRole::period};
  } else {
    out.push_back(HyperRole::overlap);
  }
  return out;
}

json Kernel::to_json() const {
  switch (op_) {
    case Op::leaf: {
      json params;
      if (is_stationary(kind_)) {
        params["variance"] = params_[0];
        params["lengthscale"] = std::vector<double>(params_.begin() + 1, params_.end());
      } else if (kind_ == KernelKind::linear) {
        params["bias"] = params_[0];
      } else if (kind_ == KernelKind::periodic) {
        params["variance"] = params_[0];
        params["lengthscale"] = params_[1];
        params["period"] = params_[2];
      } else {
        params["theta"] = params_[0];
      }
      return {{"op", "leaf"}, {"kind", to_string(kind_)}, {"params", params}, {"dims", dims_}};
    }
    case Op::sum:
    case Op::product: {
      json children = json::array();
      for (const auto& c : children_) children.push_back(c.to_json());
      return {{"op", op_ == Op::sum ? "sum" : "product"}, {"children", children}};
    }
    case Op::scale:
      return {{"op", "scale"}, {"coefficient", coefficient_}, {"children", json::array({children_[0].to_json()})}};
  }
  return {};
}

Kernel Kernel::from_json(const json& j) {
  try {
    const auto op = j.at("op").get<std::string>();
    if (op == "leaf") {
      const auto kind = kind_from_string(j.at("kind").get<std::string>());
      const auto dims = j.at("dims").get<std::vector<int>>();
      const auto& p = j.at("params");
      switch (kind) {
        case KernelKind::rbf:
          return rbf(p.at("variance").get<double>(), p.at("lengthscale").get<std::vector<double>>(), dims);
        case KernelKind::matern12:
        case KernelKind::matern32:
        case KernelKind::matern52: {
          const double nu = kind == KernelKind::matern12 ? 0.5 : kind == KernelKind::matern32 ? 1.5 : 2.5;
          return matern(nu, p.at("variance").get<double>(), p.at("lengthscale").get<std::vector<double>>(), dims);
        }
        case KernelKind::linear:
          return linear(p.at("bias").get<double>(), dims);
        case KernelKind::periodic:
          if (dims.size() != 1) throw ValidationError("periodic kernel acts on exactly one coordinate");
          return periodic(p.at("variance").get<double>(), p.at("lengthscale").get<double>(),
                          p.at("period").get<double>(), dims[0]);
        case KernelKind::categorical:
          return categorical(p.at("theta").get<double>(), dims);
      }
    }
    std::vector<Kernel> children;
    for (const auto& c : j.at("children")) children.push_back(from_json(c));
    if (op == "sum") return sum(std::move(children));
    if (op == "product") return product(std::move(children));
    if (op == "scale") {
      if (children.size() != 1) throw ValidationError("scale kernel takes exactly one child");
      return scale(j.at("coefficient").get<double>(), std::move(children[0]));
    }
    throw ValidationError("unknown kernel op '" + op + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed kernel expression: ") + e.what());
  }
}

}  // namespace smbo
