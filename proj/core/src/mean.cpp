#include "smbo/mean.hpp"

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

MeanFunction MeanFunction::constant(double c) { return MeanFunction(Kind::constant, {c}); }

MeanFunction MeanFunction::linear(std::vector<double> coefficients) {
  if (coefficients.empty()) throw ValidationError("linear mean needs at least one coefficient");
  return MeanFunction(Kind::linear, std::move(coefficients));
}

MeanFunction MeanFunction::basis(std::vector<double> coefficients, std::vector<BasisFn> functions) {
  if (coefficients.size() != functions.size()) {
    throw ValidationError("basis mean: coefficient count must match basis function count");
  }
  MeanFunction m(Kind::basis, std::move(coefficients));
  m.basis_ = std::move(functions);
  return m;
}

Eigen::MatrixXd MeanFunction::jacobian(const Eigen::MatrixXd& X) const {
  const auto n = X.rows();
  switch (kind_) {
    case Kind::zero:
      return Eigen::MatrixXd(n, 0);
    case Kind::constant:
      return Eigen::MatrixXd::Ones(n, 1);
    case Kind::linear:
      if (X.cols() != static_cast<Eigen::Index>(coefficients_.size())) {
        throw ValidationError("linear mean coefficient count does not match input dimension");
      }
      return X;
    case Kind::basis: {
      Eigen::MatrixXd J(n, static_cast<Eigen::Index>(basis_.size()));
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x = X.row(i).transpose();
        for (std::size_t j = 0; j < basis_.size(); ++j) J(i, static_cast<Eigen::Index>(j)) = basis_[j](x);
      }
      return J;
    }
  }
  return {};
}

Eigen::VectorXd MeanFunction::operator()(const Eigen::MatrixXd& X) const {
  if (kind_ == Kind::zero) return Eigen::VectorXd::Zero(X.rows());
  return jacobian(X) * params();
}

Eigen::VectorXd MeanFunction::params() const {
  return Eigen::Map<const Eigen::VectorXd>(coefficients_.data(), static_cast<Eigen::Index>(coefficients_.size()));
}

void MeanFunction::set_params(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (static_cast<std::size_t>(values.size()) != coefficients_.size()) {
    throw ValidationError("mean parameter vector has wrong length");
  }
  for (std::size_t i = 0; i < coefficients_.size(); ++i) coefficients_[i] = values(static_cast<Eigen::Index>(i));
}

json MeanFunction::to_json() const {
  switch (kind_) {
    case Kind::zero:
      return {{"kind", "zero"}};
    case Kind::constant:
      return {{"kind", "constant"}, {"value", coefficients_[0]}};
    case Kind::linear:
      return {{"kind", "linear"}, {"coefficients", coefficients_}};
    case Kind::basis:
      throw ValidationError("basis-function means cannot be serialized");
  }
  return {};
}

MeanFunction MeanFunction::from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "zero") return zero();
  if (kind == "constant") return constant(j.at("value").get<double>());
  if (kind == "linear") return linear(j.at("coefficients").get<std::vector<double>>());
  throw ValidationError("unknown mean kind '" + kind + "'");
}

}  // namespace smbo
