#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace smbo {

/// Prior mean m(x): zero, constant c, linear beta.x, or sum_j beta_j phi_j(x)
/// over caller-supplied basis functions. Coefficients are hyperparameters.
class MeanFunction {
 public:
  enum class Kind { zero, constant, linear, basis };
  using BasisFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

  static MeanFunction zero() { return MeanFunction(Kind::zero, {}); }
  static MeanFunction constant(double c);
  static MeanFunction linear(std::vector<double> coefficients);
  static MeanFunction basis(std::vector<double> coefficients, std::vector<BasisFn> functions);

  Kind kind() const { return kind_; }
  /// Evaluates at every row of X.
  Eigen::VectorXd operator()(const Eigen::MatrixXd& X) const;
  /// n x p matrix of d m(x_i) / d beta_j.
  Eigen::MatrixXd jacobian(const Eigen::MatrixXd& X) const;

  std::size_t num_params() const { return coefficients_.size(); }
  Eigen::VectorXd params() const;
  void set_params(const Eigen::Ref<const Eigen::VectorXd>& values);

  /// Basis means carry arbitrary callables and cannot be serialized.
  nlohmann::json to_json() const;
  static MeanFunction from_json(const nlohmann::json& j);

 private:
  MeanFunction(Kind kind, std::vector<double> coefficients) : kind_(kind), coefficients_(std::move(coefficients)) {}

  Kind kind_;
  std::vector<double> coefficients_;
  std::vector<BasisFn> basis_;
};

}  // namespace smbo
