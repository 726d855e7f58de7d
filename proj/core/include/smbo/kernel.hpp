#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace smbo {

enum class KernelKind { rbf, matern12, matern32, matern52, linear, periodic, categorical };

/// What a kernel hyperparameter controls; used to pick its search bounds.
enum class HyperRole { variance, lengthscale, period, bias, overlap };

/// Covariance function as an expression tree.
///
/// Leaves are base kernels acting on an explicit list of embedded
/// coordinates (`dims`); internal nodes are Sum, Product and Scale(c >= 0).
/// Leaf hyperparameters are positive and are exposed as one flat vector in
/// depth-first order; Scale coefficients are fixed and not part of it.
///
///   rbf         v * exp(-0.5 * sum_j d_j^2 / l_j^2)
///   matern{12,32,52}  closed-form half-integer Matern on the scaled distance
///   linear      s_b^2 + x.x'                       (over dims)
///   periodic    v * exp(-2 sin^2(pi |d| / p) / l^2)  (single coordinate)
///   categorical exp(theta * [same category]) / exp(theta)  (one-hot block)
///
/// Lengthscales are either shared (one value) or one per listed coordinate.
class Kernel {
 public:
  enum class Op { leaf, sum, product, scale };

  static Kernel rbf(double variance, std::vector<double> lengthscales, std::vector<int> dims);
  /// nu must be 0.5, 1.5 or 2.5.
  static Kernel matern(double nu, double variance, std::vector<double> lengthscales, std::vector<int> dims);
  static Kernel linear(double bias, std::vector<int> dims);
  static Kernel periodic(double variance, double lengthscale, double period, int dim);
  static Kernel categorical(double theta, std::vector<int> block);
  static Kernel sum(std::vector<Kernel> children);
  static Kernel product(std::vector<Kernel> children);
  static Kernel scale(double coefficient, Kernel child);

  Op op() const { return op_; }
  KernelKind kind() const { return kind_; }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<Kernel>& children() const { return children_; }
  double coefficient() const { return coefficient_; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) const;
  /// Cross-covariance: rows of A against rows of B.
  Eigen::MatrixXd matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const;
  Eigen::MatrixXd matrix(const Eigen::MatrixXd& A) const;
  Eigen::VectorXd diagonal(const Eigen::MatrixXd& A) const;
  /// Derivatives of matrix(X) with respect to the log of each hyperparameter.
  std::vector<Eigen::MatrixXd> log_gradients(const Eigen::MatrixXd& X) const;

  std::size_t num_params() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::Ref<const Eigen::VectorXd>& values);
  std::vector<HyperRole> roles() const;
  /// One past the largest coordinate any leaf reads.
  int required_dim() const;

  nlohmann::json to_json() const;
  static Kernel from_json(const nlohmann::json& j);

  friend bool operator==(const Kernel& a, const Kernel& b) { return a.to_json() == b.to_json(); }

 private:
  Kernel() = default;

  Eigen::MatrixXd leaf_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const;
  void leaf_gradients(const Eigen::MatrixXd& X, const Eigen::MatrixXd& K, std::vector<Eigen::MatrixXd>& out) const;
  void validate_leaf() const;

  Op op_ = Op::leaf;
  KernelKind kind_ = KernelKind::rbf;
  std::vector<double> params_;
  std::vector<int> dims_;
  std::vector<Kernel> children_;
  double coefficient_ = 1.0;
};

Kernel operator+(Kernel a, Kernel b);
Kernel operator*(Kernel a, Kernel b);
Kernel operator*(double c, Kernel k);

std::string to_string(KernelKind kind);

inline double kernel_eval(const Kernel& k, const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return k(a, b); }
inline Eigen::MatrixXd kernel_matrix(const Kernel& k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return k.matrix(A, B);
}

}  // namespace smbo
