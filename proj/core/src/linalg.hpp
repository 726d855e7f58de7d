#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace smbo::detail {

struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Cholesky of a symmetric PSD matrix with escalating diagonal jitter.
///
/// The plain factorization is accepted when every squared pivot is at least
/// 1e-10 * trace/n. Otherwise jitter starts at 1e-8 * trace/n and grows x10
/// up to 1e-2 * trace/n; past that a NumericalError is thrown.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& A);

}  // namespace smbo::detail
