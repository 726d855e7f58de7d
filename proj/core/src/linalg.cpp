#include "linalg.hpp"

#include <algorithm>
#include <cmath>

#include "smbo/errors.hpp"

namespace smbo::detail {

namespace {

bool acceptable(const Eigen::LLT<Eigen::MatrixXd>& llt, double min_pivot_sq) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = llt.matrixLLT().diagonal();
  if (!d.allFinite()) return false;
  return d.size() == 0 || d.array().square().minCoeff() >= min_pivot_sq;
}

}  // namespace

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& A) {
  JitteredCholesky out;
  const auto n = A.rows();
  if (n == 0) return out;
  if (!A.allFinite()) throw NumericalError("covariance matrix has non-finite entries");
  double scale = A.trace() / static_cast<double>(n);
  if (!(scale > 0.0)) scale = 1.0;

  out.llt.compute(A);
  if (acceptable(out.llt, 1e-10 * scale)) return out;

  Eigen::MatrixXd B = A;
  for (double jitter = 1e-8 * scale; jitter <= 1e-2 * scale * (1.0 + 1e-12); jitter *= 10.0) {
    B.diagonal() = A.diagonal().array() + jitter;
    out.llt.compute(B);
    if (acceptable(out.llt, 0.0) && out.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("covariance matrix is not positive definite even with maximal jitter; "
                       "kernel or hyperparameters are ill-conditioned");
}

}  // namespace smbo::detail
