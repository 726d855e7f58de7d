#pragma once

#include <Eigen/Core>

namespace smbo {

/// Element-wise box bounds on the probability simplex {x : sum(x) = 1, l <= x <= h}.
struct SimplexBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Checks n >= 2, matching lengths and 0 <= l_i < h_i <= 1; throws ValidationError.
  void validate() const;
  Eigen::Index size() const { return lower.size(); }
};

/// Non-emptiness of the bounded simplex: sum(l) <= 1 <= sum(h).
bool simplex_feasible(const SimplexBounds& bounds);

/// Maps a feasible composition x (length n) to z in [0,1]^(n-1).
///
/// Component k is placed inside its conditional feasible interval [a_k, b_k]
/// given the mass already spent on x_1..x_{k-1}; z_k is its relative position
/// there. A degenerate interval (b_k == a_k) maps to z_k = 0.
/// Throws ValidationError if |sum(x) - 1| > 1e-9 or a bound is violated.
Eigen::VectorXd simplex_forward(const SimplexBounds& bounds, const Eigen::VectorXd& x);

/// Inverse of simplex_forward. The result sums to one and satisfies the
/// element bounds exactly. Throws ValidationError for z outside [0,1]^(n-1).
Eigen::VectorXd simplex_inverse(const SimplexBounds& bounds, const Eigen::VectorXd& z);

}  // namespace smbo
