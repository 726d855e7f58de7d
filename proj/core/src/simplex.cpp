#include "smbo/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smbo/errors.hpp"

namespace smbo {

namespace {

constexpr double kMassTolerance = 1e-9;
constexpr double kDegenerateWidth = 1e-15;

// tail[k] = sum_{i >= k} v_i, with tail[n] = 0.
Eigen::VectorXd tail_sums(const Eigen::VectorXd& v) {
  const auto n = v.size();
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index k = n - 1; k >= 0; --k) tail(k) = tail(k + 1) + v(k);
  return tail;
}

void require_feasible(const SimplexBounds& b) {
  b.validate();
  if (!simplex_feasible(b)) throw ValidationError("bounded simplex is empty: need sum(l) <= 1 <= sum(h)");
}

}  // namespace

void SimplexBounds::validate() const {
  if (lower.size() < 2) throw ValidationError("simplex dimension must be >= 2");
  if (lower.size() != upper.size()) throw ValidationError("simplex bound vectors differ in length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) >= 0.0 && lower(i) < upper(i) && upper(i) <= 1.0)) {
      throw ValidationError("simplex bounds must satisfy 0 <= l_i < h_i <= 1 (index " + std::to_string(i) + ")");
    }
  }
}

bool simplex_feasible(const SimplexBounds& b) {
  return b.lower.sum() <= 1.0 && 1.0 <= b.upper.sum();
}

Eigen::VectorXd simplex_forward(const SimplexBounds& b, const Eigen::VectorXd& x) {
  require_feasible(b);
  const auto n = b.size();
  if (x.size() != n) throw ValidationError("composition length does not match simplex bounds");
  if (std::abs(x.sum() - 1.0) > kMassTolerance) throw ValidationError("composition does not sum to 1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) < b.lower(i) - kMassTolerance || x(i) > b.upper(i) + kMassTolerance) {
      throw ValidationError("composition violates element bounds at index " + std::to_string(i));
    }
  }
  const Eigen::VectorXd L = tail_sums(b.lower);
  const Eigen::VectorXd H = tail_sums(b.upper);
  Eigen::VectorXd z(n - 1);
  double remaining = 1.0;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    const double a = std::max(b.lower(k), remaining - H(k + 1));
    const double hi = std::min(b.upper(k), remaining - L(k + 1));
    if (x(k) < a - kMassTolerance || x(k) > hi + kMassTolerance) {
      throw ValidationError("composition leaves no feasible completion at index " + std::to_string(k));
    }
    z(k) = (hi - a) <= kDegenerateWidth ? 0.0 : std::clamp((x(k) - a) / (hi - a), 0.0, 1.0);
    remaining -= x(k);
  }
  return z;
}

Eigen::VectorXd simplex_inverse(const SimplexBounds& b, const Eigen::VectorXd& z) {
  require_feasible(b);
  const auto n = b.size();
  if (z.size() != n - 1) throw ValidationError("latent vector must have length n - 1");
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (!(z(k) >= 0.0 && z(k) <= 1.0)) throw ValidationError("latent vector outside the unit cube");
  }
  const Eigen::VectorXd L = tail_sums(b.lower);
  const Eigen::VectorXd H = tail_sums(b.upper);
  Eigen::VectorXd x(n);
  double remaining = 1.0;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    const double a = std::max(b.lower(k), remaining - H(k + 1));
    const double hi = std::min(b.upper(k), remaining - L(k + 1));
    x(k) = (hi - a) <= kDegenerateWidth ? a : std::clamp(a + z(k) * (hi - a), a, hi);
    x(k) = std::clamp(x(k), b.lower(k), b.upper(k));
    remaining -= x(k);
  }
  x(n - 1) = std::clamp(remaining, b.lower(n - 1), b.upper(n - 1));
  return x;
}

}  // namespace smbo
