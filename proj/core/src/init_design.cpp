#include "smbo/init_design.hpp"

#include <numeric>

#include "smbo/errors.hpp"

namespace smbo {

std::string to_string(InitMethod m) { return m == InitMethod::random ? "random" : "lhs"; }

InitMethod init_method_from_string(const std::string& s) {
  if (s == "random") return InitMethod::random;
  if (s == "lhs") return InitMethod::lhs;
  throw ValidationError("init method must be 'random' or 'lhs', got '" + s + "'");
}

Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t d, Rng& rng) {
  if (n < 1) throw ValidationError("latin_hypercube: n must be >= 1");
  Eigen::MatrixXd U(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::size_t> bins(n);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(bins.begin(), bins.end(), 0);
    rng.shuffle(bins);
    for (std::size_t i = 0; i < n; ++i) {
      U(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(bins[i]) + rng.uniform()) / static_cast<double>(n);
    }
  }
  return U;
}

std::vector<DesignPoint> init_design(const DesignSpace& space, std::size_t n, InitMethod method, Rng& rng) {
  if (n < 1) throw ValidationError("init_design: n must be >= 1");
  if (method == InitMethod::random) return space.sample(n, rng);
  const Eigen::MatrixXd U = latin_hypercube(n, space.embedded_dim(), rng);
  std::vector<DesignPoint> points;
  points.reserve(n);
  for (Eigen::Index i = 0; i < U.rows(); ++i) points.push_back(space.from_unit(U.row(i).transpose()));
  return points;
}

}  // namespace smbo
