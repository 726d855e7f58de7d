#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "smbo/design_space.hpp"
#include "smbo/random.hpp"

namespace smbo {

enum class InitMethod { random, lhs };

std::string to_string(InitMethod m);
InitMethod init_method_from_string(const std::string& s);

/// Initial design of n points. `random` samples the embedded cube uniformly;
/// `lhs` stratifies every embedded coordinate into n equal bins with one
/// sample per bin (independent random permutations per coordinate) and then
/// decodes, so discrete parameters inherit the stratification up to snapping.
std::vector<DesignPoint> init_design(const DesignSpace& space, std::size_t n, InitMethod method, Rng& rng);

/// The n x d unit-cube Latin hypercube behind init_design's lhs method.
Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t d, Rng& rng);

}  // namespace smbo
