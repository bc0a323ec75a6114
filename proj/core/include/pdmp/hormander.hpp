#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdmp/flow.hpp"
#include "pdmp/rng.hpp"

namespace pdmp::hormander {

struct HormanderResult {
  bool holds = false;
  std::size_t rank = 0;
  std::size_t dimension = 0;
  /// Every generated vector, in generation order, with a label such as
  /// "g2-g1", "[g1,g2]" or "[g1,[g1,g2]]".
  std::vector<State> directions;
  std::vector<std::string> labels;
  std::vector<double> singular_values;
};

/// Evaluates g_i - g_1 (i >= 2), then [g_i, g_j] (i < j) and left-nested
/// brackets [g_i, B] of each previous level, up to `depth` (1 = differences
/// only), at `x`. The condition holds when these span R^d: singular values
/// above tol * sigma_max (and above an absolute floor) count toward the rank.
/// Brackets of brackets use central differences with step 1e-4 * (1 + |x_k|).
HormanderResult hormander_check(const std::vector<Flow>& fields, std::span<const double> x, int depth = 3,
                                double tol = 1e-8);

/// Numerical rank of the matrix whose columns are `vectors`.
std::size_t numerical_rank(const std::vector<State>& vectors, std::size_t dimension, double tol,
                           std::vector<double>* singular_values = nullptr);

struct PositivityReport {
  bool positive = false;
  double minimum = 0.0;
  State argmin;
  std::size_t samples = 0;
};

/// `q[i][j]` is the rate of switching from regime j to regime i; diagonal
/// and empty entries are ignored. Samples `n` points from `region` and
/// checks that every off-diagonal rate is strictly positive.
PositivityReport intensity_positivity_check(const std::vector<std::vector<ScalarField>>& q,
                                            const std::function<State(Rng&)>& region, std::size_t n,
                                            std::uint64_t seed = 0);

}  // namespace pdmp::hormander
