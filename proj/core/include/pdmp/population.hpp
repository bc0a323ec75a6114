#pragma once

#include <cstddef>
#include <vector>

#include "pdmp/rng.hpp"
#include "pdmp/scalar_function.hpp"

namespace pdmp::models {

/// Independent cells growing by x' = g(x), dividing at rate b(x) into two
/// cells of size x/2 and dying at rate d(x).
struct PopulationParams {
  ScalarFunction g{0.0};
  ScalarFunction b{1.0};
  ScalarFunction d{0.0};
  std::size_t max_cells = 1'000'000;
};

struct PopulationEvent {
  enum class Kind { Division, Death };
  double t = 0.0;
  Kind kind = Kind::Division;
  double size = 0.0;  ///< size of the selected cell just before the event
  std::size_t population_after = 0;
};

struct PopulationSnapshot {
  double t = 0.0;
  std::vector<double> sizes;
};

struct PopulationTrajectory {
  std::vector<PopulationEvent> events;
  std::vector<PopulationSnapshot> snapshots;
  std::vector<double> final_sizes;
  double horizon = 0.0;
  bool extinct = false;
  double extinction_time = 0.0;
  std::size_t peak_population = 0;
};

struct PopulationOptions {
  std::vector<double> snapshot_times;
  bool record_events = true;
  /// The incrementally maintained total rate is checked against a full
  /// recomputation this often (frozen sizes only).
  std::size_t recompute_every = 256;
};

/// Event-driven simulation until extinction or `horizon`. The next event
/// time comes from the total rate sum_i b(x_i) + d(x_i) integrated along the
/// joint growth flow; the acting cell is chosen in proportion to its rate.
/// Throws PopulationBlowup when the population exceeds `max_cells`.
PopulationTrajectory simulate_population(const PopulationParams& params, std::vector<double> initial,
                                         double horizon, Rng& rng, const PopulationOptions& options = {});

const char* to_string(PopulationEvent::Kind kind);

}  // namespace pdmp::models
