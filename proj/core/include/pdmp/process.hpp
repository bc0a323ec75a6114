#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pdmp/flow.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

/// Post-jump state and regime. `kind` labels the event in trajectory output.
struct JumpOutcome {
  State state;
  int regime = 0;
  std::string kind;
};

using KernelSampler = std::function<JumpOutcome(std::span<const double> pre, int regime, Rng& rng)>;

struct JumpKernel {
  KernelSampler sample;
  /// Human-readable description of P(x, .), e.g. "x -> x/2".
  std::string description;
};

/// Stochastic transition: fires at the first jump of `hazard` along the flow.
struct HazardTransition {
  std::string name;
  Hazard hazard;
  JumpKernel kernel;
};

/// Fires once the regime has been occupied for `duration`.
struct FixedDelay {
  double duration = 0.0;
};

/// Fires when `h(x)` changes sign along the flow.
struct BoundaryHit {
  ScalarField h;
};

struct DeterministicClock {
  std::string name;
  std::variant<FixedDelay, BoundaryHit> trigger;
  JumpKernel kernel;
};

struct Regime {
  std::string name;
  Flow flow;
  std::vector<HazardTransition> hazards;
  std::vector<DeterministicClock> clocks;
  bool absorbing = false;
};

/// Parameter values as they appear in configs: a number or an expression in x.
using ParamValue = std::variant<double, std::string>;
using ParamRecord = std::map<std::string, ParamValue>;

/// Complete process description. Regime ids are the indices 0..k-1.
class PdmpModel {
 public:
  PdmpModel(std::string name, std::size_t dimension, std::vector<Regime> regimes,
            ParamRecord params = {}, FlowTolerances tolerances = {});

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dim_; }
  std::size_t regime_count() const { return regimes_.size(); }
  const Regime& regime(int id) const;
  const std::vector<Regime>& regimes() const { return regimes_; }
  const ParamRecord& params() const { return params_; }
  const FlowTolerances& tolerances() const { return tol_; }

 private:
  std::string name_;
  std::size_t dim_;
  std::vector<Regime> regimes_;
  ParamRecord params_;
  FlowTolerances tol_;
};

/// Current state of a path. `regime_age` is the time spent in the current
/// regime since it was entered or since a fixed-delay clock last fired.
struct ProcessState {
  State x;
  int regime = 0;
  double regime_age = 0.0;
};

struct Event {
  bool occurred = false;      ///< false: nothing happened before the cap
  double dt = 0.0;            ///< time from the current state to the event (or the cap)
  bool deterministic = false; ///< a clock fired rather than a hazard
  std::size_t cause = 0;      ///< index into the regime's hazards or clocks
  std::string kind;
  State pre;                  ///< left limit x(t-)
  int regime_pre = 0;
  State post;
  int regime_post = 0;
};

/// Samples the next event: every hazard draws its own exponential level,
/// every clock computes its firing time, and the earliest wins (clocks beat
/// hazards on exact ties). Returns a non-event at `cap` when nothing fires
/// earlier.
Event next_event(const PdmpModel& model, const ProcessState& state, Rng& rng, double cap);

struct JumpRecord {
  double t = 0.0;
  std::string kind;
  int regime_pre = 0;
  int regime_post = 0;
  State pre;
  State post;
};

struct SegmentRecord {
  double t_start = 0.0;
  int regime = 0;
  State state;
};

enum class PathStatus { Horizon, Absorbed };

struct Trajectory {
  std::vector<SegmentRecord> segments;
  std::vector<JumpRecord> jumps;
  double horizon = 0.0;
  State final_state;
  int final_regime = 0;
  PathStatus status = PathStatus::Horizon;
};

/// Receives a path as it is generated, so long runs need not store it.
class PathObserver {
 public:
  virtual ~PathObserver() = default;
  /// Regime is constant on [t_start, t_end); `start` is the state at t_start
  /// and `end` the left limit at t_end. The last segment has `last` set and
  /// ends at the horizon (inclusive).
  virtual void on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                          std::span<const double> start, std::span<const double> end, bool last) {
    (void)model; (void)t_start; (void)t_end; (void)regime; (void)start; (void)end; (void)last;
  }
  virtual void on_jump(const JumpRecord& jump) { (void)jump; }
};

struct SimulationOptions {
  std::size_t max_jumps = 10'000'000;
  /// Assert that every post-jump state lies in the target regime's domain.
  bool check_kernels = false;
};

struct PathSummary {
  ProcessState final_state;
  PathStatus status = PathStatus::Horizon;
  std::size_t jumps = 0;
};

/// Runs one path on [0, horizon], reporting segments and jumps to `observer`.
/// Throws JumpBudgetExceeded past `options.max_jumps`.
PathSummary simulate_path(const PdmpModel& model, const ProcessState& initial, double horizon, Rng& rng,
                          PathObserver& observer, const SimulationOptions& options = {});

/// Records every segment and jump.
class TrajectoryRecorder : public PathObserver {
 public:
  void on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                  std::span<const double> start, std::span<const double> end, bool last) override;
  void on_jump(const JumpRecord& jump) override;
  Trajectory& trajectory() { return traj_; }

 private:
  Trajectory traj_;
};

Trajectory simulate_trajectory(const PdmpModel& model, const ProcessState& initial, double horizon, Rng& rng,
                               const SimulationOptions& options = {});

struct Snapshot {
  double t = 0.0;
  int regime = 0;
  State x;
};

/// Samples the state at fixed times. A time equal to a jump time sees the
/// post-jump state.
class SnapshotRecorder : public PathObserver {
 public:
  explicit SnapshotRecorder(std::vector<double> times);
  void on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                  std::span<const double> start, std::span<const double> end, bool last) override;
  std::vector<Snapshot>& snapshots() { return out_; }

 private:
  std::vector<double> times_;
  std::size_t next_ = 0;
  std::vector<Snapshot> out_;
};

/// Forwards to several observers in order.
class ObserverChain : public PathObserver {
 public:
  void add(PathObserver& o) { list_.push_back(&o); }
  void on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                  std::span<const double> start, std::span<const double> end, bool last) override;
  void on_jump(const JumpRecord& jump) override;

 private:
  std::vector<PathObserver*> list_;
};

// --- ensembles --------------------------------------------------------------

using InitialSampler = std::function<ProcessState(Rng& rng)>;

struct EnsembleOptions {
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  double horizon = 1.0;
  std::vector<double> snapshot_times;
  bool record_trajectories = false;
  unsigned threads = 1;
  SimulationOptions simulation;
};

struct PathResult {
  PathSummary summary;
  std::vector<Snapshot> snapshots;
  std::optional<Trajectory> trajectory;
  std::string error;  ///< empty on success
};

struct EnsembleResult {
  std::vector<PathResult> paths;
  std::size_t failures() const;
};

/// Path i uses Rng::for_stream(seed, i) for both its initial draw and its
/// dynamics, so results do not depend on the thread count. Errors are
/// recorded per path.
EnsembleResult simulate_ensemble(const PdmpModel& model, const InitialSampler& initial,
                                 const EnsembleOptions& options);

/// Runs `body(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace pdmp
