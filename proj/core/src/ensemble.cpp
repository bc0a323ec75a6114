#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "pdmp/error.hpp"
#include "pdmp/process.hpp"

namespace pdmp {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t EnsembleResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(paths.begin(), paths.end(), [](const PathResult& p) { return !p.error.empty(); }));
}

EnsembleResult simulate_ensemble(const PdmpModel& model, const InitialSampler& initial,
                                 const EnsembleOptions& options) {
  if (options.n_paths == 0) throw Error(ErrorKind::InvalidParam, "n_paths must be at least 1");
  if (!initial) throw Error(ErrorKind::InvalidParam, "ensemble requires an initial sampler");

  EnsembleResult result;
  result.paths.resize(options.n_paths);
  parallel_for(options.n_paths, options.threads, [&](std::size_t i) {
    PathResult& out = result.paths[i];
    Rng rng = Rng::for_stream(options.seed, i);
    try {
      ProcessState init = initial(rng);
      SnapshotRecorder snaps(options.snapshot_times);
      TrajectoryRecorder traj;
      ObserverChain chain;
      chain.add(snaps);
      if (options.record_trajectories) chain.add(traj);
      out.summary = simulate_path(model, init, options.horizon, rng, chain, options.simulation);
      out.snapshots = std::move(snaps.snapshots());
      if (options.record_trajectories) {
        out.trajectory = std::move(traj.trajectory());
        out.trajectory->status = out.summary.status;
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  return result;
}

}  // namespace pdmp
