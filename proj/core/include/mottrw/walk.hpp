#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/rng.hpp"

namespace mottrw {

class WindowBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Direct-mapped cache of per-site cumulative laws keyed by site index.
class SiteCache {
 public:
  struct Entry {
    const double* cdf;  // 2 * radius + 1 entries, offsets -radius..radius, last == 1
    double drift;
    double holding_rate;
  };

  explicit SiteCache(const Kernel& kernel, std::size_t slots = 4096);
  Entry get(const Environment& env, std::int64_t site);
  int radius() const { return radius_; }
  void clear();

 private:
  const Kernel* kernel_;
  int radius_;
  std::size_t width_;
  std::size_t mask_;
  std::vector<std::int64_t> keys_;
  std::vector<double> cdf_;
  std::vector<double> drift_, rate_;
  std::vector<double> prob_, scratch_;
  // Per-spacing factors keyed by index, used when the kernel is mark-free.
  void factors(const Environment& env, std::int64_t k, double& right, double& left);
  bool products_;
  double scale_;
  std::size_t fmask_;
  std::vector<std::int64_t> fkeys_;
  std::vector<double> fright_, fleft_;
};

struct WalkerOptions {
  bool auto_extend = true;
  std::int64_t window_cap = std::int64_t{1} << 27;  // max |index| materialized
  std::size_t cache_slots = 4096;
};

// Single trajectory of the discrete-time walk. With auto_extend the
// environment grows ahead of the walker; otherwise leaving the window throws.
class Walker {
 public:
  Walker(Environment& env, const Kernel& kernel, Engine engine, std::int64_t start,
         WalkerOptions opts = {});
  Walker(const Environment& env, const Kernel& kernel, Engine engine, std::int64_t start,
         WalkerOptions opts = {});

  std::int64_t position() const { return pos_; }
  void reset(std::int64_t pos) { pos_ = pos; }
  // Advance one step and return the new index.
  std::int64_t step();
  // Quantities of the law at the current site.
  SiteCache::Entry here();
  Engine& engine() { return engine_; }
  const Environment& environment() const { return *cenv_; }

 private:
  void ensure_around(std::int64_t site);

  Environment* env_;
  const Environment* cenv_;
  const Kernel* kernel_;
  Engine engine_;
  std::int64_t pos_;
  WalkerOptions opts_;
  SiteCache cache_;
  int support_;
};

struct StatRequest {
  std::vector<std::int64_t> levels;          // T_z = inf{n : X_n >= z}
  std::optional<IndexRange> visit_range;     // visit counts over [0, n]
  std::vector<std::int64_t> checkpoints;     // X_n recorded at these n
  bool occupation = false;                   // sums of local drift and 1/r over j < n
  bool record_path = false;
  std::optional<std::int64_t> stop_above;    // stop at the first n with X_n > level
  std::int64_t step_cap = std::int64_t{1} << 40;
  WalkerOptions walker;
};

struct TrajectoryStats {
  std::int64_t start = 0;
  std::int64_t steps = 0;
  std::int64_t final_index = 0;
  double time = 0.0;                          // continuous mode
  std::vector<std::int64_t> hit_time;        // -1 if not reached
  std::vector<std::int64_t> hit_index;       // X_{T_z}
  std::vector<std::int64_t> visits;          // over visit_range
  std::vector<std::int64_t> checkpoint_index;
  std::vector<std::int64_t> path;
  double drift_sum = 0.0;
  double inverse_rate_sum = 0.0;
  std::int64_t self_loops = 0;
  std::int64_t max_abs_jump = 0;
  bool censored = false;                     // step cap reached before the stop rule
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;

  bool exact_hit(std::size_t level_idx, std::int64_t z) const {
    return hit_time[level_idx] >= 0 && hit_index[level_idx] == z;
  }
};

// Runs n_steps (or until stop_above / step_cap) from `start`. The jump
// stream is keyed by (seed, replica).
TrajectoryStats simulate_discrete(Environment& env, const Kernel& kernel, std::int64_t start,
                                  std::int64_t n_steps, std::uint64_t seed, std::uint64_t replica,
                                  const StatRequest& req = {});
TrajectoryStats simulate_discrete(const Environment& env, const Kernel& kernel, std::int64_t start,
                                  std::int64_t n_steps, std::uint64_t seed, std::uint64_t replica,
                                  const StatRequest& req = {});

// Continuous-time walk up to time t_max: holding times Exp(r_k) from a
// second stream; the embedded chain uses the same jump stream as
// simulate_discrete. `steps` counts jumps; final_index is X at t_max.
TrajectoryStats simulate_continuous(Environment& env, const Kernel& kernel, std::int64_t start, double t_max,
                                    std::uint64_t seed, std::uint64_t replica, const StatRequest& req = {});

struct VelocityEstimate {
  double v = 0.0;
  double stderr_ = 0.0;
  std::size_t replicas = 0;
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  std::vector<double> per_replica;
};

VelocityEstimate summarize_velocity(const std::vector<double>& per_replica, std::int64_t steps,
                                    std::int64_t burn_in);

// Annealed estimate: fresh environment per replica keyed by (seed, replica).
VelocityEstimate velocity_estimate(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t replicas,
                                   std::int64_t steps, std::int64_t burn_in, std::uint64_t seed,
                                   unsigned threads = 0);

// Several horizons from the same trajectories: X_h / h at each h.
std::vector<VelocityEstimate> velocity_profile(const EnvironmentSpec& spec, const WalkConfig& cfg,
                                               std::size_t replicas, const std::vector<std::int64_t>& horizons,
                                               std::uint64_t seed, unsigned threads = 0);

std::uint64_t environment_seed(std::uint64_t seed, std::uint64_t replica);

struct HittingSummary {
  double mean_time = 0.0;
  double stderr_time = 0.0;
  double exact_hit = 0.0;                  // r_hat_k(z)
  double stderr_exact = 0.0;
  std::vector<double> overshoot_freq;      // P(X_{T_z} = z + m), m = 0..reach-1
  std::size_t replicas = 0;
  std::size_t censored = 0;
};

// Replicas of the quenched walk from k < z until T_z.
HittingSummary hitting_overshoot(Environment& env, const Kernel& kernel, std::int64_t k, std::int64_t z,
                                 std::size_t replicas, std::uint64_t seed, std::int64_t step_cap = 100000000);

struct VisitEstimate {
  IndexRange range;
  std::vector<double> mean;    // E[N(k)] for k in range
  std::vector<double> stderr_;
  std::size_t replicas = 0;
  std::size_t censored = 0;
  std::int64_t stop_level = 0;
  // One-jump bound on the return mass from beyond stop_level into range.
  double return_bound = 0.0;
};

// Visits to sites of `range` before the first exceedance of stop_level.
VisitEstimate visit_counts(Environment& env, const Kernel& kernel, std::int64_t start, IndexRange range,
                           std::int64_t stop_level, std::size_t replicas, std::uint64_t seed,
                           std::int64_t step_cap = 100000000, unsigned threads = 1);

// (1/n) sum_{j<n} f(tau_{X_j} omega) for a recorded path.
template <class F>
double occupation_average(const Environment& env, const std::vector<std::int64_t>& path, F&& f) {
  if (path.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < path.size(); ++j) s += f(env.shifted(path[j]));
  return s / static_cast<double>(path.size() - 1);
}

}  // namespace mottrw
