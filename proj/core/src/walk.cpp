#include "mottrw/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mottrw/parallel.hpp"
#include "mottrw/stats.hpp"

namespace mottrw {

namespace {

constexpr std::int64_t kEmptyKey = std::numeric_limits<std::int64_t>::min();
constexpr std::uint64_t kPurposeJump = 0;
constexpr std::uint64_t kPurposeClock = 1;

std::size_t round_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

SiteCache::SiteCache(const Kernel& kernel, std::size_t slots)
    : kernel_(&kernel), radius_(kernel.reach()), width_(static_cast<std::size_t>(2 * kernel.reach() + 1)) {
  const std::size_t n = round_pow2(std::max<std::size_t>(slots, 1));
  mask_ = n - 1;
  keys_.assign(n, kEmptyKey);
  cdf_.assign(n * width_, 0.0);
  drift_.assign(n, 0.0);
  rate_.assign(n, 0.0);
  prob_.assign(width_, 0.0);
  scratch_.assign(static_cast<std::size_t>(2 * kernel.s_star() + 1), 0.0);
  products_ = kernel.mark_free();
  scale_ = std::exp(kernel.u0());
  const std::size_t fn = round_pow2(std::max<std::size_t>(4 * n, 8 * static_cast<std::size_t>(kernel.s_star() + 1)));
  fmask_ = fn - 1;
  fkeys_.assign(fn, kEmptyKey);
  fright_.assign(fn, 0.0);
  fleft_.assign(fn, 0.0);
}

void SiteCache::factors(const Environment& env, std::int64_t k, double& right, double& left) {
  const std::size_t slot = static_cast<std::size_t>(static_cast<std::uint64_t>(k)) & fmask_;
  if (fkeys_[slot] != k) {
    kernel_->spacing_factors(env.Z(k), fright_[slot], fleft_[slot]);
    fkeys_[slot] = k;
  }
  right = fright_[slot];
  left = fleft_[slot];
}

void SiteCache::clear() {
  std::fill(keys_.begin(), keys_.end(), kEmptyKey);
  std::fill(fkeys_.begin(), fkeys_.end(), kEmptyKey);
}

SiteCache::Entry SiteCache::get(const Environment& env, std::int64_t site) {
  const std::size_t slot = static_cast<std::size_t>(static_cast<std::uint64_t>(site)) & mask_;
  double* cdf = cdf_.data() + slot * width_;
  if (keys_[slot] != site) {
    double rate = 0.0;
    if (products_) {
      const int S = kernel_->s_star();
      kernel_->require(env, site);
      double* r = scratch_.data() + S;
      r[0] = 0.0;
      double acc_r = scale_, acc_l = scale_, fr = 0.0, fl = 0.0;
      for (int m = 1; m <= S; ++m) {
        factors(env, site + m - 1, fr, fl);
        acc_r *= fr;
        r[m] = acc_r;
        factors(env, site - m, fr, fl);
        acc_l *= fl;
        r[-m] = acc_l;
      }
      rate = kernel_->law_from_rates(scratch_.data(), prob_.data());
    } else {
      rate = kernel_->site_law(env, site, prob_.data(), scratch_.data());
    }
    double acc = 0.0, drift = 0.0;
    for (std::size_t k = 0; k < width_; ++k) {
      acc += prob_[k];
      cdf[k] = acc;
      drift += (static_cast<double>(k) - radius_) * prob_[k];
    }
    for (std::size_t k = 0; k < width_; ++k) cdf[k] /= acc;
    cdf[width_ - 1] = 1.0;
    keys_[slot] = site;
    drift_[slot] = drift;
    rate_[slot] = rate;
  }
  return {cdf, drift_[slot], rate_[slot]};
}

Walker::Walker(Environment& env, const Kernel& kernel, Engine engine, std::int64_t start, WalkerOptions opts)
    : env_(&env), cenv_(&env), kernel_(&kernel), engine_(std::move(engine)), pos_(start), opts_(opts),
      cache_(kernel, opts.cache_slots), support_(kernel.s_star()) {}

Walker::Walker(const Environment& env, const Kernel& kernel, Engine engine, std::int64_t start,
               WalkerOptions opts)
    : env_(nullptr), cenv_(&env), kernel_(&kernel), engine_(std::move(engine)), pos_(start), opts_(opts),
      cache_(kernel, opts.cache_slots), support_(kernel.s_star()) {
  opts_.auto_extend = false;
}

void Walker::ensure_around(std::int64_t site) {
  const IndexRange w = cenv_->window();
  if (site - support_ >= w.lo && site + support_ <= w.hi) return;
  if (!opts_.auto_extend || env_ == nullptr)
    throw OutOfWindowError(site - support_ < w.lo ? site - support_ : site + support_, w);
  IndexRange r = w;
  if (site + support_ > w.hi) r.hi = site + support_ + std::max<std::int64_t>(4096, w.hi / 2);
  if (site - support_ < w.lo) r.lo = site - support_ - std::max<std::int64_t>(4096, -w.lo / 2);
  if (r.hi > opts_.window_cap || -r.lo > opts_.window_cap)
    throw WindowBudgetError("walker exceeded the configured window cap");
  env_->ensure(r);
}

SiteCache::Entry Walker::here() {
  ensure_around(pos_);
  return cache_.get(*cenv_, pos_);
}

std::int64_t Walker::step() {
  const SiteCache::Entry e = here();
  const double u = uniform01(engine_);
  const int n = 2 * cache_.radius() + 1;
  const int idx = static_cast<int>(std::upper_bound(e.cdf, e.cdf + n, u) - e.cdf);
  pos_ += idx - cache_.radius();
  return pos_;
}

namespace {

struct Collector {
  const StatRequest& req;
  TrajectoryStats& st;
  std::vector<std::int64_t> level_order;
  std::size_t next_level = 0;
  std::vector<std::int64_t> cps;
  std::size_t next_cp = 0;

  Collector(const StatRequest& r, TrajectoryStats& s) : req(r), st(s) {
    level_order.resize(r.levels.size());
    std::iota(level_order.begin(), level_order.end(), 0);
    std::sort(level_order.begin(), level_order.end(),
              [&](std::int64_t a, std::int64_t b) { return r.levels[a] < r.levels[b]; });
    st.hit_time.assign(r.levels.size(), -1);
    st.hit_index.assign(r.levels.size(), 0);
    if (r.visit_range) st.visits.assign(static_cast<std::size_t>(r.visit_range->size()), 0);
    cps = r.checkpoints;
    std::sort(cps.begin(), cps.end());
    st.checkpoint_index.assign(r.checkpoints.size(), 0);
  }

  void observe(std::int64_t n, std::int64_t x) {
    while (next_level < level_order.size() && x >= req.levels[level_order[next_level]]) {
      st.hit_time[level_order[next_level]] = n;
      st.hit_index[level_order[next_level]] = x;
      ++next_level;
    }
    if (req.visit_range && req.visit_range->contains(x)) ++st.visits[static_cast<std::size_t>(x - req.visit_range->lo)];
    while (next_cp < cps.size() && cps[next_cp] == n) {
      for (std::size_t i = 0; i < req.checkpoints.size(); ++i)
        if (req.checkpoints[i] == n) st.checkpoint_index[i] = x;
      ++next_cp;
    }
    if (req.record_path) st.path.push_back(x);
  }
};

template <class EnvRef>
TrajectoryStats run_discrete(EnvRef& env, const Kernel& kernel, std::int64_t start, std::int64_t n_steps,
                             std::uint64_t seed, std::uint64_t replica, const StatRequest& req) {
  TrajectoryStats st;
  st.start = start;
  st.seed = seed;
  st.replica = replica;
  Walker w(env, kernel, make_engine(seed, replica, kPurposeJump), start, req.walker);
  Collector col(req, st);
  if (req.record_path) st.path.reserve(static_cast<std::size_t>(std::min<std::int64_t>(n_steps, 1 << 24)) + 1);
  std::int64_t x = start;
  col.observe(0, x);
  std::int64_t n = 0;
  const std::int64_t limit = std::min(n_steps, req.step_cap);
  bool stopped = req.stop_above && x > *req.stop_above;
  while (!stopped && n < limit) {
    if (req.occupation) {
      const SiteCache::Entry e = w.here();
      st.drift_sum += e.drift;
      st.inverse_rate_sum += 1.0 / e.holding_rate;
    }
    const std::int64_t prev = x;
    x = w.step();
    ++n;
    const std::int64_t jump = x > prev ? x - prev : prev - x;
    if (jump == 0) ++st.self_loops;
    st.max_abs_jump = std::max(st.max_abs_jump, jump);
    col.observe(n, x);
    if (req.stop_above && x > *req.stop_above) stopped = true;
  }
  st.steps = n;
  st.final_index = x;
  st.censored = req.stop_above.has_value() && !stopped;
  return st;
}

}  // namespace

TrajectoryStats simulate_discrete(Environment& env, const Kernel& kernel, std::int64_t start, std::int64_t n_steps,
                                  std::uint64_t seed, std::uint64_t replica, const StatRequest& req) {
  return run_discrete(env, kernel, start, n_steps, seed, replica, req);
}

TrajectoryStats simulate_discrete(const Environment& env, const Kernel& kernel, std::int64_t start,
                                  std::int64_t n_steps, std::uint64_t seed, std::uint64_t replica,
                                  const StatRequest& req) {
  return run_discrete(env, kernel, start, n_steps, seed, replica, req);
}

TrajectoryStats simulate_continuous(Environment& env, const Kernel& kernel, std::int64_t start, double t_max,
                                    std::uint64_t seed, std::uint64_t replica, const StatRequest& req) {
  TrajectoryStats st;
  st.start = start;
  st.seed = seed;
  st.replica = replica;
  Walker w(env, kernel, make_engine(seed, replica, kPurposeJump), start, req.walker);
  Engine clock = make_engine(seed, replica, kPurposeClock);
  Collector col(req, st);
  std::int64_t x = start;
  col.observe(0, x);
  double t = 0.0;
  std::int64_t n = 0;
  while (n < req.step_cap) {
    const SiteCache::Entry e = w.here();
    const double hold = exponential(clock, e.holding_rate);
    if (t + hold > t_max) break;
    t += hold;
    if (req.occupation) {
      st.drift_sum += e.drift;
      st.inverse_rate_sum += 1.0 / e.holding_rate;
    }
    const std::int64_t prev = x;
    x = w.step();
    ++n;
    if (x == prev) ++st.self_loops;
    st.max_abs_jump = std::max(st.max_abs_jump, x > prev ? x - prev : prev - x);
    col.observe(n, x);
  }
  st.censored = n >= req.step_cap;
  st.steps = n;
  st.time = st.censored ? t : t_max;
  st.final_index = x;
  return st;
}

std::uint64_t environment_seed(std::uint64_t seed, std::uint64_t replica) {
  return mix_key(seed, replica, 0xE17);
}

VelocityEstimate summarize_velocity(const std::vector<double>& per_replica, std::int64_t steps,
                                    std::int64_t burn_in) {
  const Summary s = summarize(per_replica);
  VelocityEstimate v;
  v.v = s.mean;
  v.stderr_ = s.stderr_;
  v.replicas = per_replica.size();
  v.steps = steps;
  v.burn_in = burn_in;
  v.per_replica = per_replica;
  return v;
}

namespace {

IndexRange initial_window(const Kernel& k) {
  return {-static_cast<std::int64_t>(k.s_star()) - 256, static_cast<std::int64_t>(k.s_star()) + 4096};
}

}  // namespace

VelocityEstimate velocity_estimate(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t replicas,
                                   std::int64_t steps, std::int64_t burn_in, std::uint64_t seed, unsigned threads) {
  if (replicas < 2) throw std::invalid_argument("velocity_estimate: need at least 2 replicas");
  if (!(burn_in >= 0 && burn_in < steps)) throw std::invalid_argument("velocity_estimate: need 0 <= burn_in < steps");
  const Kernel kernel(cfg, spec);
  std::vector<double> v(replicas);
  parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
    Environment env(spec, environment_seed(seed, r), initial_window(kernel));
    StatRequest req;
    req.checkpoints = {burn_in};
    const TrajectoryStats st = simulate_discrete(env, kernel, 0, steps, seed, r, req);
    v[r] = static_cast<double>(st.final_index - st.checkpoint_index[0]) / static_cast<double>(steps - burn_in);
  });
  return summarize_velocity(v, steps, burn_in);
}

std::vector<VelocityEstimate> velocity_profile(const EnvironmentSpec& spec, const WalkConfig& cfg,
                                               std::size_t replicas, const std::vector<std::int64_t>& horizons,
                                               std::uint64_t seed, unsigned threads) {
  if (horizons.empty()) throw std::invalid_argument("velocity_profile: no horizons");
  const Kernel kernel(cfg, spec);
  const std::int64_t longest = *std::max_element(horizons.begin(), horizons.end());
  std::vector<std::vector<double>> v(horizons.size(), std::vector<double>(replicas));
  parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
    Environment env(spec, environment_seed(seed, r), initial_window(kernel));
    StatRequest req;
    req.checkpoints = horizons;
    const TrajectoryStats st = simulate_discrete(env, kernel, 0, longest, seed, r, req);
    for (std::size_t h = 0; h < horizons.size(); ++h)
      v[h][r] = static_cast<double>(st.checkpoint_index[h]) / static_cast<double>(horizons[h]);
  });
  std::vector<VelocityEstimate> out;
  for (std::size_t h = 0; h < horizons.size(); ++h) out.push_back(summarize_velocity(v[h], horizons[h], 0));
  return out;
}

HittingSummary hitting_overshoot(Environment& env, const Kernel& kernel, std::int64_t k, std::int64_t z,
                                 std::size_t replicas, std::uint64_t seed, std::int64_t step_cap) {
  if (!(k < z)) throw std::invalid_argument("hitting_overshoot: need k < z");
  HittingSummary h;
  h.replicas = replicas;
  h.overshoot_freq.assign(static_cast<std::size_t>(kernel.reach()), 0.0);
  std::vector<double> times;
  std::size_t exact = 0;
  StatRequest req;
  req.levels = {z};
  req.stop_above = z - 1;
  req.step_cap = step_cap;
  for (std::size_t r = 0; r < replicas; ++r) {
    const TrajectoryStats st = simulate_discrete(env, kernel, k, step_cap, seed, r, req);
    if (st.hit_time[0] < 0) {
      ++h.censored;
      continue;
    }
    times.push_back(static_cast<double>(st.hit_time[0]));
    const std::int64_t over = st.hit_index[0] - z;
    if (over == 0) ++exact;
    if (over < static_cast<std::int64_t>(h.overshoot_freq.size())) h.overshoot_freq[static_cast<std::size_t>(over)] += 1.0;
  }
  const double n = static_cast<double>(times.size());
  const Summary s = summarize(times);
  h.mean_time = s.mean;
  h.stderr_time = s.stderr_;
  if (n > 0) {
    h.exact_hit = static_cast<double>(exact) / n;
    h.stderr_exact = std::sqrt(h.exact_hit * (1.0 - h.exact_hit) / n);
    for (double& f : h.overshoot_freq) f /= n;
  }
  return h;
}

VisitEstimate visit_counts(Environment& env, const Kernel& kernel, std::int64_t start, IndexRange range,
                           std::int64_t stop_level, std::size_t replicas, std::uint64_t seed, std::int64_t step_cap,
                           unsigned threads) {
  if (!(start <= stop_level)) throw std::invalid_argument("visit_counts: start must not exceed the stop level");
  VisitEstimate ve;
  ve.range = range;
  ve.replicas = replicas;
  ve.stop_level = stop_level;
  const std::size_t n = static_cast<std::size_t>(range.size());
  std::vector<std::vector<std::int64_t>> counts(replicas);
  std::vector<char> censored(replicas, 0);
  StatRequest req;
  req.visit_range = range;
  req.stop_above = stop_level;
  req.step_cap = step_cap;
  const unsigned nt = resolve_threads(threads);
  if (nt > 1) {
    const std::int64_t s = kernel.s_star();
    env.ensure({std::min(range.lo, start) - 8192 - s, stop_level + 2 * s + 64});
    const Environment& frozen = env;
    parallel_for(replicas, nt, [&](std::size_t r) {
      const TrajectoryStats st = simulate_discrete(frozen, kernel, start, step_cap, seed, r, req);
      counts[r] = st.visits;
      censored[r] = st.censored;
    });
  } else {
    for (std::size_t r = 0; r < replicas; ++r) {
      const TrajectoryStats st = simulate_discrete(env, kernel, start, step_cap, seed, r, req);
      counts[r] = st.visits;
      censored[r] = st.censored;
    }
  }
  ve.mean.assign(n, 0.0);
  ve.stderr_.assign(n, 0.0);
  std::vector<double> col(replicas);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < replicas; ++r) col[r] = static_cast<double>(counts[r][i]);
    const Summary s = summarize(col);
    ve.mean[i] = s.mean;
    ve.stderr_[i] = s.stderr_;
  }
  ve.censored = static_cast<std::size_t>(std::count(censored.begin(), censored.end(), 1));
  ve.return_bound = kernel.K_pi() * std::exp(-(1.0 + kernel.lambda()) * kernel.d() *
                                             static_cast<double>(stop_level - range.hi));
  return ve;
}

}  // namespace mottrw
