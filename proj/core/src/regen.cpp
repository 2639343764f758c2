#include "mottrw/regen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mottrw/linalg.hpp"
#include "mottrw/parallel.hpp"
#include "mottrw/stats.hpp"

namespace mottrw {

namespace {

constexpr std::uint64_t kPurposeZeta = 2;
constexpr std::uint64_t kPurposeBranch = 3;
constexpr std::uint64_t kPurposeCoupling = 4;
constexpr std::uint64_t kPurposeGeometric = 5;
constexpr std::uint64_t kPurposeXi = 6;

// One solve of the landing law with transient states [z - depth, z - 1].
std::vector<double> exit_law_at(Environment& env, const Kernel& kernel, std::int64_t y, std::int64_t z,
                                std::int64_t depth) {
  const int R = kernel.reach();
  const int S = kernel.s_star();
  const std::int64_t lo = z - depth;
  env.ensure({lo - S, z + S});
  const std::size_t n = static_cast<std::size_t>(depth);
  std::vector<double> prob(static_cast<std::size_t>(2 * R + 1));
  std::vector<double> scratch(static_cast<std::size_t>(2 * S + 1));
  SparseBuilder a(n);
  // exits[(x - (z - R)) * R + m] = P(x -> z + m) for the last R states.
  std::vector<double> exits(static_cast<std::size_t>(R) * static_cast<std::size_t>(R), 0.0);
  for (std::int64_t x = lo; x < z; ++x) {
    kernel.site_law(env, x, prob.data(), scratch.data());
    const std::size_t row = static_cast<std::size_t>(x - lo);
    double stay = 0.0;
    for (int m = -R; m <= R; ++m) {
      const double p = prob[static_cast<std::size_t>(m + R)];
      if (p == 0.0) continue;
      const std::int64_t j = x + m;
      if (j < lo || j == x) {
        stay += p;
      } else if (j < z) {
        a.add(row, static_cast<std::size_t>(j - lo), -p);
      } else {
        const std::int64_t r = x - (z - R);
        exits[static_cast<std::size_t>(r) * static_cast<std::size_t>(R) + static_cast<std::size_t>(j - z)] = p;
      }
    }
    a.add(row, row, 1.0 - stay);
  }
  std::vector<double> e(n, 0.0);
  e[static_cast<std::size_t>(y - lo)] = 1.0;
  const SolveResult g = solve_general(a, e, true);
  std::vector<double> law(static_cast<std::size_t>(R), 0.0);
  for (int r = 0; r < R; ++r) {
    const std::int64_t x = z - R + r;
    if (x < lo) continue;
    const double gx = g.x[static_cast<std::size_t>(x - lo)];
    for (int m = 0; m < R; ++m)
      law[static_cast<std::size_t>(m)] +=
          gx * exits[static_cast<std::size_t>(r) * static_cast<std::size_t>(R) + static_cast<std::size_t>(m)];
  }
  return law;
}

Summary pooled(const std::vector<CoupledRun>& runs, const std::vector<std::int64_t> CoupledRun::*field) {
  std::vector<double> v;
  for (const auto& r : runs)
    for (std::int64_t d : r.*field) v.push_back(static_cast<double>(d));
  return summarize(v);
}

}  // namespace

double epsilon_bound(const Kernel& kernel) {
  return 0.5 * std::exp(kernel.u_min() - kernel.u_max()) *
         (1.0 - std::exp(-(1.0 - kernel.lambda()) * kernel.d()));
}

ExitLaw exit_law(Environment& env, const Kernel& kernel, std::int64_t y, std::int64_t z, double tol,
                 std::int64_t max_depth) {
  if (!(y < z)) throw std::invalid_argument("exit_law: start must lie below the level");
  std::int64_t depth = std::max<std::int64_t>({64, 4 * kernel.reach(), z - y + 32});
  ExitLaw out;
  out.law = exit_law_at(env, kernel, y, z, depth);
  for (;;) {
    const std::int64_t next = 2 * depth;
    if (next > max_depth) throw SolverError("exit_law: left window did not stabilize");
    std::vector<double> law = exit_law_at(env, kernel, y, z, next);
    double change = 0.0;
    for (std::size_t m = 0; m < law.size(); ++m) change = std::max(change, std::fabs(law[m] - out.law[m]));
    out.law = std::move(law);
    out.depth = next;
    out.change = change;
    if (change < tol) return out;
    depth = next;
  }
}

CoupledSampler::CoupledSampler(Environment& env, const Kernel& kernel, std::uint64_t seed, std::uint64_t replica,
                               RegenOptions opts)
    : env_(&env), kernel_(&kernel), opts_(opts), eps_(opts.epsilon > 0.0 ? opts.epsilon : epsilon_bound(kernel)),
      walker_(env, kernel, make_engine(seed, replica, 0), 0, opts.walker),
      zeta_rng_(make_engine(seed, replica, kPurposeZeta)),
      branch_rng_(make_engine(seed, replica, kPurposeBranch)) {
  if (kernel.config().infinite()) throw std::invalid_argument("coupled sampler needs a finite rho");
  if (!(eps_ > 0.0 && eps_ < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
}

bool CoupledSampler::draw_zeta() { return uniform01(zeta_rng_) < eps_; }

CoupledSampler::Segment CoupledSampler::sample(std::int64_t y, std::int64_t z, bool zeta, std::int64_t watch) {
  Segment seg;
  seg.r = exact_hit_probability(*env_, *kernel_, y, z, opts_.solve_tol);
  if (seg.r < eps_)
    throw RejectionBudgetError("exact-hit probability below epsilon at y = " + std::to_string(y), seg.r);
  seg.exact_required = zeta || uniform01(branch_rng_) < (seg.r - eps_) / (1.0 - eps_);
  for (std::size_t attempt = 1; attempt <= opts_.budget; ++attempt) {
    walker_.reset(y);
    std::int64_t x = y, n = 0, visits = 0;
    while (x < z) {
      if (x == watch) ++visits;
      x = walker_.step();
      ++n;
    }
    if ((x == z) == seg.exact_required) {
      seg.end = x;
      seg.duration = n;
      seg.attempts = attempt;
      seg.watch_visits = visits;
      return seg;
    }
  }
  throw RejectionBudgetError("rejection budget exhausted at y = " + std::to_string(y) +
                                 ", r = " + std::to_string(seg.r),
                             seg.r);
}

CoupledRun simulate_coupled(Environment& env, const Kernel& kernel, std::uint64_t seed, std::uint64_t replica,
                            std::size_t n_cycles, RegenOptions opts) {
  CoupledSampler sampler(env, kernel, seed, replica, opts);
  CoupledRun run;
  run.rho = kernel.config().rho;
  run.epsilon = sampler.epsilon();
  run.seed = seed;
  run.replica = replica;
  run.levels = {0};
  run.times = {0};
  const std::int64_t rho = run.rho;
  std::int64_t x = 0, t = 0, j = 0;
  std::int64_t cycle_time = 0, cycle_visits = 0;
  while (run.cycle_durations.size() < n_cycles) {
    const bool zeta = sampler.draw_zeta();
    run.zeta.push_back(zeta);
    const auto seg = sampler.sample(x, (j + 1) * rho, zeta, run.levels.back() * rho);
    if (j == 0) run.first_landing = seg.end;
    run.attempts += seg.attempts;
    run.min_r = std::min(run.min_r, seg.r);
    x = seg.end;
    t += seg.duration;
    cycle_time += seg.duration;
    cycle_visits += seg.watch_visits;
    ++j;
    if (zeta) {
      run.cycle_blocks.push_back(j - run.levels.back());
      run.cycle_durations.push_back(cycle_time);
      run.cycle_visits.push_back(cycle_visits);
      run.levels.push_back(j);
      run.times.push_back(t);
      cycle_time = 0;
      cycle_visits = 0;
    }
  }
  return run;
}

std::vector<CoupledRun> coupled_runs(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t runs,
                                     std::size_t cycles_per_run, std::uint64_t seed, unsigned threads,
                                     RegenOptions opts) {
  const Kernel kernel(cfg, spec);
  std::vector<CoupledRun> out(runs);
  parallel_for(runs, resolve_threads(threads), [&](std::size_t r) {
    Environment env(spec, environment_seed(seed, r), {-kernel.s_star() - 256, kernel.s_star() + 4096});
    out[r] = simulate_coupled(env, kernel, seed, r, cycles_per_run, opts);
  });
  return out;
}

RegenerationSpeed regeneration_speed(const std::vector<CoupledRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("regeneration_speed: no runs");
  RegenerationSpeed rs;
  rs.rho = runs.front().rho;
  const double rho = rs.rho;
  const double eps = runs.front().epsilon;
  std::vector<double> count, blocks, dur;
  for (const auto& r : runs) {
    double b = 0.0, d = 0.0;
    for (std::size_t k = 0; k < r.cycle_durations.size(); ++k) {
      b += static_cast<double>(r.cycle_blocks[k]);
      d += static_cast<double>(r.cycle_durations[k]);
    }
    count.push_back(rho / eps * static_cast<double>(r.cycle_durations.size()));
    blocks.push_back(rho * b);
    dur.push_back(d);
    rs.cycles += r.cycle_durations.size();
  }
  const Summary sd = pooled(runs, &CoupledRun::cycle_durations);
  const Summary sb = pooled(runs, &CoupledRun::cycle_blocks);
  rs.mean_duration = sd.mean;
  rs.duration_stderr = sd.stderr_;
  rs.mean_blocks = sb.mean;
  if (runs.size() >= 2) {
    const RatioEstimate a = jackknife_ratio(count, dur);
    const RatioEstimate b = jackknife_ratio(blocks, dur);
    rs.v = a.value;
    rs.stderr_ = a.stderr_;
    rs.ratio_v = b.value;
    rs.ratio_stderr = b.stderr_;
  } else {
    rs.v = rho / (eps * sd.mean);
    rs.stderr_ = rs.v * sd.stderr_ / sd.mean;
    rs.ratio_v = rho * sb.mean / sd.mean;
    rs.ratio_stderr = rs.ratio_v * std::hypot(sd.stderr_ / sd.mean, sb.stderr_ / sb.mean);
  }
  return rs;
}

double XiParameters::cdf(std::int64_t a) const {
  if (a <= L) return 0.0;
  return -std::expm1(static_cast<double>(a - L) * std::log1p(-gamma_geo));
}

std::int64_t XiParameters::quantile(double u) const {
  const double t = std::log1p(-u) / std::log1p(-gamma_geo);
  std::int64_t a = L + static_cast<std::int64_t>(std::floor(t)) + 1;
  while (a - 1 > L && cdf(a - 1) > u) --a;
  while (cdf(a) <= u) ++a;
  return a;
}

XiParameters xi_parameters(const Kernel& kernel) {
  XiParameters xp;
  const double decay = (1.0 - kernel.lambda()) * kernel.d();
  xp.gamma_geo = -std::expm1(-decay);
  const double du = kernel.u_max() - kernel.u_min();
  xp.L = 1;
  while (std::exp(du - decay * xp.L) / xp.gamma_geo >= 1.0) ++xp.L;
  return xp;
}

OverjumpSup overjump_sup(Environment& env, const Kernel& kernel, std::int64_t level, double tol) {
  const int R = kernel.reach();
  const int S = kernel.s_star();
  std::vector<double> prob(static_cast<std::size_t>(2 * R + 1));
  std::vector<double> scratch(static_cast<std::size_t>(2 * S + 1));
  auto at = [&](std::int64_t z) {
    if (-z >= R) return 0.0;
    kernel.site_law(env, level + z, prob.data(), scratch.data());
    double p = 0.0;
    for (int m = R; m >= 1 - z; --m) p += prob[static_cast<std::size_t>(m + R)];
    return p;
  };
  OverjumpSup out;
  std::int64_t z_max = 8;
  env.ensure({level - z_max - S, level + S});
  out.at_zero = at(0);
  out.value = out.at_zero;
  std::int64_t done = 0;
  for (;;) {
    env.ensure({level - z_max - S, level + S});
    const double before = out.value;
    for (std::int64_t z = -done - 1; z >= -z_max; --z) {
      const double p = at(z);
      if (p > out.value) {
        out.value = p;
        out.argmax = z;
      }
    }
    done = z_max;
    out.z_max = z_max;
    if (z_max > 8 && std::fabs(out.value - before) < tol) return out;
    z_max *= 2;
  }
}

QuantileCoupling coupled_overshoot_check(Environment& env, const Kernel& kernel, std::size_t blocks,
                                         std::uint64_t seed, std::uint64_t replica) {
  if (!kernel.config().infinite()) throw std::invalid_argument("quantile coupling uses the rho = inf walk");
  const XiParameters xp = xi_parameters(kernel);
  QuantileCoupling qc;
  qc.L = xp.L;
  qc.gamma_geo = xp.gamma_geo;
  qc.seed = seed;
  qc.replica = replica;
  Walker walker(env, kernel, make_engine(seed, replica, 0), 0);
  Engine urng = make_engine(seed, replica, kPurposeCoupling);
  Engine grng = make_engine(seed, replica, kPurposeGeometric);
  std::int64_t threshold = 0, x = 0;
  double sum_d = 0.0, sum_s = 0.0;
  std::vector<double> diff;
  for (std::size_t k = 0; k < blocks; ++k) {
    CouplingBlock b;
    b.threshold = threshold;
    b.start = x;
    const ExitLaw law = exit_law(env, kernel, x, threshold + 1);
    std::int64_t n = 0;
    while (x <= threshold) {
      x = walker.step();
      ++n;
    }
    b.duration = n;
    b.W = x - threshold;
    double total = 0.0, below = 0.0;
    for (std::size_t m = 0; m < law.law.size(); ++m) {
      total += law.law[m];
      if (static_cast<std::int64_t>(m) + 1 < b.W) below += law.law[m];
    }
    const double lo = below / total;
    const double hi = std::min(1.0, (below + law.law[static_cast<std::size_t>(b.W - 1)]) / total);
    b.u = lo + (hi - lo) * uniform01(urng);
    b.xi = xp.quantile(b.u);
    if (b.xi < b.W) ++qc.violations;
    b.s = overjump_sup(env, kernel, threshold).value;
    b.S = static_cast<std::int64_t>(geometric_trials(grng, b.s));
    sum_d += static_cast<double>(b.duration);
    sum_s += static_cast<double>(b.S);
    diff.push_back(static_cast<double>(b.duration - b.S));
    qc.blocks.push_back(b);
    threshold = std::max(threshold + b.xi, x);
  }
  const double nb = static_cast<double>(blocks);
  qc.mean_duration = sum_d / nb;
  qc.mean_S = sum_s / nb;
  qc.diff_stderr = summarize(diff).stderr_;
  return qc;
}

DominanceTest dominance_test(const std::vector<QuantileCoupling>& runs, double alpha) {
  std::vector<double> diff;
  for (const auto& r : runs)
    for (const auto& b : r.blocks) diff.push_back(static_cast<double>(b.duration - b.S));
  const Summary s = summarize(diff);
  DominanceTest t;
  t.n = s.n;
  t.mean_diff = s.mean;
  t.stderr_ = s.stderr_;
  t.z = s.stderr_ > 0.0 ? s.mean / s.stderr_ : (s.mean >= 0.0 ? 0.0 : -INFINITY);
  t.pass = t.z > -normal_quantile(1.0 - alpha);
  return t;
}

SubballisticTrace subballistic_bound(Environment& env, const Kernel& kernel, std::size_t blocks,
                                     std::uint64_t seed, std::uint64_t replica) {
  if (!kernel.config().infinite()) throw std::invalid_argument("subballistic_bound uses the rho = inf walk");
  if (blocks < 1) throw std::invalid_argument("subballistic_bound: need at least one block");
  const XiParameters xp = xi_parameters(kernel);
  Engine xrng = make_engine(seed, replica, kPurposeXi);
  Engine grng = make_engine(seed, replica, kPurposeGeometric);
  SubballisticTrace tr;
  for (std::size_t i = 0; i <= blocks; ++i) tr.xi.push_back(xp.quantile(uniform01(xrng)));
  std::int64_t level = 0;
  double inv = 0.0;
  for (std::size_t k = 0; k < blocks; ++k) {
    const double s = overjump_sup(env, kernel, level).value;
    tr.s.push_back(s);
    tr.S.push_back(static_cast<std::int64_t>(geometric_trials(grng, s)));
    inv += 1.0 / s;
    tr.inverse_s_running.push_back(inv / static_cast<double>(k + 1));
    level += tr.xi[k];
  }
  double num = static_cast<double>(tr.xi[0]), den = 0.0;
  for (std::size_t k = 1; k <= blocks; ++k) {
    num += static_cast<double>(tr.xi[k]);
    den += static_cast<double>(tr.S[k - 1]);
    tr.bound.push_back(num / den);
  }
  return tr;
}

DivergenceTrace divergence_diagnostic(const EnvironmentSpec& spec, const WalkConfig& cfg,
                                      const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  WalkConfig c = cfg;
  c.rho = kRhoInfinite;
  const Kernel kernel(c, spec);
  std::vector<std::size_t> sorted = sizes;
  std::sort(sorted.begin(), sorted.end());
  DivergenceTrace dt;
  dt.sizes = sorted;
  const std::size_t n = sorted.empty() ? 0 : sorted.back();
  const double lam = kernel.lambda();
  double acc = 0.0, acc_s = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Environment env(spec, mix_key(seed, i, 0xD1), {-2 * kernel.s_star() - 16, kernel.s_star() + 1});
    acc += std::exp((1.0 - lam) * env.Z(0) - (1.0 + lam) * env.Z(-1));
    acc_s += 1.0 / overjump_sup(env, kernel, 0).value;
    while (next < sorted.size() && sorted[next] == i + 1) {
      dt.running_mean.push_back(acc / static_cast<double>(i + 1));
      dt.inverse_s_mean.push_back(acc_s / static_cast<double>(i + 1));
      ++next;
    }
  }
  return dt;
}

}  // namespace mottrw
