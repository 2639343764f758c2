#include "mottrw/evm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mottrw/parallel.hpp"
#include "mottrw/regen.hpp"
#include "mottrw/stats.hpp"

namespace mottrw {

std::vector<Observable> cylinder_observables() {
  return {
      [](const EnvironmentView& w) { return std::tanh(w.Z(0) - 1.0); },
      [](const EnvironmentView& w) { return std::tanh(w.Z(-1) - 1.0); },
      [](const EnvironmentView& w) { return std::exp(-w.Z(0)); },
      [](const EnvironmentView& w) { return std::exp(-w.Z(1)); },
      [](const EnvironmentView& w) { return w.Z(0) > 1.5 ? 1.0 : 0.0; },
      [](const EnvironmentView& w) { return w.Z(-1) > w.Z(0) ? 1.0 : 0.0; },
      [](const EnvironmentView& w) { return std::tanh(w.Z(0) - w.Z(-1)); },
      [](const EnvironmentView& w) { return std::exp(-(w.Z(0) + w.Z(1))); },
      [](const EnvironmentView& w) { return std::cos(w.Z(0)); },
      [](const EnvironmentView& w) { return std::exp(-std::fabs(w.E(0)) - w.Z(-2)); },
  };
}

OccupationResult occupation_functional(const EnvironmentSpec& spec, const WalkConfig& cfg,
                                       const std::vector<Observable>& observables, std::size_t replicas,
                                       std::int64_t steps, std::int64_t burn_in, std::uint64_t seed,
                                       unsigned threads) {
  if (!(burn_in >= 0 && burn_in < steps)) throw std::invalid_argument("occupation: need 0 <= burn_in < steps");
  const Kernel kernel(cfg, spec);
  const std::size_t nf = observables.size();
  std::vector<std::vector<double>> per(nf, std::vector<double>(replicas));
  parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
    Environment env(spec, environment_seed(seed, r), {-kernel.s_star() - 256, kernel.s_star() + 4096});
    Walker w(env, kernel, make_engine(seed, r, 0), 0);
    std::vector<double> acc(nf, 0.0);
    for (std::int64_t j = 0; j < steps; ++j) {
      if (j >= burn_in) {
        w.here();
        const EnvironmentView view = env.shifted(w.position());
        for (std::size_t f = 0; f < nf; ++f) acc[f] += observables[f](view);
      }
      w.step();
    }
    for (std::size_t f = 0; f < nf; ++f) per[f][r] = acc[f] / static_cast<double>(steps - burn_in);
  });
  OccupationResult out;
  out.steps = steps;
  out.burn_in = burn_in;
  out.replicas = replicas;
  for (std::size_t f = 0; f < nf; ++f) {
    const Summary s = summarize(per[f]);
    out.mean.push_back(s.mean);
    out.stderr_.push_back(s.stderr_);
  }
  return out;
}

StructuralF structural_F(Environment& env, const Kernel& kernel, std::int64_t site, double rel_tol,
                         std::int64_t budget) {
  env.ensure({site - 2, site + 64});
  const double lam = kernel.lambda();
  StructuralF sf;
  const double pi1 = kernel.jump_rate(env, site, site + 1) + kernel.jump_rate(env, site, site - 1);
  const double x0 = env.x(site);
  double sum = 0.0;
  for (std::int64_t j = 0; j < budget; ++j) {
    if (site + j + 1 > env.window().hi) env.ensure({site - 2, site + 2 * (j + 64)});
    const double jj = static_cast<double>(j + 2);
    const double t = jj * jj * std::exp(-2.0 * lam * (env.x(site + j) - x0) + (1.0 - lam) * env.Z(site + j));
    sum += t;
    sf.terms = j + 1;
    if (j >= 8 && t < rel_tol * sum) {
      sf.stabilized = true;
      break;
    }
  }
  sf.value = pi1 * sum;
  sf.first_term = pi1 * 4.0 * std::exp((1.0 - lam) * env.Z(site));
  return sf;
}

DensityDiagnostics density_ratio_profile(Environment& env, const Kernel& kernel, std::int64_t n, std::uint64_t seed,
                                         std::size_t replicas, unsigned threads, bool with_structural) {
  if (n < 1 || replicas < 2) throw std::invalid_argument("density_ratio_profile: need n >= 1 and 2 replicas");
  const std::int64_t R = kernel.reach(), S = kernel.s_star();
  env.ensure({-std::min<std::int64_t>(n * R, 1 << 16) - S, n * R + S});
  const Environment& frozen = env;
  const std::size_t width = static_cast<std::size_t>(n) + 1;
  std::vector<double> vsum(width, 0.0);
  std::vector<std::int64_t> vmin(width, std::numeric_limits<std::int64_t>::max());
  std::vector<double> finals(replicas);
  const unsigned nt = resolve_threads(threads);
  StatRequest req;
  req.visit_range = IndexRange{0, n};
  for (std::size_t b = 0; b < replicas; b += nt) {
    const std::size_t cnt = std::min<std::size_t>(nt, replicas - b);
    std::vector<std::vector<std::int64_t>> visits(cnt);
    parallel_for(cnt, nt, [&](std::size_t i) {
      const TrajectoryStats st = simulate_discrete(frozen, kernel, 0, n, seed, b + i, req);
      visits[i] = st.visits;
      finals[b + i] = static_cast<double>(st.final_index);
    });
    for (const auto& v : visits)
      for (std::size_t k = 0; k < width; ++k) {
        vsum[k] += static_cast<double>(v[k]);
        vmin[k] = std::min(vmin[k], v[k]);
      }
  }
  DensityDiagnostics dd;
  dd.n = n;
  dd.replicas = replicas;
  std::vector<double> speeds(replicas);
  for (std::size_t r = 0; r < replicas; ++r) speeds[r] = finals[r] / static_cast<double>(n);
  const Summary sv = summarize(speeds);
  dd.v_hat = sv.mean;
  dd.v_stderr = sv.stderr_;
  dd.m = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * dd.v_hat / 2.0));
  if (dd.m > n) throw std::runtime_error("density_ratio_profile: m(n) exceeds the recorded range");
  dd.epsilon = epsilon_bound(kernel);
  dd.gamma_hat = dd.epsilon * dd.v_hat / 2.0;
  std::size_t below = 0;
  for (double f : finals)
    if (f < static_cast<double>(dd.m)) ++below;
  dd.below_m_fraction = static_cast<double>(below) / static_cast<double>(replicas);
  dd.threshold_reached = dd.below_m_fraction < dd.epsilon;
  dd.min_ratio = std::numeric_limits<double>::infinity();
  const double scale = static_cast<double>(dd.m) / (static_cast<double>(n) * static_cast<double>(replicas));
  for (std::int64_t k = 1; k <= dd.m; ++k) {
    const double ratio = scale * vsum[static_cast<std::size_t>(k)];
    dd.ratio.push_back(ratio);
    dd.min_visits.push_back(vmin[static_cast<std::size_t>(k)]);
    if (ratio < dd.gamma_hat) ++dd.violations;
    dd.min_ratio = std::min(dd.min_ratio, ratio);
    if (with_structural) {
      const double f = structural_F(env, kernel, k).value;
      dd.structural.push_back(f);
      dd.max_ratio_over_F = std::max(dd.max_ratio_over_F, ratio / f);
    }
  }
  return dd;
}

EvmVelocity velocity_via_evm(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t replicas,
                             std::int64_t steps, std::uint64_t seed, unsigned threads) {
  if (replicas < 2 || steps < 1) throw std::invalid_argument("velocity_via_evm: need 2 replicas and 1 step");
  const Kernel kernel(cfg, spec);
  std::vector<double> slope(replicas), pos(replicas), drift(replicas), inv(replicas), gap(replicas);
  parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
    Environment env(spec, environment_seed(seed, r), {-kernel.s_star() - 256, kernel.s_star() + 4096});
    StatRequest req;
    req.occupation = true;
    const TrajectoryStats st = simulate_discrete(env, kernel, 0, steps, seed, r, req);
    const double n = static_cast<double>(st.steps);
    slope[r] = static_cast<double>(st.final_index) / n;
    pos[r] = env.x(st.final_index) / n;
    drift[r] = st.drift_sum / n;
    inv[r] = st.inverse_rate_sum / n;
    gap[r] = (static_cast<double>(st.final_index) - st.drift_sum) / n;
  });
  EvmVelocity ev;
  ev.slope = summarize_velocity(slope, steps, 0);
  ev.position = summarize_velocity(pos, steps, 0);
  const Summary sd = summarize(drift), si = summarize(inv), sg = summarize(gap);
  ev.local_drift = sd.mean;
  ev.local_drift_stderr = sd.stderr_;
  ev.inverse_rate = si.mean;
  ev.inverse_rate_stderr = si.stderr_;
  ev.martingale_gap = sg.mean;
  ev.gap_stderr = sg.stderr_;
  const RatioEstimate vc = jackknife_ratio(drift, inv);
  ev.v_clock = vc.value;
  ev.v_clock_stderr = vc.stderr_;
  const RatioEstimate vp = jackknife_ratio(pos, inv);
  ev.v_position_clock = vp.value;
  ev.v_position_clock_stderr = vp.stderr_;
  ev.mean_spacing = mean_spacing(spec);
  ev.v_Y_from_spacing = ev.mean_spacing * ev.local_drift;
  return ev;
}

ContinuousVelocity continuous_velocity(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t replicas,
                                       double t_max, std::uint64_t seed, unsigned threads) {
  if (replicas < 2 || !(t_max > 0.0)) throw std::invalid_argument("continuous_velocity: need 2 replicas, t > 0");
  const Kernel kernel(cfg, spec);
  std::vector<double> idx(replicas), pos(replicas), jumps(replicas);
  parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
    Environment env(spec, environment_seed(seed, r), {-kernel.s_star() - 256, kernel.s_star() + 4096});
    const TrajectoryStats st = simulate_continuous(env, kernel, 0, t_max, seed, r);
    idx[r] = static_cast<double>(st.final_index) / t_max;
    pos[r] = env.x(st.final_index) / t_max;
    jumps[r] = static_cast<double>(st.steps);
  });
  ContinuousVelocity cv;
  cv.index = summarize_velocity(idx, 0, 0);
  cv.position = summarize_velocity(pos, 0, 0);
  cv.mean_jumps = summarize(jumps).mean;
  cv.t_max = t_max;
  return cv;
}

}  // namespace mottrw
