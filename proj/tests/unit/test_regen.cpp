#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/regen.hpp"
#include "mottrw/stats.hpp"
#include "mottrw/walk.hpp"
#include "oracles.hpp"

using namespace mottrw;
using Catch::Approx;

namespace {

WalkConfig config(double lambda, int rho, Normalization norm = Normalization::kLazy) {
  WalkConfig c;
  c.lambda = lambda;
  c.rho = rho;
  c.normalization = norm;
  return c;
}

const EnvironmentSpec kRenewal = EnvironmentSpec::renewal_exponential(1.0, 2.0);

// Exit law at [z, inf) from y by a dense solve on the transient states
// [z - depth, z - 1], jumps below the window staying put.
std::vector<double> dense_exit_law(Environment& env, const Kernel& k, std::int64_t y, std::int64_t z,
                                   std::int64_t depth) {
  const std::int64_t lo = z - depth;
  const std::size_t n = static_cast<std::size_t>(depth);
  const int R = k.reach();
  oracle::Matrix a(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> exits(static_cast<std::size_t>(R), std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t s = lo + static_cast<std::int64_t>(i);
    const JumpDistribution jd = k.jump_distribution(env, s);
    a[i][i] += 1.0;
    for (int m = -jd.radius; m <= jd.radius; ++m) {
      const std::int64_t to = s + m;
      if (to >= z) {
        exits[static_cast<std::size_t>(to - z)][i] += jd.p(m);
      } else {
        a[i][static_cast<std::size_t>((to < lo ? s : to) - lo)] -= jd.p(m);
      }
    }
  }
  std::vector<double> law;
  for (int m = 0; m < R; ++m) {
    const auto h = oracle::dense_solve(a, exits[static_cast<std::size_t>(m)]);
    law.push_back(h[static_cast<std::size_t>(y - lo)]);
  }
  return law;
}

}  // namespace

TEST_CASE("epsilon and xi parameters on the unit-floor model", "[regen]") {
  const Kernel k(config(0.5, 3), kRenewal);
  CHECK(epsilon_bound(k) == Approx(0.5 * (1.0 - std::exp(-0.5))).epsilon(1e-14));
  CHECK(epsilon_bound(k) == Approx(0.19673).epsilon(1e-4));
  const XiParameters xp = xi_parameters(Kernel(config(0.5, kRhoInfinite), kRenewal));
  CHECK(xp.gamma_geo == Approx(0.39347).epsilon(1e-4));
  CHECK(xp.L == 2);
  CHECK(std::exp(-1.0) / xp.gamma_geo < 1.0);
  CHECK(std::exp(-0.5) / xp.gamma_geo >= 1.0);
  for (std::int64_t a = xp.L + 1; a < 40; ++a)
    CHECK(1.0 - xp.cdf(a) == Approx(std::pow(1.0 - xp.gamma_geo, static_cast<double>(a - xp.L))).margin(1e-15));
  CHECK(xp.cdf(xp.L) == 0.0);
  CHECK(xp.mean() == Approx(2.0 + 1.0 / xp.gamma_geo));
}

TEST_CASE("xi quantile inverts the cdf and samples the law", "[regen]") {
  const XiParameters xp{2, 0.39347};
  for (std::int64_t a = 3; a < 30; ++a) {
    CHECK(xp.quantile(xp.cdf(a - 1)) == a);
    CHECK(xp.quantile(std::nextafter(xp.cdf(a), 0.0)) == a);
  }
  Engine g(3);
  const std::size_t n = 100000;
  std::vector<double> obs(40, 0.0), expd(40, 0.0);
  for (std::size_t i = 0; i < n; ++i) obs[static_cast<std::size_t>(std::min<std::int64_t>(xp.quantile(uniform01(g)) - 3, 39))] += 1;
  for (std::size_t b = 0; b < 40; ++b) {
    const auto a = static_cast<std::int64_t>(b) + 3;
    expd[b] = n * (b == 39 ? 1.0 - xp.cdf(a - 1) : xp.cdf(a) - xp.cdf(a - 1));
  }
  CHECK(chi_square(obs, expd).pvalue > 0.001);
}

TEST_CASE("exact hits from the left are bounded below by two epsilon", "[regen]") {
  for (int rho : {2, 4, kRhoInfinite}) {
    const Kernel k(config(0.5, rho), kRenewal);
    const double eps = epsilon_bound(k);
    for (std::uint64_t s = 0; s < 10; ++s) {
      Environment env(kRenewal, mix_key(s, 60), {-300, 300});
      for (std::int64_t y = -20; y <= -1; ++y) REQUIRE(exact_hit_probability(env, k, y, 0) >= 2.0 * eps);
    }
  }
}

TEST_CASE("exit law solve matches a dense oracle and Monte Carlo", "[regen]") {
  for (int rho : {2, 5}) {
    const Kernel k(config(0.5, rho), kRenewal);
    Environment env(kRenewal, 70 + static_cast<std::uint64_t>(rho), {-400, 400});
    const ExitLaw el = exit_law(env, k, -10, 1);
    const auto ref = dense_exit_law(env, k, -10, 1, el.depth);
    REQUIRE(el.law.size() == ref.size());
    for (std::size_t m = 0; m < ref.size(); ++m) CHECK(el.law[m] == Approx(ref[m]).margin(1e-12));
    double total = 0.0;
    for (double p : el.law) total += p;
    CHECK(total == Approx(1.0).margin(1e-10));
    const HittingSummary h = hitting_overshoot(env, k, -10, 1, 20000, 9);
    for (std::size_t m = 0; m < ref.size(); ++m) {
      const double se = std::sqrt(std::max(ref[m] * (1 - ref[m]), 1e-12) / 20000.0);
      CHECK(std::abs(h.overshoot_freq[m] - ref[m]) < 3.5 * se);
    }
  }
}

TEST_CASE("coupled sampler preserves the landing law at rho", "[regen]") {
  const int rho = 3;
  const Kernel k(config(0.5, rho), kRenewal);
  Environment env(kRenewal, 81, {-400, 400});
  const auto exact = exit_law(env, k, 0, rho).law;
  const std::size_t n = 10000;
  std::vector<double> counts(exact.size(), 0.0), plain(exact.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const CoupledRun run = simulate_coupled(env, k, 91, r, 1);
    counts[static_cast<std::size_t>(run.first_landing - rho)] += 1.0;
  }
  const HittingSummary h = hitting_overshoot(env, k, 0, rho, n, 92);
  for (std::size_t m = 0; m < exact.size(); ++m) {
    const double se = std::sqrt(std::max(exact[m] * (1 - exact[m]), 1e-12) / n);
    CHECK(std::abs(counts[m] / n - exact[m]) < 3.5 * se);
    CHECK(std::abs(h.overshoot_freq[m] - exact[m]) < 3.5 * se);
    plain[m] = h.overshoot_freq[m] * n;
  }
  CHECK(chi_square(counts, plain).pvalue > 0.01);
}

TEST_CASE("cycle space increments are geometric and cycles are alike", "[regen]") {
  const auto runs = coupled_runs(kRenewal, config(0.5, 3), 20, 1000, 13, 0);
  const double eps = runs.front().epsilon;
  CHECK(eps == Approx(0.19673).epsilon(1e-4));
  std::vector<double> obs(60, 0.0), expd(60, 0.0);
  std::vector<double> early, late;
  double cycles = 0.0;
  for (const auto& r : runs) {
    for (std::size_t c = 0; c < r.cycle_blocks.size(); ++c) {
      obs[static_cast<std::size_t>(std::min<std::int64_t>(r.cycle_blocks[c], 60) - 1)] += 1.0;
      cycles += 1.0;
      (c < 500 ? early : late).push_back(static_cast<double>(r.cycle_durations[c]));
    }
  }
  for (std::size_t b = 0; b < 60; ++b)
    expd[b] = cycles * (b == 59 ? std::pow(1 - eps, 59.0) : eps * std::pow(1 - eps, static_cast<double>(b)));
  CHECK(cycles >= 1e4);
  CHECK(chi_square(obs, expd).pvalue > 0.01);
  CHECK(ks_two_sample_pvalue(early, late) > 0.01);
}

TEST_CASE("regeneration speed on the lattice is tanh(lambda)", "[regen]") {
  const auto runs = coupled_runs(EnvironmentSpec::constant_lattice(1.0),
                                 config(0.5, 1, Normalization::kRenormalized), 16, 400, 14, 0);
  const RegenerationSpeed s = regeneration_speed(runs);
  CHECK(std::abs(s.v - std::tanh(0.5)) < 3.0 * s.stderr_);
  CHECK(std::abs(s.ratio_v - std::tanh(0.5)) < 3.0 * s.ratio_stderr);
}

TEST_CASE("mean cycle duration is affine in rho", "[regen]") {
  std::vector<double> xs, ys;
  for (int rho : {2, 4, 8, 16}) {
    const RegenerationSpeed s = regeneration_speed(coupled_runs(kRenewal, config(0.5, rho), 8, 300, 15, 0));
    xs.push_back(rho);
    ys.push_back(s.mean_duration);
  }
  const LinearFit f = linear_fit(xs, ys);
  CHECK(f.r2 > 0.95);
  CHECK(f.slope > 0.0);
}

TEST_CASE("quantile coupling on the heavy tail below the boundary", "[regen]") {
  const auto spec = EnvironmentSpec::heavy_tail(1.5);
  const Kernel k(config(0.25, kRhoInfinite), spec);
  std::vector<QuantileCoupling> runs;
  std::size_t blocks = 0;
  for (std::uint64_t r = 0; r < 4; ++r) {
    Environment env(spec, environment_seed(22, r), {-128, 2048});
    runs.push_back(coupled_overshoot_check(env, k, 250, 22, r));
    CHECK(runs.back().violations == 0);
    for (const auto& b : runs.back().blocks) REQUIRE(b.xi >= b.W);
    blocks += runs.back().blocks.size();
  }
  CHECK(blocks == 1000);
  CHECK(dominance_test(runs).pass);
}

TEST_CASE("overjump supremum sits at the level when u vanishes", "[regen]") {
  for (const auto& spec : {kRenewal, EnvironmentSpec::heavy_tail(1.5)}) {
    const Kernel k(config(0.4, kRhoInfinite), spec);
    for (std::uint64_t s = 0; s < 10; ++s) {
      Environment env(spec, s, {-300, 300});
      const OverjumpSup o = overjump_sup(env, k, 0);
      CHECK(o.value == Approx(o.at_zero).epsilon(1e-9));
    }
  }
  const auto marked = kRenewal.with_uniform_marks(0.5);
  WalkConfig c = config(0.4, kRhoInfinite);
  c.u = PotentialSpec::mott(0.5);
  const Kernel k(c, marked);
  Environment env(marked, 1, {-300, 300});
  const OverjumpSup o = overjump_sup(env, k, 0);
  CHECK(o.value <= o.at_zero * std::exp(2.0 * (k.u_max() - k.u_min())) * (1 + 1e-12));
}

// The decay is driven by rare environments with huge 1/s; with the log
// factors of this tail it is far slower than a factor two per decade at
// these block counts.
TEST_CASE("bound trace halves over a decade of blocks below the boundary", "[regen][asymptotic]") {
  const auto heavy = EnvironmentSpec::heavy_tail(1.5);
  const Kernel k(config(0.25, kRhoInfinite), heavy);
  std::vector<double> at100, at1000;
  for (std::uint64_t r = 0; r < 20; ++r) {
    Environment env(heavy, environment_seed(23, r), {-128, 4096});
    const SubballisticTrace tr = subballistic_bound(env, k, 1000, 23, r);
    at100.push_back(tr.bound[99]);
    at1000.push_back(tr.bound[999]);
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  CHECK(median(at1000) < 0.5 * median(at100));
}

TEST_CASE("bound trace stabilizes above zero when the moment is finite", "[regen]") {
  const Kernel kr(config(0.5, kRhoInfinite), kRenewal);
  std::vector<double> inv;
  for (std::uint64_t r = 0; r < 5; ++r) {
    Environment env(kRenewal, environment_seed(24, r), {-128, 8192});
    const SubballisticTrace tr = subballistic_bound(env, kr, 2000, 24, r);
    CHECK(tr.bound.back() > 0.05);
    CHECK(tr.inverse_s_running.back() / tr.inverse_s_running[999] == Approx(1.0).margin(0.1));
  }
  const DivergenceTrace d = divergence_diagnostic(kRenewal, config(0.5, kRhoInfinite), {1000, 10000}, 25);
  CHECK(d.inverse_s_mean[1] / d.inverse_s_mean[0] == Approx(1.0).margin(0.05));
  CHECK(d.running_mean[1] / d.running_mean[0] == Approx(1.0).margin(0.05));
}
