#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/evm.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/regen.hpp"
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

// sum_{j >= 0} (j + 2)^2 q^j from sum_k k^2 q^k = q (1 + q) / (1 - q)^3.
double weighted_geometric(double q) { return (q * (1 + q) / std::pow(1 - q, 3) - q) / (q * q); }

}  // namespace

TEST_CASE("structural F on the lattice has a closed form", "[evm]") {
  const auto spec = EnvironmentSpec::constant_lattice(1.0);
  for (double lambda : {0.2, 0.5, 0.8}) {
    const Kernel k(config(lambda, kRhoInfinite), spec);
    Environment env(spec, 0, {-8, 8});
    const StructuralF f = structural_F(env, k, 0, 1e-14);
    const double expected = oracle::lattice::pi1(lambda) * std::exp(1 - lambda) * weighted_geometric(std::exp(-2 * lambda));
    CHECK(f.stabilized);
    CHECK(f.value == Approx(expected).epsilon(1e-10));
    CHECK(f.first_term == Approx(oracle::lattice::pi1(lambda) * 4 * std::exp(1 - lambda)).epsilon(1e-12));
  }
}

TEST_CASE("structural F matches direct summation on renewal environments", "[evm]") {
  const Kernel k(config(0.5, kRhoInfinite), kRenewal);
  std::vector<double> means;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Environment env(kRenewal, mix_key(s, 100), {-16, 4096});
    for (std::int64_t site : {0, 5, 37}) {
      const StructuralF f = structural_F(env, k, site, 1e-14);
      long double sum = 0.0;
      for (std::int64_t j = 0; j < 3000; ++j) {
        const double jj = static_cast<double>(j + 2);
        sum += jj * jj * std::exp(-2 * 0.5 * (env.x(site + j) - env.x(site)) + 0.5 * env.Z(site + j));
      }
      const double pi1 = k.jump_rate(env, site, site + 1) + k.jump_rate(env, site, site - 1);
      REQUIRE(f.stabilized);
      CHECK(f.value == Approx(static_cast<double>(pi1 * sum)).epsilon(1e-10));
    }
  }
}

TEST_CASE("local drift on the nearest-neighbour lattice is tanh(lambda)", "[evm]") {
  const auto spec = EnvironmentSpec::constant_lattice(1.0);
  for (double lambda : {0.3, 0.7}) {
    const EvmVelocity ev = velocity_via_evm(spec, config(lambda, 1, Normalization::kRenormalized), 8, 20000, 3, 1);
    CHECK(ev.local_drift == Approx(std::tanh(lambda)).epsilon(1e-12));
    CHECK(ev.local_drift_stderr == Approx(0.0).margin(1e-12));
    CHECK(std::abs(ev.slope.v - std::tanh(lambda)) < 3.5 * ev.slope.stderr_);
  }
}

TEST_CASE("index minus accumulated local drift is a centred martingale", "[evm]") {
  for (int rho : {2, kRhoInfinite}) {
    const EvmVelocity ev = velocity_via_evm(kRenewal, config(0.5, rho), 32, 50000, 11 + static_cast<std::uint64_t>(rho % 5), 1);
    CHECK(std::abs(ev.martingale_gap) < 3.5 * ev.gap_stderr);
    CHECK(std::abs(ev.slope.v - ev.local_drift) < 3.5 * std::hypot(ev.slope.stderr_, ev.local_drift_stderr) + 0.01);
    CHECK(ev.local_drift > 0.0);
    CHECK(ev.inverse_rate > 0.0);
  }
}

TEST_CASE("position speed equals mean spacing times index speed", "[evm]") {
  const EvmVelocity ev = velocity_via_evm(kRenewal, config(0.5, kRhoInfinite), 32, 100000, 12, 1);
  CHECK(ev.mean_spacing == Approx(1.0 + 1.0 / 2.0).epsilon(1e-12));
  CHECK(std::abs(ev.position.v - ev.v_Y_from_spacing) < 3.5 * ev.mean_spacing * ev.local_drift_stderr + 4.0 * ev.position.stderr_);
}

TEST_CASE("continuous time lattice speed is the rate difference", "[evm]") {
  const auto spec = EnvironmentSpec::constant_lattice(1.0);
  const double lambda = 0.4;
  const ContinuousVelocity cv = continuous_velocity(spec, config(lambda, 1), 16, 20000.0, 4, 1);
  const double expected = std::exp(lambda - 1) - std::exp(-lambda - 1);
  CHECK(std::abs(cv.index.v - expected) < 3.5 * cv.index.stderr_);
  CHECK(cv.position.v == Approx(cv.index.v).epsilon(1e-12));
  // The lazy clock ticks at the normaliser rate, self-loops included.
  const Kernel k(config(lambda, 1), spec);
  Environment env(spec, 0, {-128, 128});
  CHECK(cv.mean_jumps == Approx(k.jump_distribution(env, 0).holding_rate * 20000.0).epsilon(0.02));
}

TEST_CASE("continuous position speed equals the clock-corrected discrete speed", "[evm]") {
  const WalkConfig c = config(0.5, 3);
  const std::int64_t steps = 100000;
  const EvmVelocity ev = velocity_via_evm(kRenewal, c, 32, steps, 21, 1);
  const ContinuousVelocity cv = continuous_velocity(kRenewal, c, 32, ev.inverse_rate * static_cast<double>(steps), 22, 1);
  const double sigma = std::hypot(cv.position.stderr_, ev.v_position_clock_stderr);
  CHECK(std::abs(cv.position.v - ev.v_position_clock) < 3.5 * sigma);
}

TEST_CASE("occupation averages of cylinder functions are bounded and settle", "[evm]") {
  const auto obs = cylinder_observables();
  REQUIRE(obs.size() == 10);
  const WalkConfig c = config(0.5, kRhoInfinite);
  const OccupationResult a = occupation_functional(kRenewal, c, obs, 16, 20000, 2000, 30, 1);
  const OccupationResult b = occupation_functional(kRenewal, c, obs, 16, 80000, 8000, 31, 1);
  for (std::size_t f = 0; f < obs.size(); ++f) {
    CHECK(std::abs(a.mean[f]) <= 1.0);
    CHECK(std::abs(a.mean[f] - b.mean[f]) < 4.0 * std::hypot(a.stderr_[f], b.stderr_[f]) + 1e-3);
  }
  CHECK_THROWS(occupation_functional(kRenewal, c, obs, 4, 100, 100, 1, 1));
}

TEST_CASE("occupation averages converge as rho grows", "[evm]") {
  const auto obs = cylinder_observables();
  auto run = [&](int rho) { return occupation_functional(kRenewal, config(0.5, rho), obs, 16, 40000, 4000, 40, 1); };
  const OccupationResult full = run(kRhoInfinite);
  std::vector<double> worst;
  for (int rho : {4, 8, 16}) {
    const OccupationResult r = run(rho);
    double w = 0.0;
    for (std::size_t f = 0; f < obs.size(); ++f)
      w = std::max(w, std::abs(r.mean[f] - full.mean[f]) / std::hypot(r.stderr_[f], full.stderr_[f]));
    worst.push_back(w);
  }
  // Common seeds: the truncated chains agree with the full one far from the
  // origin of the coupling, so the standardized gaps stay small.
  CHECK(worst[1] < 4.5);
  CHECK(worst[2] < 4.5);
}

TEST_CASE("visit density ratios stay above the regeneration constant", "[evm]") {
  const Kernel k(config(0.5, 3), kRenewal);
  Environment env(kRenewal, 50, {-128, 4096});
  const DensityDiagnostics dd = density_ratio_profile(env, k, 20000, 51, 32, 1, true);
  REQUIRE(dd.m >= 1);
  CHECK(dd.m == static_cast<std::int64_t>(std::floor(20000 * dd.v_hat / 2)));
  CHECK(dd.gamma_hat == Approx(epsilon_bound(k) * dd.v_hat / 2));
  CHECK(dd.violations == 0);
  CHECK(dd.min_ratio >= dd.gamma_hat);
  CHECK(dd.ratio.size() == static_cast<std::size_t>(dd.m));
  CHECK(dd.structural.size() == dd.ratio.size());
  CHECK(std::isfinite(dd.max_ratio_over_F));
  CHECK(dd.max_ratio_over_F > 0.0);
  CHECK(dd.threshold_reached);
}
