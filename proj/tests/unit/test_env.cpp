#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/rng.hpp"
#include "mottrw/stats.hpp"
#include "oracles.hpp"

using namespace mottrw;
using Catch::Approx;

namespace {

std::vector<EnvironmentSpec> all_families() {
  return {EnvironmentSpec::constant_lattice(1.0), EnvironmentSpec::renewal_exponential(1.0, 2.0),
          EnvironmentSpec::renewal_uniform(0.5, 2.0), EnvironmentSpec::markov_velocino(0.3, 1.0),
          EnvironmentSpec::heavy_tail(1.5), EnvironmentSpec::renewal_exponential(1.0, 2.0).with_uniform_marks(0.5)};
}

}  // namespace

TEST_CASE("spacings respect the declared floor", "[env]") {
  for (const auto& spec : all_families()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Environment env(spec, seed, {-500, 500});
      for (std::int64_t k = -500; k <= 500; ++k) {
        REQUIRE(env.Z(k) >= spec.floor());
        REQUIRE(env.x(k + 1) - env.x(k) >= spec.floor() - 1e-12);
      }
      REQUIRE(env.x(0) == 0.0);
    }
  }
}

TEST_CASE("materialization is a pure function of spec, seed and index", "[env]") {
  for (const auto& spec : all_families()) {
    Environment a(spec, 99, {-200, 200});
    Environment b(spec, 99, {-200, 200});
    Environment c(spec, 99, {-10, 10});
    c.extend_window({-200, 200});
    Environment d(spec, 99, {-50, 0});
    d.ensure({150, 200});
    d.ensure({-200, -150});
    for (std::int64_t k = -200; k <= 200; ++k) {
      REQUIRE(a.Z(k) == b.Z(k));
      REQUIRE(a.Z(k) == c.Z(k));
      REQUIRE(a.Z(k) == d.Z(k));
      REQUIRE(a.E(k) == c.E(k));
      REQUIRE(a.x(k) == c.x(k));
    }
    Environment other(spec, 100, {-200, 200});
    if (spec.family != Family::kConstantLattice) {
      bool differs = false;
      for (std::int64_t k = -200; k <= 200; ++k) differs = differs || other.Z(k) != a.Z(k);
      REQUIRE(differs);
    }
  }
}

TEST_CASE("reading outside the window throws", "[env]") {
  Environment env(EnvironmentSpec::renewal_exponential(1.0, 2.0), 1, {-5, 5});
  REQUIRE_THROWS_AS(env.Z(6), OutOfWindowError);
  REQUIRE_THROWS_AS(env.Z(-6), OutOfWindowError);
  REQUIRE_NOTHROW(env.x(6));
  REQUIRE_THROWS_AS(env.x(7), OutOfWindowError);
  REQUIRE_THROWS_AS(env.extend_window({-2, 2}), std::invalid_argument);
}

TEST_CASE("shifted views compose", "[env]") {
  Environment env(EnvironmentSpec::heavy_tail(1.5), 5, {-300, 300});
  for (std::int64_t a : {-40, 0, 17}) {
    for (std::int64_t b : {-25, 3, 60}) {
      const EnvironmentView ab = env.shifted(a).shifted(b);
      const EnvironmentView direct = env.shifted(a + b);
      for (std::int64_t k = -100; k <= 100; ++k) {
        REQUIRE(ab.Z(k) == direct.Z(k));
        REQUIRE(ab.x(k) == Approx(direct.x(k)).margin(1e-9));
      }
      REQUIRE(direct.x(0) == 0.0);
    }
  }
}

TEST_CASE("invalid parameters are rejected", "[env]") {
  REQUIRE_THROWS_AS(EnvironmentSpec::constant_lattice(0.0).validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(EnvironmentSpec::renewal_exponential(1.0, -1.0).validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(EnvironmentSpec::markov_velocino(0.6, 1.0).validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(EnvironmentSpec::heavy_tail(2.5).validate(), std::invalid_argument);
  REQUIRE_NOTHROW(EnvironmentSpec::heavy_tail(1.5).validate());
}

TEST_CASE("markov family: stationary marginal of Z_0", "[env]") {
  const auto spec = EnvironmentSpec::markov_velocino(0.3, 1.0);
  const double r = 3.0 / 7.0;
  REQUIRE(markov_stationary_probability(0.3, 1) == Approx(1.0 - r).epsilon(1e-14));
  REQUIRE(markov_stationary_probability(0.3, 4) == Approx((1.0 - r) * r * r * r).epsilon(1e-14));
  const int n = 100000;
  std::vector<double> counts(6, 0.0);
  for (int s = 0; s < n; ++s) {
    Environment env(spec, static_cast<std::uint64_t>(s), {0, 0});
    const auto level = static_cast<std::size_t>(std::lround(env.Z(0)));
    counts[std::min<std::size_t>(level, 5) - 1] += 1.0;
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double p = markov_stationary_probability(0.3, static_cast<std::int64_t>(k + 1));
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[k] / n - p) < 3.0 * se + 1e-12);
  }
}

TEST_CASE("markov family: one-step transition frequencies in both directions", "[env]") {
  const auto spec = EnvironmentSpec::markov_velocino(0.3, 1.0);
  Environment env(spec, 2024, {-100000, 100000});
  // Forward in k for k > 0, and backward for k < 0 (same kernel by reversibility).
  for (int dir : {1, -1}) {
    double from_one = 0, up_from_one = 0, from_high = 0, up_from_high = 0;
    for (std::int64_t j = 0; j < 99999; ++j) {
      const std::int64_t a = dir > 0 ? j : -j, b = dir > 0 ? j + 1 : -j - 1;
      const double za = env.Z(a), zb = env.Z(b);
      if (za == 1.0) {
        from_one += 1;
        up_from_one += zb == 2.0;
        REQUIRE((zb == 1.0 || zb == 2.0));
      } else {
        from_high += 1;
        up_from_high += zb == za + 1.0;
        REQUIRE(std::abs(zb - za) == 1.0);
      }
    }
    const double f1 = up_from_one / from_one, f2 = up_from_high / from_high;
    CHECK(std::abs(f1 - 0.3) < 3.0 * std::sqrt(0.21 / from_one));
    CHECK(std::abs(f2 - 0.3) < 3.0 * std::sqrt(0.21 / from_high));
  }
}

TEST_CASE("heavy tail sampler matches the integrated density", "[env]") {
  const double g = 1.5;
  const oracle::HeavyTailCdf cdf(g);
  Engine eng(7);
  std::vector<double> xs(100000);
  for (auto& x : xs) {
    x = sample_heavy_tail_z(g, eng);
    REQUIRE(x >= 1.0);
  }
  const double d = ks_statistic(xs, cdf);
  CHECK(ks_pvalue(d, xs.size()) > 0.001);
}

TEST_CASE("heavy tail mean spacing matches quadrature", "[env]") {
  const double g = 1.5;
  const oracle::HeavyTailCdf cdf(g);
  const double quad = cdf.mean();
  CHECK(mean_spacing(EnvironmentSpec::heavy_tail(g)) == Approx(quad).epsilon(1e-6));
  Engine eng(11);
  double s = 0, s2 = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double z = sample_heavy_tail_z(g, eng);
    s += z;
    s2 += z * z;
  }
  const double m = s / n, se = std::sqrt((s2 / n - m * m) / (n - 1));
  CHECK(std::abs(m - quad) < 3.0 * se);
}

TEST_CASE("heavy tail exponential moment diverges below the boundary only", "[env]") {
  const double g = 1.5;
  auto running = [&](double lambda, std::uint64_t seed) {
    Engine eng(seed);
    std::vector<double> at;
    double s = 0;
    for (int i = 1; i <= 1000000; ++i) {
      s += std::exp((1.0 - lambda) * sample_heavy_tail_z(g, eng));
      if (i == 10000 || i == 100000 || i == 1000000) at.push_back(s / i);
    }
    return at;
  };
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto hi = running(0.7, seed);
    CHECK(std::abs(hi[2] / hi[1] - 1.0) < 0.05);
    const auto lo = running(0.25, seed);
    CHECK(lo[2] / lo[0] > 1.5);
  }
}

TEST_CASE("renewal means", "[env]") {
  CHECK(mean_spacing(EnvironmentSpec::renewal_exponential(1.0, 2.0)) == Approx(1.5));
  CHECK(mean_spacing(EnvironmentSpec::renewal_uniform(0.5, 2.0)) == Approx(1.5));
  CHECK(mean_spacing(EnvironmentSpec::markov_velocino(0.3, 1.0)) == Approx(1.0 / (1.0 - 3.0 / 7.0)));
  Environment env(EnvironmentSpec::renewal_exponential(1.0, 2.0), 3, {0, 199999});
  const double m = env.x(200000) / 200000.0;
  CHECK(std::abs(m - 1.5) < 3.0 * 0.5 / std::sqrt(200000.0));
}

TEST_CASE("marks are independent of spacings", "[env]") {
  Environment env(EnvironmentSpec::renewal_exponential(1.0, 2.0).with_uniform_marks(1.0), 8, {0, 99999});
  const int n = 100000;
  double sz = 0, se = 0, szz = 0, see = 0, sze = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double z = env.Z(k), e = env.E(k);
    REQUIRE(std::abs(e) <= 1.0);
    sz += z, se += e, szz += z * z, see += e * e, sze += z * e;
  }
  const double cov = sze / n - sz / n * se / n;
  const double r = cov / std::sqrt((szz / n - sz * sz / n / n) * (see / n - se * se / n / n));
  CHECK(std::abs(r) < 3.0 / std::sqrt(static_cast<double>(n)));
}
