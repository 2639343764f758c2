#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mottrw/criteria.hpp"
#include "mottrw/env.hpp"
#include "mottrw/walk.hpp"

using namespace mottrw;
using Catch::Approx;

namespace {

VelocityEstimate point(std::int64_t steps, double v, double se) {
  VelocityEstimate e;
  e.v = v;
  e.stderr_ = se;
  e.steps = steps;
  e.replicas = 16;
  return e;
}

// E[e^{a Z}] for Z = d + Exp(mu), a < mu.
double renewal_mgf(double d, double mu, double a) { return std::exp(a * d) * mu / (mu - a); }

}  // namespace

TEST_CASE("analytic classification from the moment structure", "[criteria]") {
  const auto heavy = EnvironmentSpec::heavy_tail(1.5);
  CHECK(critical_lambda(heavy) == Approx(0.5));
  CHECK(classify_analytic(heavy, 0.25).regime == Regime::kSubballistic);
  CHECK(classify_analytic(heavy, 0.7).regime == Regime::kBallistic);
  CHECK(classify_analytic(heavy, 0.5).regime == Regime::kBallistic);
  CHECK_FALSE(classify_analytic(heavy, 0.25).moment_finite);

  const auto ren = EnvironmentSpec::renewal_exponential(1.0, 0.4);
  CHECK(critical_lambda(ren) == Approx(0.6));
  CHECK(classify_analytic(ren, 0.5).regime == Regime::kSubballistic);
  CHECK(classify_analytic(ren, 0.7).regime == Regime::kBallistic);

  CHECK(classify_analytic(EnvironmentSpec::constant_lattice(), 0.1).regime == Regime::kBallistic);
  CHECK(std::isnan(critical_lambda(EnvironmentSpec::constant_lattice())));
  CHECK(classify_analytic(EnvironmentSpec::renewal_uniform(1.0, 0.5), 0.05).regime == Regime::kBallistic);

  const auto mc = EnvironmentSpec::markov_velocino(0.3, 2.0);
  const double lc = 1.0 - std::log(0.7 / 0.3) / 2.0;
  CHECK(critical_lambda(mc) == Approx(lc));
  const Classification below = classify_analytic(mc, lc - 0.1);
  CHECK(below.regime == Regime::kIndeterminate);
  CHECK(below.rationale.find("velocity positive is possible") != std::string::npos);
  CHECK(classify_analytic(mc, lc + 0.1).regime == Regime::kBallistic);

  CHECK_THROWS(classify_analytic(heavy, 0.0));
  CHECK_THROWS(classify_analytic(heavy, 1.0));
}

TEST_CASE("NN series on the lattice is geometric", "[criteria]") {
  for (double lambda : {0.2, 0.6}) {
    const NNCriterion nn = nn_criterion(EnvironmentSpec::constant_lattice(1.0), lambda, 10000, 12, 1);
    for (std::size_t i = 0; i < nn.terms.size(); ++i) {
      CHECK(nn.terms[i] == Approx(std::exp(-2.0 * lambda * static_cast<double>(i + 1))).epsilon(1e-12));
      CHECK(nn.term_stderr[i] < 1e-7);
    }
    CHECK(nn.tail_ratio == Approx(std::exp(-2.0 * lambda)).epsilon(1e-12));
    CHECK(nn.summable);
    CHECK(nn.verdict == Regime::kBallistic);
  }
}

TEST_CASE("NN terms factorize for independent spacings", "[criteria]") {
  const double d = 1.0, mu = 2.0, lambda = 0.5;
  const NNCriterion nn = nn_criterion(EnvironmentSpec::renewal_exponential(d, mu), lambda, 200000, 8, 7);
  const double head = renewal_mgf(d, mu, 1 - lambda) * renewal_mgf(d, mu, -(1 + lambda));
  const double step = renewal_mgf(d, mu, -2 * lambda);
  for (std::size_t i = 0; i < nn.terms.size(); ++i) {
    const double expected = head * std::pow(step, static_cast<double>(i));
    CHECK(std::abs(nn.terms[i] - expected) < 4.0 * nn.term_stderr[i]);
  }
  CHECK(nn.partial_sums.back() == Approx(nn.partial_sums[nn.partial_sums.size() - 2] + nn.terms.back()));
  CHECK(nn.summable);
  CHECK(nn.sizes == std::vector<std::size_t>{200, 2000, 20000, 200000});
}

TEST_CASE("NN criterion separates the heavy tail across the boundary", "[criteria]") {
  const auto heavy = EnvironmentSpec::heavy_tail(1.5);
  const NNCriterion below = nn_criterion(heavy, 0.25, 1000000, 24, 3);
  const NNCriterion above = nn_criterion(heavy, 0.7, 1000000, 24, 4);
  CHECK_FALSE(below.summable);
  CHECK(below.verdict == Regime::kSubballistic);
  CHECK(below.running_growth >= kRunningTolerance);
  CHECK(above.summable);
  CHECK(above.verdict == Regime::kBallistic);
  CHECK(above.tail_ratio < 1.0);
}

TEST_CASE("NN criterion rejects tiny inputs", "[criteria]") {
  CHECK_THROWS(nn_criterion(EnvironmentSpec::constant_lattice(), 0.5, 10, 8, 1));
  CHECK_THROWS(nn_criterion(EnvironmentSpec::constant_lattice(), 0.5, 1000, 1, 1));
}

TEST_CASE("speed trend signs on synthetic profiles", "[criteria]") {
  // Stable positive speed.
  SpeedTrend t = speed_trend({point(10000, 0.31, 0.01), point(100000, 0.305, 0.004), point(1000000, 0.308, 0.002)});
  CHECK(t.sign == SpeedSign::kPositive);
  CHECK(t.positive_signature);
  CHECK(t.decay_per_decade == Approx(std::pow(0.31 / 0.308, 0.5)));

  // Fast decay to a tiny speed.
  t = speed_trend({point(1000, 0.1, 0.01), point(10000, 0.03, 0.003), point(100000, 0.008, 0.001)});
  CHECK(t.subballistic_signature);
  CHECK(t.sign == SpeedSign::kZero);
  CHECK(t.loglog_slope < -0.5);

  // Slow but significant monotone decrease.
  t = speed_trend({point(10000, 0.142, 0.003), point(100000, 0.12, 0.002), point(1000000, 0.0925, 0.002)});
  CHECK_FALSE(t.subballistic_signature);
  CHECK(t.significant_decrease);
  CHECK(t.sign == SpeedSign::kZero);

  // Non-monotone noise around a small value.
  t = speed_trend({point(10000, 0.05, 0.02), point(100000, 0.06, 0.02), point(1000000, 0.045, 0.02)});
  CHECK(t.sign == SpeedSign::kUnclear);

  // Order of input does not matter.
  const SpeedTrend u = speed_trend({point(1000000, 0.0925, 0.002), point(10000, 0.142, 0.003), point(100000, 0.12, 0.002)});
  CHECK(u.sign == SpeedSign::kZero);
  CHECK_THROWS(speed_trend({point(1000, 0.1, 0.01)}));
}

TEST_CASE("lambda grid is inclusive and rounded", "[criteria]") {
  const auto g = lambda_grid(0.1, 0.9, 0.1);
  REQUIRE(g.size() == 9);
  CHECK(g.front() == 0.1);
  CHECK(g[2] == 0.3);
  CHECK(g.back() == 0.9);
  CHECK(lambda_grid(0.5, 0.5, 0.1).size() == 1);
  CHECK_THROWS(lambda_grid(0.5, 0.4, 0.1));
  CHECK_THROWS(lambda_grid(0.1, 0.4, 0.0));
}

TEST_CASE("phase sweep on the lattice follows tanh pointwise", "[criteria]") {
  WalkConfig base;
  base.rho = 1;
  base.normalization = Normalization::kRenormalized;
  const PhaseSweep sw = phase_sweep(EnvironmentSpec::constant_lattice(1.0), base, {0.2, 0.5, 0.8}, {10000, 100000}, 8, 5, 1);
  REQUIRE(sw.points.size() == 3);
  for (const PhasePoint& p : sw.points) {
    const VelocityEstimate& last = p.profile.back();
    CHECK(std::abs(last.v - std::tanh(p.lambda)) < 4.0 * last.stderr_);
    CHECK(p.analytic.regime == Regime::kBallistic);
    CHECK(p.trend.sign == SpeedSign::kPositive);
    CHECK(p.consistent);
  }
  CHECK_FALSE(sw.discontinuity);
}

TEST_CASE("phase sweep flags the jump at the heavy-tail boundary", "[criteria]") {
  WalkConfig base;
  base.rho = 1;
  base.normalization = Normalization::kRenormalized;
  const auto heavy = EnvironmentSpec::heavy_tail(1.5);
  const PhaseSweep sw = phase_sweep(heavy, base, {0.1, 0.6}, {10000, 100000, 1000000}, 16, 6, 1);
  REQUIRE(sw.points.size() == 2);
  CHECK(sw.points[0].analytic.regime == Regime::kSubballistic);
  CHECK(sw.points[1].analytic.regime == Regime::kBallistic);
  CHECK(sw.discontinuity);
  CHECK(sw.boundary_lo == 0.1);
  CHECK(sw.boundary_hi == 0.6);
}
