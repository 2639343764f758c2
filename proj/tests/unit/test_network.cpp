#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/network.hpp"
#include "mottrw/rng.hpp"
#include "oracles.hpp"

using namespace mottrw;
using Catch::Approx;

namespace {

WalkConfig config(double lambda, int rho) {
  WalkConfig c;
  c.lambda = lambda;
  c.rho = rho;
  return c;
}

const EnvironmentSpec kRenewal = EnvironmentSpec::renewal_exponential(1.0, 2.0);

}  // namespace

TEST_CASE("site sets", "[network]") {
  const SiteSet s = SiteSet::outside(-3, 4).unite(SiteSet::point(0));
  CHECK(s.contains(-3));
  CHECK(s.contains(-100));
  CHECK(s.contains(0));
  CHECK(s.contains(9));
  CHECK_FALSE(s.contains(1));
  CHECK_FALSE(s.contains(-2));
  CHECK_FALSE(s.empty());
  CHECK(SiteSet{}.empty());
}

TEST_CASE("unit lattice resistance series and conductance to the right", "[network]") {
  Environment env(EnvironmentSpec::constant_lattice(1.0), 0, {-10, 10});
  const Kernel k(config(0.5, 1), env.spec());
  const TailSums t = resistance_tail(env, k, 0, 1e-14);
  CHECK(t.stabilized);
  CHECK(t.limit == Approx(std::exp(0.5) / (1.0 - std::exp(-1.0))).epsilon(1e-12));
  CHECK(t.limit == Approx(2.6082).epsilon(1e-4));
  const double c = eff_conductance_nn(env, k, SiteSet::point(0), SiteSet::right_of(60));
  CHECK(c == Approx(0.38340).epsilon(1e-4));
  CHECK(c == Approx(1.0 / oracle::lattice::right_resistance(0.5)).epsilon(1e-12));
  const auto left = left_resistance_partial(env, k, 0, 40);
  CHECK(left.back() > 1e3);
  CHECK(std::is_sorted(left.begin(), left.end()));
}

TEST_CASE("unit lattice escape probability", "[network]") {
  Environment env(EnvironmentSpec::constant_lattice(1.0), 0, {-10, 10});
  const Kernel k(config(0.5, 1), env.spec());
  // The left branch vanishes in the limit.
  const double expected = 1.0 / oracle::lattice::right_resistance(0.5) / oracle::lattice::pi_inf(0.5);
  const EscapeResult e = escape_probability(env, k, 0, 1);
  CHECK(e.value == Approx(expected).epsilon(1e-7));
  CHECK(e.value == Approx(0.38340 / 1.8287).epsilon(1e-4));
  CHECK(eff_conductance_nn_limit(env, k, 0) == Approx(0.38340).epsilon(1e-4));
}

TEST_CASE("nearest-neighbour reductions match an absorbing chain on 6 sites", "[network]") {
  Engine g(5);
  for (int trial = 0; trial < 50; ++trial) {
    NearestNeighborChain ch;
    ch.lo = 0;
    for (int j = 0; j < 5; ++j) ch.bonds.push_back(std::exp(6.0 * uniform01(g) - 3.0));
    // Hitting probabilities from each interior point.
    for (std::int64_t x = 1; x <= 4; ++x) {
      oracle::Matrix a(6, std::vector<double>(6, 0.0));
      std::vector<double> b(6, 0.0);
      for (std::size_t i = 0; i < 6; ++i) {
        a[i][i] = 1.0;
        if (i == 0) b[i] = 1.0;
        if (i == 0 || i == 5) continue;
        const double cl = ch.bonds[i - 1], cr = ch.bonds[i];
        a[i][i - 1] = -cl / (cl + cr);
        a[i][i + 1] = -cr / (cl + cr);
      }
      const auto h = oracle::dense_solve(a, b);
      CHECK(nn_hitting_probability(ch, x, 0, 5) == Approx(h[static_cast<std::size_t>(x)]).epsilon(1e-10));
    }
    // Effective conductances between point sets.
    oracle::Matrix c(6, std::vector<double>(6, 0.0));
    for (std::size_t j = 0; j < 5; ++j) c[j][j + 1] = c[j + 1][j] = ch.bonds[j];
    const std::vector<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> cases = {
        {{0}, {5}}, {{2}, {0, 5}}, {{1, 4}, {2}}, {{0, 3}, {1, 5}}, {{3}, {4}}};
    for (const auto& [as, bs] : cases) {
      SiteSet A, B;
      std::vector<bool> za(6, false), ob(6, false);
      for (auto p : as) {
        A.points.push_back(p);
        za[static_cast<std::size_t>(p)] = true;
      }
      for (auto p : bs) {
        B.points.push_back(p);
        ob[static_cast<std::size_t>(p)] = true;
      }
      CHECK(eff_conductance_nn(ch, A, B) == Approx(oracle::effective_conductance(c, za, ob)).epsilon(1e-10));
    }
  }
}

TEST_CASE("banded Dirichlet solve matches a dense Laplacian solve", "[network]") {
  for (int rho : {1, 3, kRhoInfinite}) {
    const Kernel k(config(0.5, rho), kRenewal);
    for (std::uint64_t s = 0; s < 10; ++s) {
      Environment env(kRenewal, s, {-80, 80});
      const std::int64_t c0 = -static_cast<std::int64_t>(s % 5), N = 12;
      const IndexRange w{c0 - N, c0 + N};
      const SiteSet A = SiteSet::point(c0), B = SiteSet::outside(c0 - N, c0 + N);
      const ConductanceResult r = eff_conductance_window(env, k, A, B, rho, w);
      CHECK(r.residual < 1e-10);
      const std::size_t n = static_cast<std::size_t>(w.size());
      const int bw = std::min(rho, k.s_star());
      const double scale = std::exp(-2.0 * 0.5 * env.x(c0));
      oracle::Matrix cm(n, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const auto d = static_cast<long>(j) - static_cast<long>(i);
          if (d != 0 && std::abs(d) <= bw)
            cm[i][j] = k.conductance(env, w.lo + static_cast<std::int64_t>(i), w.lo + static_cast<std::int64_t>(j)) *
                       scale;
        }
      std::vector<bool> za(n, false), ob(n, false);
      za[static_cast<std::size_t>(N)] = true;
      ob.front() = ob.back() = true;
      CHECK(r.value * scale == Approx(oracle::effective_conductance(cm, za, ob)).epsilon(1e-10));
    }
  }
}

TEST_CASE("two-sided nearest-neighbour limit equals the sum of the one-sided series", "[network]") {
  const Kernel k(config(0.5, 1), kRenewal);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Environment env(kRenewal, s, {-200, 200});
    for (std::int64_t site : {-7, -2, 0}) {
      const double lim = eff_conductance_nn_limit(env, k, site);
      const double right = 1.0 / resistance_tail(env, k, 0, 1e-15).limit;
      const double c_from_window =
          eff_conductance_nn(env, k, SiteSet::point(site), SiteSet::outside(site - 80, site + 80));
      CHECK(lim == Approx(c_from_window).epsilon(1e-10));
      if (site == 0) CHECK(lim >= right);
    }
  }
}

TEST_CASE("resistance tails stabilize on renewal environments", "[network]") {
  const Kernel k(config(0.5, 1), kRenewal);
  for (std::uint64_t s = 0; s < 100; ++s) {
    Environment env(kRenewal, s, {-50, 50});
    const TailSums t = resistance_tail(env, k, 0);
    REQUIRE(t.stabilized);
    REQUIRE(std::is_sorted(t.partial.begin(), t.partial.end()));
    REQUIRE(left_resistance_partial(env, k, 0, 50).back() > 1e3);
  }
}

TEST_CASE("conductance is nondecreasing in rho", "[network]") {
  for (std::uint64_t s = 0; s < 60; ++s) {
    Environment env(kRenewal, mix_key(s, 1), {-64, 64});
    double prev = 0.0;
    for (int rho : {1, 2, 4, 8, 16, kRhoInfinite}) {
      const Kernel k(config(0.5, rho), kRenewal);
      const double c =
          eff_conductance_window(env, k, SiteSet::point(0), SiteSet::outside(-16, 16), rho, {-16, 16}).value;
      REQUIRE(c >= prev * (1.0 - 1e-12));
      prev = c;
    }
  }
}

TEST_CASE("escape probabilities are comparable across rho", "[network]") {
  const Kernel k1(config(0.5, 1), kRenewal);
  std::vector<double> half(4, 0.0), full(4, 0.0), lo_half(4, 1e300), lo_full(4, 1e300);
  const int rhos[] = {1, 2, 4, 8};
  for (std::uint64_t s = 0; s < 60; ++s) {
    Environment env(kRenewal, mix_key(s, 2), {-64, 64});
    const double p1 = escape_probability(env, k1, 0, 1).value;
    for (std::size_t r = 0; r < 4; ++r) {
      const Kernel kr(config(0.5, rhos[r]), kRenewal);
      const double ratio = escape_probability(env, kr, 0, rhos[r]).value / p1;
      REQUIRE(ratio > 0.0);
      full[r] = std::max(full[r], ratio);
      lo_full[r] = std::min(lo_full[r], ratio);
      if (s < 30) {
        half[r] = full[r];
        lo_half[r] = lo_full[r];
      }
    }
  }
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(std::isfinite(full[r]));
    CHECK(full[r] / half[r] - 1.0 < 0.1);
    CHECK(1.0 - lo_full[r] / lo_half[r] < 0.1);
  }
  CHECK(full[0] == Approx(1.0));
}

TEST_CASE("expected visits match a dense Green's function", "[network]") {
  for (int rho : {1, 2, kRhoInfinite}) {
    const Kernel k(config(0.5, rho), kRenewal);
    Environment env(kRenewal, 13, {-200, 200});
    const std::int64_t lo = -25, level = 0, start = -3;
    const auto g = expected_visits_exact(env, k, start, lo, level);
    const std::size_t n = static_cast<std::size_t>(level - lo + 1);
    oracle::Matrix a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t site = lo + static_cast<std::int64_t>(i);
      const JumpDistribution jd = k.jump_distribution(env, site);
      a[i][i] += 1.0;
      for (int m = -jd.radius; m <= jd.radius; ++m) {
        std::int64_t to = site + m;
        if (to > level) continue;  // killed
        if (to < lo) to = site;    // folded into the self-loop
        a[i][static_cast<std::size_t>(to - lo)] -= jd.p(m);
      }
    }
    // Row `start` of (I - P)^{-1}: solve the transposed system.
    oracle::Matrix at(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) at[i][j] = a[j][i];
    std::vector<double> e(n, 0.0);
    e[static_cast<std::size_t>(start - lo)] = 1.0;
    const auto ref = oracle::dense_solve(at, e);
    REQUIRE(g.size() == n);
    for (std::size_t i = 10; i < n; ++i) CHECK(g[i] == Approx(ref[i]).epsilon(1e-8));
    CHECK(g[static_cast<std::size_t>(start - lo)] >= 1.0);
  }
}

TEST_CASE("visit-bound structure on the unit lattice", "[network]") {
  Environment env(EnvironmentSpec::constant_lattice(1.0), 0, {-10, 10});
  const Kernel k(config(0.5, 1), env.spec());
  const double series = std::exp(0.5) / (1.0 - std::exp(-1.0));
  CHECK(g_structure(env, k, 0) == Approx(oracle::lattice::pi1(0.5) * series).epsilon(1e-10));
  CHECK(g_structure(env, k, -3) == Approx(oracle::lattice::pi1(0.5) * std::exp(-3.0) * series).epsilon(1e-10));
}

TEST_CASE("calibration constants are at least one and finite", "[network]") {
  WalkConfig c = config(0.5, 4);
  const CalibrationConstants cc = calibrate_constants(kRenewal, c, 10, 3);
  for (double v : {cc.K_eff, cc.K_pi, cc.K_tail, cc.K_0}) {
    CHECK(v >= 1.0);
    CHECK(std::isfinite(v));
  }
  CHECK(cc.samples == 10);
}
