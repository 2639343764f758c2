#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/walk.hpp"

namespace mottrw {

enum class Regime { kBallistic, kSubballistic, kIndeterminate };
std::string to_string(Regime r);

struct Classification {
  Regime regime = Regime::kIndeterminate;
  bool moment_finite = false;         // E[e^{(1-lambda) Z_0}] < inf
  std::string rationale;
};

// Decided from the family's moment structure, never by sampling.
Classification classify_analytic(const EnvironmentSpec& spec, double lambda);

// lambda_c for families with a sharp boundary (heavy tail, renewal
// exponential); NaN otherwise.
double critical_lambda(const EnvironmentSpec& spec);

struct NNCriterion {
  std::vector<double> terms;          // E[term_i], i = 1..I
  std::vector<double> term_stderr;
  std::vector<double> partial_sums;
  double tail_index = 0.0;            // Hill estimate on term_1 samples (inf if degenerate)
  double tail_ratio = 0.0;            // geometric mean ratio over the second half of the terms
  std::vector<std::size_t> sizes;     // nested sample sizes
  std::vector<double> first_term_running;  // running mean of term_1 at those sizes
  double running_growth = 0.0;        // largest relative change over the last two decades
  bool first_term_stable = false;     // running_growth < kRunningTolerance
  bool summable = false;
  Regime verdict = Regime::kIndeterminate;
};

// term_i = exp{(1-lambda) Z_0 - (1+lambda) Z_{-i} - 2 lambda (Z_{-i+1} + ... + Z_{-1})},
// estimated over `samples` environments. Summable iff the running mean of
// term_1 has settled over the last two decades of sample size and the tail
// ratio is below 1. The Hill index is a diagnostic only: the log factors in
// heavy-tailed spacings bias it upward at any practical sample size.
inline constexpr double kRunningTolerance = 0.1;
NNCriterion nn_criterion(const EnvironmentSpec& spec, double lambda, std::size_t samples, int truncation,
                         std::uint64_t seed);

enum class SpeedSign { kPositive, kZero, kUnclear };
std::string to_string(SpeedSign s);

struct SpeedTrend {
  double decay_per_decade = 1.0;     // (v(h_first)/v(h_last))^{1/decades}
  double loglog_slope = 0.0;
  bool subballistic_signature = false;  // decay >= 2 per decade and v(h_last) < 0.02
  bool positive_signature = false;      // v(h_last) > 3 stderr and within CI of earlier horizons
  bool significant_decrease = false;    // strictly decreasing, first minus last > 3 combined stderr
  SpeedSign sign = SpeedSign::kUnclear;
};

// Positive on the positive signature; zero on the sub-ballistic signature or
// a significant decrease; unclear otherwise.
SpeedTrend speed_trend(const std::vector<VelocityEstimate>& profile);

struct PhasePoint {
  EnvironmentSpec spec;
  double lambda = 0.5;
  int rho = kRhoInfinite;
  Classification analytic;
  std::vector<VelocityEstimate> profile;  // one per horizon
  SpeedTrend trend;
  bool consistent = true;                 // analytic class agrees with the simulated trend
};

struct PhaseSweep {
  std::vector<PhasePoint> points;
  // Adjacent points across an analytic boundary: zero trend on the
  // sub-ballistic side, v > 0.05 at the largest horizon on the other.
  bool discontinuity = false;
  double boundary_lo = 0.0, boundary_hi = 0.0;
};

std::vector<double> lambda_grid(double lo, double hi, double step);

// Per-point seed mix_key(seed, grid index).
PhaseSweep phase_sweep(const EnvironmentSpec& spec, const WalkConfig& base, const std::vector<double>& lambdas,
                       const std::vector<std::int64_t>& horizons, std::size_t replicas, std::uint64_t seed,
                       unsigned threads = 0);

}  // namespace mottrw
