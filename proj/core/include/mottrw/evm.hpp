#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/walk.hpp"

namespace mottrw {

using Observable = std::function<double(const EnvironmentView&)>;

// Ten bounded observables depending on a few coordinates around the origin.
std::vector<Observable> cylinder_observables();

struct OccupationResult {
  std::vector<double> mean;     // per observable, averaged over replicas
  std::vector<double> stderr_;
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  std::size_t replicas = 0;
};

// (1/(n - b)) sum_{b <= j < n} f(tau_{X_j} omega) per replica, fresh
// environment per replica.
OccupationResult occupation_functional(const EnvironmentSpec& spec, const WalkConfig& cfg,
                                       const std::vector<Observable>& observables, std::size_t replicas,
                                       std::int64_t steps, std::int64_t burn_in, std::uint64_t seed,
                                       unsigned threads = 0);

struct StructuralF {
  double value = 0.0;
  double first_term = 0.0;   // pi^1 * 4 e^{(1-lambda) Z_0}
  std::int64_t terms = 0;
  bool stabilized = false;
};

// pi^1(0) sum_j (j+2)^2 e^{-2 lambda x_j + (1-lambda) Z_j} for the
// environment seen from `site`, without the unknown constant.
StructuralF structural_F(Environment& env, const Kernel& kernel, std::int64_t site = 0, double rel_tol = 1e-8,
                         std::int64_t budget = 1 << 20);

struct DensityDiagnostics {
  std::int64_t n = 0;
  std::size_t replicas = 0;
  double v_hat = 0.0;
  double v_stderr = 0.0;
  std::int64_t m = 0;                 // floor(n v_hat / 2)
  double epsilon = 0.0;
  double gamma_hat = 0.0;             // epsilon v_hat / 2
  std::vector<double> ratio;          // k = 1..m
  std::vector<std::int64_t> min_visits;
  std::vector<double> structural;     // structural_F at tau_k omega
  double below_m_fraction = 0.0;      // P_hat(X_n < m)
  bool threshold_reached = false;
  std::size_t violations = 0;         // ratio < gamma_hat
  double min_ratio = 0.0;
  double max_ratio_over_F = 0.0;
};

// Replicas of the quenched walk for n steps from 0; visit frequencies of the
// sites 1..m(n) relative to the uniform weight 1/m(n).
DensityDiagnostics density_ratio_profile(Environment& env, const Kernel& kernel, std::int64_t n, std::uint64_t seed,
                                         std::size_t replicas, unsigned threads = 0, bool with_structural = true);

struct EvmVelocity {
  VelocityEstimate slope;         // X_n / n
  VelocityEstimate position;      // x_{X_n} / n
  double local_drift = 0.0;       // time average of E[X_1 - X_0]
  double local_drift_stderr = 0.0;
  double martingale_gap = 0.0;    // mean of (X_n - sum of local drifts) / n
  double gap_stderr = 0.0;
  double inverse_rate = 0.0;      // time average of 1/r_0 at the walker
  double inverse_rate_stderr = 0.0;
  double v_clock = 0.0;           // local drift / inverse rate
  double v_clock_stderr = 0.0;
  double v_position_clock = 0.0;  // v_Y / inverse rate
  double v_position_clock_stderr = 0.0;
  double mean_spacing = 0.0;      // E[Z_0]
  double v_Y_from_spacing = 0.0;  // E[Z_0] * local drift
};

EvmVelocity velocity_via_evm(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t replicas,
                             std::int64_t steps, std::uint64_t seed, unsigned threads = 0);

struct ContinuousVelocity {
  VelocityEstimate index;     // X_t / t
  VelocityEstimate position;  // x_{X_t} / t
  double mean_jumps = 0.0;
  double t_max = 0.0;
};

ContinuousVelocity continuous_velocity(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t replicas,
                                       double t_max, std::uint64_t seed, unsigned threads = 0);

}  // namespace mottrw
