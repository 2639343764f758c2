#pragma once

#include <cstdint>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/rng.hpp"
#include "mottrw/walk.hpp"

namespace mottrw {

// 1/2 e^{u_min - u_max} (1 - e^{-(1-lambda) d}); r_k(0) >= 2 epsilon.
double epsilon_bound(const Kernel& kernel);

// Landing law at the first entrance to [z, inf) from y < z:
// law[m] = P_y(X_{T_z} = z + m), m = 0..reach-1. Transient states are
// [z - M, z - 1]; jumps below the window stay put. M is doubled until the
// law changes by less than tol in every entry.
struct ExitLaw {
  std::vector<double> law;
  std::int64_t depth = 0;  // M
  double change = 0.0;
};
ExitLaw exit_law(Environment& env, const Kernel& kernel, std::int64_t y, std::int64_t z, double tol = 1e-12,
                 std::int64_t max_depth = 1 << 16);

// r_y(z) = P_y(X_{T_z} = z).
inline double exact_hit_probability(Environment& env, const Kernel& kernel, std::int64_t y, std::int64_t z,
                                    double tol = 1e-12) {
  return exit_law(env, kernel, y, z, tol).law.front();
}

class RejectionBudgetError : public std::runtime_error {
 public:
  RejectionBudgetError(const std::string& what, double r) : std::runtime_error(what), r_(r) {}
  double r() const { return r_; }

 private:
  double r_;
};

struct RegenOptions {
  std::size_t budget = 10000;  // attempts per conditioned segment
  double solve_tol = 1e-12;
  double epsilon = 0.0;        // 0 selects epsilon_bound
  WalkerOptions walker;
};

// Segment sampler for the zeta-coupled rho-walk: the path from y until T_z is
// drawn conditioned on an exact hit of z or on a strict overshoot, with the
// mixture weights that make the zeta-average equal the plain walk.
class CoupledSampler {
 public:
  struct Segment {
    std::int64_t end = 0;        // X_{T_z}
    std::int64_t duration = 0;
    std::size_t attempts = 0;
    double r = 0.0;              // r_y(z)
    bool exact_required = false;
    std::int64_t watch_visits = 0;
  };

  CoupledSampler(Environment& env, const Kernel& kernel, std::uint64_t seed, std::uint64_t replica,
                 RegenOptions opts = {});

  double epsilon() const { return eps_; }
  bool draw_zeta();
  // Visits to `watch` are counted over [T_y, T_z).
  Segment sample(std::int64_t y, std::int64_t z, bool zeta, std::int64_t watch);

 private:
  Environment* env_;
  const Kernel* kernel_;
  RegenOptions opts_;
  double eps_;
  Walker walker_;
  Engine zeta_rng_;
  Engine branch_rng_;
};

struct CoupledRun {
  int rho = 1;
  double epsilon = 0.0;
  std::vector<char> zeta;                    // zeta_1, zeta_2, ...
  std::vector<std::int64_t> levels;          // ell_k, k = 0..cycles
  std::vector<std::int64_t> times;           // T_{ell_k rho}
  std::vector<std::int64_t> cycle_blocks;    // ell_{k+1} - ell_k
  std::vector<std::int64_t> cycle_durations; // T_{ell_{k+1} rho} - T_{ell_k rho}
  std::vector<std::int64_t> cycle_visits;    // visits to ell_k rho during cycle k
  std::int64_t first_landing = 0;            // X_{T_rho}
  std::size_t attempts = 0;
  double min_r = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

CoupledRun simulate_coupled(Environment& env, const Kernel& kernel, std::uint64_t seed, std::uint64_t replica,
                            std::size_t n_cycles, RegenOptions opts = {});

// Fresh environment per run keyed by environment_seed(seed, run).
std::vector<CoupledRun> coupled_runs(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t runs,
                                     std::size_t cycles_per_run, std::uint64_t seed, unsigned threads = 0,
                                     RegenOptions opts = {});

struct RegenerationSpeed {
  double v = 0.0;              // rho / (epsilon * mean cycle duration)
  double stderr_ = 0.0;        // jackknife over runs
  double ratio_v = 0.0;        // rho * sum(blocks) / sum(durations)
  double ratio_stderr = 0.0;
  double mean_duration = 0.0;
  double duration_stderr = 0.0;
  double mean_blocks = 0.0;
  std::size_t cycles = 0;
  int rho = 1;
};

RegenerationSpeed regeneration_speed(const std::vector<CoupledRun>& runs);

struct XiParameters {
  int L = 1;
  double gamma_geo = 0.5;

  double mean() const { return L + 1.0 / gamma_geo; }
  // F_xi(a) for integer a.
  double cdf(std::int64_t a) const;
  // phi(F_xi, u) = inf{a : F_xi(a) > u}.
  std::int64_t quantile(double u) const;
};

XiParameters xi_parameters(const Kernel& kernel);

// sup over z in [-z_max, 0] of P_{level+z}(X_1 > level), z_max doubled from 8
// until the supremum changes by less than tol.
struct OverjumpSup {
  double value = 0.0;
  std::int64_t argmax = 0;   // z
  std::int64_t z_max = 0;
  double at_zero = 0.0;      // P_level(X_1 > level)
};
OverjumpSup overjump_sup(Environment& env, const Kernel& kernel, std::int64_t level, double tol = 1e-6);

struct CouplingBlock {
  std::int64_t threshold = 0;  // xi_1 + ... + xi_k
  std::int64_t start = 0;      // X_{T_k}
  std::int64_t W = 0;          // X_{T_{k+1}} - threshold
  std::int64_t xi = 0;         // xi_{k+1}
  double u = 0.0;
  double s = 0.0;              // s_k
  std::int64_t S = 0;          // Geom(s_k)
  std::int64_t duration = 0;   // T_{k+1} - T_k
};

struct QuantileCoupling {
  int L = 1;
  double gamma_geo = 0.0;
  std::vector<CouplingBlock> blocks;
  std::size_t violations = 0;      // xi < W
  double mean_duration = 0.0;
  double mean_S = 0.0;
  double diff_stderr = 0.0;        // of duration - S
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

// Runs the rho = infinity walk through `blocks` blocks. After each block the
// landing law F^{(k+1)} is solved from X_{T_k}; the common uniform is drawn
// from the F-cell of the observed overshoot, which gives the same joint law
// as drawing u first and conditioning the path.
QuantileCoupling coupled_overshoot_check(Environment& env, const Kernel& kernel, std::size_t blocks,
                                         std::uint64_t seed, std::uint64_t replica);

struct DominanceTest {
  double mean_diff = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;
  bool pass = true;  // mean duration >= mean S not rejected at level alpha
  std::size_t n = 0;
};
DominanceTest dominance_test(const std::vector<QuantileCoupling>& runs, double alpha = 0.01);

struct SubballisticTrace {
  std::vector<std::int64_t> xi;  // xi_1..xi_{K+1}
  std::vector<double> s;         // s_0..s_{K-1}
  std::vector<std::int64_t> S;
  std::vector<double> bound;     // bound[k-1] = sum_{i<=k+1} xi_i / sum_{j<k} S_j, k = 1..K
  std::vector<double> inverse_s_running;  // running mean of 1/s_j
};

// Upper-bound chain for X_n / n from i.i.d. xi and geometric S_k; no walk.
SubballisticTrace subballistic_bound(Environment& env, const Kernel& kernel, std::size_t blocks,
                                     std::uint64_t seed, std::uint64_t replica);

struct DivergenceTrace {
  std::vector<std::size_t> sizes;
  std::vector<double> running_mean;  // of e^{(1-lambda) Z_0 - (1+lambda) Z_{-1}}
  std::vector<double> inverse_s_mean;  // of 1 / sup_{z<=0} P_z(X_1 >= 1)
};

// Running empirical means over nested sample sizes, one fresh environment
// per sample.
DivergenceTrace divergence_diagnostic(const EnvironmentSpec& spec, const WalkConfig& cfg,
                                      const std::vector<std::size_t>& sizes, std::uint64_t seed);

}  // namespace mottrw
