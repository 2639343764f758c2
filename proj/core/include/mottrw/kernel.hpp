#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mottrw/env.hpp"

namespace mottrw {

inline constexpr int kRhoInfinite = std::numeric_limits<int>::max();

enum class PotentialKind { kZero, kMott, kTable };

// Symmetric bounded u(E_i, E_j).
struct PotentialSpec {
  PotentialKind kind = PotentialKind::kZero;
  double beta = 0.0;  // mott
  // table: values on a uniform n x n grid spanning [grid_lo, grid_hi]^2,
  // row-major, bilinear interpolation between nodes.
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  std::vector<double> table;

  static PotentialSpec zero() { return {}; }
  static PotentialSpec mott(double beta);
  static PotentialSpec custom_table(double lo, double hi, std::vector<double> values);

  std::size_t table_size() const;
  double operator()(double a, double b) const;
  // Bounds of u over marks in [mark_lo, mark_hi].
  double lower_bound(double mark_lo, double mark_hi) const;
  double upper_bound(double mark_lo, double mark_hi) const;
  void validate(double mark_lo, double mark_hi) const;
};

enum class Normalization {
  kLazy,          // P(i->j) = c_ij / pi_inf(i), residual mass on the self-loop
  kRenormalized,  // P(i->j) = c_ij / pi_rho(i), no self-loop
};

struct WalkConfig {
  double lambda = 0.5;
  int rho = kRhoInfinite;
  PotentialSpec u;
  double tail_tol = 1e-8;
  Normalization normalization = Normalization::kLazy;

  bool infinite() const { return rho == kRhoInfinite; }
  void validate() const;
};

std::string rho_to_string(int rho);
int parse_rho(const std::string& s);

// Per-site law of one step, over offsets -radius..radius.
struct JumpDistribution {
  std::int64_t site = 0;
  int radius = 0;                 // max |offset|
  int cutoff = 0;                 // s* used to normalize the infinite sum
  std::vector<double> prob;       // prob[m + radius] = P(site -> site + m)
  double self_loop = 0.0;
  double normalizer_rate = 0.0;   // sum of jump rates used in the denominator
  double holding_rate = 0.0;      // r_i = sum over |m| <= s* of rates

  double p(int offset) const {
    return (offset < -radius || offset > radius) ? 0.0 : prob[static_cast<std::size_t>(offset + radius)];
  }
  double total() const;
  double drift() const;
  // Sum over |m| > s of P(site -> site + m).
  double tail_mass(int s) const;
};

// Kernel constants and site-local evaluations for a (config, spec) pair.
// Every function is pure over an immutable environment.
class Kernel {
 public:
  Kernel(const WalkConfig& cfg, const EnvironmentSpec& spec);

  const WalkConfig& config() const { return cfg_; }
  double lambda() const { return cfg_.lambda; }
  double d() const { return d_; }
  double u_min() const { return u_min_; }
  double u_max() const { return u_max_; }
  // e^{u_max-u_min} / (1 - e^{-d(1-lambda)})
  double K_pi() const { return k_pi_; }
  int s_star() const { return s_star_; }
  // Largest offset the walk can take: min(rho, s*).
  int reach() const { return reach_; }
  // Sites that must be materialized around i: max(reach, s*) for normalization.
  int support() const { return s_star_; }

  double u(const Environment& env, std::int64_t i, std::int64_t j) const;
  // e^{lambda(x_j-x_i) - |x_j-x_i| + u(E_i,E_j)}; 0 for i == j.
  double jump_rate(const Environment& env, std::int64_t i, std::int64_t j) const;
  // e^{lambda(x_i+x_j) - |x_j-x_i| + u}; symmetric; 0 for i == j.
  double conductance(const Environment& env, std::int64_t i, std::int64_t j) const;
  // sum over 0<|j-i|<=rho of c_ij; rho = kRhoInfinite truncates at s*.
  double pi(const Environment& env, std::int64_t i, int rho) const;
  double pi_inf(const Environment& env, std::int64_t i) const { return pi(env, i, kRhoInfinite); }
  // r_i = pi_inf(i) e^{-2 lambda x_i}, evaluated without the exponential factor.
  double holding_rate(const Environment& env, std::int64_t i) const;
  JumpDistribution jump_distribution(const Environment& env, std::int64_t i) const;

  // Fills rates[m + s*] = jump_rate(i, i+m) for |m| <= s*; O(s*).
  void local_rates(const Environment& env, std::int64_t i, double* rates) const;
  // One-step law at i: prob[m + reach()] for |m| <= reach(), self-loop at
  // m = 0. scratch needs 2 s* + 1 slots. Returns the holding rate r_i.
  double site_law(const Environment& env, std::int64_t i, double* prob, double* scratch,
                  double* normalizer_rate = nullptr) const;
  // Second half of site_law for rates laid out as local_rates fills them.
  double law_from_rates(const double* rates, double* prob, double* normalizer_rate = nullptr) const;
  // For a u that ignores the marks, every rate is e^{u0} times a product of
  // per-spacing factors: e^{(lambda-1) Z} to the right, e^{-(lambda+1) Z} to the left.
  bool mark_free() const { return zero_u_; }
  double u0() const { return zero_u_ ? cfg_.u(0.0, 0.0) : 0.0; }
  void spacing_factors(double z, double& right, double& left) const;
  void require(const Environment& env, std::int64_t i) const;

 private:
  WalkConfig cfg_;
  double d_;
  double u_min_, u_max_;
  double k_pi_;
  int s_star_;
  int reach_;
  bool zero_u_;
};

}  // namespace mottrw
