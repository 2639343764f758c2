#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"

namespace mottrw {

// Finite union of points and half-lines of Z.
struct SiteSet {
  std::vector<std::int64_t> points;
  std::optional<std::int64_t> left;   // (-inf, left]
  std::optional<std::int64_t> right;  // [right, inf)

  static SiteSet point(std::int64_t k) { return SiteSet{{k}, {}, {}}; }
  static SiteSet left_of(std::int64_t a) { return SiteSet{{}, a, {}}; }
  static SiteSet right_of(std::int64_t b) { return SiteSet{{}, {}, b}; }
  static SiteSet outside(std::int64_t a, std::int64_t b) { return SiteSet{{}, a, b}; }
  SiteSet unite(const SiteSet& o) const;
  bool contains(std::int64_t k) const;
  bool empty() const { return points.empty() && !left && !right; }
  std::string describe() const;
};

struct NetworkQuery {
  SiteSet A, B;
  int rho = 1;
  std::int64_t half_width = 32;       // initial window half-width when adaptive
  double tol = 1e-12;                 // relative stopping tolerance
  std::int64_t max_half_width = 1 << 15;
};

struct ConductanceResult {
  double value = 0.0;
  double previous = 0.0;              // value at the previous window (adaptive only)
  std::int64_t half_width = 0;
  IndexRange window;
  double residual = 0.0;
  bool exact_window = false;          // complement of A u B is finite
  int bandwidth = 0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last, double previous)
      : std::runtime_error(what), last_(last), previous_(previous) {}
  double last() const { return last_; }
  double previous() const { return previous_; }

 private:
  double last_, previous_;
};

// Minimum Dirichlet energy with f = 0 on A and f = 1 on B over the
// rho-range network (bandwidth min(rho, s*)). Conductances are evaluated
// relative to a reference site and rescaled at the end.
ConductanceResult eff_conductance(Environment& env, const Kernel& kernel, const NetworkQuery& q);

// One solve on the fixed window [lo, hi]: nodes outside are deleted.
ConductanceResult eff_conductance_window(Environment& env, const Kernel& kernel, const SiteSet& A,
                                         const SiteSet& B, int rho, IndexRange window);

// Nearest-neighbour chain with bond conductances c[j - lo] = c_{j,j+1}.
struct NearestNeighborChain {
  std::int64_t lo = 0;
  std::vector<double> bonds;
  std::int64_t hi() const { return lo + static_cast<std::int64_t>(bonds.size()); }
  double c(std::int64_t j) const { return bonds.at(static_cast<std::size_t>(j - lo)); }
  double resistance(std::int64_t a, std::int64_t b) const;  // sum_{a <= j < b} 1/c_{j,j+1}
};

NearestNeighborChain nn_chain(Environment& env, const Kernel& kernel, IndexRange sites);

// Series/parallel reduction of the nearest-neighbour network for finite
// descriptions of A and B; dangling branches carry no current.
double eff_conductance_nn(const NearestNeighborChain& chain, const SiteSet& A, const SiteSet& B);
double eff_conductance_nn(Environment& env, const Kernel& kernel, const SiteSet& A, const SiteSet& B);

struct TailSums {
  std::vector<double> partial;  // partial[n] = sum of the first n + 1 terms
  std::int64_t terms = 0;       // adaptive J
  double limit = 0.0;
  bool stabilized = false;
};

// Partial sums of sum_{j >= k} 1/c_{j,j+1}, stopping once the relative
// increment drops below rel_tol.
TailSums resistance_tail(Environment& env, const Kernel& kernel, std::int64_t k, double rel_tol = 1e-8,
                         std::int64_t budget = 1 << 20);
// Partial sums of sum_{k - n <= j <= k - 1} 1/c_{j,j+1}, n = 1..count.
std::vector<double> left_resistance_partial(Environment& env, const Kernel& kernel, std::int64_t k,
                                            std::int64_t count);

// lim_N C^1(k <-> (-inf, k-N] u [k+N, inf)) by the two one-sided series.
double eff_conductance_nn_limit(Environment& env, const Kernel& kernel, std::int64_t k,
                                double rel_tol = 1e-13);

struct EscapeResult {
  double value = 0.0;
  double conductance = 0.0;
  double normalizer = 0.0;  // pi used in the denominator
  std::int64_t N = 0;
  double previous = 0.0;
};

// C^rho(i <-> (-inf, i-N] u [i+N, inf)) / pi(i), with N doubled until the
// relative change is below tol. The denominator is pi_inf for the lazy walk
// and pi_rho for the renormalized one.
EscapeResult escape_probability(Environment& env, const Kernel& kernel, std::int64_t i, int rho,
                                double tol = 1e-10, std::int64_t n0 = 8, std::int64_t n_max = 1 << 14);
EscapeResult escape_probability_at(Environment& env, const Kernel& kernel, std::int64_t i, int rho,
                                   std::int64_t N);

// P_x(H_M < H_N) for the nearest-neighbour walk.
double nn_hitting_probability(const NearestNeighborChain& chain, std::int64_t x, std::int64_t M,
                              std::int64_t N);
double nn_hitting_probability(Environment& env, const Kernel& kernel, std::int64_t x, std::int64_t M,
                              std::int64_t N);

// Expected visits to each site of [lo, level] before the walk first exceeds
// `level`, started at `start`, by a Green's-function solve. Jumps below `lo`
// are folded into the self-loop (reflection); choose lo far to the left.
std::vector<double> expected_visits_exact(Environment& env, const Kernel& kernel, std::int64_t start,
                                          std::int64_t lo, std::int64_t level);

struct CalibrationConstants {
  double K_eff = 1.0;   // max C^rho / C^1
  double K_pi = 1.0;    // max pi_inf / pi_1 (analytic bound kept separately)
  double K_tail = 1.0;  // max tail(s) e^{d s (1 - lambda)}
  double K_0 = 1.0;     // max E[N(k)] / g-structure(k)
  std::size_t samples = 0;
  double max_ratio = 0.0;
  std::string note;
};

// Empirical maxima over n_env environments of the family (u and lambda from
// cfg), with points/offsets near the origin. K_0 uses expected_visits_exact.
CalibrationConstants calibrate_constants(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t n_env,
                                         std::uint64_t seed);

// pi^1(k) * sum_{j >= 0} e^{-2 lambda x_j + (1 - lambda)(x_{j+1} - x_j)}, the
// shape of the visit bound without its constant.
double g_structure(Environment& env, const Kernel& kernel, std::int64_t k, double rel_tol = 1e-12);

}  // namespace mottrw
