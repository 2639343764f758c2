#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mottrw/rng.hpp"

namespace mottrw {

enum class Family { kConstantLattice, kRenewalIid, kMarkovVelocino, kHeavyTailSorpresa };
enum class RenewalLaw { kExponential, kUniform };
enum class MarkLaw { kConstant, kUniform };

std::string to_string(Family f);
std::string to_string(RenewalLaw l);
std::string to_string(MarkLaw m);

struct EnvironmentSpec {
  Family family = Family::kConstantLattice;
  double d = 1.0;          // lattice spacing, or renewal floor
  RenewalLaw renewal_law = RenewalLaw::kExponential;
  double mu = 2.0;         // rate of Z - d (exponential law)
  double width = 1.0;      // Z - d ~ U[0, width] (uniform law)
  double p = 0.3;          // markov_velocino up-probability
  double gamma_mc = 1.0;   // markov_velocino step
  double gamma_tail = 1.5; // heavy_tail_sorpresa exponent
  MarkLaw marks = MarkLaw::kConstant;
  double mark_amplitude = 0.0;

  static EnvironmentSpec constant_lattice(double d = 1.0);
  static EnvironmentSpec renewal_exponential(double d, double mu);
  static EnvironmentSpec renewal_uniform(double d, double width);
  static EnvironmentSpec markov_velocino(double p, double gamma_mc);
  static EnvironmentSpec heavy_tail(double gamma_tail);
  EnvironmentSpec with_uniform_marks(double amplitude) const;

  // Declared distance floor: Z_k >= floor() for every k.
  double floor() const;
  double mark_min() const { return marks == MarkLaw::kUniform ? -mark_amplitude : 0.0; }
  double mark_max() const { return marks == MarkLaw::kUniform ? mark_amplitude : 0.0; }
  bool iid() const { return family != Family::kMarkovVelocino; }

  // Throws std::invalid_argument with a descriptive message.
  void validate() const;
};

struct IndexRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool contains(std::int64_t k) const { return k >= lo && k <= hi; }
  bool covers(const IndexRange& o) const { return o.lo >= lo && o.hi <= hi; }
  std::int64_t size() const { return hi - lo + 1; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

class OutOfWindowError : public std::out_of_range {
 public:
  OutOfWindowError(std::int64_t index, IndexRange window);
  std::int64_t index() const { return index_; }

 private:
  std::int64_t index_;
};

// Sample from f(z) proportional to exp(-(g-1) z) / z^2 on [1, inf).
template <class G>
double sample_heavy_tail_z(double gamma_tail, G& gen) {
  const double rate = gamma_tail - 1.0;
  for (;;) {
    const double z = 1.0 + exponential(gen, rate);
    if (uniform01(gen) * z * z < 1.0) return z;
  }
}

class EnvironmentView;

// Two-sided marked point sequence materialized on a window [lo, hi].
// Z_k and E_k are stored for k in the window; x_k = sum of Z for k in
// [lo, hi + 1].
class Environment {
 public:
  Environment(EnvironmentSpec spec, std::uint64_t seed, IndexRange window);

  const EnvironmentSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  IndexRange window() const { return {-static_cast<std::int64_t>(left_z_.size()),
                                      static_cast<std::int64_t>(right_z_.size()) - 1}; }

  double Z(std::int64_t k) const {
    check(k);
    return k >= 0 ? right_z_[static_cast<std::size_t>(k)]
                  : left_z_[static_cast<std::size_t>(-k - 1)];
  }
  double E(std::int64_t k) const {
    check(k);
    if (!has_marks_) return 0.0;
    return k >= 0 ? right_e_[static_cast<std::size_t>(k)]
                  : left_e_[static_cast<std::size_t>(-k - 1)];
  }
  // Valid for k in [lo, hi + 1].
  double x(std::int64_t k) const {
    if (k >= 0) {
      if (k > static_cast<std::int64_t>(right_z_.size())) throw OutOfWindowError(k, window());
      return right_x_[static_cast<std::size_t>(k)];
    }
    if (-k > static_cast<std::int64_t>(left_z_.size())) throw OutOfWindowError(k, window());
    return left_x_[static_cast<std::size_t>(-k - 1)];
  }

  // Unchecked accessors for inner loops; caller guarantees the window.
  double x_unchecked(std::int64_t k) const {
    return k >= 0 ? right_x_[static_cast<std::size_t>(k)]
                  : left_x_[static_cast<std::size_t>(-k - 1)];
  }
  double E_unchecked(std::int64_t k) const {
    if (!has_marks_) return 0.0;
    return k >= 0 ? right_e_[static_cast<std::size_t>(k)]
                  : left_e_[static_cast<std::size_t>(-k - 1)];
  }
  bool has_marks() const { return has_marks_; }

  bool contains(std::int64_t k) const { return window().contains(k); }

  // new_range must contain the current window.
  void extend_window(IndexRange new_range);
  // Grows the window to the hull of the current window and r.
  void ensure(IndexRange r);

  EnvironmentView shifted(std::int64_t ell) const;

 private:
  void check(std::int64_t k) const {
    if (k >= static_cast<std::int64_t>(right_z_.size()) ||
        -k > static_cast<std::int64_t>(left_z_.size()))
      throw OutOfWindowError(k, window());
  }
  void grow_right(std::int64_t hi);
  void grow_left(std::int64_t lo);
  double draw_iid_z(std::int64_t k) const;
  double draw_mark(std::int64_t k) const;
  double markov_next(double z, std::int64_t k) const;

  EnvironmentSpec spec_;
  std::uint64_t seed_;
  bool has_marks_;
  std::vector<double> right_z_, right_e_, right_x_;  // index k
  std::vector<double> left_z_, left_e_, left_x_;     // index -k-1
};

// Read-only shifted view: Z'_k = Z_{k+ell}, x'_k = x_{k+ell} - x_ell.
class EnvironmentView {
 public:
  EnvironmentView(const Environment& env, std::int64_t ell)
      : env_(&env), ell_(ell), origin_(env.x(ell)) {}
  double Z(std::int64_t k) const { return env_->Z(k + ell_); }
  double E(std::int64_t k) const { return env_->E(k + ell_); }
  double x(std::int64_t k) const { return env_->x(k + ell_) - origin_; }
  std::int64_t offset() const { return ell_; }
  IndexRange window() const {
    const IndexRange w = env_->window();
    return {w.lo - ell_, w.hi - ell_};
  }
  EnvironmentView shifted(std::int64_t b) const { return {*env_, ell_ + b}; }
  const Environment& base() const { return *env_; }

 private:
  const Environment* env_;
  std::int64_t ell_;
  double origin_;
};

// Stationary law of Z_0 / gamma_mc for markov_velocino: P(K = k), k >= 1.
double markov_stationary_probability(double p, std::int64_t k);

// E[Z_0] under the family law.
double mean_spacing(const EnvironmentSpec& spec);

}  // namespace mottrw
