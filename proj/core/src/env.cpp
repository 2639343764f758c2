#include "mottrw/env.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <sstream>

namespace mottrw {

namespace {

// Stream tags for index-keyed draws.
constexpr std::uint64_t kStreamZ = 1;
constexpr std::uint64_t kStreamE = 2;

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::kConstantLattice: return "constant_lattice";
    case Family::kRenewalIid: return "renewal_iid";
    case Family::kMarkovVelocino: return "markov_velocino";
    case Family::kHeavyTailSorpresa: return "heavy_tail_sorpresa";
  }
  return "?";
}

std::string to_string(RenewalLaw l) {
  return l == RenewalLaw::kExponential ? "exponential" : "uniform";
}

std::string to_string(MarkLaw m) { return m == MarkLaw::kConstant ? "constant" : "uniform"; }

EnvironmentSpec EnvironmentSpec::constant_lattice(double d) {
  EnvironmentSpec s;
  s.family = Family::kConstantLattice;
  s.d = d;
  return s;
}

EnvironmentSpec EnvironmentSpec::renewal_exponential(double d, double mu) {
  EnvironmentSpec s;
  s.family = Family::kRenewalIid;
  s.renewal_law = RenewalLaw::kExponential;
  s.d = d;
  s.mu = mu;
  return s;
}

EnvironmentSpec EnvironmentSpec::renewal_uniform(double d, double width) {
  EnvironmentSpec s;
  s.family = Family::kRenewalIid;
  s.renewal_law = RenewalLaw::kUniform;
  s.d = d;
  s.width = width;
  return s;
}

EnvironmentSpec EnvironmentSpec::markov_velocino(double p, double gamma_mc) {
  EnvironmentSpec s;
  s.family = Family::kMarkovVelocino;
  s.p = p;
  s.gamma_mc = gamma_mc;
  return s;
}

EnvironmentSpec EnvironmentSpec::heavy_tail(double gamma_tail) {
  EnvironmentSpec s;
  s.family = Family::kHeavyTailSorpresa;
  s.gamma_tail = gamma_tail;
  return s;
}

EnvironmentSpec EnvironmentSpec::with_uniform_marks(double amplitude) const {
  EnvironmentSpec s = *this;
  s.marks = MarkLaw::kUniform;
  s.mark_amplitude = amplitude;
  return s;
}

double EnvironmentSpec::floor() const {
  switch (family) {
    case Family::kConstantLattice:
    case Family::kRenewalIid: return d;
    case Family::kMarkovVelocino: return gamma_mc;
    case Family::kHeavyTailSorpresa: return 1.0;
  }
  return d;
}

void EnvironmentSpec::validate() const {
  switch (family) {
    case Family::kConstantLattice:
      if (!(d > 0.0) || !std::isfinite(d)) invalid("constant_lattice: spacing d must be > 0");
      break;
    case Family::kRenewalIid:
      if (!(d > 0.0) || !std::isfinite(d)) invalid("renewal_iid: floor d must be > 0");
      if (renewal_law == RenewalLaw::kExponential && (!(mu > 0.0) || !std::isfinite(mu)))
        invalid("renewal_iid: exponential rate mu must be > 0");
      if (renewal_law == RenewalLaw::kUniform && (!(width >= 0.0) || !std::isfinite(width)))
        invalid("renewal_iid: uniform width must be >= 0");
      break;
    case Family::kMarkovVelocino:
      if (!(p > 0.0 && p < 0.5)) invalid("markov_velocino: p must lie in (0, 1/2)");
      if (!(gamma_mc >= 1.0) || !std::isfinite(gamma_mc))
        invalid("markov_velocino: gamma_mc must be >= 1");
      break;
    case Family::kHeavyTailSorpresa:
      if (!(gamma_tail > 1.0 && gamma_tail < 2.0))
        invalid("heavy_tail_sorpresa: gamma_tail must lie in (1, 2)");
      break;
  }
  if (marks == MarkLaw::kUniform && (!(mark_amplitude >= 0.0) || !std::isfinite(mark_amplitude)))
    invalid("marks: uniform amplitude A must be >= 0");
}

OutOfWindowError::OutOfWindowError(std::int64_t index, IndexRange window)
    : std::out_of_range([&] {
        std::ostringstream os;
        os << "index " << index << " outside materialized window [" << window.lo << ", "
           << window.hi << "]";
        return os.str();
      }()),
      index_(index) {}

Environment::Environment(EnvironmentSpec spec, std::uint64_t seed, IndexRange window)
    : spec_(spec), seed_(seed), has_marks_(spec.marks == MarkLaw::kUniform) {
  spec_.validate();
  if (!window.contains(0)) invalid("environment window must contain 0");
  right_x_.push_back(0.0);
  grow_right(window.hi);
  grow_left(window.lo);
}

double Environment::draw_iid_z(std::int64_t k) const {
  KeyedStream g(mix_key(seed_, kStreamZ, static_cast<std::uint64_t>(k)));
  switch (spec_.family) {
    case Family::kConstantLattice: return spec_.d;
    case Family::kRenewalIid:
      if (spec_.renewal_law == RenewalLaw::kExponential) return spec_.d + exponential(g, spec_.mu);
      return spec_.d + spec_.width * uniform01(g);
    case Family::kHeavyTailSorpresa: return sample_heavy_tail_z(spec_.gamma_tail, g);
    case Family::kMarkovVelocino: break;
  }
  // Stationary draw: P(K = k) = (1 - r) r^{k-1}, r = p / (1 - p).
  const double r = spec_.p / (1.0 - spec_.p);
  const double u = uniform_open(g);
  const double kk = 1.0 + std::floor(std::log(u) / std::log(r));
  return spec_.gamma_mc * kk;
}

double Environment::markov_next(double z, std::int64_t k) const {
  KeyedStream g(mix_key(seed_, kStreamZ, static_cast<std::uint64_t>(k)));
  const double u = uniform01(g);
  const double level = std::round(z / spec_.gamma_mc);
  if (u < spec_.p) return spec_.gamma_mc * (level + 1.0);
  if (level >= 2.0) return spec_.gamma_mc * (level - 1.0);
  return z;
}

double Environment::draw_mark(std::int64_t k) const {
  KeyedStream g(mix_key(seed_, kStreamE, static_cast<std::uint64_t>(k)));
  return spec_.mark_amplitude * (2.0 * uniform01(g) - 1.0);
}

void Environment::grow_right(std::int64_t hi) {
  for (std::int64_t k = static_cast<std::int64_t>(right_z_.size()); k <= hi; ++k) {
    double z;
    if (spec_.family == Family::kMarkovVelocino && k > 0)
      z = markov_next(right_z_.back(), k);
    else
      z = draw_iid_z(k);
    right_z_.push_back(z);
    if (has_marks_) right_e_.push_back(draw_mark(k));
    right_x_.push_back(right_x_.back() + z);
  }
}

void Environment::grow_left(std::int64_t lo) {
  for (std::int64_t k = -static_cast<std::int64_t>(left_z_.size()) - 1; k >= lo; --k) {
    double z;
    if (spec_.family == Family::kMarkovVelocino) {
      const double next = left_z_.empty() ? right_z_.front() : left_z_.back();
      z = markov_next(next, k);
    } else {
      z = draw_iid_z(k);
    }
    left_z_.push_back(z);
    if (has_marks_) left_e_.push_back(draw_mark(k));
    const double xn = left_x_.empty() ? 0.0 : left_x_.back();
    left_x_.push_back(xn - z);
  }
}

void Environment::extend_window(IndexRange new_range) {
  if (!new_range.covers(window()))
    invalid("extend_window: new range must contain the current window");
  grow_right(new_range.hi);
  grow_left(new_range.lo);
}

void Environment::ensure(IndexRange r) {
  const IndexRange w = window();
  if (r.hi > w.hi) grow_right(r.hi);
  if (r.lo < w.lo) grow_left(r.lo);
}

EnvironmentView Environment::shifted(std::int64_t ell) const { return {*this, ell}; }

double markov_stationary_probability(double p, std::int64_t k) {
  if (k < 1) return 0.0;
  const double r = p / (1.0 - p);
  return (1.0 - r) * std::pow(r, static_cast<double>(k - 1));
}

double mean_spacing(const EnvironmentSpec& spec) {
  switch (spec.family) {
    case Family::kConstantLattice: return spec.d;
    case Family::kRenewalIid:
      return spec.renewal_law == RenewalLaw::kExponential ? spec.d + 1.0 / spec.mu
                                                          : spec.d + 0.5 * spec.width;
    case Family::kMarkovVelocino: {
      const double r = spec.p / (1.0 - spec.p);
      return spec.gamma_mc / (1.0 - r);
    }
    case Family::kHeavyTailSorpresa: {
      const double a = spec.gamma_tail - 1.0;
      boost::math::quadrature::exp_sinh<double> q;
      // Substitute z = 1 + t.
      const double mass = q.integrate([a](double t) {
        const double z = 1.0 + t;
        return std::exp(-a * z) / (z * z);
      });
      const double first = q.integrate([a](double t) {
        const double z = 1.0 + t;
        return std::exp(-a * z) / z;
      });
      return first / mass;
    }
  }
  return spec.d;
}

}  // namespace mottrw
