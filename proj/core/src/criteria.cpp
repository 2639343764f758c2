#include "mottrw/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mottrw/stats.hpp"

namespace mottrw {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::kBallistic: return "ballistic";
    case Regime::kSubballistic: return "subballistic";
    case Regime::kIndeterminate: return "indeterminate";
  }
  return "?";
}

std::string to_string(SpeedSign s) {
  switch (s) {
    case SpeedSign::kPositive: return "positive";
    case SpeedSign::kZero: return "zero";
    case SpeedSign::kUnclear: return "unclear";
  }
  return "?";
}

double critical_lambda(const EnvironmentSpec& spec) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double c = nan;
  switch (spec.family) {
    case Family::kHeavyTailSorpresa: c = 2.0 - spec.gamma_tail; break;
    case Family::kRenewalIid:
      if (spec.renewal_law == RenewalLaw::kExponential) c = 1.0 - spec.mu;
      break;
    case Family::kMarkovVelocino: c = 1.0 - std::log((1.0 - spec.p) / spec.p) / spec.gamma_mc; break;
    case Family::kConstantLattice: break;
  }
  return (c > 0.0 && c < 1.0) ? c : nan;
}

Classification classify_analytic(const EnvironmentSpec& spec, double lambda) {
  spec.validate();
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("classify_analytic: lambda must lie in (0, 1)");
  Classification c;
  std::ostringstream why;
  switch (spec.family) {
    case Family::kConstantLattice:
      c.moment_finite = true;
      why << "bounded spacing";
      break;
    case Family::kRenewalIid:
      if (spec.renewal_law == RenewalLaw::kUniform) {
        c.moment_finite = true;
        why << "bounded spacing";
      } else {
        c.moment_finite = spec.mu > 1.0 - lambda;
        why << "exponential moment finite iff mu > 1 - lambda (" << spec.mu << " vs " << 1.0 - lambda << ")";
      }
      break;
    case Family::kHeavyTailSorpresa:
      c.moment_finite = lambda >= 2.0 - spec.gamma_tail;
      why << "exponential moment finite iff lambda >= 2 - gamma_tail = " << 2.0 - spec.gamma_tail;
      break;
    case Family::kMarkovVelocino: {
      const double bound = 1.0 - std::log((1.0 - spec.p) / spec.p) / spec.gamma_mc;
      c.moment_finite = lambda > bound;
      why << "exponential moment finite iff lambda > 1 - log((1-p)/p)/gamma_mc = " << bound;
      break;
    }
  }
  if (c.moment_finite) {
    c.regime = Regime::kBallistic;
  } else if (spec.iid()) {
    c.regime = Regime::kSubballistic;
    why << "; i.i.d. spacings with infinite moment";
  } else {
    c.regime = Regime::kIndeterminate;
    why << "; moment infinite yet velocity positive is possible";
  }
  c.rationale = why.str();
  return c;
}

NNCriterion nn_criterion(const EnvironmentSpec& spec, double lambda, std::size_t samples, int truncation,
                         std::uint64_t seed) {
  if (truncation < 2 || samples < 100) throw std::invalid_argument("nn_criterion: need I >= 2 and 100 samples");
  const std::size_t I = static_cast<std::size_t>(truncation);
  std::vector<double> sum(I, 0.0), sq(I, 0.0), first(samples);
  NNCriterion out;
  for (std::size_t n = samples; n >= 1; n /= 10) out.sizes.insert(out.sizes.begin(), n);
  while (!out.sizes.empty() && out.sizes.front() < 100) out.sizes.erase(out.sizes.begin());
  std::size_t next = 0;
  double acc1 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Environment env(spec, mix_key(seed, s, 0xC0), {-truncation - 1, 1});
    const double z0 = env.Z(0);
    double inner = 0.0;
    for (std::size_t i = 1; i <= I; ++i) {
      const double zi = env.Z(-static_cast<std::int64_t>(i));
      const double t = std::exp((1.0 - lambda) * z0 - (1.0 + lambda) * zi - inner);
      sum[i - 1] += t;
      sq[i - 1] += t * t;
      inner += 2.0 * lambda * zi;
      if (i == 1) first[s] = t;
    }
    acc1 += first[s];
    while (next < out.sizes.size() && out.sizes[next] == s + 1) {
      out.first_term_running.push_back(acc1 / static_cast<double>(s + 1));
      ++next;
    }
  }
  const double n = static_cast<double>(samples);
  double partial = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    const double m = sum[i] / n;
    out.terms.push_back(m);
    out.term_stderr.push_back(std::sqrt(std::max(0.0, sq[i] / n - m * m) / (n - 1.0)));
    partial += m;
    out.partial_sums.push_back(partial);
  }
  out.tail_index = hill_tail_index(first, std::max<std::size_t>(10, samples / 100));
  const std::size_t h = I / 2;
  out.tail_ratio = std::pow(out.terms[I - 1] / out.terms[h - 1], 1.0 / static_cast<double>(I - h));
  const auto& r = out.first_term_running;
  for (std::size_t k = r.size() >= 3 ? r.size() - 2 : 1; k < r.size(); ++k)
    out.running_growth = std::max(out.running_growth, std::abs(r[k] / r[k - 1] - 1.0));
  out.first_term_stable = r.size() >= 2 && out.running_growth < kRunningTolerance;
  out.summable = out.first_term_stable && out.tail_ratio < 1.0;
  out.verdict = out.summable ? Regime::kBallistic : Regime::kSubballistic;
  return out;
}

SpeedTrend speed_trend(const std::vector<VelocityEstimate>& profile) {
  if (profile.size() < 2) throw std::invalid_argument("speed_trend: need at least two horizons");
  std::vector<VelocityEstimate> p = profile;
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.steps < b.steps; });
  const VelocityEstimate& f = p.front();
  const VelocityEstimate& l = p.back();
  SpeedTrend t;
  const double decades = std::log10(static_cast<double>(l.steps) / static_cast<double>(f.steps));
  if (l.v > 0.0 && f.v > 0.0) {
    t.decay_per_decade = std::pow(f.v / l.v, 1.0 / decades);
    std::vector<double> lx, ly;
    for (const auto& e : p)
      if (e.v > 0.0) {
        lx.push_back(std::log(static_cast<double>(e.steps)));
        ly.push_back(std::log(e.v));
      }
    if (lx.size() >= 2) t.loglog_slope = linear_fit(lx, ly).slope;
  } else {
    t.decay_per_decade = std::numeric_limits<double>::infinity();
    t.loglog_slope = -std::numeric_limits<double>::infinity();
  }
  t.subballistic_signature = t.decay_per_decade >= 2.0 && l.v < 0.02;
  bool stable = true;
  for (const auto& e : p)
    if (std::fabs(e.v - l.v) > 3.0 * std::hypot(e.stderr_, l.stderr_)) stable = false;
  t.positive_signature = l.v > 3.0 * l.stderr_ && stable;
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (!(p[i + 1].v < p[i].v)) monotone = false;
  t.significant_decrease = monotone && f.v - l.v > 3.0 * std::hypot(f.stderr_, l.stderr_);
  if (t.positive_signature)
    t.sign = SpeedSign::kPositive;
  else if (t.subballistic_signature || t.significant_decrease)
    t.sign = SpeedSign::kZero;
  return t;
}

std::vector<double> lambda_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("lambda grid: need lo <= hi and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g;
  for (std::size_t k = 0; k < n; ++k) g.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
  return g;
}

PhaseSweep phase_sweep(const EnvironmentSpec& spec, const WalkConfig& base, const std::vector<double>& lambdas,
                       const std::vector<std::int64_t>& horizons, std::size_t replicas, std::uint64_t seed,
                       unsigned threads) {
  std::vector<std::int64_t> hs = horizons;
  std::sort(hs.begin(), hs.end());
  PhaseSweep sw;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    PhasePoint pt;
    pt.spec = spec;
    pt.lambda = lambdas[i];
    pt.rho = base.rho;
    WalkConfig cfg = base;
    cfg.lambda = lambdas[i];
    pt.analytic = classify_analytic(spec, lambdas[i]);
    pt.profile = velocity_profile(spec, cfg, replicas, hs, mix_key(seed, i), threads);
    pt.trend = speed_trend(pt.profile);
    if (pt.analytic.regime == Regime::kBallistic) pt.consistent = pt.trend.positive_signature;
    if (pt.analytic.regime == Regime::kSubballistic) pt.consistent = pt.trend.sign == SpeedSign::kZero;
    sw.points.push_back(std::move(pt));
  }
  for (std::size_t i = 0; i + 1 < sw.points.size(); ++i) {
    const PhasePoint& a = sw.points[i];
    const PhasePoint& b = sw.points[i + 1];
    if (a.analytic.regime == Regime::kSubballistic && b.analytic.regime == Regime::kBallistic &&
        a.trend.sign == SpeedSign::kZero && b.profile.back().v > 0.05) {
      sw.discontinuity = true;
      sw.boundary_lo = a.lambda;
      sw.boundary_hi = b.lambda;
    }
  }
  return sw;
}

}  // namespace mottrw
