#include "mottrw/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mottrw {

PotentialSpec PotentialSpec::mott(double beta) {
  PotentialSpec p;
  p.kind = PotentialKind::kMott;
  p.beta = beta;
  return p;
}

PotentialSpec PotentialSpec::custom_table(double lo, double hi, std::vector<double> values) {
  PotentialSpec p;
  p.kind = PotentialKind::kTable;
  p.grid_lo = lo;
  p.grid_hi = hi;
  p.table = std::move(values);
  return p;
}

std::size_t PotentialSpec::table_size() const {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(table.size()))));
  return n;
}

double PotentialSpec::operator()(double a, double b) const {
  switch (kind) {
    case PotentialKind::kZero: return 0.0;
    case PotentialKind::kMott: return -beta * (std::fabs(a) + std::fabs(b) + std::fabs(a - b));
    case PotentialKind::kTable: break;
  }
  if (a < grid_lo || a > grid_hi || b < grid_lo || b > grid_hi)
    throw std::out_of_range("potential table lookup outside the declared mark range");
  const std::size_t n = table_size();
  if (n == 1) return table[0];
  const double h = (grid_hi - grid_lo) / static_cast<double>(n - 1);
  auto cell = [&](double v, std::size_t& idx, double& frac) {
    const double s = (v - grid_lo) / h;
    idx = std::min(static_cast<std::size_t>(s), n - 2);
    frac = s - static_cast<double>(idx);
  };
  std::size_t ia, ib;
  double fa, fb;
  cell(a, ia, fa);
  cell(b, ib, fb);
  auto at = [&](std::size_t r, std::size_t c) { return table[r * n + c]; };
  return (1 - fa) * (1 - fb) * at(ia, ib) + fa * (1 - fb) * at(ia + 1, ib) +
         (1 - fa) * fb * at(ia, ib + 1) + fa * fb * at(ia + 1, ib + 1);
}

namespace {

// Range of |a| + |b| + |a - b| over a, b in [lo, hi].
std::pair<double, double> mott_span(double lo, double hi) {
  const double smallest = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::fabs(lo), std::fabs(hi));
  double largest = 2.0 * std::max(std::fabs(lo), std::fabs(hi));
  if (lo < 0.0 && hi > 0.0) largest = 2.0 * (std::fabs(lo) + std::fabs(hi));
  return {2.0 * smallest, largest};
}

}  // namespace

double PotentialSpec::lower_bound(double mark_lo, double mark_hi) const {
  switch (kind) {
    case PotentialKind::kZero: return 0.0;
    case PotentialKind::kMott: return -beta * mott_span(mark_lo, mark_hi).second;
    case PotentialKind::kTable: return *std::min_element(table.begin(), table.end());
  }
  return 0.0;
}

double PotentialSpec::upper_bound(double mark_lo, double mark_hi) const {
  switch (kind) {
    case PotentialKind::kZero: return 0.0;
    case PotentialKind::kMott: return -beta * mott_span(mark_lo, mark_hi).first;
    case PotentialKind::kTable: return *std::max_element(table.begin(), table.end());
  }
  return 0.0;
}

void PotentialSpec::validate(double mark_lo, double mark_hi) const {
  switch (kind) {
    case PotentialKind::kZero: return;
    case PotentialKind::kMott:
      if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("mott potential: beta must be >= 0");
      return;
    case PotentialKind::kTable: break;
  }
  const std::size_t n = table_size();
  if (n == 0 || n * n != table.size())
    throw std::invalid_argument("potential table must be a non-empty square grid");
  if (n > 1 && !(grid_hi > grid_lo)) throw std::invalid_argument("potential table: grid_hi must exceed grid_lo");
  if (mark_lo < grid_lo || mark_hi > grid_hi)
    throw std::invalid_argument("potential table does not cover the mark range");
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      if (!std::isfinite(table[r * n + c])) throw std::invalid_argument("potential table: non-finite entry");
      if (table[r * n + c] != table[c * n + r]) throw std::invalid_argument("potential table must be symmetric");
    }
}

void WalkConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in [0, 1)");
  if (rho < 1) throw std::invalid_argument("rho must be a positive integer or inf");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw std::invalid_argument("tail_tol must lie in (0, 1)");
}

std::string rho_to_string(int rho) { return rho == kRhoInfinite ? "inf" : std::to_string(rho); }

int parse_rho(const std::string& s) {
  if (s == "inf" || s == "infinity") return kRhoInfinite;
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("rho must be a positive integer or 'inf', got '" + s + "'");
  }
  if (pos != s.size() || v < 1 || v > 1000000)
    throw std::invalid_argument("rho must be a positive integer or 'inf', got '" + s + "'");
  return static_cast<int>(v);
}

double JumpDistribution::total() const {
  double s = 0.0;
  for (double v : prob) s += v;
  return s;
}

double JumpDistribution::drift() const {
  double s = 0.0;
  for (int m = -radius; m <= radius; ++m) s += m * prob[static_cast<std::size_t>(m + radius)];
  return s;
}

double JumpDistribution::tail_mass(int s) const {
  double t = 0.0;
  for (int m = radius; m > s; --m)
    t += prob[static_cast<std::size_t>(m + radius)] + prob[static_cast<std::size_t>(radius - m)];
  return t;
}

Kernel::Kernel(const WalkConfig& cfg, const EnvironmentSpec& spec) : cfg_(cfg) {
  cfg_.validate();
  spec.validate();
  cfg_.u.validate(spec.mark_min(), spec.mark_max());
  d_ = spec.floor();
  u_min_ = cfg_.u.lower_bound(spec.mark_min(), spec.mark_max());
  u_max_ = cfg_.u.upper_bound(spec.mark_min(), spec.mark_max());
  const double decay = d_ * (1.0 - cfg_.lambda);
  k_pi_ = std::exp(u_max_ - u_min_) / (1.0 - std::exp(-decay));
  s_star_ = std::max(1, static_cast<int>(std::ceil((std::log(k_pi_) - std::log(cfg_.tail_tol)) / decay)));
  reach_ = std::min(cfg_.rho, s_star_);
  zero_u_ = cfg_.u.kind == PotentialKind::kZero ||
            (spec.marks == MarkLaw::kConstant && cfg_.u.kind == PotentialKind::kMott);
}

void Kernel::require(const Environment& env, std::int64_t i) const {
  const IndexRange w = env.window();
  if (i - s_star_ < w.lo) throw OutOfWindowError(i - s_star_, w);
  if (i + s_star_ > w.hi) throw OutOfWindowError(i + s_star_, w);
}

double Kernel::u(const Environment& env, std::int64_t i, std::int64_t j) const {
  if (zero_u_) return cfg_.u(0.0, 0.0);
  return cfg_.u(env.E(i), env.E(j));
}

double Kernel::jump_rate(const Environment& env, std::int64_t i, std::int64_t j) const {
  if (i == j) return 0.0;
  const double dx = env.x(j) - env.x(i);
  return std::exp(cfg_.lambda * dx - std::fabs(dx) + u(env, i, j));
}

double Kernel::conductance(const Environment& env, std::int64_t i, std::int64_t j) const {
  if (i == j) return 0.0;
  const double xi = env.x(i), xj = env.x(j);
  return std::exp(cfg_.lambda * (xi + xj) - std::fabs(xj - xi) + u(env, i, j));
}

double Kernel::pi(const Environment& env, std::int64_t i, int rho) const {
  const int r = std::min(rho, s_star_);
  double s = 0.0;
  for (int m = r; m >= 1; --m) s += conductance(env, i, i + m) + conductance(env, i, i - m);
  return s;
}

void Kernel::local_rates(const Environment& env, std::int64_t i, double* rates) const {
  require(env, i);
  const double xi = env.x_unchecked(i);
  const double lam = cfg_.lambda;
  const double ei = zero_u_ ? 0.0 : env.E_unchecked(i);
  const double u0 = zero_u_ ? cfg_.u(0.0, 0.0) : 0.0;
  rates[s_star_] = 0.0;
  for (int m = 1; m <= s_star_; ++m) {
    const double dr = env.x_unchecked(i + m) - xi;
    const double dl = xi - env.x_unchecked(i - m);
    double ur = u0, ul = u0;
    if (!zero_u_) {
      ur = cfg_.u(ei, env.E_unchecked(i + m));
      ul = cfg_.u(ei, env.E_unchecked(i - m));
    }
    rates[s_star_ + m] = std::exp((lam - 1.0) * dr + ur);
    rates[s_star_ - m] = std::exp(-(lam + 1.0) * dl + ul);
  }
}

double Kernel::holding_rate(const Environment& env, std::int64_t i) const {
  std::vector<double> rates(static_cast<std::size_t>(2 * s_star_ + 1));
  local_rates(env, i, rates.data());
  double s = 0.0;
  // Small terms first.
  for (int m = s_star_; m >= 1; --m)
    s += rates[static_cast<std::size_t>(s_star_ + m)] + rates[static_cast<std::size_t>(s_star_ - m)];
  return s;
}

double Kernel::site_law(const Environment& env, std::int64_t i, double* prob, double* scratch,
                        double* normalizer_rate) const {
  local_rates(env, i, scratch);
  return law_from_rates(scratch, prob, normalizer_rate);
}

void Kernel::spacing_factors(double z, double& right, double& left) const {
  right = std::exp((cfg_.lambda - 1.0) * z);
  left = std::exp(-(cfg_.lambda + 1.0) * z);
}

double Kernel::law_from_rates(const double* rates, double* prob, double* normalizer_rate) const {
  auto rate = [&](int m) { return rates[s_star_ + m]; };
  double r_inf = 0.0, r_reach = 0.0;
  // Small terms first.
  for (int m = s_star_; m >= 1; --m) {
    const double pair = rate(m) + rate(-m);
    r_inf += pair;
    if (m <= reach_) r_reach += pair;
  }
  const bool lazy = cfg_.normalization == Normalization::kLazy && !cfg_.infinite();
  const double denom = lazy ? r_inf : r_reach;
  if (normalizer_rate) *normalizer_rate = denom;
  double moved = 0.0;
  for (int m = reach_; m >= 1; --m) {
    const double pr = rate(m) / denom, pl = rate(-m) / denom;
    prob[reach_ + m] = pr;
    prob[reach_ - m] = pl;
    moved += pr + pl;
  }
  prob[reach_] = lazy ? std::max(0.0, 1.0 - moved) : 0.0;
  return r_inf;
}

JumpDistribution Kernel::jump_distribution(const Environment& env, std::int64_t i) const {
  std::vector<double> scratch(static_cast<std::size_t>(2 * s_star_ + 1));
  JumpDistribution jd;
  jd.site = i;
  jd.radius = reach_;
  jd.cutoff = s_star_;
  jd.prob.assign(static_cast<std::size_t>(2 * reach_ + 1), 0.0);
  jd.holding_rate = site_law(env, i, jd.prob.data(), scratch.data(), &jd.normalizer_rate);
  jd.self_loop = jd.prob[static_cast<std::size_t>(reach_)];
  return jd;
}

}  // namespace mottrw
