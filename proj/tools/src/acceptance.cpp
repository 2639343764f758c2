#include "mottrw/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mottrw/criteria.hpp"
#include "mottrw/env.hpp"
#include "mottrw/evm.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/network.hpp"
#include "mottrw/regen.hpp"
#include "mottrw/stats.hpp"
#include "mottrw/walk.hpp"

namespace mottrw::acceptance {
namespace {

bool full(const Options& o) { return o.suite == Suite::kFull; }

std::string fmt(double v, int prec = 5) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// Plain Gaussian elimination with partial pivoting; size is tiny.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// P_x(hit M before N) for the birth-death chain with the given bonds.
double absorbing_oracle(const NearestNeighborChain& ch, std::int64_t x, std::int64_t M, std::int64_t N) {
  const std::size_t n = static_cast<std::size_t>(N - M - 1);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t s = M + 1 + static_cast<std::int64_t>(i);
    const double cl = ch.c(s - 1), cr = ch.c(s);
    a[i][i] = 1.0;
    if (i > 0) a[i][i - 1] = -cl / (cl + cr);
    else b[i] += cl / (cl + cr);
    if (i + 1 < n) a[i][i + 1] = -cr / (cl + cr);
  }
  return dense_solve(a, b)[static_cast<std::size_t>(x - M - 1)];
}

WalkConfig walk(double lambda, int rho = kRhoInfinite) {
  WalkConfig c;
  c.lambda = lambda;
  c.rho = rho;
  return c;
}

Result closed_form_speed(const Options& o) {
  Result res;
  res.pass = true;
  std::ostringstream d;
  const double lams[] = {0.1, 0.3, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    WalkConfig c = walk(lams[i], 1);
    c.normalization = Normalization::kRenormalized;
    const VelocityEstimate v = velocity_estimate(EnvironmentSpec::constant_lattice(1.0), c, 32, 1000000, 0,
                                                 mix_key(o.seed, 1, i), o.threads);
    const double z = (v.v - std::tanh(lams[i])) / v.stderr_;
    const bool ok = std::fabs(z) < 3.0 && v.stderr_ < 0.005;
    res.pass = res.pass && ok;
    d << "lambda=" << lams[i] << " v=" << fmt(v.v, 6) << " tanh=" << fmt(std::tanh(lams[i]), 6)
      << " z=" << fmt(z, 3) << " se=" << fmt(v.stderr_, 2) << (i < 2 ? "; " : "");
  }
  res.detail = d.str();
  return res;
}

Result conductance_sandwich(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const Kernel k(walk(0.5), spec);
  const int rhos[] = {1, 2, 4, 8, 16};
  std::size_t violations = 0;
  double worst = 0.0, max8 = 0.0, max16 = 0.0;
  for (std::size_t e = 0; e < 200; ++e) {
    Environment env(spec, mix_key(o.seed, 2, e), {-64, 64});
    NetworkQuery q;
    q.A = SiteSet::point(0);
    q.B = SiteSet::outside(-16, 16);
    double c[5];
    for (std::size_t r = 0; r < 5; ++r) {
      q.rho = rhos[r];
      c[r] = eff_conductance(env, k, q).value;
    }
    for (std::size_t r = 1; r < 4; ++r) {
      const double rel = (c[r - 1] - c[r]) / c[r - 1];
      worst = std::max(worst, rel);
      if (rel > 1e-10) ++violations;
    }
    max8 = std::max(max8, c[3] / c[0]);
    max16 = std::max(max16, c[4] / c[0]);
  }
  const double change = std::fabs(max16 - max8) / max8;
  Result res;
  res.pass = violations == 0 && change < 0.10;
  res.detail = "violations=" + std::to_string(violations) + " worst_rel_drop=" + fmt(worst, 3) +
               " max C8/C1=" + fmt(max8) + " max C16/C1=" + fmt(max16) + " change=" + fmt(change, 3);
  return res;
}

Result hitting_oracle(const Options& o) {
  NearestNeighborChain unit;
  unit.lo = 0;
  unit.bonds = {1.0, 1.0, 1.0};
  const double p_unit = nn_hitting_probability(unit, 1, 0, 3);
  const double unit_err = std::fabs(p_unit - 2.0 / 3.0);

  Engine gen = make_engine(o.seed, 3, 0);
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const Kernel k(walk(0.5, 1), spec);
  double worst = 0.0;
  for (std::size_t cs = 0; cs < 100; ++cs) {
    NearestNeighborChain ch;
    const int sites = 3 + static_cast<int>(uniform01(gen) * 6.0);
    if (cs % 2 == 0) {
      ch.lo = static_cast<std::int64_t>(uniform01(gen) * 20.0) - 10;
      for (int j = 0; j < sites; ++j) ch.bonds.push_back(std::exp(6.0 * uniform01(gen) - 3.0));
    } else {
      Environment env(spec, mix_key(o.seed, 3, cs), {-16, 16});
      const std::int64_t lo = static_cast<std::int64_t>(uniform01(gen) * 10.0) - 8;
      ch = nn_chain(env, k, {lo, lo + sites});
    }
    const std::int64_t M = ch.lo, N = ch.hi();
    const std::int64_t x = M + 1 + static_cast<std::int64_t>(uniform01(gen) * static_cast<double>(N - M - 1));
    worst = std::max(worst, std::fabs(nn_hitting_probability(ch, x, M, N) - absorbing_oracle(ch, x, M, N)));
  }
  Result res;
  res.pass = unit_err < 1e-12 && worst < 1e-10;
  res.detail = "unit=" + fmt(p_unit, 17) + " err=" + fmt(unit_err, 3) + " max_random_err=" + fmt(worst, 3);
  return res;
}

Result jump_tail(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const Kernel k(walk(0.5), spec);
  const double decay = k.d() * (1.0 - k.lambda());
  std::vector<std::vector<double>> tails;
  for (std::size_t e = 0; e < 100; ++e) {
    Environment env(spec, mix_key(o.seed, 4, e), {-256, 256});
    for (std::int64_t i = -20; i <= 20; ++i) {
      const JumpDistribution jd = k.jump_distribution(env, i);
      std::vector<double> t(11, 0.0);
      for (int s = 1; s <= 10; ++s) t[static_cast<std::size_t>(s)] = jd.tail_mass(s);
      tails.push_back(std::move(t));
    }
  }
  double K_hat = 0.0;
  for (const auto& t : tails) K_hat = std::max(K_hat, t[1] * std::exp(decay));
  std::size_t violations = 0;
  double worst = 0.0;
  for (const auto& t : tails)
    for (int s = 2; s <= 10; ++s) {
      const double ratio = t[static_cast<std::size_t>(s)] / (K_hat * std::exp(-decay * s));
      worst = std::max(worst, ratio);
      if (ratio > 1.0) ++violations;
    }
  Result res;
  res.pass = violations == 0;
  res.detail = "K_hat=" + fmt(K_hat) + " checks=" + std::to_string(tails.size() * 9) +
               " violations=" + std::to_string(violations) + " max tail/bound=" + fmt(worst, 4);
  return res;
}

Result regeneration_identity(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const WalkConfig c = walk(0.5, 3);
  const std::size_t runs_n = full(o) ? 128 : 64;
  const std::vector<CoupledRun> runs = coupled_runs(spec, c, runs_n, 512, mix_key(o.seed, 5, 0), o.threads);
  const RegenerationSpeed rs = regeneration_speed(runs);
  const VelocityEstimate direct = velocity_estimate(spec, c, 32, 200000, 1000, mix_key(o.seed, 5, 1), o.threads);
  const double sigma = std::hypot(rs.stderr_, direct.stderr_);
  const double diff = rs.v - direct.v;

  const double eps = runs.front().epsilon;
  const std::size_t bins = 60;
  std::vector<double> obs(bins, 0.0), ex(bins, 0.0);
  std::size_t n = 0;
  for (const auto& r : runs)
    for (std::int64_t b : r.cycle_blocks) {
      obs[std::min<std::size_t>(static_cast<std::size_t>(b - 1), bins - 1)] += 1.0;
      ++n;
    }
  for (std::size_t i = 0; i < bins; ++i)
    ex[i] = static_cast<double>(n) * (i + 1 < bins ? eps * std::pow(1.0 - eps, static_cast<double>(i))
                                                   : std::pow(1.0 - eps, static_cast<double>(bins - 1)));
  const ChiSquare cs = chi_square(obs, ex);

  Result res;
  res.pass = std::fabs(diff) < 3.0 * sigma && cs.pvalue > 0.01 && rs.cycles >= 1000;
  res.detail = "cycles=" + std::to_string(rs.cycles) + " v_regen=" + fmt(rs.v) + "+-" + fmt(rs.stderr_, 2) +
               " v_direct=" + fmt(direct.v) + "+-" + fmt(direct.stderr_, 2) + " diff/sigma=" + fmt(diff / sigma, 3) +
               " ratio_v=" + fmt(rs.ratio_v) + " eps=" + fmt(eps) + " geometric p=" + fmt(cs.pvalue, 3);
  return res;
}

Result phase_dichotomy(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::heavy_tail(1.5);
  const std::vector<std::int64_t> hs = {100000, 1000000, 10000000};
  const std::size_t reps = full(o) ? 32 : 16;
  const auto low = velocity_profile(spec, walk(0.25), reps, hs, mix_key(o.seed, 6, 0), o.threads);
  const auto high = velocity_profile(spec, walk(0.7), reps, hs, mix_key(o.seed, 6, 1), o.threads);
  const SpeedTrend tl = speed_trend(low), th = speed_trend(high);
  const double factor = low.front().v / low.back().v;
  const bool low_ok = factor >= 2.0 && low.back().v < 0.02;
  const bool high_ok = high.back().v > 0.05 && th.positive_signature;
  const double lc = critical_lambda(spec);
  const bool boundary_ok = std::fabs(lc - 0.5) < 1e-12 &&
                           classify_analytic(spec, 0.5).regime == Regime::kBallistic &&
                           classify_analytic(spec, 0.5 - 1e-9).regime == Regime::kSubballistic &&
                           classify_analytic(spec, 0.25).regime == Regime::kSubballistic &&
                           classify_analytic(spec, 0.7).regime == Regime::kBallistic;
  std::ostringstream d;
  d << "lambda=0.25 v=";
  for (const auto& e : low) d << fmt(e.v, 4) << (&e == &low.back() ? "" : ",");
  d << " decay=" << fmt(factor, 3) << " ends<0.02:" << (low.back().v < 0.02 ? "yes" : "no") << "; lambda=0.7 v=";
  for (const auto& e : high) d << fmt(e.v, 4) << "+-" << fmt(e.stderr_, 2) << (&e == &high.back() ? "" : ",");
  d << " stable:" << (th.positive_signature ? "yes" : "no") << "; lambda_c=" << fmt(lc)
    << " trend(0.25)=" << to_string(tl.sign);
  Result res;
  res.pass = low_ok && high_ok && boundary_ok;
  res.detail = d.str();
  return res;
}

Result quantile_dominance(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::heavy_tail(1.5);
  const Kernel k(walk(0.25), spec);
  const std::size_t envs = full(o) ? 40 : 20;
  std::vector<QuantileCoupling> qs;
  std::size_t violations = 0, blocks = 0;
  for (std::size_t r = 0; r < envs; ++r) {
    Environment env(spec, mix_key(o.seed, 7, r), {-128, 4096});
    qs.push_back(coupled_overshoot_check(env, k, 500, mix_key(o.seed, 7), r));
    violations += qs.back().violations;
    blocks += qs.back().blocks.size();
  }
  const DominanceTest dt = dominance_test(qs);
  Result res;
  res.pass = blocks >= 10000 && violations == 0 && dt.pass;
  res.detail = "blocks=" + std::to_string(blocks) + " L=" + std::to_string(qs.front().L) +
               " gamma_geo=" + fmt(qs.front().gamma_geo) + " violations=" + std::to_string(violations) +
               " mean(T-S)=" + fmt(dt.mean_diff) + " z=" + fmt(dt.z, 3);
  return res;
}

Result evm_identities(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const WalkConfig c = walk(0.5);
  const std::int64_t steps = 1000000;
  const EvmVelocity ev = velocity_via_evm(spec, c, 32, steps, mix_key(o.seed, 8, 0), o.threads);
  const ContinuousVelocity cv =
      continuous_velocity(spec, c, 32, ev.inverse_rate * static_cast<double>(steps), mix_key(o.seed, 8, 1), o.threads);
  const double z_gap = ev.martingale_gap / ev.gap_stderr;
  const double sigma = std::hypot(cv.position.stderr_, ev.v_position_clock_stderr);
  const double z_y = (cv.position.v - ev.v_position_clock) / sigma;
  const double mult = ev.position.v * ev.inverse_rate;
  Result res;
  res.pass = std::fabs(z_gap) < 3.0 && std::fabs(z_y) < 3.0;
  res.detail = "slope=" + fmt(ev.slope.v, 6) + " drift=" + fmt(ev.local_drift, 6) + " z=" + fmt(z_gap, 3) +
               "; v_cont=" + fmt(cv.position.v, 6) + " v_Y/avg(1/r)=" + fmt(ev.v_position_clock, 6) +
               " z=" + fmt(z_y, 3) + " (v_Y*avg(1/r)=" + fmt(mult, 6) + ")";
  return res;
}

Result density_bound(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const Kernel k(walk(0.5, 3), spec);
  Environment env(spec, mix_key(o.seed, 9, 0), {-128, 4096});
  const DensityDiagnostics dd = density_ratio_profile(env, k, 100000, mix_key(o.seed, 9, 1), 64, o.threads, false);
  Result res;
  res.pass = dd.m >= 1 && dd.violations == 0;
  res.detail = "v=" + fmt(dd.v_hat) + " m=" + std::to_string(dd.m) + " gamma_hat=" + fmt(dd.gamma_hat, 4) +
               " min_ratio=" + fmt(dd.min_ratio, 4) + " violations=" + std::to_string(dd.violations) +
               " P(X_n<m)=" + fmt(dd.below_m_fraction, 3);
  return res;
}

Result nn_agreement(const Options& o) {
  struct Case {
    const char* name;
    EnvironmentSpec spec;
    double lambda;
  };
  const Case cases[] = {
      {"lattice", EnvironmentSpec::constant_lattice(1.0), 0.5},
      {"renewal", EnvironmentSpec::renewal_exponential(1.0, 2.0), 0.5},
      {"heavy0.25", EnvironmentSpec::heavy_tail(1.5), 0.25},
      {"heavy0.7", EnvironmentSpec::heavy_tail(1.5), 0.7},
  };
  const std::vector<std::int64_t> hs = {10000, 100000, 1000000, 10000000};
  const std::size_t reps = full(o) ? 32 : 16;
  Result res;
  res.pass = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < 4; ++i) {
    const Case& c = cases[i];
    const NNCriterion nn = nn_criterion(c.spec, c.lambda, 1000000, 24, mix_key(o.seed, 10, i));
    const auto prof = velocity_profile(c.spec, walk(c.lambda, 1), reps, hs, mix_key(o.seed, 10, i, 1), o.threads);
    const SpeedTrend t = speed_trend(prof);
    const bool agree = (nn.verdict == Regime::kBallistic && t.sign == SpeedSign::kPositive) ||
                       (nn.verdict == Regime::kSubballistic && t.sign == SpeedSign::kZero);
    res.pass = res.pass && agree;
    d << c.name << ": " << to_string(nn.verdict) << " (growth " << fmt(nn.running_growth, 3)
      << " ratio " << fmt(nn.tail_ratio, 3) << " hill " << fmt(nn.tail_index, 3) << ") vs "
      << to_string(t.sign) << " v=" << fmt(prof.back().v, 4) << (i < 3 ? "; " : "");
  }
  res.detail = d.str();
  return res;
}

Result visit_shape(const Options& o) {
  const EnvironmentSpec spec = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  const int rhos[] = {1, 4, kRhoInfinite};
  const std::size_t reps = full(o) ? 40000 : 10000;
  const std::size_t envs = full(o) ? 80 : 40;
  Result res;
  res.pass = true;
  std::ostringstream d;
  for (std::size_t ri = 0; ri < 3; ++ri) {
    const Kernel k(walk(0.5, rhos[ri]), spec);
    double worst_z = 0.0;
    for (std::size_t e = 0; e < 3; ++e) {
      Environment env(spec, mix_key(o.seed, 11, ri, e), {-512, 512});
      const VisitEstimate ve = visit_counts(env, k, 0, {-30, 0}, 200, reps, mix_key(o.seed, 11, ri, 100 + e),
                                            100000000, o.threads);
      const double pe = escape_probability(env, k, 0, rhos[ri]).value;
      const double z = (ve.mean.back() * pe - 1.0) / (ve.stderr_.back() * pe);
      if (std::fabs(z) > std::fabs(worst_z)) worst_z = z;
    }
    double half_max = 0.0, all_max = 0.0;
    for (std::size_t e = 0; e < envs; ++e) {
      Environment env(spec, mix_key(o.seed, 11, ri, 1000 + e), {-300, 300});
      const std::vector<double> g = expected_visits_exact(env, k, 0, -200, 60);
      double m = 0.0;
      for (std::int64_t site = -30; site <= 0; ++site)
        m = std::max(m, g[static_cast<std::size_t>(site + 200)] / g_structure(env, k, site));
      all_max = std::max(all_max, m);
      if (e + 1 == envs / 2) half_max = all_max;
    }
    const double change = (all_max - half_max) / half_max;
    const bool ok = std::fabs(worst_z) < 3.0 && std::isfinite(all_max) && change < 0.10;
    res.pass = res.pass && ok;
    d << "rho=" << rho_to_string(rhos[ri]) << " worst z(N*p_esc-1)=" << fmt(worst_z, 3)
      << " max E[N]/g=" << fmt(all_max, 4) << " change=" << fmt(change, 3) << (ri < 2 ? "; " : "");
  }
  res.detail = d.str();
  return res;
}

}  // namespace

Suite parse_suite(const std::string& s) {
  if (s == "fast") return Suite::kFast;
  if (s == "full") return Suite::kFull;
  throw std::invalid_argument("suite must be fast or full, got '" + s + "'");
}

std::string to_string(Suite s) { return s == Suite::kFast ? "fast" : "full"; }

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "closed-form lattice speed", 60, closed_form_speed},
      {2, "conductance sandwich", 120, conductance_sandwich},
      {3, "hitting-probability oracle", 10, hitting_oracle},
      {4, "jump-tail bound", 30, jump_tail},
      {5, "regeneration speed identity", 180, regeneration_identity},
      {6, "phase dichotomy", 600, phase_dichotomy},
      {7, "quantile-coupling dominance", 180, quantile_dominance},
      {8, "environment-viewed-from-walker identities", 120, evm_identities},
      {9, "density lower bound", 180, density_bound},
      {10, "nearest-neighbour criterion", 120, nn_agreement},
      {11, "visit-count bound shape", 180, visit_shape},
  };
  return all;
}

std::vector<Result> run(const Options& opts, const std::vector<int>& ids, std::ostream* progress) {
  std::vector<Result> out;
  for (const Criterion& c : criteria()) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run(opts);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.id = c.id;
    r.name = c.name;
    r.budget_seconds = c.budget_seconds;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.within_budget = r.seconds <= c.budget_seconds;
    r.pass = r.pass && r.within_budget;
    if (progress) *progress << format(r) << std::endl;
    out.push_back(std::move(r));
  }
  return out;
}

std::string format(const Result& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << r.id << "] " << std::left << std::setw(42) << r.name
     << std::right << " (" << std::fixed << std::setprecision(1) << r.seconds << " s / " << std::setprecision(0)
     << r.budget_seconds << " s" << (r.within_budget ? "" : ", over budget") << ")  " << r.detail;
  return os.str();
}

}  // namespace mottrw::acceptance
