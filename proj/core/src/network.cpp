#include "mottrw/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mottrw/linalg.hpp"

namespace mottrw {

SiteSet SiteSet::unite(const SiteSet& o) const {
  SiteSet s = *this;
  s.points.insert(s.points.end(), o.points.begin(), o.points.end());
  if (o.left) s.left = s.left ? std::max(*s.left, *o.left) : *o.left;
  if (o.right) s.right = s.right ? std::min(*s.right, *o.right) : *o.right;
  return s;
}

bool SiteSet::contains(std::int64_t k) const {
  if (left && k <= *left) return true;
  if (right && k >= *right) return true;
  return std::find(points.begin(), points.end(), k) != points.end();
}

std::string SiteSet::describe() const {
  std::ostringstream os;
  bool first = true;
  auto sep = [&] {
    if (!first) os << " u ";
    first = false;
  };
  if (left) {
    sep();
    os << "(-inf," << *left << "]";
  }
  for (auto p : points) {
    sep();
    os << "{" << p << "}";
  }
  if (right) {
    sep();
    os << "[" << *right << ",inf)";
  }
  if (first) os << "{}";
  return os.str();
}

namespace {

void check_disjoint(const SiteSet& A, const SiteSet& B) {
  if (A.empty() || B.empty()) throw std::invalid_argument("network query: A and B must be nonempty");
  bool overlap = (A.left && B.left) || (A.right && B.right);
  if (A.left && B.right && *B.right <= *A.left) overlap = true;
  if (B.left && A.right && *A.right <= *B.left) overlap = true;
  for (auto p : A.points) overlap = overlap || B.contains(p);
  for (auto p : B.points) overlap = overlap || A.contains(p);
  if (overlap) throw std::invalid_argument("network query: A and B must be disjoint");
}

struct Scaled {
  const Environment& env;
  const Kernel& kernel;
  double x_ref;
  bool marks;
  double operator()(std::int64_t a, std::int64_t b) const {
    const double xa = env.x_unchecked(a), xb = env.x_unchecked(b);
    const double u = marks ? kernel.config().u(env.E_unchecked(a), env.E_unchecked(b))
                           : kernel.config().u(0.0, 0.0);
    return std::exp(kernel.lambda() * (xa + xb - 2.0 * x_ref) - std::fabs(xb - xa) + u);
  }
};

}  // namespace

ConductanceResult eff_conductance_window(Environment& env, const Kernel& kernel, const SiteSet& A,
                                         const SiteSet& B, int rho, IndexRange window) {
  check_disjoint(A, B);
  env.ensure(window);
  const int bw = std::min(rho, kernel.s_star());
  const std::int64_t lo = window.lo, hi = window.hi;
  const std::int64_t n = hi - lo + 1;
  const std::int64_t mid = lo + n / 2;
  Scaled c{env, kernel, env.x(mid), env.has_marks()};

  // 0 = free, 1 = A, 2 = B
  std::vector<char> type(static_cast<std::size_t>(n));
  for (std::int64_t k = lo; k <= hi; ++k)
    type[static_cast<std::size_t>(k - lo)] = A.contains(k) ? 1 : (B.contains(k) ? 2 : 0);
  auto ty = [&](std::int64_t k) { return type[static_cast<std::size_t>(k - lo)]; };

  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t a = lo; a <= hi; ++a) {
    if (ty(a) != 0) continue;
    for (int m = 1; m <= bw; ++m) {
      if (a + m <= hi) diag[static_cast<std::size_t>(a - lo)] += c(a, a + m);
      if (a - m >= lo) diag[static_cast<std::size_t>(a - lo)] += c(a, a - m);
    }
  }
  std::vector<std::int64_t> index(static_cast<std::size_t>(n), -1);
  std::size_t nf = 0;
  for (std::int64_t a = lo; a <= hi; ++a)
    if (ty(a) == 0 && diag[static_cast<std::size_t>(a - lo)] > 0.0)
      index[static_cast<std::size_t>(a - lo)] = static_cast<std::int64_t>(nf++);
  auto idx = [&](std::int64_t k) { return index[static_cast<std::size_t>(k - lo)]; };

  ConductanceResult res;
  res.window = window;
  res.half_width = n / 2;
  res.bandwidth = bw;
  double direct = 0.0;
  for (std::int64_t a = lo; a <= hi; ++a) {
    if (ty(a) != 1) continue;
    for (int m = 1; m <= bw; ++m) {
      if (a + m <= hi && ty(a + m) == 2) direct += c(a, a + m);
      if (a - m >= lo && ty(a - m) == 2) direct += c(a, a - m);
    }
  }

  double total = direct;
  if (nf > 0) {
    SparseBuilder L(nf);
    std::vector<double> rhs(nf, 0.0);
    for (std::int64_t a = lo; a <= hi; ++a) {
      const std::int64_t ia = idx(a);
      if (ia < 0) continue;
      L.add(static_cast<std::size_t>(ia), static_cast<std::size_t>(ia), diag[static_cast<std::size_t>(a - lo)]);
      for (int m = -bw; m <= bw; ++m) {
        const std::int64_t b = a + m;
        if (m == 0 || b < lo || b > hi) continue;
        const double cab = c(a, b);
        if (idx(b) >= 0)
          L.add(static_cast<std::size_t>(ia), static_cast<std::size_t>(idx(b)), -cab);
        else if (ty(b) == 2)
          rhs[static_cast<std::size_t>(ia)] += cab;
      }
    }
    const SolveResult sol = solve_spd(L, rhs);
    res.residual = sol.relative_residual;
    for (std::int64_t a = lo; a <= hi; ++a) {
      if (ty(a) != 1) continue;
      for (int m = -bw; m <= bw; ++m) {
        const std::int64_t b = a + m;
        if (m == 0 || b < lo || b > hi || idx(b) < 0) continue;
        total += c(a, b) * sol.x[static_cast<std::size_t>(idx(b))];
      }
    }
  }
  res.value = total * std::exp(2.0 * kernel.lambda() * c.x_ref);
  return res;
}

ConductanceResult eff_conductance(Environment& env, const Kernel& kernel, const NetworkQuery& q) {
  check_disjoint(q.A, q.B);
  const SiteSet all = q.A.unite(q.B);
  const int bw = std::min(q.rho, kernel.s_star());
  if (all.left && all.right) {
    if (*all.right - *all.left > 4 * q.max_half_width)
      throw std::invalid_argument("network query: free region exceeds the window budget");
    IndexRange w{*all.left - bw + 1, *all.right + bw - 1};
    for (auto p : all.points) {
      w.lo = std::min(w.lo, p - bw);
      w.hi = std::max(w.hi, p + bw);
    }
    ConductanceResult r = eff_conductance_window(env, kernel, q.A, q.B, q.rho, w);
    r.exact_window = true;
    r.previous = r.value;
    return r;
  }
  std::vector<std::int64_t> marks = all.points;
  if (all.left) marks.push_back(*all.left);
  if (all.right) marks.push_back(*all.right);
  const auto [mn, mx] = std::minmax_element(marks.begin(), marks.end());
  const std::int64_t center = (*mn + *mx) / 2;
  const std::int64_t base = (*mx - *mn) / 2 + bw;
  std::int64_t h = std::max(q.half_width, base + 1);
  double prev = std::nan("");
  for (;;) {
    ConductanceResult r = eff_conductance_window(env, kernel, q.A, q.B, q.rho, {center - h, center + h});
    if (!std::isnan(prev) && std::fabs(r.value - prev) <= q.tol * std::fabs(r.value)) {
      r.previous = prev;
      return r;
    }
    if (2 * h > q.max_half_width) {
      std::ostringstream os;
      os << "eff_conductance: no convergence up to half-width " << h << " (last " << r.value << ", previous "
         << prev << ")";
      throw ConvergenceError(os.str(), r.value, prev);
    }
    prev = r.value;
    h *= 2;
  }
}

double NearestNeighborChain::resistance(std::int64_t a, std::int64_t b) const {
  double s = 0.0;
  for (std::int64_t j = a; j < b; ++j) s += 1.0 / c(j);
  return s;
}

NearestNeighborChain nn_chain(Environment& env, const Kernel& kernel, IndexRange sites) {
  env.ensure({sites.lo, sites.hi});
  NearestNeighborChain ch;
  ch.lo = sites.lo;
  for (std::int64_t j = sites.lo; j < sites.hi; ++j) ch.bonds.push_back(kernel.conductance(env, j, j + 1));
  return ch;
}

double eff_conductance_nn(const NearestNeighborChain& chain, const SiteSet& A, const SiteSet& B) {
  check_disjoint(A, B);
  // Boundary nodes of each set along the line, tagged by set.
  std::vector<std::pair<std::int64_t, int>> marks;
  for (auto p : A.points) marks.emplace_back(p, 1);
  for (auto p : B.points) marks.emplace_back(p, 2);
  if (A.left) marks.emplace_back(*A.left, 1);
  if (A.right) marks.emplace_back(*A.right, 1);
  if (B.left) marks.emplace_back(*B.left, 2);
  if (B.right) marks.emplace_back(*B.right, 2);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::remove_if(marks.begin(), marks.end(),
                             [&](const auto& m) {
                               // Interior points of a half-line are shorted to its end.
                               const SiteSet& own = m.second == 1 ? A : B;
                               return (own.left && m.first < *own.left) || (own.right && m.first > *own.right);
                             }),
              marks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
    if (marks[i].second == marks[i + 1].second) continue;
    const std::int64_t a = marks[i].first, b = marks[i + 1].first;
    if (a < chain.lo || b > chain.hi()) throw std::out_of_range("eff_conductance_nn: chain does not cover the query");
    total += 1.0 / chain.resistance(a, b);
  }
  return total;
}

double eff_conductance_nn(Environment& env, const Kernel& kernel, const SiteSet& A, const SiteSet& B) {
  const SiteSet all = A.unite(B);
  std::vector<std::int64_t> marks = all.points;
  if (all.left) marks.push_back(*all.left);
  if (all.right) marks.push_back(*all.right);
  const auto [mn, mx] = std::minmax_element(marks.begin(), marks.end());
  const NearestNeighborChain ch = nn_chain(env, kernel, {*mn, *mx});
  return eff_conductance_nn(ch, A, B);
}

TailSums resistance_tail(Environment& env, const Kernel& kernel, std::int64_t k, double rel_tol,
                         std::int64_t budget) {
  if (k < 0) throw std::invalid_argument("resistance_tail: k must be >= 0");
  TailSums t;
  double s = 0.0;
  for (std::int64_t j = k; j < k + budget; ++j) {
    if (j + 1 > env.window().hi) env.ensure({env.window().lo, 2 * (j + 1) + 16});
    const double term = 1.0 / kernel.conductance(env, j, j + 1);
    s += term;
    t.partial.push_back(s);
    if (term < rel_tol * s) {
      t.stabilized = true;
      break;
    }
  }
  t.terms = static_cast<std::int64_t>(t.partial.size());
  t.limit = s;
  if (!t.stabilized)
    throw ConvergenceError("resistance_tail: partial sums did not stabilize within the budget", s,
                           t.partial.size() > 1 ? t.partial[t.partial.size() - 2] : 0.0);
  return t;
}

std::vector<double> left_resistance_partial(Environment& env, const Kernel& kernel, std::int64_t k,
                                            std::int64_t count) {
  env.ensure({k - count, k});
  std::vector<double> out;
  double s = 0.0;
  for (std::int64_t n = 1; n <= count; ++n) {
    s += 1.0 / kernel.conductance(env, k - n, k - n + 1);
    out.push_back(s);
  }
  return out;
}

double eff_conductance_nn_limit(Environment& env, const Kernel& kernel, std::int64_t k, double rel_tol) {
  // Right series converges; left series diverges, so its reciprocal tends to 0.
  double right = 0.0;
  for (std::int64_t j = k;; ++j) {
    if (j + 1 > env.window().hi) env.ensure({env.window().lo, j + 64});
    const double term = 1.0 / kernel.conductance(env, j, j + 1);
    right += term;
    if (term < rel_tol * right) break;
    if (j - k > (1 << 22)) throw ConvergenceError("eff_conductance_nn_limit: right tail did not stabilize", right, 0.0);
  }
  const double c_right = 1.0 / right;
  double left = 0.0;
  for (std::int64_t j = k - 1;; --j) {
    if (j < env.window().lo) env.ensure({j - 64, env.window().hi});
    left += 1.0 / kernel.conductance(env, j, j + 1);
    if (1.0 / left < rel_tol * c_right) break;
    if (k - j > (1 << 22)) throw ConvergenceError("eff_conductance_nn_limit: left tail did not diverge", left, 0.0);
  }
  return c_right + 1.0 / left;
}

EscapeResult escape_probability_at(Environment& env, const Kernel& kernel, std::int64_t i, int rho,
                                   std::int64_t N) {
  NetworkQuery q;
  q.A = SiteSet::point(i);
  q.B = SiteSet::outside(i - N, i + N);
  q.rho = rho;
  q.max_half_width = std::max<std::int64_t>(N, q.max_half_width);
  const ConductanceResult r = eff_conductance(env, kernel, q);
  EscapeResult e;
  e.conductance = r.value;
  const bool renorm = kernel.config().normalization == Normalization::kRenormalized && rho != kRhoInfinite;
  env.ensure({i - kernel.s_star(), i + kernel.s_star()});
  e.normalizer = renorm ? kernel.pi(env, i, rho) : kernel.pi_inf(env, i);
  e.value = e.conductance / e.normalizer;
  e.N = N;
  e.previous = e.value;
  return e;
}

EscapeResult escape_probability(Environment& env, const Kernel& kernel, std::int64_t i, int rho, double tol,
                                std::int64_t n0, std::int64_t n_max) {
  EscapeResult prev = escape_probability_at(env, kernel, i, rho, n0);
  for (std::int64_t N = 2 * n0; N <= n_max; N *= 2) {
    EscapeResult cur = escape_probability_at(env, kernel, i, rho, N);
    cur.previous = prev.value;
    if (std::fabs(cur.value - prev.value) <= tol * std::fabs(cur.value)) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << "escape_probability: no convergence up to N = " << n_max << " (last " << prev.value << ", previous "
     << prev.previous << ")";
  throw ConvergenceError(os.str(), prev.value, prev.previous);
}

double nn_hitting_probability(const NearestNeighborChain& chain, std::int64_t x, std::int64_t M,
                              std::int64_t N) {
  if (!(M < x && x < N)) throw std::invalid_argument("nn_hitting_probability: need M < x < N");
  const double c_left = eff_conductance_nn(chain, SiteSet::point(x), SiteSet::left_of(M));
  const double c_both = eff_conductance_nn(chain, SiteSet::point(x), SiteSet::outside(M, N));
  return c_left / c_both;
}

double nn_hitting_probability(Environment& env, const Kernel& kernel, std::int64_t x, std::int64_t M,
                              std::int64_t N) {
  if (!(M < x && x < N)) throw std::invalid_argument("nn_hitting_probability: need M < x < N");
  // Ratios are scale free; evaluate bonds relative to x to avoid overflow.
  env.ensure({M, N});
  NearestNeighborChain ch;
  ch.lo = M;
  const double xr = env.x(x);
  for (std::int64_t j = M; j < N; ++j)
    ch.bonds.push_back(kernel.conductance(env, j, j + 1) * std::exp(-2.0 * kernel.lambda() * xr));
  return nn_hitting_probability(ch, x, M, N);
}

std::vector<double> expected_visits_exact(Environment& env, const Kernel& kernel, std::int64_t start,
                                          std::int64_t lo, std::int64_t level) {
  if (!(lo <= start && start <= level)) throw std::invalid_argument("expected_visits_exact: need lo <= start <= level");
  env.ensure({lo - kernel.s_star(), level + kernel.s_star()});
  const std::size_t n = static_cast<std::size_t>(level - lo + 1);
  SparseBuilder a(n);
  std::vector<double> weight(n);
  for (std::int64_t s = lo; s <= level; ++s) {
    const JumpDistribution jd = kernel.jump_distribution(env, s);
    const std::size_t is = static_cast<std::size_t>(s - lo);
    weight[is] = std::log(jd.normalizer_rate) + 2.0 * kernel.lambda() * env.x(s);
    double stay = jd.p(0);
    for (int m = -jd.radius; m <= jd.radius; ++m) {
      if (m == 0) continue;
      const std::int64_t t = s + m;
      const double pr = jd.p(m);
      if (t < lo)
        stay += pr;
      else if (t <= level)
        a.add(is, static_cast<std::size_t>(t - lo), -pr);
    }
    a.add(is, is, 1.0 - stay);
  }
  // G(start, k) spans many orders of magnitude; G(k, start) does not. The
  // chain is reversible for the weights c-sum(k), so solve the column and
  // transpose through the weight ratio.
  const std::size_t i0 = static_cast<std::size_t>(start - lo);
  std::vector<double> e(n, 0.0);
  e[i0] = 1.0;
  std::vector<double> g = solve_general(a, e).x;
  for (std::size_t i = 0; i < n; ++i) g[i] *= std::exp(weight[i] - weight[i0]);
  return g;
}

double g_structure(Environment& env, const Kernel& kernel, std::int64_t k, double rel_tol) {
  env.ensure({std::min<std::int64_t>(k - 1, -1), 64});
  const double lam = kernel.lambda();
  double s = 0.0;
  for (std::int64_t j = 0;; ++j) {
    if (j + 1 > env.window().hi) env.ensure({env.window().lo, 2 * j + 64});
    const double term = std::exp(-2.0 * lam * env.x(j) + (1.0 - lam) * env.Z(j));
    s += term;
    if (term < rel_tol * s && j > 4) break;
    if (j > (1 << 22)) throw ConvergenceError("g_structure: series did not stabilize", s, 0.0);
  }
  const double pi1 = kernel.conductance(env, k - 1, k) + kernel.conductance(env, k, k + 1);
  return pi1 * s;
}

CalibrationConstants calibrate_constants(const EnvironmentSpec& spec, const WalkConfig& cfg, std::size_t n_env,
                                         std::uint64_t seed) {
  CalibrationConstants cc;
  WalkConfig inf_cfg = cfg;
  inf_cfg.rho = kRhoInfinite;
  const Kernel kinf(inf_cfg, spec);
  WalkConfig nn_cfg = cfg;
  nn_cfg.rho = 1;
  const Kernel k1(nn_cfg, spec);
  const double decay = kinf.d() * (1.0 - cfg.lambda);
  for (std::size_t e = 0; e < n_env; ++e) {
    Environment env(spec, mix_key(seed, e), {-300, 300});
    for (std::int64_t k = -50; k <= 50; ++k) {
      cc.K_pi = std::max(cc.K_pi, kinf.pi_inf(env, k) / kinf.pi(env, k, 1));
      const JumpDistribution jd = kinf.jump_distribution(env, k);
      for (int s = 1; s <= 10; ++s) cc.K_tail = std::max(cc.K_tail, jd.tail_mass(s) * std::exp(decay * s));
    }
    NetworkQuery q;
    q.A = SiteSet::point(0);
    q.B = SiteSet::outside(-16, 16);
    q.rho = 1;
    const double c1 = eff_conductance(env, kinf, q).value;
    for (int rho : {2, 4, 8}) {
      q.rho = rho;
      cc.K_eff = std::max(cc.K_eff, eff_conductance(env, kinf, q).value / c1);
    }
    const Kernel kcfg(cfg, spec);
    const std::vector<double> g = expected_visits_exact(env, kcfg, 0, -200, 60);
    for (std::int64_t k = -30; k <= 0; ++k)
      cc.K_0 = std::max(cc.K_0, g[static_cast<std::size_t>(k + 200)] / g_structure(env, kcfg, k));
    ++cc.samples;
  }
  cc.max_ratio = std::max({cc.K_eff, cc.K_pi, cc.K_tail, cc.K_0});
  cc.note = "empirical maxima over sampled environments";
  return cc;
}

}  // namespace mottrw
