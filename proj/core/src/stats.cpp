#include "mottrw/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <stdexcept>

namespace mottrw {

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : v) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  s.mean = mean;
  if (v.size() > 1) {
    s.sd = std::sqrt(m2 / static_cast<double>(v.size() - 1));
    s.stderr_ = s.sd / std::sqrt(static_cast<double>(v.size()));
  }
  return s;
}

RatioEstimate jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den) {
  if (num.size() != den.size() || num.empty()) throw std::invalid_argument("jackknife_ratio: size mismatch");
  const double sn = std::accumulate(num.begin(), num.end(), 0.0);
  const double sd = std::accumulate(den.begin(), den.end(), 0.0);
  RatioEstimate r;
  r.value = sn / sd;
  const std::size_t n = num.size();
  if (n < 2) return r;
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) loo[i] = (sn - num[i]) / (sd - den[i]);
  const double m = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(n);
  double acc = 0.0;
  for (double v : loo) acc += (v - m) * (v - m);
  r.stderr_ = std::sqrt(acc * static_cast<double>(n - 1) / static_cast<double>(n));
  return r;
}

double chi_square_pvalue(double statistic, double dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, statistic)));
}

ChiSquare chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                     double min_expected, int fitted_parameters) {
  if (observed.size() != expected.size()) throw std::invalid_argument("chi_square: size mismatch");
  std::vector<double> o, e;
  double acc_o = 0.0, acc_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    acc_o += observed[i];
    acc_e += expected[i];
    if (acc_e >= min_expected) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0 || acc_o > 0.0) {
    if (e.empty()) {
      o.push_back(acc_o);
      e.push_back(acc_e);
    } else {
      o.back() += acc_o;
      e.back() += acc_e;
    }
  }
  ChiSquare c;
  c.bins = o.size();
  for (std::size_t i = 0; i < o.size(); ++i) c.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  c.dof = static_cast<double>(o.size()) - 1.0 - fitted_parameters;
  c.pvalue = chi_square_pvalue(c.statistic, c.dof);
  return c;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * statistic;
  // Kolmogorov series.
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
    p += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double dmax = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    dmax = std::max(dmax, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  return ks_pvalue(dmax, static_cast<std::size_t>(std::max(1.0, std::round(ne))));
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double hill_tail_index(std::vector<double> samples, std::size_t k) {
  if (k < 2 || k >= samples.size()) throw std::invalid_argument("hill_tail_index: need 2 <= k < n");
  std::nth_element(samples.begin(), samples.end() - static_cast<std::ptrdiff_t>(k + 1), samples.end());
  std::sort(samples.end() - static_cast<std::ptrdiff_t>(k + 1), samples.end());
  const double threshold = *(samples.end() - static_cast<std::ptrdiff_t>(k + 1));
  if (!(threshold > 0.0)) return std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (auto it = samples.end() - static_cast<std::ptrdiff_t>(k); it != samples.end(); ++it)
    acc += std::log(*it / threshold);
  if (acc <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(k) / acc;
}

}  // namespace mottrw
