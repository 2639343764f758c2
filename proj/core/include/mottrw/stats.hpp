#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mottrw {

struct Summary {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
  double sd = 0.0;
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& v);

// Ratio-of-means sum(a)/sum(b) with a delete-one jackknife standard error.
struct RatioEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};
RatioEstimate jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den);

// Upper-tail p-value of a chi-square statistic.
double chi_square_pvalue(double statistic, double dof);

// Pearson chi-square of observed counts against expected counts; bins with
// expected < min_expected are merged into their right neighbour (the last
// bin absorbs the remainder).
struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double pvalue = 1.0;
  std::size_t bins = 0;
};
ChiSquare chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                     double min_expected = 5.0, int fitted_parameters = 0);

// Two-sample Kolmogorov-Smirnov asymptotic p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);
// One-sample KS statistic sup |F_n - F| against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf);
double ks_pvalue(double statistic, std::size_t n);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

double normal_quantile(double p);

// Hill estimator of the tail index over the k largest samples.
double hill_tail_index(std::vector<double> samples, std::size_t k);

}  // namespace mottrw

#include <algorithm>
#include <cmath>

namespace mottrw {

template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    dmax = std::max(dmax, std::max(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
  }
  return dmax;
}

}  // namespace mottrw
