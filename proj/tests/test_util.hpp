#ifndef SMOOTHDIV_TEST_UTIL_HPP
#define SMOOTHDIV_TEST_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <vector>

namespace testutil {

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double sample_sd(const std::vector<double>& v) { return std::sqrt(sample_variance(v)); }

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n = a.size(), m = b.size();
  size_t i = 0, j = 0;
  double d = 0;
  while (i < n && j < m) {
    const double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

// Asymptotic Kolmogorov survival function for the two-sample statistic.
inline double ks_two_sample_pvalue(double d, size_t n, size_t m) {
  const double ne = static_cast<double>(n) * m / static_cast<double>(n + m);
  const double t = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  return std::min(1.0, std::max(0.0, p));
}

// One-sample KS statistic against the normal fitted to the data
// (Lilliefors-style); reject normality at 1% when above ~1.035/sqrt(n).
inline double ks_normality_stat(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double m = mean(v), sd = sample_sd(v);
  const size_t n = v.size();
  double d = 0;
  for (size_t i = 0; i < n; ++i) {
    const double z = (v[i] - m) / sd;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
  }
  return d;
}

inline double lilliefors_crit_1pct(size_t n) { return 1.035 / std::sqrt(static_cast<double>(n)); }

}  // namespace testutil

#endif
