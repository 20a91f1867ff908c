#ifndef SMOOTHDIV_BOOTSTRAP_HPP
#define SMOOTHDIV_BOOTSTRAP_HPP

#include <optional>

#include "smoothdiv/divergence.hpp"

namespace smoothdiv {

struct BootstrapResult {
  Vec replicates;          // sqrt(n) (D(resample) - D(original)), length B
  double point_estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.0;
  long n = 0;
};

// Nonparametric bootstrap of the smoothed divergence. Resamples raw points
// with replacement and re-smooths; never resamples from the smoothed density.
// One-sample mode holds the reference fixed; two-sample mode resamples the X
// and Y blocks independently. TV is out of scope (UnsupportedGenerator).
BootstrapResult bootstrap_distribution(Generator gen, const Matrix& samples_x,
                                       const SmoothedDensity& reference, double sigma, long B,
                                       const IntegrationPlan& plan, uint64_t seed);

BootstrapResult bootstrap_distribution_two_sample(Generator gen, const Matrix& samples_x,
                                                  const Matrix& samples_y, double sigma, long B,
                                                  const IntegrationPlan& plan, uint64_t seed);

// Percentile-basic interval from sqrt(n)-scaled replicates:
// [D - q_{1-a/2}/sqrt(n), D - q_{a/2}/sqrt(n)]. Requires B >= 20.
std::pair<double, double> bootstrap_ci(const Vec& replicates, double point_estimate, long n,
                                       double level);

}  // namespace smoothdiv

#endif
