#include "smoothdiv/bootstrap.hpp"

#include <algorithm>
#include <cmath>

namespace smoothdiv {

namespace {

Matrix resample_rows(const Matrix& src, Rng& rng) {
  Matrix out(src.rows, src.cols);
  for (long i = 0; i < src.rows; ++i) {
    long k = static_cast<long>(rng.uniform() * src.rows);
    if (k >= src.rows) k = src.rows - 1;
    std::copy(src.row(k), src.row(k) + src.cols, out.row(i));
  }
  return out;
}

double quantile(Vec sorted, double level) {
  // Type-7 linear interpolation on the sorted sample.
  const long n = static_cast<long>(sorted.size());
  const double h = (n - 1) * level;
  const long lo = static_cast<long>(std::floor(h));
  const long hi = std::min(n - 1, lo + 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

void check_gen(Generator gen) {
  require(gen != Generator::TV, ErrorCode::UnsupportedGenerator,
          "bootstrap covers KL, ChiSq, H2; the TV limit is not Hadamard-linear");
}

}  // namespace

BootstrapResult bootstrap_distribution(Generator gen, const Matrix& samples_x,
                                       const SmoothedDensity& reference, double sigma, long B,
                                       const IntegrationPlan& plan, uint64_t seed) {
  check_gen(gen);
  require(B >= 1, ErrorCode::InvalidArgument, "bootstrap: B must be >= 1");
  const SmoothedDensity p0 = SmoothedDensity::empirical(samples_x, sigma);
  const double d_hat = estimate_divergence(gen, p0, reference, plan).value;
  const double root_n = std::sqrt(static_cast<double>(samples_x.rows));

  BootstrapResult res;
  res.point_estimate = d_hat;
  res.n = samples_x.rows;
  res.replicates.resize(B);
  for (long b = 0; b < B; ++b) {
    Rng rng(substream(seed, static_cast<uint64_t>(b)));
    const Matrix xb = resample_rows(samples_x, rng);
    const SmoothedDensity pb = SmoothedDensity::empirical(xb, sigma);
    const double db = estimate_divergence(gen, pb, reference, plan).value;
    res.replicates[b] = root_n * (db - d_hat);
  }
  return res;
}

BootstrapResult bootstrap_distribution_two_sample(Generator gen, const Matrix& samples_x,
                                                  const Matrix& samples_y, double sigma, long B,
                                                  const IntegrationPlan& plan, uint64_t seed) {
  check_gen(gen);
  require(B >= 1, ErrorCode::InvalidArgument, "bootstrap: B must be >= 1");
  require(samples_x.rows == samples_y.rows, ErrorCode::InvalidArgument,
          "two-sample bootstrap expects equal sample sizes");
  const SmoothedDensity p0 = SmoothedDensity::empirical(samples_x, sigma);
  const SmoothedDensity q0 = SmoothedDensity::empirical(samples_y, sigma);
  const double d_hat = estimate_divergence(gen, p0, q0, plan).value;
  const double root_n = std::sqrt(static_cast<double>(samples_x.rows));

  BootstrapResult res;
  res.point_estimate = d_hat;
  res.n = samples_x.rows;
  res.replicates.resize(B);
  for (long b = 0; b < B; ++b) {
    // Independent index draws for the X and Y blocks.
    Rng rng_x(substream(seed, 2 * static_cast<uint64_t>(b)));
    Rng rng_y(substream(seed, 2 * static_cast<uint64_t>(b) + 1));
    const Matrix xb = resample_rows(samples_x, rng_x);
    const Matrix yb = resample_rows(samples_y, rng_y);
    const SmoothedDensity pb = SmoothedDensity::empirical(xb, sigma);
    const SmoothedDensity qb = SmoothedDensity::empirical(yb, sigma);
    const double db = estimate_divergence(gen, pb, qb, plan).value;
    res.replicates[b] = root_n * (db - d_hat);
  }
  return res;
}

std::pair<double, double> bootstrap_ci(const Vec& replicates, double point_estimate, long n,
                                       double level) {
  require(level > 0.0 && level < 1.0, ErrorCode::DomainError, "bootstrap_ci: level in (0,1)");
  require(static_cast<long>(replicates.size()) >= 20, ErrorCode::InsufficientReplicates,
          "bootstrap_ci: need at least 20 replicates");
  Vec sorted = replicates;
  std::sort(sorted.begin(), sorted.end());
  const double alpha = 1.0 - level;
  const double root_n = std::sqrt(static_cast<double>(n));
  const double q_hi = quantile(sorted, 1.0 - 0.5 * alpha);
  const double q_lo = quantile(sorted, 0.5 * alpha);
  return {point_estimate - q_hi / root_n, point_estimate - q_lo / root_n};
}

}  // namespace smoothdiv
