#include "smoothdiv/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "smoothdiv/special.hpp"

namespace smoothdiv {

namespace {

// log of Phi(b) - Phi(a) for a < b, stable in both tails.
double log_gaussian_interval(double a, double b) {
  if (a + b > 0.0) {
    const double t = -a;
    a = -b;
    b = t;
  }
  // Both bounds now lean left: Phi(b) - Phi(a) = Q(-b) - Q(-a), Q(-b) > Q(-a).
  const double lq_b = log_q(-b);
  const double lq_a = log_q(-a);
  const double delta = lq_a - lq_b;
  return lq_b + std::log1p(-std::exp(delta < -1e-17 ? delta : -1e-17));
}

}  // namespace

SmoothedDensity SmoothedDensity::make_mixture(Matrix centers, Vec weights, double comp_std,
                                              int d, double sigma) {
  SmoothedDensity sd;
  sd.d_ = d;
  sd.sigma_ = sigma;
  sd.comp_std_ = comp_std;
  sd.centers_ = std::move(centers);
  sd.weights_ = std::move(weights);
  sd.log_weights_.resize(sd.weights_.size());
  sd.cum_weights_.resize(sd.weights_.size());
  double cum = 0.0;
  for (size_t i = 0; i < sd.weights_.size(); ++i) {
    sd.log_weights_[i] = sd.weights_[i] > 0.0 ? std::log(sd.weights_[i]) : -1e308;
    cum += sd.weights_[i];
    sd.cum_weights_[i] = cum;
  }
  sd.cum_weights_.back() = 1.0;
  return sd;
}

SmoothedDensity SmoothedDensity::empirical(const Matrix& points, double sigma) {
  require(points.rows >= 1 && points.cols >= 1, ErrorCode::InvalidArgument,
          "SmoothedEmpirical: need at least one point");
  require(sigma > 0.0, ErrorCode::InvalidArgument, "SmoothedEmpirical: sigma must be positive");

  // Collapse duplicate rows; the density is unchanged and repeated-atom
  // samples (discrete sources) evaluate in O(#distinct) instead of O(n).
  std::map<std::vector<double>, long> counts;
  std::vector<double> key(points.cols);
  for (long i = 0; i < points.rows; ++i) {
    key.assign(points.row(i), points.row(i) + points.cols);
    ++counts[key];
  }
  Matrix centers(static_cast<long>(counts.size()), points.cols);
  Vec weights(counts.size());
  long k = 0;
  for (const auto& [pt, cnt] : counts) {
    std::copy(pt.begin(), pt.end(), centers.row(k));
    weights[k] = static_cast<double>(cnt) / static_cast<double>(points.rows);
    ++k;
  }
  return make_mixture(std::move(centers), std::move(weights), sigma,
                      static_cast<int>(points.cols), sigma);
}

SmoothedDensity SmoothedDensity::analytic(const Distribution& base, double sigma) {
  require(sigma > 0.0, ErrorCode::InvalidArgument, "SmoothedAnalytic: sigma must be positive");
  validate(base);
  const int d = smoothdiv::dim(base);

  if (const auto* pm = std::get_if<PointMass>(&base)) {
    Matrix c(1, d);
    std::copy(pm->a.begin(), pm->a.end(), c.row(0));
    return make_mixture(std::move(c), {1.0}, sigma, d, sigma);
  }
  if (const auto* g = std::get_if<IsotropicGaussian>(&base)) {
    Matrix c(1, d);
    std::copy(g->mean.begin(), g->mean.end(), c.row(0));
    return make_mixture(std::move(c), {1.0}, std::sqrt(g->s * g->s + sigma * sigma), d, sigma);
  }
  if (const auto* gm = std::get_if<GaussianMixture>(&base)) {
    Matrix c(static_cast<long>(gm->means.size()), d);
    for (size_t i = 0; i < gm->means.size(); ++i)
      std::copy(gm->means[i].begin(), gm->means[i].end(), c.row(static_cast<long>(i)));
    return make_mixture(std::move(c), gm->weights,
                        std::sqrt(gm->s * gm->s + sigma * sigma), d, sigma);
  }
  if (const auto* da = std::get_if<DiscreteAtoms>(&base)) {
    Matrix c(static_cast<long>(da->atoms.size()), d);
    for (size_t i = 0; i < da->atoms.size(); ++i)
      std::copy(da->atoms[i].begin(), da->atoms[i].end(), c.row(static_cast<long>(i)));
    return make_mixture(std::move(c), da->probs, sigma, d, sigma);
  }
  const auto& ub = std::get<UniformBox>(base);
  SmoothedDensity sd;
  sd.d_ = d;
  sd.sigma_ = sigma;
  sd.box_ = true;
  sd.box_lo_ = ub.lo;
  sd.box_hi_ = ub.hi;
  return sd;
}

double SmoothedDensity::log_density(ConstSpan x) const {
  require(static_cast<int>(x.size()) == d_, ErrorCode::DimensionMismatch,
          "log_density: point dimension mismatch");
  if (box_) {
    double acc = 0.0;
    for (int j = 0; j < d_; ++j) {
      const double a = (box_lo_[j] - x[j]) / sigma_;
      const double b = (box_hi_[j] - x[j]) / sigma_;
      acc += log_gaussian_interval(a, b) - std::log(box_hi_[j] - box_lo_[j]);
    }
    return acc;
  }
  const double inv2t2 = 1.0 / (2.0 * comp_std_ * comp_std_);
  const double norm = -0.5 * d_ * std::log(2.0 * M_PI * comp_std_ * comp_std_);
  const long k = centers_.rows;
  static thread_local Vec terms;
  terms.resize(k);
  for (long i = 0; i < k; ++i) {
    const double* c = centers_.row(i);
    double q = 0.0;
    for (int j = 0; j < d_; ++j) {
      const double t = x[j] - c[j];
      q += t * t;
    }
    terms[i] = log_weights_[i] - q * inv2t2;
  }
  return norm + log_sum_exp(terms.data(), k);
}

void SmoothedDensity::sample_one(Rng& rng, double* out) const {
  if (box_) {
    for (int j = 0; j < d_; ++j)
      out[j] = box_lo_[j] + rng.uniform() * (box_hi_[j] - box_lo_[j]) + sigma_ * rng.normal();
    return;
  }
  const long k = rng.categorical(cum_weights_.data(), static_cast<long>(cum_weights_.size()));
  const double* c = centers_.row(k);
  for (int j = 0; j < d_; ++j) out[j] = c[j] + comp_std_ * rng.normal();
}

Matrix SmoothedDensity::sample(long count, uint64_t seed) const {
  require(count >= 1, ErrorCode::InvalidArgument, "sample: count must be >= 1");
  Matrix out(count, d_);
  Rng rng(seed);
  for (long i = 0; i < count; ++i) sample_one(rng, out.row(i));
  return out;
}

void SmoothedDensity::extent(Vec& lo, Vec& hi) const {
  lo.assign(d_, 0.0);
  hi.assign(d_, 0.0);
  if (box_) {
    lo = box_lo_;
    hi = box_hi_;
    return;
  }
  for (int j = 0; j < d_; ++j) {
    double mn = centers_.at(0, j), mx = centers_.at(0, j);
    for (long i = 1; i < centers_.rows; ++i) {
      mn = std::min(mn, centers_.at(i, j));
      mx = std::max(mx, centers_.at(i, j));
    }
    lo[j] = mn;
    hi[j] = mx;
  }
}

double log_ratio(const SmoothedDensity& p, const SmoothedDensity& q, ConstSpan x) {
  require(p.dim() == q.dim(), ErrorCode::DimensionMismatch,
          "log_ratio: densities have different dimensions");
  require(p.sigma() == q.sigma(), ErrorCode::SigmaMismatch,
          "log_ratio: densities have different smoothing bandwidths");
  return p.log_density(x) - q.log_density(x);
}

double clamped_ratio(double log_r) {
  if (log_r > kLogRatioClamp) log_r = kLogRatioClamp;
  if (log_r < -kLogRatioClamp) log_r = -kLogRatioClamp;
  return std::exp(log_r);
}

}  // namespace smoothdiv
