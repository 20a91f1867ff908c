#ifndef SMOOTHDIV_SMOOTHING_HPP
#define SMOOTHDIV_SMOOTHING_HPP

#include "smoothdiv/common.hpp"
#include "smoothdiv/distribution.hpp"
#include "smoothdiv/rng.hpp"

namespace smoothdiv {

// Density of a measure convolved with the isotropic Gaussian kernel of
// bandwidth sigma. Covers smoothed empirical measures (Gaussian mixtures at
// the sample points) and the analytic zoo, which all smooth to Gaussian
// mixtures except the uniform box (error-function product form).
//
// Immutable after construction; safe for concurrent evaluation.
class SmoothedDensity {
 public:
  static SmoothedDensity empirical(const Matrix& points, double sigma);
  static SmoothedDensity analytic(const Distribution& base, double sigma);

  double log_density(ConstSpan x) const;
  void sample_one(Rng& rng, double* out) const;
  Matrix sample(long count, uint64_t seed) const;

  int dim() const { return d_; }
  double sigma() const { return sigma_; }
  long n_components() const { return static_cast<long>(log_weights_.size()); }

  // Mixture components, exposed for kernel computations. Empty for the
  // box-smoothed form.
  const Matrix& centers() const { return centers_; }
  const Vec& weights() const { return weights_; }
  double component_std() const { return comp_std_; }
  bool is_gaussian_mixture() const { return !box_; }

  // Data range per coordinate (component centers or box corners), used for
  // default integration boxes and spectrum grids.
  void extent(Vec& lo, Vec& hi) const;

 private:
  SmoothedDensity() = default;
  static SmoothedDensity make_mixture(Matrix centers, Vec weights, double comp_std,
                                      int d, double sigma);

  int d_ = 0;
  double sigma_ = 0.0;
  // Gaussian-mixture form.
  Matrix centers_;      // k x d
  Vec weights_;         // k, sums to 1
  Vec log_weights_;     // k
  Vec cum_weights_;     // k
  double comp_std_ = 0.0;
  // Box-smoothed form.
  bool box_ = false;
  Vec box_lo_, box_hi_;
};

// log_density(p, x) - log_density(q, x). Checks shared dimension and sigma.
double log_ratio(const SmoothedDensity& p, const SmoothedDensity& q, ConstSpan x);

// exp of a log-ratio clamped to [-700, 700]; keeps f(r) finite in doubles.
double clamped_ratio(double log_r);

constexpr double kLogRatioClamp = 700.0;

}  // namespace smoothdiv

#endif
