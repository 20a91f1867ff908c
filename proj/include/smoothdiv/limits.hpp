#ifndef SMOOTHDIV_LIMITS_HPP
#define SMOOTHDIV_LIMITS_HPP

#include <functional>
#include <optional>
#include <variant>

#include "smoothdiv/divergence.hpp"

namespace smoothdiv {

// Covariance kernel of the centered Gaussian process pair driving the
// asymptotics. Entries:
//   S11(x,y) = Cov(phi_s(x-X), phi_s(y-X)),  S12(x,y) = Cov(phi_s(x-X), phi_s(y-Y)),
// and symmetrically for S21, S22, under the coupling of (X, Y).
//
// The same-variable entries use the pointwise identity
//   phi_s(x-z) phi_s(y-z) = phi_{s sqrt2}(x-y) phi_{s/sqrt2}((x+y)/2 - z),
// so E[phi phi] reduces to the sqrt-half-bandwidth smoothed density.
class CovarianceKernel {
 public:
  static CovarianceKernel one_sample(const Distribution& mu, double sigma);
  static CovarianceKernel one_sample(const Matrix& samples, double sigma);
  static CovarianceKernel two_sample(const Coupling& coupling, double sigma);

  // i, j in {1, 2}.
  double entry(int i, int j, ConstSpan x, ConstSpan y) const;

  // Kernel of G - G~ under the coupling: S11 + S22 - S12 - S21.
  double null_diff(ConstSpan x, ConstSpan y) const;

  const SmoothedDensity& mu_sigma() const { return mu_sigma_; }
  const SmoothedDensity& nu_sigma() const { return two_sample_ ? *nu_sigma_ : mu_sigma_; }
  bool is_two_sample() const { return two_sample_; }
  int dim() const { return mu_sigma_.dim(); }
  double sigma() const { return sigma_; }

 private:
  CovarianceKernel(SmoothedDensity mu_s, SmoothedDensity mu_h, double sigma)
      : mu_sigma_(std::move(mu_s)), mu_half_(std::move(mu_h)), sigma_(sigma) {}

  double same_var(const SmoothedDensity& rho_s, const SmoothedDensity& rho_h, ConstSpan x,
                  ConstSpan y) const;
  double cross(ConstSpan x, ConstSpan y) const;  // E[phi(x-X) phi(y-Y)] - rho_mu(x) rho_nu(y)

  SmoothedDensity mu_sigma_;
  SmoothedDensity mu_half_;
  std::optional<SmoothedDensity> nu_sigma_;
  std::optional<SmoothedDensity> nu_half_;
  bool two_sample_ = false;
  bool identical_pair_ = false;   // X = Y pathwise
  bool independent_pair_ = false; // cross terms vanish
  std::optional<DiscretePairs> pair_atoms_;
  double sigma_ = 0.0;
};

// Pointwise evaluators of the influence functionals entering the asymptotic
// variances. The reduced forms differ from f'(r) and f(r) - r f'(r) by
// additive constants, which integrate to zero against the mean-zero kernel.
struct VarianceFunctionals {
  std::function<double(ConstSpan)> L1;
  std::function<double(ConstSpan)> L2;
};

// Reduced forms: KL (log r, -r); ChiSq (2r, -r^2); H2 (r^{-1/2}, r^{1/2}).
VarianceFunctionals variance_functionals(Generator gen, const SmoothedDensity& p,
                                         const SmoothedDensity& q);

// Raw forms (f'(r), f(r) - r f'(r)); kept as the cross-check oracle route.
VarianceFunctionals raw_functionals(Generator gen, const SmoothedDensity& p,
                                    const SmoothedDensity& q);

// (f * phi_sigma)(point): Gaussian convolution of a pointwise functional.
// Grid plans integrate on a tensor Gauss-Legendre stencil around the point;
// Monte Carlo plans average over Gaussian draws.
double convolve_gaussian(const std::function<double(ConstSpan)>& f, ConstSpan point,
                         double sigma, const IntegrationPlan& plan, uint64_t salt);

// v^2_{1,f}: variance of (L1 * phi_sigma)(X) under X ~ mu. Exact enumeration
// over atoms for discrete mu, Monte Carlo otherwise.
Estimate one_sample_variance(Generator gen, const Distribution& mu, const Distribution& nu,
                             double sigma, const IntegrationPlan& plan);

// v^2_{2,f}: variance of (L1 * phi)(X) + (L2 * phi)(Y) under the coupling.
Estimate two_sample_variance(Generator gen, const Coupling& coupling, double sigma,
                             const IntegrationPlan& plan);

// Direct double-integral evaluation of sum_ij int int S^(ij) L_i L_j on a
// tensor grid; the quadratic-cost oracle used to cross-check the variance
// reduction above.
double variance_double_integral(const CovarianceKernel& kernel,
                                const VarianceFunctionals& fns, bool one_sample,
                                const TensorGridPlan& grid);

struct GridSpec {
  int nodes_per_dim = 256;
  Vec lo;  // empty -> density extent padded by 6 sigma
  Vec hi;
};

struct NullSpectrum {
  Vec lambdas;     // descending, clipped at zero
  double scale;    // 1/2 KL, 1 ChiSq, 1/4 H2
  double trace;    // sum w_j K(x_j,x_j)/p(x_j), before clipping
  double min_eig_ratio;  // most negative eigenvalue over the largest
  Vec grid_lo, grid_hi;
  int nodes_per_dim = 0;
};

// Nystrom discretization of the null limit: eigenvalues of
// M_jk = sqrt(w_j w_k) K(x_j, x_k) / sqrt(p(x_j) p(x_k)) on an equispaced
// midpoint grid (d <= 2). K is S11 one-sample, the coupled difference kernel
// two-sample. Throws SingularDensity if p underflows at a node.
NullSpectrum null_limit_spectrum(const CovarianceKernel& kernel, Generator gen,
                                 const GridSpec& grid);

struct GaussianLaw {
  double v2 = 0.0;
};
struct WeightedChiSq {
  Vec lambdas;
  double scale = 1.0;
};
struct TVFunctional {
  Matrix nodes;            // m x d
  Vec weights;             // quadrature weights
  Matrix cov;              // m x m covariance of the field at the nodes
  Vec sign;                // sgn(p - q) off the Q set
  std::vector<char> in_q;  // Q-set mask
};
using LimitLaw = std::variant<GaussianLaw, WeightedChiSq, TVFunctional>;

WeightedChiSq to_law(const NullSpectrum& spectrum);

// TV limit functional on a grid. With nu absent (or force_null)
// the Q set is everything. One-sample kernel of G_mu; two-sample builders use
// the coupling's difference kernel.
TVFunctional tv_functional(const CovarianceKernel& kernel, const GridSpec& grid,
                           const SmoothedDensity* q_density, bool force_null);

// Draws from a limit law; TVFunctional samples the Gaussian field through a
// jittered Cholesky factor (three escalations, then CholeskyFailure).
Vec sample_limit(const LimitLaw& law, long count, uint64_t seed);

}  // namespace smoothdiv

#endif
