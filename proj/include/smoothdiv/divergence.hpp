#ifndef SMOOTHDIV_DIVERGENCE_HPP
#define SMOOTHDIV_DIVERGENCE_HPP

#include "smoothdiv/distribution.hpp"
#include "smoothdiv/integrate.hpp"
#include "smoothdiv/smoothing.hpp"

namespace smoothdiv {

enum class Generator { KL, ChiSq, HellingerSq, TV };

const char* generator_name(Generator gen);

// Generator function f and derivatives. f(1) = 0 and f is convex for all
// four; f' is undefined for TV at x = 1 (returns NaN there).
double gen_f(Generator gen, double x);
double gen_f_prime(Generator gen, double x);
double gen_f_second(Generator gen, double x);

enum class ProposalPolicy {
  Default,   // reference measure q for KL/ChiSq/H2, balanced mixture for TV
  Balanced,  // balanced mixture (p+q)/2 for every generator
};

// Plug-in divergence D_f(p || q) for smoothed measures sharing sigma.
// Monte Carlo uses the plan's proposal policy; density ratios go through
// clamped log-ratios. TV always integrates |p - q|/2 against the balanced
// mixture. Grid plans evaluate the integrand directly.
Estimate estimate_divergence(Generator gen, const SmoothedDensity& p, const SmoothedDensity& q,
                             const IntegrationPlan& plan,
                             ProposalPolicy policy = ProposalPolicy::Default);

// Divergence between N(a, sigma^2 I) and N(b, sigma^2 I): KL = D^2/(2s^2),
// chi2 = e^{D^2/s^2} - 1, H2 = 2(1 - e^{-D^2/(8s^2)}), TV = erf(D/(2 sqrt2 s))
// with D = ||a - b||.
double closed_form(Generator gen, ConstSpan a, ConstSpan b, double sigma);

// c_{d,s} M (M + 1 + log M) sigma^s; bound on |KL - smoothed KL| for
// Lipschitz-class densities with ratio bound M >= 1.
double stability_bound(double M, double s, int d, double sigma);

// Condition integral int Var_mu(phi_sigma(x - .)) / mu*phi_sigma(x) dx.
// Monte Carlo runs three doublings of n_mc and flags PRESUMED_DIVERGENT when
// the std error fails to shrink (or the value exceeds 1e12); the integral can
// genuinely be infinite and the tool says so instead of returning a number.
Estimate chi2_information(const Distribution& mu, double sigma, const IntegrationPlan& plan);
Estimate chi2_information(const Matrix& samples, double sigma, const IntegrationPlan& plan);

}  // namespace smoothdiv

#endif
