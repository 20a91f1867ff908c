#ifndef SMOOTHDIV_INTEGRATE_HPP
#define SMOOTHDIV_INTEGRATE_HPP

#include <functional>
#include <variant>

#include "smoothdiv/common.hpp"
#include "smoothdiv/rng.hpp"
#include "smoothdiv/smoothing.hpp"

namespace smoothdiv {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_used = 0;
  bool presumed_divergent = false;
};

// Proposal measure for Monte Carlo: must dominate the integrand's support.
class Proposal {
 public:
  virtual ~Proposal() = default;
  virtual void sample_one(Rng& rng, double* out) const = 0;
  virtual double log_pdf(ConstSpan x) const = 0;
  virtual int dim() const = 0;
};

class DensityProposal : public Proposal {
 public:
  explicit DensityProposal(const SmoothedDensity& q) : q_(q) {}
  void sample_one(Rng& rng, double* out) const override { q_.sample_one(rng, out); }
  double log_pdf(ConstSpan x) const override { return q_.log_density(x); }
  int dim() const override { return q_.dim(); }

 private:
  const SmoothedDensity& q_;
};

// Balanced mixture (p + q)/2, mass wherever either density lives.
class BalancedProposal : public Proposal {
 public:
  BalancedProposal(const SmoothedDensity& p, const SmoothedDensity& q) : p_(p), q_(q) {}
  void sample_one(Rng& rng, double* out) const override {
    if (rng.uniform() < 0.5)
      p_.sample_one(rng, out);
    else
      q_.sample_one(rng, out);
  }
  double log_pdf(ConstSpan x) const override {
    const double lp = p_.log_density(x);
    const double lq = q_.log_density(x);
    const double m = lp > lq ? lp : lq;
    return m + std::log(0.5 * (std::exp(lp - m) + std::exp(lq - m)));
  }
  int dim() const override { return p_.dim(); }

 private:
  const SmoothedDensity& p_;
  const SmoothedDensity& q_;
};

struct MonteCarloPlan {
  long n_mc = 100000;
  uint64_t seed = 0;
  int threads = 1;
};

struct TensorGridPlan {
  int nodes_per_dim = 256;
  Vec lo;  // per-dimension bounds
  Vec hi;
};

using IntegrationPlan = std::variant<MonteCarloPlan, TensorGridPlan>;

// Monte Carlo integral of g over R^d: mean of g/proposal-pdf under proposal
// draws. Deterministic for fixed seed regardless of thread count (fixed-size
// chunk substreams, reduced in chunk order). Throws NonFiniteIntegrand.
Estimate integrate_mc(const std::function<double(ConstSpan)>& g, const Proposal& proposal,
                      const MonteCarloPlan& plan);

// Tensor-product Gauss-Legendre integral over the plan's box (d <= 3).
// std_error is 0 by design; grid error is not estimated.
Estimate integrate_grid(const std::function<double(ConstSpan)>& g, const TensorGridPlan& plan);

Estimate integrate(const std::function<double(ConstSpan)>& g, const Proposal& proposal,
                   const IntegrationPlan& plan);

// Expectation of f under MC draws (integrand already includes any density
// ratio); shared chunked kernel used by the divergence estimators.
Estimate mc_mean(const std::function<double(Rng&)>& draw_value, long n_mc, uint64_t seed,
                 int threads);

}  // namespace smoothdiv

#endif
