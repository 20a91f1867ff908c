#ifndef SMOOTHDIV_DISTRIBUTION_HPP
#define SMOOTHDIV_DISTRIBUTION_HPP

#include <memory>
#include <variant>

#include "smoothdiv/common.hpp"
#include "smoothdiv/rng.hpp"

namespace smoothdiv {

struct PointMass {
  Vec a;
};

struct IsotropicGaussian {
  Vec mean;
  double s = 1.0;  // component standard deviation, covariance s^2 I
};

struct GaussianMixture {
  Vec weights;
  std::vector<Vec> means;
  double s = 1.0;
};

struct UniformBox {
  Vec lo;
  Vec hi;
};

struct DiscreteAtoms {
  std::vector<Vec> atoms;
  Vec probs;
};

using Distribution =
    std::variant<PointMass, IsotropicGaussian, GaussianMixture, UniformBox, DiscreteAtoms>;

int dim(const Distribution& dist);

// Checks probability vectors (nonnegative, sum 1 within 1e-12), box ordering,
// size agreement. Throws InvalidArgument on violation.
void validate(const Distribution& dist);

Matrix sample(const Distribution& dist, long count, uint64_t seed);
void sample_one(const Distribution& dist, Rng& rng, double* out);

// Couplings of paired samples (X, Y).

struct Coupling;

struct IndependentProduct {
  Distribution mu;
  Distribution nu;
};

struct Identical {
  Distribution mu;
};

struct EmpiricalPairs {
  Matrix pairs;  // n x 2d
  int d = 0;
};

struct LocalAlternative {
  std::shared_ptr<const Coupling> base;
  double cbar = 0.0;
  long n_index = 1;
  double h_max = 0.0;  // sup of the perturbation, for rejection sampling
};

struct Coupling {
  std::variant<IndependentProduct, Identical, EmpiricalPairs, LocalAlternative> v;
};

int dim(const Coupling& c);
void validate(const Coupling& c);

Matrix sample_pairs(const Coupling& c, long count, uint64_t seed);

// Marginal laws as distributions (DiscreteAtoms for empirical and perturbed
// discrete couplings). Throws UnsupportedCoupling when not representable.
Distribution marginal_mu(const Coupling& c);
Distribution marginal_nu(const Coupling& c);

// A coupling flattened to weighted pair atoms, when it is discrete.
struct DiscretePairs {
  std::vector<Vec> xs;
  std::vector<Vec> ys;
  Vec weights;
  int d = 0;
};
bool is_discrete(const Coupling& c);
DiscretePairs to_discrete_pairs(const Coupling& c);

// log of the joint density/mass of the base coupling at (x, y), and the
// perturbation h used by the local-alternative construction.
bool has_joint_density(const Coupling& c);
double local_alternative_h(const Coupling& base, double cbar, ConstSpan x, ConstSpan y);

// Noise-injection mechanisms: output pair (g(u)+W, g(v)+W') with W, W' drawn
// independently from the declared noise law.

struct LaplaceIID {
  double b = 1.0;
};
struct GaussianIso {
  double sigma_mech = 1.0;
};

struct Mechanism {
  Vec u_out;
  Vec v_out;
  std::variant<LaplaceIID, GaussianIso> noise;
};

Matrix sample_mechanism_pairs(const Mechanism& m, long count, uint64_t seed);

}  // namespace smoothdiv

#endif
