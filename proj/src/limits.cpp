#include "smoothdiv/limits.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "smoothdiv/special.hpp"

namespace smoothdiv {

namespace {

double log_phi(double sq_norm, int d, double sigma) {
  return -0.5 * sq_norm / (sigma * sigma) - 0.5 * d * std::log(2.0 * M_PI * sigma * sigma);
}

double sq_dist(ConstSpan x, ConstSpan y) {
  double q = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    const double t = x[j] - y[j];
    q += t * t;
  }
  return q;
}

double sq_dist(ConstSpan x, const Vec& y) { return sq_dist(x, ConstSpan(y.data(), y.size())); }

}  // namespace

CovarianceKernel CovarianceKernel::one_sample(const Distribution& mu, double sigma) {
  CovarianceKernel k(SmoothedDensity::analytic(mu, sigma),
                     SmoothedDensity::analytic(mu, sigma / std::sqrt(2.0)), sigma);
  return k;
}

CovarianceKernel CovarianceKernel::one_sample(const Matrix& samples, double sigma) {
  CovarianceKernel k(SmoothedDensity::empirical(samples, sigma),
                     SmoothedDensity::empirical(samples, sigma / std::sqrt(2.0)), sigma);
  return k;
}

CovarianceKernel CovarianceKernel::two_sample(const Coupling& coupling, double sigma) {
  validate(coupling);
  const Distribution mu = marginal_mu(coupling);
  const Distribution nu = marginal_nu(coupling);
  CovarianceKernel k(SmoothedDensity::analytic(mu, sigma),
                     SmoothedDensity::analytic(mu, sigma / std::sqrt(2.0)), sigma);
  k.two_sample_ = true;
  k.nu_sigma_ = SmoothedDensity::analytic(nu, sigma);
  k.nu_half_ = SmoothedDensity::analytic(nu, sigma / std::sqrt(2.0));
  if (std::holds_alternative<Identical>(coupling.v)) {
    k.identical_pair_ = true;
  } else if (std::holds_alternative<IndependentProduct>(coupling.v)) {
    k.independent_pair_ = true;
  } else {
    k.pair_atoms_ = to_discrete_pairs(coupling);
  }
  return k;
}

double CovarianceKernel::same_var(const SmoothedDensity& rho_s, const SmoothedDensity& rho_h,
                                  ConstSpan x, ConstSpan y) const {
  const int d = dim();
  Vec mid(d);
  for (int j = 0; j < d; ++j) mid[j] = 0.5 * (x[j] + y[j]);
  const double l_joint = log_phi(sq_dist(x, y), d, sigma_ * std::sqrt(2.0)) +
                         rho_h.log_density(ConstSpan(mid.data(), mid.size()));
  return std::exp(l_joint) - std::exp(rho_s.log_density(x) + rho_s.log_density(y));
}

double CovarianceKernel::cross(ConstSpan x, ConstSpan y) const {
  const int d = dim();
  if (identical_pair_) {
    // X = Y pathwise, so the cross moment is the same-variable moment.
    return same_var(mu_sigma_, mu_half_, x, y);
  }
  if (independent_pair_) return 0.0;
  const auto& pa = *pair_atoms_;
  double acc = 0.0;
  for (size_t kk = 0; kk < pa.weights.size(); ++kk) {
    if (pa.weights[kk] == 0.0) continue;
    acc += pa.weights[kk] *
           std::exp(log_phi(sq_dist(x, pa.xs[kk]), d, sigma_) +
                    log_phi(sq_dist(y, pa.ys[kk]), d, sigma_));
  }
  return acc - std::exp(mu_sigma_.log_density(x) + nu_sigma().log_density(y));
}

double CovarianceKernel::entry(int i, int j, ConstSpan x, ConstSpan y) const {
  require(i >= 1 && i <= 2 && j >= 1 && j <= 2, ErrorCode::InvalidArgument,
          "CovarianceKernel: entry index must be 1 or 2");
  require(two_sample_ || (i == 1 && j == 1), ErrorCode::InvalidArgument,
          "CovarianceKernel: one-sample kernel has only the (1,1) entry");
  if (i == 1 && j == 1) return same_var(mu_sigma_, mu_half_, x, y);
  if (i == 2 && j == 2) return same_var(*nu_sigma_, *nu_half_, x, y);
  if (i == 1 && j == 2) return cross(x, y);
  return cross(y, x);
}

double CovarianceKernel::null_diff(ConstSpan x, ConstSpan y) const {
  require(two_sample_, ErrorCode::InvalidArgument, "null_diff needs a two-sample kernel");
  return entry(1, 1, x, y) + entry(2, 2, x, y) - entry(1, 2, x, y) - entry(2, 1, x, y);
}

VarianceFunctionals variance_functionals(Generator gen, const SmoothedDensity& p,
                                         const SmoothedDensity& q) {
  require(gen != Generator::TV, ErrorCode::UnsupportedGenerator,
          "variance functionals are undefined for TV (non-differentiable at 1)");
  VarianceFunctionals out;
  switch (gen) {
    case Generator::KL:
      out.L1 = [&p, &q](ConstSpan x) { return log_ratio(p, q, x); };
      out.L2 = [&p, &q](ConstSpan x) { return -clamped_ratio(log_ratio(p, q, x)); };
      break;
    case Generator::ChiSq:
      // Sign convention follows the raw forms (f', f - r f'): the second
      // reduced functional is -r^2, so cross terms keep their sign under
      // correlated couplings.
      out.L1 = [&p, &q](ConstSpan x) { return 2.0 * clamped_ratio(log_ratio(p, q, x)); };
      out.L2 = [&p, &q](ConstSpan x) {
        const double r = clamped_ratio(log_ratio(p, q, x));
        return -r * r;
      };
      break;
    case Generator::HellingerSq:
      out.L1 = [&p, &q](ConstSpan x) { return std::exp(-0.5 * log_ratio(p, q, x)); };
      out.L2 = [&p, &q](ConstSpan x) { return std::exp(0.5 * log_ratio(p, q, x)); };
      break;
    default:
      break;
  }
  return out;
}

VarianceFunctionals raw_functionals(Generator gen, const SmoothedDensity& p,
                                    const SmoothedDensity& q) {
  require(gen != Generator::TV, ErrorCode::UnsupportedGenerator,
          "variance functionals are undefined for TV (non-differentiable at 1)");
  VarianceFunctionals out;
  out.L1 = [gen, &p, &q](ConstSpan x) {
    return gen_f_prime(gen, clamped_ratio(log_ratio(p, q, x)));
  };
  out.L2 = [gen, &p, &q](ConstSpan x) {
    const double r = clamped_ratio(log_ratio(p, q, x));
    return gen_f(gen, r) - r * gen_f_prime(gen, r);
  };
  return out;
}

double convolve_gaussian(const std::function<double(ConstSpan)>& f, ConstSpan point,
                         double sigma, const IntegrationPlan& plan, uint64_t salt) {
  const int d = static_cast<int>(point.size());
  if (const auto* grid = std::get_if<TensorGridPlan>(&plan)) {
    require(d <= 3, ErrorCode::InvalidArgument, "grid convolution supports d <= 3");
    const int m = grid->nodes_per_dim;
    std::vector<Vec> nodes(d), wts(d);
    for (int j = 0; j < d; ++j) {
      auto [x, w] = gauss_legendre_on(point[j] - 8.0 * sigma, point[j] + 8.0 * sigma, m);
      nodes[j] = std::move(x);
      wts[j] = std::move(w);
    }
    long total = 1;
    for (int j = 0; j < d; ++j) total *= m;
    Vec z(d);
    double acc = 0.0;
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      double w = 1.0;
      for (int j = 0; j < d; ++j) {
        const int i = static_cast<int>(rem % m);
        rem /= m;
        z[j] = nodes[j][i];
        w *= wts[j][i];
      }
      acc += w * f(ConstSpan(z.data(), z.size())) *
             std::exp(log_phi(sq_dist(ConstSpan(z.data(), z.size()), point), d, sigma));
    }
    return acc;
  }
  const auto& mc = std::get<MonteCarloPlan>(plan);
  Rng rng(substream(mc.seed, salt));
  Vec z(d);
  double acc = 0.0;
  for (long i = 0; i < mc.n_mc; ++i) {
    for (int j = 0; j < d; ++j) z[j] = point[j] + sigma * rng.normal();
    acc += f(ConstSpan(z.data(), z.size()));
  }
  return acc / static_cast<double>(mc.n_mc);
}

namespace {

struct WeightedValues {
  Vec values;
  Vec weights;  // empty means equal weights
};

Estimate weighted_variance(const WeightedValues& wv) {
  Estimate est;
  const long n = static_cast<long>(wv.values.size());
  est.n_used = n;
  if (n <= 1) return est;
  if (!wv.weights.empty()) {
    double mean = 0.0;
    for (long i = 0; i < n; ++i) mean += wv.weights[i] * wv.values[i];
    double var = 0.0;
    for (long i = 0; i < n; ++i) {
      const double c = wv.values[i] - mean;
      var += wv.weights[i] * c * c;
    }
    est.value = var;
    est.std_error = 0.0;  // exact enumeration; inner quadrature error not estimated
    return est;
  }
  double mean = 0.0;
  for (double v : wv.values) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : wv.values) {
    const double c = v - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  const double s2 = m2 / (n - 1);
  m4 /= n;
  est.value = s2;
  // Var(s^2) ~ (m4 - s^4 (n-3)/(n-1)) / n.
  const double vs2 = std::max(0.0, (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n);
  est.std_error = std::sqrt(vs2);
  return est;
}

bool discrete_atoms_of(const Distribution& dist, std::vector<Vec>* atoms, Vec* probs) {
  if (const auto* pm = std::get_if<PointMass>(&dist)) {
    *atoms = {pm->a};
    *probs = {1.0};
    return true;
  }
  if (const auto* da = std::get_if<DiscreteAtoms>(&dist)) {
    *atoms = da->atoms;
    *probs = da->probs;
    return true;
  }
  return false;
}

long outer_draws(const IntegrationPlan& plan) {
  if (const auto* mc = std::get_if<MonteCarloPlan>(&plan)) return std::max<long>(2, mc->n_mc);
  return 20000;
}

uint64_t plan_seed(const IntegrationPlan& plan) {
  if (const auto* mc = std::get_if<MonteCarloPlan>(&plan)) return mc->seed;
  return 0x5eed;
}

}  // namespace

Estimate one_sample_variance(Generator gen, const Distribution& mu, const Distribution& nu,
                             double sigma, const IntegrationPlan& plan) {
  const SmoothedDensity p = SmoothedDensity::analytic(mu, sigma);
  const SmoothedDensity q = SmoothedDensity::analytic(nu, sigma);
  const VarianceFunctionals fns = variance_functionals(gen, p, q);

  std::vector<Vec> atoms;
  Vec probs;
  WeightedValues wv;
  if (discrete_atoms_of(mu, &atoms, &probs)) {
    wv.weights = probs;
    for (size_t i = 0; i < atoms.size(); ++i)
      wv.values.push_back(convolve_gaussian(fns.L1, ConstSpan(atoms[i].data(), atoms[i].size()),
                                            sigma, plan, 1000 + i));
    return weighted_variance(wv);
  }
  const long n = outer_draws(plan);
  Rng rng(substream(plan_seed(plan), 7001));
  Vec x(dim(mu));
  for (long i = 0; i < n; ++i) {
    sample_one(mu, rng, x.data());
    wv.values.push_back(convolve_gaussian(fns.L1, ConstSpan(x.data(), x.size()), sigma, plan,
                                          2000 + static_cast<uint64_t>(i)));
  }
  return weighted_variance(wv);
}

Estimate two_sample_variance(Generator gen, const Coupling& coupling, double sigma,
                             const IntegrationPlan& plan) {
  validate(coupling);
  const SmoothedDensity p = SmoothedDensity::analytic(marginal_mu(coupling), sigma);
  const SmoothedDensity q = SmoothedDensity::analytic(marginal_nu(coupling), sigma);
  const VarianceFunctionals fns = variance_functionals(gen, p, q);
  const int d = dim(coupling);

  WeightedValues wv;
  if (is_discrete(coupling)) {
    const DiscretePairs dp = to_discrete_pairs(coupling);
    // Convolutions are shared across repeated atoms through a tiny cache.
    std::map<Vec, double> g1, g2;
    for (size_t k = 0; k < dp.weights.size(); ++k) {
      auto it1 = g1.find(dp.xs[k]);
      if (it1 == g1.end())
        it1 = g1.emplace(dp.xs[k],
                         convolve_gaussian(fns.L1, ConstSpan(dp.xs[k].data(), dp.xs[k].size()),
                                           sigma, plan, 3000 + g1.size()))
                  .first;
      auto it2 = g2.find(dp.ys[k]);
      if (it2 == g2.end())
        it2 = g2.emplace(dp.ys[k],
                         convolve_gaussian(fns.L2, ConstSpan(dp.ys[k].data(), dp.ys[k].size()),
                                           sigma, plan, 4000 + g2.size()))
                  .first;
      wv.values.push_back(it1->second + it2->second);
      wv.weights.push_back(dp.weights[k]);
    }
    return weighted_variance(wv);
  }

  const long n = outer_draws(plan);
  const Matrix pairs = sample_pairs(coupling, n, substream(plan_seed(plan), 7002));
  for (long i = 0; i < n; ++i) {
    const double gx = convolve_gaussian(fns.L1, ConstSpan(pairs.row(i), d), sigma, plan,
                                        5000 + 2 * static_cast<uint64_t>(i));
    const double gy = convolve_gaussian(fns.L2, ConstSpan(pairs.row(i) + d, d), sigma, plan,
                                        5001 + 2 * static_cast<uint64_t>(i));
    wv.values.push_back(gx + gy);
  }
  return weighted_variance(wv);
}

double variance_double_integral(const CovarianceKernel& kernel,
                                const VarianceFunctionals& fns, bool one_sample,
                                const TensorGridPlan& grid) {
  require(kernel.dim() == 1, ErrorCode::InvalidArgument,
          "variance_double_integral: oracle implemented for d = 1");
  auto [xs, ws] = gauss_legendre_on(grid.lo.at(0), grid.hi.at(0), grid.nodes_per_dim);
  const long m = static_cast<long>(xs.size());
  Vec l1(m), l2(m);
  for (long i = 0; i < m; ++i) {
    const ConstSpan xi(&xs[i], 1);
    l1[i] = fns.L1(xi);
    l2[i] = one_sample ? 0.0 : fns.L2(xi);
  }
  double acc = 0.0;
  for (long i = 0; i < m; ++i) {
    const ConstSpan xi(&xs[i], 1);
    for (long j = 0; j < m; ++j) {
      const ConstSpan xj(&xs[j], 1);
      double term = kernel.entry(1, 1, xi, xj) * l1[i] * l1[j];
      if (!one_sample) {
        term += kernel.entry(2, 2, xi, xj) * l2[i] * l2[j];
        term += kernel.entry(1, 2, xi, xj) * l1[i] * l2[j];
        term += kernel.entry(2, 1, xi, xj) * l2[i] * l1[j];
      }
      acc += ws[i] * ws[j] * term;
    }
  }
  return acc;
}

namespace {

struct NodeGrid {
  Matrix nodes;  // m x d
  Vec weights;
  Vec lo, hi;
  int nodes_per_dim = 0;
};

NodeGrid build_grid(const SmoothedDensity& density, const GridSpec& spec) {
  const int d = density.dim();
  require(d <= 2, ErrorCode::InvalidArgument, "spectrum/TV grids support d <= 2");
  Vec lo = spec.lo, hi = spec.hi;
  if (lo.empty()) {
    density.extent(lo, hi);
    for (int j = 0; j < d; ++j) {
      lo[j] -= 6.0 * density.sigma();
      hi[j] += 6.0 * density.sigma();
    }
  }
  const int m = spec.nodes_per_dim;
  require(m >= 2, ErrorCode::InvalidArgument, "grid needs at least 2 nodes per dim");
  NodeGrid g;
  g.lo = lo;
  g.hi = hi;
  g.nodes_per_dim = m;
  long total = 1;
  for (int j = 0; j < d; ++j) total *= m;
  require(total <= 4096, ErrorCode::InvalidArgument,
          "grid has too many nodes for a dense eigensolve; reduce nodes per dim");
  g.nodes = Matrix(total, d);
  g.weights.assign(total, 1.0);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int j = 0; j < d; ++j) {
      const long i = rem % m;
      rem /= m;
      const double h = (hi[j] - lo[j]) / m;
      g.nodes.at(idx, j) = lo[j] + (i + 0.5) * h;  // midpoint rule
      g.weights[idx] *= h;
    }
  }
  return g;
}

Vec eigenvalues_sym(Matrix& a) {
  const int n = static_cast<int>(a.rows);
  Vec w(n);
  const int info = LAPACKE_dsyev(LAPACK_ROW_MAJOR, 'N', 'U', n, a.data.data(), n, w.data());
  require(info == 0, ErrorCode::InvalidArgument, "eigensolve failed");
  return w;
}

}  // namespace

NullSpectrum null_limit_spectrum(const CovarianceKernel& kernel, Generator gen,
                                 const GridSpec& spec) {
  double scale = 0.0;
  switch (gen) {
    case Generator::KL: scale = 0.5; break;
    case Generator::ChiSq: scale = 1.0; break;
    case Generator::HellingerSq: scale = 0.25; break;
    default:
      fail(ErrorCode::UnsupportedGenerator, "null spectrum covers KL, ChiSq, H2 only");
  }
  const NodeGrid grid = build_grid(kernel.mu_sigma(), spec);
  const long m = grid.nodes.rows;

  Vec p(m);
  for (long i = 0; i < m; ++i) {
    p[i] = std::exp(kernel.mu_sigma().log_density(grid.nodes.row_span(i)));
    require(p[i] >= 1e-300, ErrorCode::SingularDensity,
            "null_limit_spectrum: reference density underflows on the grid");
  }

  Matrix M(m, m);
  double trace = 0.0;
  for (long i = 0; i < m; ++i) {
    for (long j = i; j < m; ++j) {
      const double k = kernel.is_two_sample()
                           ? kernel.null_diff(grid.nodes.row_span(i), grid.nodes.row_span(j))
                           : kernel.entry(1, 1, grid.nodes.row_span(i), grid.nodes.row_span(j));
      const double v = std::sqrt(grid.weights[i] * grid.weights[j]) * k / std::sqrt(p[i] * p[j]);
      M.at(i, j) = v;
      M.at(j, i) = v;
      if (i == j) trace += grid.weights[i] * k / p[i];
    }
  }

  Vec eig = eigenvalues_sym(M);  // ascending
  NullSpectrum out;
  out.scale = scale;
  out.trace = trace;
  out.grid_lo = grid.lo;
  out.grid_hi = grid.hi;
  out.nodes_per_dim = grid.nodes_per_dim;
  const double max_eig = eig.empty() ? 0.0 : eig.back();
  out.min_eig_ratio = max_eig > 0.0 ? eig.front() / max_eig : 0.0;
  out.lambdas.assign(eig.rbegin(), eig.rend());
  for (double& l : out.lambdas) l = std::max(0.0, l);  // discretization noise
  return out;
}

WeightedChiSq to_law(const NullSpectrum& spectrum) {
  WeightedChiSq law;
  law.scale = spectrum.scale;
  for (double l : spectrum.lambdas)
    if (l > 1e-14 * (spectrum.lambdas.empty() ? 1.0 : spectrum.lambdas.front()))
      law.lambdas.push_back(l);
  if (law.lambdas.empty()) law.lambdas.push_back(0.0);
  return law;
}

TVFunctional tv_functional(const CovarianceKernel& kernel, const GridSpec& spec,
                           const SmoothedDensity* q_density, bool force_null) {
  const NodeGrid grid = build_grid(kernel.mu_sigma(), spec);
  const long m = grid.nodes.rows;
  TVFunctional law;
  law.nodes = grid.nodes;
  law.weights = grid.weights;
  law.cov = Matrix(m, m);
  law.sign.assign(m, 0.0);
  law.in_q.assign(m, 1);

  for (long i = 0; i < m; ++i)
    for (long j = i; j < m; ++j) {
      const double k = kernel.is_two_sample()
                           ? kernel.null_diff(grid.nodes.row_span(i), grid.nodes.row_span(j))
                           : kernel.entry(1, 1, grid.nodes.row_span(i), grid.nodes.row_span(j));
      law.cov.at(i, j) = k;
      law.cov.at(j, i) = k;
    }

  if (!force_null && q_density != nullptr) {
    for (long i = 0; i < m; ++i) {
      const double pv = std::exp(kernel.mu_sigma().log_density(grid.nodes.row_span(i)));
      const double qv = std::exp(q_density->log_density(grid.nodes.row_span(i)));
      // Exact density equality off the null is measure-zero; the tolerance
      // keeps the sign pattern from chattering.
      if (std::abs(pv - qv) <= 1e-9 * (pv + qv)) {
        law.in_q[i] = 1;
        law.sign[i] = 0.0;
      } else {
        law.in_q[i] = 0;
        law.sign[i] = pv > qv ? 1.0 : -1.0;
      }
    }
  }
  return law;
}

namespace {

// In-place lower Cholesky; returns false if a pivot fails.
bool cholesky(Matrix& a) {
  const long n = a.rows;
  for (long j = 0; j < n; ++j) {
    double diag = a.at(j, j);
    for (long k = 0; k < j; ++k) diag -= a.at(j, k) * a.at(j, k);
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    a.at(j, j) = ljj;
    for (long i = j + 1; i < n; ++i) {
      double v = a.at(i, j);
      for (long k = 0; k < j; ++k) v -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = v / ljj;
    }
    for (long k = j + 1; k < n; ++k) a.at(j, k) = 0.0;
  }
  return true;
}

}  // namespace

Vec sample_limit(const LimitLaw& law, long count, uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "sample_limit: count must be >= 1");
  Vec out(count);
  Rng rng(seed);

  if (const auto* g = std::get_if<GaussianLaw>(&law)) {
    require(g->v2 >= 0.0, ErrorCode::InvalidArgument, "GaussianLaw: v2 must be >= 0");
    const double sd = std::sqrt(g->v2);
    for (long i = 0; i < count; ++i) out[i] = sd * rng.normal();
    return out;
  }
  if (const auto* wc = std::get_if<WeightedChiSq>(&law)) {
    for (long i = 0; i < count; ++i) {
      double acc = 0.0;
      for (double l : wc->lambdas) {
        const double z = rng.normal();
        acc += l * z * z;
      }
      out[i] = wc->scale * acc;
    }
    return out;
  }

  const auto& tv = std::get<TVFunctional>(law);
  const long m = tv.cov.rows;
  double trace = 0.0;
  for (long i = 0; i < m; ++i) trace += tv.cov.at(i, i);
  double jitter = 1e-10 * trace / static_cast<double>(m);
  Matrix L;
  bool ok = false;
  for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
    L = tv.cov;
    for (long i = 0; i < m; ++i) L.at(i, i) += jitter;
    ok = cholesky(L);
    if (!ok) jitter *= 10.0;
  }
  require(ok, ErrorCode::CholeskyFailure,
          "TV limit: covariance not factorizable after 3 jitter escalations");

  Vec z(m), g(m);
  for (long rep = 0; rep < count; ++rep) {
    for (long i = 0; i < m; ++i) z[i] = rng.normal();
    double val = 0.0;
    for (long i = 0; i < m; ++i) {
      double acc = 0.0;
      for (long k = 0; k <= i; ++k) acc += L.at(i, k) * z[k];
      g[i] = acc;
      val += tv.in_q[i] ? 0.5 * tv.weights[i] * std::abs(g[i])
                        : 0.5 * tv.weights[i] * tv.sign[i] * g[i];
    }
    out[rep] = val;
  }
  return out;
}

}  // namespace smoothdiv
