#include "smoothdiv/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "smoothdiv/special.hpp"

namespace smoothdiv {

namespace {

void check_prob_vector(const Vec& p, const char* what) {
  require(!p.empty(), ErrorCode::InvalidArgument, std::string(what) + ": empty");
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0, ErrorCode::InvalidArgument, std::string(what) + ": negative weight");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidArgument,
          std::string(what) + ": weights must sum to 1 within 1e-12");
}

Vec cumulative(const Vec& p) {
  Vec c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  c.back() = 1.0;
  return c;
}

}  // namespace

int dim(const Distribution& dist) {
  return std::visit(
      [](const auto& d) -> int {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) return static_cast<int>(d.a.size());
        if constexpr (std::is_same_v<T, IsotropicGaussian>) return static_cast<int>(d.mean.size());
        if constexpr (std::is_same_v<T, GaussianMixture>) return static_cast<int>(d.means.at(0).size());
        if constexpr (std::is_same_v<T, UniformBox>) return static_cast<int>(d.lo.size());
        if constexpr (std::is_same_v<T, DiscreteAtoms>) return static_cast<int>(d.atoms.at(0).size());
      },
      dist);
}

void validate(const Distribution& dist) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          require(!d.a.empty(), ErrorCode::InvalidArgument, "PointMass: empty location");
        } else if constexpr (std::is_same_v<T, IsotropicGaussian>) {
          require(!d.mean.empty(), ErrorCode::InvalidArgument, "IsotropicGaussian: empty mean");
          require(d.s > 0.0, ErrorCode::InvalidArgument, "IsotropicGaussian: s must be positive");
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          check_prob_vector(d.weights, "GaussianMixture");
          require(d.weights.size() == d.means.size() && !d.means.empty(),
                  ErrorCode::InvalidArgument, "GaussianMixture: |weights| must equal |means|");
          require(d.s > 0.0, ErrorCode::InvalidArgument, "GaussianMixture: s must be positive");
          for (const auto& m : d.means)
            require(m.size() == d.means[0].size(), ErrorCode::DimensionMismatch,
                    "GaussianMixture: inconsistent mean dimensions");
        } else if constexpr (std::is_same_v<T, UniformBox>) {
          require(!d.lo.empty() && d.lo.size() == d.hi.size(), ErrorCode::InvalidArgument,
                  "UniformBox: lo/hi size mismatch");
          for (size_t i = 0; i < d.lo.size(); ++i)
            require(d.lo[i] < d.hi[i], ErrorCode::InvalidArgument,
                    "UniformBox: lo must be componentwise below hi");
        } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
          check_prob_vector(d.probs, "DiscreteAtoms");
          require(d.atoms.size() == d.probs.size() && !d.atoms.empty(),
                  ErrorCode::InvalidArgument, "DiscreteAtoms: |atoms| must equal |probs|");
          for (const auto& a : d.atoms)
            require(a.size() == d.atoms[0].size(), ErrorCode::DimensionMismatch,
                    "DiscreteAtoms: inconsistent atom dimensions");
        }
      },
      dist);
}

void sample_one(const Distribution& dist, Rng& rng, double* out) {
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          std::copy(d.a.begin(), d.a.end(), out);
        } else if constexpr (std::is_same_v<T, IsotropicGaussian>) {
          for (size_t j = 0; j < d.mean.size(); ++j) out[j] = d.mean[j] + d.s * rng.normal();
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          static thread_local Vec cum;
          cum = cumulative(d.weights);
          const long k = rng.categorical(cum.data(), static_cast<long>(cum.size()));
          for (size_t j = 0; j < d.means[k].size(); ++j)
            out[j] = d.means[k][j] + d.s * rng.normal();
        } else if constexpr (std::is_same_v<T, UniformBox>) {
          for (size_t j = 0; j < d.lo.size(); ++j)
            out[j] = d.lo[j] + rng.uniform() * (d.hi[j] - d.lo[j]);
        } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
          static thread_local Vec cum;
          cum = cumulative(d.probs);
          const long k = rng.categorical(cum.data(), static_cast<long>(cum.size()));
          std::copy(d.atoms[k].begin(), d.atoms[k].end(), out);
        }
      },
      dist);
}

Matrix sample(const Distribution& dist, long count, uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "sample: count must be >= 1");
  validate(dist);
  const int d = dim(dist);
  Matrix out(count, d);
  Rng rng(seed);
  for (long i = 0; i < count; ++i) sample_one(dist, rng, out.row(i));
  return out;
}

int dim(const Coupling& c) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IndependentProduct>) return dim(v.mu);
        if constexpr (std::is_same_v<T, Identical>) return dim(v.mu);
        if constexpr (std::is_same_v<T, EmpiricalPairs>) return v.d;
        if constexpr (std::is_same_v<T, LocalAlternative>) return dim(*v.base);
      },
      c.v);
}

void validate(const Coupling& c) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IndependentProduct>) {
          validate(v.mu);
          validate(v.nu);
          require(dim(v.mu) == dim(v.nu), ErrorCode::DimensionMismatch,
                  "IndependentProduct: marginal dimensions differ");
        } else if constexpr (std::is_same_v<T, Identical>) {
          validate(v.mu);
        } else if constexpr (std::is_same_v<T, EmpiricalPairs>) {
          require(v.d >= 1 && v.pairs.cols == 2 * v.d && v.pairs.rows >= 1,
                  ErrorCode::InvalidArgument, "EmpiricalPairs: need an n x 2d matrix");
        } else if constexpr (std::is_same_v<T, LocalAlternative>) {
          require(v.base != nullptr, ErrorCode::InvalidArgument, "LocalAlternative: null base");
          require(v.cbar > 0.0 && v.n_index >= 1, ErrorCode::InvalidArgument,
                  "LocalAlternative: cbar and n_index must be positive");
          require(has_joint_density(*v.base), ErrorCode::UnsupportedCoupling,
                  "LocalAlternative: base must expose a joint density");
          validate(*v.base);
        }
      },
      c.v);
}

namespace {

double log_mass(const DiscreteAtoms& d, ConstSpan x) {
  for (size_t k = 0; k < d.atoms.size(); ++k) {
    bool eq = true;
    for (size_t j = 0; j < x.size(); ++j)
      if (d.atoms[k][j] != x[j]) { eq = false; break; }
    if (eq) return d.probs[k] > 0 ? std::log(d.probs[k]) : -INFINITY;
  }
  return -INFINITY;
}

// log density (or mass) of a marginal usable in h; only the forms the
// perturbation construction supports.
double log_marginal(const Distribution& dist, ConstSpan x) {
  if (const auto* da = std::get_if<DiscreteAtoms>(&dist)) return log_mass(*da, x);
  if (const auto* g = std::get_if<IsotropicGaussian>(&dist)) {
    double q = 0.0;
    for (size_t j = 0; j < x.size(); ++j) {
      const double t = x[j] - g->mean[j];
      q += t * t;
    }
    const double d = static_cast<double>(x.size());
    return -0.5 * q / (g->s * g->s) - 0.5 * d * std::log(2.0 * M_PI * g->s * g->s);
  }
  if (const auto* b = std::get_if<UniformBox>(&dist)) {
    double lv = 0.0;
    for (size_t j = 0; j < x.size(); ++j) {
      if (x[j] < b->lo[j] || x[j] > b->hi[j]) return -INFINITY;
      lv -= std::log(b->hi[j] - b->lo[j]);
    }
    return lv;
  }
  fail(ErrorCode::UnsupportedCoupling, "marginal lacks a usable density form");
}

}  // namespace

bool has_joint_density(const Coupling& c) {
  if (const auto* ip = std::get_if<IndependentProduct>(&c.v)) {
    auto ok = [](const Distribution& d) {
      return std::holds_alternative<DiscreteAtoms>(d) ||
             std::holds_alternative<IsotropicGaussian>(d) ||
             std::holds_alternative<UniformBox>(d);
    };
    return ok(ip->mu) && ok(ip->nu);
  }
  // Discrete pair couplings expose joint and marginal masses directly.
  return !std::holds_alternative<LocalAlternative>(c.v) && is_discrete(c);
}

double local_alternative_h(const Coupling& base, double cbar, ConstSpan x, ConstSpan y) {
  if (const auto* ip = std::get_if<IndependentProduct>(&base.v);
      ip != nullptr && !is_discrete(base)) {
    // For pi0 = mu0 (x) nu0: d(mu0 x nu0)/dpi0 = 1 and
    // d(nu0 x mu0)/dpi0 = nu0(x) mu0(y) / (mu0(x) nu0(y)).
    const double lm_x = log_marginal(ip->mu, x);
    const double ln_y = log_marginal(ip->nu, y);
    const double ln_x = log_marginal(ip->nu, x);
    const double lm_y = log_marginal(ip->mu, y);
    if (lm_x == -INFINITY || ln_y == -INFINITY)
      fail(ErrorCode::UnsupportedCoupling, "local alternative: point outside base support");
    const double ratio = std::exp((ln_x + lm_y) - (lm_x + ln_y));
    return cbar * (1.0 - ratio);
  }

  require(has_joint_density(base), ErrorCode::UnsupportedCoupling,
          "local alternative requires a base with joint and marginal densities");
  // Discrete pair coupling: joint and marginal masses by atom lookup.
  const DiscretePairs dp = to_discrete_pairs(base);
  auto matches = [](const Vec& a, ConstSpan b) {
    for (size_t j = 0; j < b.size(); ++j)
      if (a[j] != b[j]) return false;
    return true;
  };
  double joint = 0.0, mu_x = 0.0, mu_y = 0.0, nu_x = 0.0, nu_y = 0.0;
  for (size_t k = 0; k < dp.weights.size(); ++k) {
    const bool mx = matches(dp.xs[k], x);
    const bool my = matches(dp.ys[k], y);
    if (mx && my) joint += dp.weights[k];
    if (mx) mu_x += dp.weights[k];
    if (my) nu_y += dp.weights[k];
    if (matches(dp.xs[k], y)) mu_y += dp.weights[k];
    if (matches(dp.ys[k], x)) nu_x += dp.weights[k];
  }
  require(joint > 0.0 || (mu_x * nu_y == 0.0 && nu_x * mu_y == 0.0),
          ErrorCode::UnsupportedCoupling,
          "local alternative: product marginals not dominated by the joint");
  if (joint == 0.0) return 0.0;
  return cbar * (mu_x * nu_y - nu_x * mu_y) / joint;
}

bool is_discrete(const Coupling& c) {
  return std::visit(
      [](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IndependentProduct>)
          return std::holds_alternative<DiscreteAtoms>(v.mu) &&
                 std::holds_alternative<DiscreteAtoms>(v.nu);
        if constexpr (std::is_same_v<T, Identical>)
          return std::holds_alternative<DiscreteAtoms>(v.mu) ||
                 std::holds_alternative<PointMass>(v.mu);
        if constexpr (std::is_same_v<T, EmpiricalPairs>) return true;
        if constexpr (std::is_same_v<T, LocalAlternative>) return is_discrete(*v.base);
      },
      c.v);
}

DiscretePairs to_discrete_pairs(const Coupling& c) {
  DiscretePairs out;
  out.d = dim(c);
  if (const auto* ip = std::get_if<IndependentProduct>(&c.v)) {
    const auto* ma = std::get_if<DiscreteAtoms>(&ip->mu);
    const auto* na = std::get_if<DiscreteAtoms>(&ip->nu);
    require(ma && na, ErrorCode::UnsupportedCoupling, "coupling is not discrete");
    for (size_t i = 0; i < ma->atoms.size(); ++i)
      for (size_t j = 0; j < na->atoms.size(); ++j) {
        out.xs.push_back(ma->atoms[i]);
        out.ys.push_back(na->atoms[j]);
        out.weights.push_back(ma->probs[i] * na->probs[j]);
      }
    return out;
  }
  if (const auto* id = std::get_if<Identical>(&c.v)) {
    if (const auto* da = std::get_if<DiscreteAtoms>(&id->mu)) {
      out.xs = da->atoms;
      out.ys = da->atoms;
      out.weights = da->probs;
      return out;
    }
    if (const auto* pm = std::get_if<PointMass>(&id->mu)) {
      out.xs = {pm->a};
      out.ys = {pm->a};
      out.weights = {1.0};
      return out;
    }
    fail(ErrorCode::UnsupportedCoupling, "Identical coupling over a continuous law");
  }
  if (const auto* ep = std::get_if<EmpiricalPairs>(&c.v)) {
    // Collapse duplicate rows so repeated-atom samples stay cheap downstream.
    std::map<Vec, long> counts;
    Vec key(2 * ep->d);
    for (long i = 0; i < ep->pairs.rows; ++i) {
      key.assign(ep->pairs.row(i), ep->pairs.row(i) + 2 * ep->d);
      ++counts[key];
    }
    const double w = 1.0 / static_cast<double>(ep->pairs.rows);
    for (const auto& [row, cnt] : counts) {
      out.xs.emplace_back(row.begin(), row.begin() + ep->d);
      out.ys.emplace_back(row.begin() + ep->d, row.end());
      out.weights.push_back(w * static_cast<double>(cnt));
    }
    return out;
  }
  const auto& la = std::get<LocalAlternative>(c.v);
  DiscretePairs base = to_discrete_pairs(*la.base);
  const double root_n = std::sqrt(static_cast<double>(la.n_index));
  for (size_t k = 0; k < base.weights.size(); ++k) {
    const double h = local_alternative_h(*la.base, la.cbar, base.xs[k], base.ys[k]);
    base.weights[k] *= 1.0 + h / root_n;
    require(base.weights[k] >= -1e-12, ErrorCode::InvalidArgument,
            "local alternative weights went negative");
    if (base.weights[k] < 0.0) base.weights[k] = 0.0;
  }
  return base;
}

Distribution marginal_mu(const Coupling& c) {
  return std::visit(
      [&](const auto& v) -> Distribution {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IndependentProduct>) return v.mu;
        else if constexpr (std::is_same_v<T, Identical>) return v.mu;
        else {
          DiscretePairs dp = to_discrete_pairs(c);
          DiscreteAtoms da;
          da.atoms = dp.xs;
          da.probs = dp.weights;
          return da;
        }
      },
      c.v);
}

Distribution marginal_nu(const Coupling& c) {
  return std::visit(
      [&](const auto& v) -> Distribution {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IndependentProduct>) return v.nu;
        else if constexpr (std::is_same_v<T, Identical>) return v.mu;
        else {
          DiscretePairs dp = to_discrete_pairs(c);
          DiscreteAtoms da;
          da.atoms = dp.ys;
          da.probs = dp.weights;
          return da;
        }
      },
      c.v);
}

Matrix sample_pairs(const Coupling& c, long count, uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "sample_pairs: count must be >= 1");
  validate(c);
  const int d = dim(c);
  Matrix out(count, 2 * d);
  Rng rng(seed);

  if (const auto* ip = std::get_if<IndependentProduct>(&c.v)) {
    for (long i = 0; i < count; ++i) {
      sample_one(ip->mu, rng, out.row(i));
      sample_one(ip->nu, rng, out.row(i) + d);
    }
    return out;
  }
  if (const auto* id = std::get_if<Identical>(&c.v)) {
    for (long i = 0; i < count; ++i) {
      sample_one(id->mu, rng, out.row(i));
      std::copy(out.row(i), out.row(i) + d, out.row(i) + d);
    }
    return out;
  }
  if (const auto* ep = std::get_if<EmpiricalPairs>(&c.v)) {
    for (long i = 0; i < count; ++i) {
      const long k = static_cast<long>(rng.uniform() * ep->pairs.rows);
      const long kk = k >= ep->pairs.rows ? ep->pairs.rows - 1 : k;
      std::copy(ep->pairs.row(kk), ep->pairs.row(kk) + 2 * d, out.row(i));
    }
    return out;
  }

  // Local alternative over a discrete base is itself a discrete coupling
  // with exactly computable weights; sample it directly.
  const auto& la = std::get<LocalAlternative>(c.v);
  if (is_discrete(*la.base)) {
    const DiscretePairs dp = to_discrete_pairs(c);
    Vec cum(dp.weights.size());
    double acc = 0.0;
    for (size_t k = 0; k < dp.weights.size(); ++k) {
      acc += dp.weights[k];
      cum[k] = acc;
    }
    cum.back() = 1.0;
    for (long i = 0; i < count; ++i) {
      const long k = rng.categorical(cum.data(), static_cast<long>(cum.size()));
      std::copy(dp.xs[k].begin(), dp.xs[k].end(), out.row(i));
      std::copy(dp.ys[k].begin(), dp.ys[k].end(), out.row(i) + d);
    }
    return out;
  }

  // Continuous product base: rejection against the base with acceptance
  // (1 + h/sqrt(n)) / (1 + h_max/sqrt(n)); h_max finite by construction.
  const auto* base_ip = std::get_if<IndependentProduct>(&la.base->v);
  require(base_ip != nullptr, ErrorCode::UnsupportedCoupling,
          "LocalAlternative base must be an independent product with densities");
  const double root_n = std::sqrt(static_cast<double>(la.n_index));
  const double cap = 1.0 + la.h_max / root_n;
  Vec pair(2 * d);
  for (long i = 0; i < count; ++i) {
    for (;;) {
      sample_one(base_ip->mu, rng, pair.data());
      sample_one(base_ip->nu, rng, pair.data() + d);
      const double h = local_alternative_h(*la.base, la.cbar,
                                           ConstSpan(pair.data(), d),
                                           ConstSpan(pair.data() + d, d));
      const double acc = (1.0 + h / root_n) / cap;
      if (rng.uniform() < acc) break;
    }
    std::copy(pair.begin(), pair.end(), out.row(i));
  }
  return out;
}

Matrix sample_mechanism_pairs(const Mechanism& m, long count, uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "sample_mechanism_pairs: count >= 1");
  require(!m.u_out.empty() && m.u_out.size() == m.v_out.size(), ErrorCode::InvalidArgument,
          "Mechanism: query outputs must be nonempty and of equal dimension");
  const int d = static_cast<int>(m.u_out.size());
  Matrix out(count, 2 * d);
  Rng rng(seed);
  auto draw = [&](double* dst, const Vec& base) {
    if (const auto* lap = std::get_if<LaplaceIID>(&m.noise)) {
      for (int j = 0; j < d; ++j) dst[j] = base[j] + rng.laplace(lap->b);
    } else {
      const auto& g = std::get<GaussianIso>(m.noise);
      for (int j = 0; j < d; ++j) dst[j] = base[j] + g.sigma_mech * rng.normal();
    }
  };
  for (long i = 0; i < count; ++i) {
    draw(out.row(i), m.u_out);
    draw(out.row(i) + d, m.v_out);
  }
  return out;
}

}  // namespace smoothdiv
