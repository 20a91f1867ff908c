#include "smoothdiv/audit.hpp"

#include <algorithm>
#include <cmath>

#include "smoothdiv/special.hpp"

namespace smoothdiv {

double threshold_constant(double b, int d, double sigma, bool paper_literal, int nodes) {
  require(b >= 0.0, ErrorCode::InvalidArgument, "threshold_constant: b must be >= 0");
  require(d >= 1, ErrorCode::InvalidArgument, "threshold_constant: d must be >= 1");
  require(sigma > 0.0, ErrorCode::InvalidArgument, "threshold_constant: sigma must be positive");

  const double s2 = sigma * sigma;
  const double rd = std::sqrt(static_cast<double>(d));
  const auto [r, w] = gauss_legendre_on(0.0, 12.0 * (sigma + b), nodes);

  // I_B = int e^{-|x|^2/(4s^2)} (b^2 d + 4 b sqrt(d) |x|) dx
  // I_C = int e^{-|x|^2/(4s^2)} e^{(b^2 d + 4 b sqrt(d) |x|)/(2 s^2)} dx
  double ib = 0.0, ic = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    const double base = w[i] * std::pow(r[i], d - 1) * std::exp(-r[i] * r[i] / (4.0 * s2));
    const double lin = b * b * d + 4.0 * b * rd * r[i];
    ib += base * lin;
    ic += base * std::exp(lin / (2.0 * s2));
  }
  const double area = sphere_area(d);
  ib *= area;
  ic *= area;

  // Four bracketed terms: (I_B/(2s^2))^2 + I_C^2 + 2 I_C I_B/(2s^2).
  const double half = ib / (2.0 * s2);
  const double bracket = half * half + ic * ic + 2.0 * ic * half;
  const double integral =
      std::exp(-d * std::log(2.0 * M_PI * s2) + b * b * d / s2) * bracket;
  return paper_literal ? integral : std::sqrt(integral);
}

double sigma_star(double epsilon, double eps_bar, double s_lo, double s_hi, int d,
                  double m_bar) {
  require(eps_bar > epsilon && epsilon > 0.0, ErrorCode::DomainError,
          "sigma_star: need eps_bar > epsilon > 0");
  require(s_lo > 0.0 && s_lo <= s_hi && s_hi <= 1.0, ErrorCode::DomainError,
          "sigma_star: need 0 < s_lo <= s_hi <= 1");
  require(m_bar >= 1.0, ErrorCode::DomainError, "sigma_star: M_bar must be >= 1");

  const double coef = c_ds(d, s_hi) * m_bar * (m_bar + 1.0 + std::log(m_bar));
  const double target = eps_bar - epsilon;
  auto lhs = [&](double x) {
    return coef * std::max(std::pow(x, s_lo), std::pow(x, s_hi));
  };
  double hi = 1.0;
  while (lhs(hi) < target) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (lhs(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double stability_margin(const AuditConfig& cfg, int d, double sigma) {
  const double coef =
      c_ds(d, cfg.s_hi) * cfg.m_bar * (cfg.m_bar + 1.0 + std::log(cfg.m_bar));
  return coef * std::max(std::pow(sigma, cfg.s_lo), std::pow(sigma, cfg.s_hi));
}

}  // namespace

AuditReport smoothed_kl_audit(const Matrix& pairs, const AuditConfig& cfg,
                              const IntegrationPlan& plan) {
  require(pairs.rows >= 2, ErrorCode::InvalidArgument, "audit: need n >= 2 pairs");
  require(pairs.cols % 2 == 0, ErrorCode::InvalidArgument, "audit: pairs must be n x 2d");
  require(cfg.tau > 0.0 && cfg.tau < 1.0, ErrorCode::InvalidArgument, "audit: tau in (0,1)");
  require(cfg.sigma > 0.0, ErrorCode::InvalidArgument, "audit: sigma must be positive");
  const int d = static_cast<int>(pairs.cols / 2);
  const long n = pairs.rows;

  Matrix xs(n, d), ys(n, d);
  bool warn = false;
  const double limit = cfg.b + 6.0 * cfg.sigma;
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      xs.at(i, j) = pairs.at(i, j);
      ys.at(i, j) = pairs.at(i, d + j);
      if (std::abs(xs.at(i, j)) > limit || std::abs(ys.at(i, j)) > limit) warn = true;
    }
  }

  const SmoothedDensity p = SmoothedDensity::empirical(xs, cfg.sigma);
  const SmoothedDensity q = SmoothedDensity::empirical(ys, cfg.sigma);
  const Estimate t = estimate_divergence(Generator::KL, p, q, plan);

  AuditReport rep;
  rep.n = n;
  rep.sigma_used = cfg.sigma;
  rep.statistic = t.value;
  rep.statistic_std_error = t.std_error;
  rep.support_warning = warn;
  rep.c_bds = threshold_constant(cfg.b, d, cfg.sigma);
  rep.critical_value =
      cfg.epsilon + rep.c_bds * q_inverse(cfg.tau) / std::sqrt(static_cast<double>(n));
  rep.reject = rep.statistic > rep.critical_value;
  return rep;
}

AuditReport kl_audit(const Matrix& pairs, const AuditConfig& cfg, const IntegrationPlan& plan) {
  require(pairs.cols % 2 == 0, ErrorCode::InvalidArgument, "audit: pairs must be n x 2d");
  const int d = static_cast<int>(pairs.cols / 2);
  const double cap = sigma_star(cfg.epsilon, cfg.eps_bar, cfg.s_lo, cfg.s_hi, d, cfg.m_bar);

  AuditConfig run = cfg;
  if (cfg.sigma <= 0.0) {
    run.sigma = 0.9 * cap;
  } else {
    require(cfg.sigma < cap, ErrorCode::SigmaTooLarge,
            "kl_audit: sigma must be below the stability cap sigma_star");
  }
  AuditReport rep = smoothed_kl_audit(pairs, run, plan);
  rep.stability_margin = stability_margin(cfg, d, run.sigma);
  return rep;
}

Coupling local_alternative(const Coupling& base, double cbar, long n_index) {
  require(cbar > 0.0 && n_index >= 1, ErrorCode::InvalidArgument,
          "local_alternative: cbar and n_index must be positive");
  require(has_joint_density(base), ErrorCode::UnsupportedCoupling,
          "local_alternative: base must expose a joint density");
  const double root_n = std::sqrt(static_cast<double>(n_index));
  const int d = dim(base);

  double h_min = 0.0, h_max = 0.0;
  if (is_discrete(base)) {
    const DiscretePairs dp = to_discrete_pairs(base);
    for (size_t k = 0; k < dp.weights.size(); ++k) {
      if (dp.weights[k] <= 0.0) continue;
      const double h = local_alternative_h(base, cbar, ConstSpan(dp.xs[k].data(), d),
                                           ConstSpan(dp.ys[k].data(), d));
      h_min = std::min(h_min, h);
      h_max = std::max(h_max, h);
    }
  } else {
    // Continuous product base: probe the support on a seeded million-point
    // cloud; the construction itself guarantees boundedness on boxes.
    const auto& ip = std::get<IndependentProduct>(base.v);
    Rng rng(0xa17e5);
    Vec x(d), y(d);
    for (long i = 0; i < 1000000; ++i) {
      sample_one(ip.mu, rng, x.data());
      sample_one(ip.nu, rng, y.data());
      const double h = local_alternative_h(base, cbar, ConstSpan(x.data(), x.size()),
                                           ConstSpan(y.data(), y.size()));
      h_min = std::min(h_min, h);
      h_max = std::max(h_max, h);
    }
  }

  if (1.0 + h_min / root_n < 0.0) return base;  // density would go negative
  if (h_min == 0.0 && h_max == 0.0) return base;  // h vanishes (mu0 = nu0)

  Coupling out;
  LocalAlternative la;
  la.base = std::make_shared<Coupling>(base);
  la.cbar = cbar;
  la.n_index = n_index;
  la.h_max = h_max;
  out.v = std::move(la);
  return out;
}

Distribution calibrate_mean_shift(const Distribution& mu0, const Distribution& nu0,
                                  double epsilon, double sigma) {
  require(epsilon > 0.0, ErrorCode::InvalidArgument, "calibrate: epsilon must be positive");
  const int d = dim(nu0);
  const SmoothedDensity p = SmoothedDensity::analytic(mu0, sigma);

  auto shifted = [&](double delta) {
    Distribution out = nu0;
    std::visit(
        [&](auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, PointMass>) v.a[0] += delta;
          if constexpr (std::is_same_v<T, IsotropicGaussian>) v.mean[0] += delta;
          if constexpr (std::is_same_v<T, GaussianMixture>)
            for (auto& m : v.means) m[0] += delta;
          if constexpr (std::is_same_v<T, UniformBox>) {
            v.lo[0] += delta;
            v.hi[0] += delta;
          }
          if constexpr (std::is_same_v<T, DiscreteAtoms>)
            for (auto& a : v.atoms) a[0] += delta;
        },
        out);
    return out;
  };
  auto kl_at = [&](double delta) {
    const SmoothedDensity q = SmoothedDensity::analytic(shifted(delta), sigma);
    TensorGridPlan grid;
    grid.nodes_per_dim = 512;
    Vec lo1, hi1, lo2, hi2;
    p.extent(lo1, hi1);
    q.extent(lo2, hi2);
    grid.lo.resize(d);
    grid.hi.resize(d);
    for (int j = 0; j < d; ++j) {
      grid.lo[j] = std::min(lo1[j], lo2[j]) - 10.0 * sigma;
      grid.hi[j] = std::max(hi1[j], hi2[j]) + 10.0 * sigma;
    }
    return estimate_divergence(Generator::KL, p, q, grid).value;
  };

  double hi = 1.0;
  while (kl_at(hi) < epsilon && hi < 1e6) hi *= 2.0;
  require(kl_at(hi) >= epsilon, ErrorCode::DomainError,
          "calibrate_mean_shift: epsilon unreachable in this family");
  double lo = 0.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double v = kl_at(mid);
    if (std::abs(v - epsilon) <= 1e-4) return shifted(mid);
    if (v < epsilon)
      lo = mid;
    else
      hi = mid;
  }
  return shifted(0.5 * (lo + hi));
}

Distribution calibrate_weight_shift(const DiscreteAtoms& mu0, const DiscreteAtoms& nu0,
                                    double epsilon, double sigma) {
  require(nu0.atoms.size() == 2, ErrorCode::InvalidArgument,
          "calibrate_weight_shift: nu0 must have exactly two atoms");
  const SmoothedDensity p = SmoothedDensity::analytic(Distribution(mu0), sigma);

  auto with_dw = [&](double dw) {
    DiscreteAtoms out = nu0;
    out.probs[0] = nu0.probs[0] - dw;
    out.probs[1] = nu0.probs[1] + dw;
    return out;
  };
  auto kl_at = [&](double dw) {
    const SmoothedDensity q = SmoothedDensity::analytic(Distribution(with_dw(dw)), sigma);
    TensorGridPlan grid;
    grid.nodes_per_dim = 512;
    return estimate_divergence(Generator::KL, p, q, grid).value;
  };

  const double max_dw = nu0.probs[0] - 1e-6;
  require(kl_at(max_dw) >= epsilon, ErrorCode::DomainError,
          "calibrate_weight_shift: epsilon unreachable in this family");
  double lo = 0.0, hi = max_dw;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    const double v = kl_at(mid);
    if (std::abs(v - epsilon) <= 1e-4) return with_dw(mid);
    if (v < epsilon)
      lo = mid;
    else
      hi = mid;
  }
  return with_dw(0.5 * (lo + hi));
}

PowerSimResult power_sim(const Coupling& h0, const std::function<Coupling(long)>& h1_builder,
                         const AuditConfig& cfg, long n, long trials,
                         const IntegrationPlan& plan, uint64_t seed) {
  require(trials >= 50, ErrorCode::InvalidArgument, "power_sim: need at least 50 trials");
  PowerSimResult res;
  res.trials = trials;
  res.n = n;

  const Coupling h1 = h1_builder(n);
  long rej0 = 0, rej1 = 0;
  double sum0 = 0.0, sum1 = 0.0;
  for (long t = 0; t < trials; ++t) {
    const Matrix pairs0 = sample_pairs(h0, n, substream(seed, 2 * t));
    const AuditReport r0 = smoothed_kl_audit(pairs0, cfg, plan);
    rej0 += r0.reject ? 1 : 0;
    sum0 += r0.statistic;

    const Matrix pairs1 = sample_pairs(h1, n, substream(seed, 2 * t + 1));
    const AuditReport r1 = smoothed_kl_audit(pairs1, cfg, plan);
    rej1 += r1.reject ? 1 : 0;
    sum1 += r1.statistic;
  }
  res.level_hat = static_cast<double>(rej0) / trials;
  res.power_hat = static_cast<double>(rej1) / trials;
  res.avg_statistic_h0 = sum0 / trials;
  res.avg_statistic_h1 = sum1 / trials;
  return res;
}

}  // namespace smoothdiv
