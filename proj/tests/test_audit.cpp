#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "smoothdiv/audit.hpp"
#include "smoothdiv/special.hpp"
#include "test_util.hpp"

using namespace smoothdiv;

namespace {

TensorGridPlan grid_1d(int nodes = 512) {
  TensorGridPlan g;
  g.nodes_per_dim = nodes;
  return g;
}

Matrix identical_pairs(long n) {
  Coupling c{Identical{DiscreteAtoms{{{-0.2}, {0.2}}, {0.5, 0.5}}}};
  return sample_pairs(c, n, 400);
}

// Full 2d-dimensional tensor-grid evaluation of the threshold integral.
// The integrand depends on the coordinates only through |x_j|, so we
// integrate over the positive orthant and scale by 2^{2d}; this keeps every
// coordinate slice smooth for Gauss-Legendre.
double threshold_oracle_2d(double b, int d, double sigma, int nodes) {
  const double s2 = sigma * sigma;
  const double rd = std::sqrt(static_cast<double>(d));
  const double L = 12.0 * (sigma + b);
  auto [xs, ws] = gauss_legendre_on(0.0, L, nodes);
  const int m = nodes;
  long total = 1;
  for (int j = 0; j < 2 * d; ++j) total *= m;

  double acc = 0.0;
  for (long t = 0; t < total; ++t) {
    long rem = t;
    double w = 1.0, nx = 0.0, ny = 0.0;
    for (int j = 0; j < 2 * d; ++j) {
      const int i = static_cast<int>(rem % m);
      rem /= m;
      w *= ws[i];
      const double v = xs[i] * xs[i];
      if (j < d)
        nx += v;
      else
        ny += v;
    }
    nx = std::sqrt(nx);
    ny = std::sqrt(ny);
    const double lx = b * b * d + 4.0 * b * rd * nx;
    const double ly = b * b * d + 4.0 * b * rd * ny;
    const double bracket = lx * ly / (4.0 * s2 * s2) +
                           std::exp((lx + ly) / (2.0 * s2)) +
                           std::exp(lx / (2.0 * s2)) * ly / (2.0 * s2) +
                           std::exp(ly / (2.0 * s2)) * lx / (2.0 * s2);
    acc += w * std::exp(-(nx * nx + ny * ny) / (4.0 * s2)) * bracket;
  }
  acc *= std::pow(2.0, 2 * d);
  return std::exp(-d * std::log(2.0 * M_PI * s2) + b * b * d / s2) * acc;
}

}  // namespace

TEST_CASE("threshold constant at b = 0 is 2^{d/2}") {
  for (int d : {1, 2, 3}) {
    for (double sigma : {0.5, 1.0}) {
      CHECK(threshold_constant(0.0, d, sigma) ==
            doctest::Approx(std::pow(2.0, 0.5 * d)).epsilon(1e-10));
    }
  }
}

TEST_CASE("threshold constant grows with b") {
  CHECK(threshold_constant(0.5, 1, 1.0) < threshold_constant(1.0, 1, 1.0));
}

TEST_CASE("factorized threshold matches the full 2d-grid oracle (d = 1)") {
  for (double b : {0.3, 1.0}) {
    const double fact = threshold_constant(b, 1, 1.0, true);
    const double oracle = threshold_oracle_2d(b, 1, 1.0, 400);
    CHECK(fact == doctest::Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("paper-literal value is the square of the rooted constant") {
  const double rooted = threshold_constant(0.7, 1, 1.0, false);
  const double literal = threshold_constant(0.7, 1, 1.0, true);
  CHECK(rooted * rooted == doctest::Approx(literal).epsilon(1e-12));
}

TEST_CASE("sigma_star linear case and scaling") {
  const double x = sigma_star(0.1, 0.2, 1.0, 1.0, 1, 1.0);
  CHECK(x == doctest::Approx(0.1 / (2.0 * std::sqrt(2.0 / M_PI))).epsilon(1e-6));
  const double x2 = sigma_star(0.1, 0.3, 1.0, 1.0, 1, 1.0);
  CHECK(x2 == doctest::Approx(2.0 * x).epsilon(1e-6));

  // With s_lo < s_hi and root below one, the max picks the s_lo branch.
  const double r = sigma_star(0.1, 0.2, 0.5, 1.0, 1, 1.0);
  CHECK(r < 1.0);
  const double coef = c_ds(1, 1.0) * 1.0 * 2.0;
  CHECK(coef * std::pow(r, 0.5) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(std::pow(r, 0.5) > std::pow(r, 1.0));

  CHECK_THROWS_AS(sigma_star(0.2, 0.1, 1.0, 1.0, 1, 1.0), Error);
  CHECK_THROWS_AS(sigma_star(0.1, 0.2, 0.0, 1.0, 1, 1.0), Error);
  CHECK_THROWS_AS(sigma_star(0.1, 0.2, 1.0, 1.0, 1, 0.5), Error);
}

TEST_CASE("identical blocks never reject below tau one half") {
  const Matrix pairs = identical_pairs(200);
  AuditConfig cfg;
  cfg.epsilon = 0.05;
  cfg.b = 0.2;
  cfg.sigma = 1.0;
  for (double tau : {0.05, 0.25, 0.49}) {
    cfg.tau = tau;
    const AuditReport rep = smoothed_kl_audit(pairs, cfg, grid_1d());
    CHECK(rep.statistic == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rep.critical_value > cfg.epsilon);
    CHECK_FALSE(rep.reject);
  }
}

TEST_CASE("critical value identity and tau = 1/2 reduction") {
  const Matrix pairs = identical_pairs(300);
  AuditConfig cfg;
  cfg.epsilon = 0.1;
  cfg.b = 0.2;
  cfg.sigma = 1.0;
  cfg.tau = 0.5;
  const AuditReport half = smoothed_kl_audit(pairs, cfg, grid_1d());
  CHECK(half.critical_value == doctest::Approx(cfg.epsilon).epsilon(1e-12));

  cfg.tau = 0.17;
  const AuditReport rep = smoothed_kl_audit(pairs, cfg, grid_1d());
  CHECK(rep.critical_value - cfg.epsilon ==
        doctest::Approx(rep.c_bds * q_inverse(0.17) / std::sqrt(300.0)).epsilon(1e-12));
}

TEST_CASE("rejection is monotone in tau") {
  // A pair with a real gap so the statistic is positive.
  Coupling c{IndependentProduct{Distribution(DiscreteAtoms{{{-0.2}, {0.2}}, {0.9, 0.1}}),
                                Distribution(DiscreteAtoms{{{-0.2}, {0.2}}, {0.1, 0.9}})}};
  const Matrix pairs = sample_pairs(c, 3000, 5);
  AuditConfig cfg;
  cfg.epsilon = 0.001;
  cfg.b = 0.2;
  cfg.sigma = 1.0;
  double prev_crit = 1e18;
  bool rejected_before = false;
  for (double tau : {0.01, 0.05, 0.2, 0.4, 0.49}) {
    cfg.tau = tau;
    const AuditReport rep = smoothed_kl_audit(pairs, cfg, grid_1d());
    CHECK(rep.critical_value < prev_crit);
    prev_crit = rep.critical_value;
    if (rejected_before) CHECK(rep.reject);
    rejected_before = rejected_before || rep.reject;
  }
}

TEST_CASE("audit handles two-dimensional output pairs") {
  // n x 4 matrix: identical 2-d blocks, so the statistic vanishes.
  Matrix pairs(60, 4);
  Rng rng(12);
  for (long i = 0; i < pairs.rows; ++i) {
    const double a = 0.2 * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double b = 0.2 * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    pairs.at(i, 0) = a;
    pairs.at(i, 1) = b;
    pairs.at(i, 2) = a;
    pairs.at(i, 3) = b;
  }
  AuditConfig cfg;
  cfg.epsilon = 0.05;
  cfg.tau = 0.05;
  cfg.b = 0.2;
  cfg.sigma = 1.0;
  TensorGridPlan grid;
  grid.nodes_per_dim = 96;
  const AuditReport rep = smoothed_kl_audit(pairs, cfg, grid);
  CHECK(rep.statistic == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_FALSE(rep.reject);
  CHECK(rep.c_bds == doctest::Approx(threshold_constant(0.2, 2, 1.0)).epsilon(1e-12));
}

TEST_CASE("support warning fires when points leave the declared box") {
  Matrix pairs(10, 2);
  for (long i = 0; i < 10; ++i) {
    pairs.at(i, 0) = 30.0;
    pairs.at(i, 1) = 30.0;
  }
  AuditConfig cfg;
  cfg.epsilon = 0.1;
  cfg.b = 0.2;
  cfg.sigma = 1.0;
  cfg.tau = 0.05;
  const AuditReport rep = smoothed_kl_audit(pairs, cfg, grid_1d());
  CHECK(rep.support_warning);
}

TEST_CASE("kl audit selects 0.9 sigma_star and enforces the cap") {
  const Matrix pairs = identical_pairs(100);
  AuditConfig cfg;
  cfg.epsilon = 0.1;
  cfg.eps_bar = 0.2;
  cfg.s_lo = 1.0;
  cfg.s_hi = 1.0;
  cfg.m_bar = 1.0;
  cfg.b = 0.2;
  cfg.tau = 0.05;
  cfg.sigma = 0.0;  // auto
  const AuditReport rep = kl_audit(pairs, cfg, grid_1d());
  CHECK(rep.sigma_used == doctest::Approx(0.9 * 0.0626657068657).epsilon(1e-6));
  CHECK_FALSE(rep.reject);
  CHECK(rep.stability_margin < cfg.eps_bar - cfg.epsilon);

  cfg.sigma = 0.07;  // above sigma_star = 0.0627
  CHECK_THROWS_AS(kl_audit(pairs, cfg, grid_1d()), Error);
}

TEST_CASE("local alternative: symmetric base returns the base unchanged") {
  DiscreteAtoms atoms{{{-0.25}, {0.25}}, {0.5, 0.5}};
  Coupling base{IndependentProduct{atoms, atoms}};
  const Coupling out = local_alternative(base, 5.0, 1000);
  CHECK(std::holds_alternative<IndependentProduct>(out.v));
}

TEST_CASE("local alternative: infeasible cbar falls back to the base") {
  DiscreteAtoms mu{{{-0.25}, {0.25}}, {0.9, 0.1}};
  DiscreteAtoms nu{{{-0.25}, {0.25}}, {0.1, 0.9}};
  Coupling base{IndependentProduct{Distribution(mu), Distribution(nu)}};
  const Coupling out = local_alternative(base, 1e6, 4);
  CHECK(std::holds_alternative<IndependentProduct>(out.v));
}

TEST_CASE("local alternative: moderate cbar produces the perturbed coupling") {
  DiscreteAtoms mu{{{-0.25}, {0.25}}, {0.6, 0.4}};
  DiscreteAtoms nu{{{-0.25}, {0.25}}, {0.4, 0.6}};
  Coupling base{IndependentProduct{Distribution(mu), Distribution(nu)}};
  const Coupling out = local_alternative(base, 2.0, 10000);
  CHECK(std::holds_alternative<LocalAlternative>(out.v));

  // Perturbed marginals keep unit mass and move toward mu0 (for X).
  const Distribution mx = marginal_mu(out);
  const auto& da = std::get<DiscreteAtoms>(mx);
  double total = 0;
  for (double p : da.probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weight-shift calibration hits epsilon") {
  DiscreteAtoms mu{{{-0.25}, {0.25}}, {0.5, 0.5}};
  DiscreteAtoms nu = mu;
  const double eps = 0.02;
  const Distribution cal = calibrate_weight_shift(mu, nu, eps, 1.0);
  const SmoothedDensity p = SmoothedDensity::analytic(Distribution(mu), 1.0);
  const SmoothedDensity q = SmoothedDensity::analytic(cal, 1.0);
  const Estimate kl = estimate_divergence(Generator::KL, p, q, grid_1d());
  CHECK(kl.value == doctest::Approx(eps).epsilon(0.01));
}

TEST_CASE("mean-shift calibration hits epsilon") {
  const Distribution mu = DiscreteAtoms{{{-0.25}, {0.25}}, {0.5, 0.5}};
  const Distribution cal = calibrate_mean_shift(mu, mu, 0.05, 1.0);
  const SmoothedDensity p = SmoothedDensity::analytic(mu, 1.0);
  const SmoothedDensity q = SmoothedDensity::analytic(cal, 1.0);
  const Estimate kl = estimate_divergence(Generator::KL, p, q, grid_1d());
  CHECK(kl.value == doctest::Approx(0.05).epsilon(0.01));
}

TEST_CASE("local alternative pushes the smoothed KL above the boundary") {
  // Calibrated boundary base, cbar near its feasibility cap: the perturbed
  // marginals must exceed epsilon by a positive margin at n = 3000.
  const double eps = 0.02, sigma = 1.0;
  DiscreteAtoms mu0{{{-0.25}, {0.25}}, {0.5, 0.5}};
  const Distribution nu0 = calibrate_weight_shift(mu0, mu0, eps, sigma);
  Coupling base{IndependentProduct{Distribution(mu0), nu0}};

  const DiscretePairs dp = to_discrete_pairs(base);
  double unit_min = 0.0;
  for (size_t k = 0; k < dp.weights.size(); ++k)
    unit_min = std::min(unit_min,
                        local_alternative_h(base, 1.0, ConstSpan(dp.xs[k].data(), 1),
                                            ConstSpan(dp.ys[k].data(), 1)));
  const long n = 3000;
  const double cbar = 0.9 * std::sqrt(static_cast<double>(n)) / (-unit_min);
  const Coupling pert = local_alternative(base, cbar, n);
  REQUIRE(std::holds_alternative<LocalAlternative>(pert.v));

  const SmoothedDensity pm = SmoothedDensity::analytic(marginal_mu(pert), sigma);
  const SmoothedDensity qm = SmoothedDensity::analytic(marginal_nu(pert), sigma);
  const double kl = estimate_divergence(Generator::KL, pm, qm, grid_1d()).value;
  CHECK(kl > eps);
}

TEST_CASE("power_sim: alternative equal to the null matches its level") {
  DiscreteAtoms mu{{{-0.25}, {0.25}}, {0.5, 0.5}};
  DiscreteAtoms nu{{{-0.25}, {0.25}}, {0.35, 0.65}};
  Coupling h0{IndependentProduct{Distribution(mu), Distribution(nu)}};
  AuditConfig cfg;
  cfg.epsilon = 0.01;
  cfg.tau = 0.2;
  cfg.b = 0.25;
  cfg.sigma = 1.0;
  const long trials = 60;
  const PowerSimResult res = power_sim(
      h0, [&](long) { return h0; }, cfg, 400, trials, grid_1d(), 99);
  const double sd = std::sqrt(0.25 / trials);
  CHECK(std::abs(res.power_hat - res.level_hat) <= 2.0 * sd + 1e-12);
}

TEST_CASE("power_sim: tau near one rejects everything") {
  DiscreteAtoms mu{{{-0.25}, {0.25}}, {0.5, 0.5}};
  Coupling h0{IndependentProduct{Distribution(mu), Distribution(mu)}};
  AuditConfig cfg;
  cfg.epsilon = 0.01;
  cfg.tau = 0.9999;
  cfg.b = 0.25;
  cfg.sigma = 1.0;
  const PowerSimResult res = power_sim(
      h0, [&](long) { return h0; }, cfg, 200, 50, grid_1d(), 7);
  CHECK(res.level_hat == doctest::Approx(1.0));
  CHECK_THROWS_AS(power_sim(h0, [&](long) { return h0; }, cfg, 200, 10, grid_1d(), 7), Error);
}
