#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "smoothdiv/integrate.hpp"
#include "smoothdiv/special.hpp"
#include "test_util.hpp"

using namespace smoothdiv;

namespace {

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

SmoothedDensity std_normal_density() {
  Matrix pts(1, 1);
  return SmoothedDensity::empirical(pts, 1.0);  // single point at 0, sigma 1
}

}  // namespace

TEST_CASE("grid integral of the normal density is one") {
  TensorGridPlan grid;
  grid.nodes_per_dim = 512;
  grid.lo = {-10.0};
  grid.hi = {10.0};
  const Estimate est = integrate_grid([](ConstSpan x) { return std_normal_pdf(x[0]); }, grid);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(est.std_error == 0.0);
}

TEST_CASE("zero integrand has zero value and zero error under MC") {
  const SmoothedDensity q = std_normal_density();
  DensityProposal prop(q);
  MonteCarloPlan mc{2000, 5, 1};
  const Estimate est = integrate_mc([](ConstSpan) { return 0.0; }, prop, mc);
  CHECK(est.value == 0.0);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("second moment of the standard normal") {
  const SmoothedDensity q = std_normal_density();
  DensityProposal prop(q);
  MonteCarloPlan mc{100000, 11, 1};
  const Estimate est = integrate_mc(
      [](ConstSpan x) { return x[0] * x[0] * std_normal_pdf(x[0]); }, prop, mc);
  CHECK(std::abs(est.value - 1.0) <= 3.0 * est.std_error);
}

TEST_CASE("non-finite integrand values are reported") {
  const SmoothedDensity q = std_normal_density();
  DensityProposal prop(q);
  MonteCarloPlan mc{100, 1, 1};
  CHECK_THROWS_AS(
      integrate_mc([](ConstSpan x) { return 1.0 / (x[0] - x[0]); }, prop, mc), Error);
  TensorGridPlan grid;
  grid.nodes_per_dim = 8;
  grid.lo = {-1.0};
  grid.hi = {1.0};
  CHECK_THROWS_AS(
      integrate_grid([](ConstSpan) { return std::nan(""); }, grid), Error);
}

TEST_CASE("grid rejects d > 3 and bad boxes") {
  TensorGridPlan grid;
  grid.nodes_per_dim = 4;
  grid.lo = {0.0, 0.0, 0.0, 0.0};
  grid.hi = {1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(integrate_grid([](ConstSpan) { return 1.0; }, grid), Error);
  grid.lo = {1.0};
  grid.hi = {0.0};
  CHECK_THROWS_AS(integrate_grid([](ConstSpan) { return 1.0; }, grid), Error);
}

TEST_CASE("threaded MC reduces identically to single-threaded") {
  const SmoothedDensity q = std_normal_density();
  DensityProposal prop(q);
  auto g = [](ConstSpan x) { return std::sin(x[0]) * std_normal_pdf(x[0]) + 0.3; };
  MonteCarloPlan one{50000, 123, 1};
  MonteCarloPlan four{50000, 123, 4};
  const Estimate a = integrate_mc(g, prop, one);
  const Estimate b = integrate_mc(g, prop, four);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("doubling n_mc shrinks the standard error like sqrt(2)") {
  const SmoothedDensity q = std_normal_density();
  DensityProposal prop(q);
  auto g = [](ConstSpan x) { return x[0] * x[0] * std_normal_pdf(x[0]); };
  double ratio_sum = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    MonteCarloPlan small{20000, static_cast<uint64_t>(100 + s), 1};
    MonteCarloPlan big{40000, static_cast<uint64_t>(500 + s), 1};
    ratio_sum += integrate_mc(g, prop, small).std_error / integrate_mc(g, prop, big).std_error;
  }
  const double avg = ratio_sum / seeds;
  CHECK(avg > std::sqrt(2.0) * 0.85);
  CHECK(avg < std::sqrt(2.0) * 1.15);
}

TEST_CASE("MC agrees with the grid within 4 standard errors") {
  const SmoothedDensity q = std_normal_density();
  DensityProposal prop(q);
  auto g = [](ConstSpan x) { return (1.0 + std::cos(x[0])) * std_normal_pdf(x[0]); };
  TensorGridPlan grid;
  grid.nodes_per_dim = 512;
  grid.lo = {-10.0};
  grid.hi = {10.0};
  const double truth = integrate_grid(g, grid).value;
  int ok = 0;
  for (int s = 0; s < 100; ++s) {
    MonteCarloPlan mc{20000, static_cast<uint64_t>(s), 1};
    const Estimate est = integrate_mc(g, prop, mc);
    if (std::abs(est.value - truth) <= 4.0 * est.std_error) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("q function and inverse") {
  CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(q_inverse(0.5) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(q_inverse(0.05) == doctest::Approx(1.6448536269514722).epsilon(1e-9));
  CHECK_THROWS_AS(q_inverse(0.0), Error);
  CHECK_THROWS_AS(q_inverse(1.0), Error);

  double prev = 1e9;
  for (double tau : {1e-6, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-4, 1.0 - 1e-6}) {
    const double z = q_inverse(tau);
    CHECK(std::abs(q_function(z) - tau) <= 1e-10);
    CHECK(z < prev);
    prev = z;
  }
}

TEST_CASE("log_q matches the direct tail probability and stays finite far out") {
  for (double x : {-3.0, 0.0, 2.0, 6.0}) {
    CHECK(log_q(x) == doctest::Approx(std::log(q_function(x))).epsilon(1e-10));
  }
  const double far = log_q(40.0);
  CHECK(std::isfinite(far));
  CHECK(far == doctest::Approx(-0.5 * 1600 - std::log(40.0 * std::sqrt(2.0 * M_PI)))
                   .epsilon(1e-3));
}

TEST_CASE("c_ds radial moments") {
  CHECK(c_ds(1, 1.0) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-9));
  CHECK(c_ds(2, 1.0) == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(1e-9));
  // Gamma-function oracle across dimensions and exponents.
  for (int d : {1, 2, 3, 5}) {
    for (double s : {0.1, 0.3, 0.5, 0.8, 1.0}) {
      CHECK(c_ds(d, s) == doctest::Approx(c_ds_closed_form(d, s)).epsilon(1e-6));
    }
  }
  // Monotone increasing in s for d >= 2; the d = 1 moment dips below 1, which
  // the Gamma oracle above already pins down.
  for (int d : {2, 3}) {
    double prev = 0.0;
    for (double s : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      const double v = c_ds(d, s);
      CHECK(v > prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(c_ds(1, 0.0), Error);
  CHECK_THROWS_AS(c_ds(1, 1.5), Error);
}

TEST_CASE("balanced proposal log-pdf is the mixture midpoint") {
  Matrix a(1, 1), b(1, 1);
  b.at(0, 0) = 2.0;
  const SmoothedDensity p = SmoothedDensity::empirical(a, 1.0);
  const SmoothedDensity q = SmoothedDensity::empirical(b, 1.0);
  BalancedProposal prop(p, q);
  const Vec x{1.0};
  const double expect = std::log(
      0.5 * (std_normal_pdf(1.0) + std_normal_pdf(-1.0)));
  CHECK(prop.log_pdf(ConstSpan(x.data(), 1)) == doctest::Approx(expect).epsilon(1e-12));
}
