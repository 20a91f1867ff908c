#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "smoothdiv/integrate.hpp"
#include "smoothdiv/smoothing.hpp"
#include "test_util.hpp"

using namespace smoothdiv;

namespace {

Matrix points_1d(std::initializer_list<double> xs) {
  Matrix m(static_cast<long>(xs.size()), 1);
  long i = 0;
  for (double x : xs) m.at(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("single point at the mode") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({0.0}), 1.0);
  const Vec x{0.0};
  CHECK(p.log_density(ConstSpan(x.data(), 1)) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("smoothed point mass equals the shifted gaussian density") {
  const SmoothedDensity p = SmoothedDensity::analytic(PointMass{{0.5}}, 0.7);
  for (double x : {-2.0, 0.0, 0.5, 3.0}) {
    const Vec xv{x};
    const double expect =
        -0.5 * (x - 0.5) * (x - 0.5) / (0.7 * 0.7) - 0.5 * std::log(2.0 * M_PI * 0.49);
    CHECK(p.log_density(ConstSpan(xv.data(), 1)) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("two-point mixture at the midpoint") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({-1.0, 1.0}), 1.0);
  const Vec x{0.0};
  // (1/2)(phi(1) + phi(-1)) = phi(1)
  const double expect = std::log(std::exp(-0.5) / std::sqrt(2.0 * M_PI));
  CHECK(p.log_density(ConstSpan(x.data(), 1)) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("log ratio of identical densities vanishes") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({-0.3, 0.9, 2.0}), 0.8);
  for (double x : {-5.0, 0.0, 1.7}) {
    const Vec xv{x};
    CHECK(log_ratio(p, p, ConstSpan(xv.data(), 1)) == 0.0);
  }
}

TEST_CASE("gaussian log-ratio identity") {
  const double sigma = 0.9, a = 1.3;
  const SmoothedDensity p = SmoothedDensity::analytic(PointMass{{0.0}}, sigma);
  const SmoothedDensity q = SmoothedDensity::analytic(PointMass{{a}}, sigma);
  for (double x : {-1.0, 0.0, 0.4, 2.5}) {
    const Vec xv{x};
    const double expect = ((x - a) * (x - a) - x * x) / (2.0 * sigma * sigma);
    CHECK(log_ratio(p, q, ConstSpan(xv.data(), 1)) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("ratio errors on mismatched dimension or bandwidth") {
  const SmoothedDensity p1 = SmoothedDensity::empirical(points_1d({0.0}), 1.0);
  const SmoothedDensity p2 = SmoothedDensity::empirical(Matrix(1, 2), 1.0);
  const SmoothedDensity p3 = SmoothedDensity::empirical(points_1d({0.0}), 0.5);
  const Vec x{0.0};
  CHECK_THROWS_AS(log_ratio(p1, p2, ConstSpan(x.data(), 1)), Error);
  CHECK_THROWS_AS(log_ratio(p1, p3, ConstSpan(x.data(), 1)), Error);
}

TEST_CASE("density normalizes to one on a padded box") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({-1.0, 0.3, 2.0}), 0.6);
  TensorGridPlan grid;
  grid.nodes_per_dim = 512;
  grid.lo = {-(2.0 + 10.0 * 0.6)};
  grid.hi = {+(2.0 + 10.0 * 0.6)};
  const Estimate est =
      integrate_grid([&](ConstSpan x) { return std::exp(p.log_density(x)); }, grid);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-6));

  Matrix pts2(2, 2);
  pts2.at(0, 0) = -0.5;
  pts2.at(0, 1) = 0.5;
  pts2.at(1, 0) = 1.0;
  pts2.at(1, 1) = -1.0;
  const SmoothedDensity p2 = SmoothedDensity::empirical(pts2, 0.8);
  TensorGridPlan grid2;
  grid2.nodes_per_dim = 128;
  grid2.lo = {-9.0, -9.0};
  grid2.hi = {9.0, 9.0};
  const Estimate est2 =
      integrate_grid([&](ConstSpan x) { return std::exp(p2.log_density(x)); }, grid2);
  CHECK(est2.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("box-smoothed density normalizes and matches the erf form") {
  const SmoothedDensity p = SmoothedDensity::analytic(UniformBox{{-1.0}, {1.0}}, 0.5);
  TensorGridPlan grid;
  grid.nodes_per_dim = 512;
  grid.lo = {-7.0};
  grid.hi = {7.0};
  const Estimate est =
      integrate_grid([&](ConstSpan x) { return std::exp(p.log_density(x)); }, grid);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-6));

  // Direct check of the error-function product form at a point.
  const double x = 0.25, s = 0.5;
  const double expect =
      0.5 * (std::erf((1.0 - x) / (s * std::sqrt(2.0))) - std::erf((-1.0 - x) / (s * std::sqrt(2.0)))) /
      2.0;
  const Vec xv{x};
  CHECK(std::exp(p.log_density(ConstSpan(xv.data(), 1))) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("density never exceeds the kernel peak") {
  Rng rng(8);
  const SmoothedDensity mix = SmoothedDensity::empirical(points_1d({-2.0, -1.0, 3.0}), 0.4);
  const SmoothedDensity box = SmoothedDensity::analytic(UniformBox{{-0.05}, {0.05}}, 0.4);
  const double peak = 1.0 / std::sqrt(2.0 * M_PI * 0.16);
  for (int i = 0; i < 200; ++i) {
    const Vec x{-6.0 + 12.0 * rng.uniform()};
    CHECK(std::exp(mix.log_density(ConstSpan(x.data(), 1))) <= peak + 1e-12);
    CHECK(std::exp(box.log_density(ConstSpan(x.data(), 1))) <= peak + 1e-12);
  }
}

TEST_CASE("log-sum-exp stays exact 40 sigma into the tail") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({-1.0, 1.0}), 1.0);
  const Vec x{41.0};  // 40 sigma past the nearest point
  const double got = p.log_density(ConstSpan(x.data(), 1));
  CHECK(std::isfinite(got));
  // Reference assembled from the dominant term plus the log correction.
  const double d_near = 40.0, d_far = 42.0;
  const double expect = std::log(0.5) - 0.5 * d_near * d_near -
                        0.5 * std::log(2.0 * M_PI) +
                        std::log1p(std::exp(-0.5 * (d_far * d_far - d_near * d_near)));
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("duplicate points collapse into weighted components") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({1.0, 1.0, 1.0, -1.0}), 1.0);
  CHECK(p.n_components() == 2);
  // Density must match the uncollapsed mixture.
  const SmoothedDensity q = SmoothedDensity::analytic(
      DiscreteAtoms{{{1.0}, {-1.0}}, {0.75, 0.25}}, 1.0);
  for (double x : {-2.0, 0.0, 1.5}) {
    const Vec xv{x};
    CHECK(p.log_density(ConstSpan(xv.data(), 1)) ==
          doctest::Approx(q.log_density(ConstSpan(xv.data(), 1))).epsilon(1e-13));
  }
}

TEST_CASE("analytic gaussian smooths into widened components") {
  const SmoothedDensity p = SmoothedDensity::analytic(IsotropicGaussian{{0.0}, 0.6}, 0.8);
  const double total = std::sqrt(0.36 + 0.64);
  const Vec x{1.1};
  const double expect = -0.5 * 1.1 * 1.1 / (total * total) -
                        0.5 * std::log(2.0 * M_PI * total * total);
  CHECK(p.log_density(ConstSpan(x.data(), 1)) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sampling from the smoothed density matches its own law") {
  const SmoothedDensity p = SmoothedDensity::empirical(points_1d({-1.0, 1.0}), 1.0);
  const Matrix draws = p.sample(20000, 77);
  // Mean 0, variance 1 + 1 (atom variance + kernel variance).
  std::vector<double> xs(draws.data.begin(), draws.data.end());
  CHECK(std::abs(testutil::mean(xs)) < 4.0 * std::sqrt(2.0 / 20000.0));
  CHECK(testutil::sample_variance(xs) == doctest::Approx(2.0).epsilon(0.05));
}
