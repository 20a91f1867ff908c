#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "smoothdiv/bootstrap.hpp"
#include "smoothdiv/limits.hpp"
#include "test_util.hpp"

using namespace smoothdiv;

namespace {

TensorGridPlan grid_1d(int nodes = 512) {
  TensorGridPlan g;
  g.nodes_per_dim = nodes;
  return g;
}

Matrix sample_two_atoms(long n, uint64_t seed) {
  return sample(DiscreteAtoms{{{-1.0}, {1.0}}, {0.3, 0.7}}, n, seed);
}

}  // namespace

TEST_CASE("resampling a constant sample gives zero replicates") {
  Matrix xs(50, 1);
  for (long i = 0; i < xs.rows; ++i) xs.at(i, 0) = 0.4;
  const SmoothedDensity ref = SmoothedDensity::analytic(PointMass{{0.0}}, 1.0);
  const BootstrapResult res =
      bootstrap_distribution(Generator::KL, xs, ref, 1.0, 25, grid_1d(), 7);
  for (double r : res.replicates) CHECK(r == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a single replicate is finite") {
  const Matrix xs = sample_two_atoms(100, 3);
  const SmoothedDensity ref = SmoothedDensity::analytic(PointMass{{0.0}}, 1.0);
  const BootstrapResult res =
      bootstrap_distribution(Generator::KL, xs, ref, 1.0, 1, grid_1d(), 7);
  CHECK(res.replicates.size() == 1);
  CHECK(std::isfinite(res.replicates[0]));
}

TEST_CASE("TV bootstrap is rejected") {
  const Matrix xs = sample_two_atoms(50, 3);
  const SmoothedDensity ref = SmoothedDensity::analytic(PointMass{{0.0}}, 1.0);
  CHECK_THROWS_AS(bootstrap_distribution(Generator::TV, xs, ref, 1.0, 10, grid_1d(), 7),
                  Error);
}

TEST_CASE("interval edge cases and nesting") {
  CHECK_THROWS_AS(bootstrap_ci(Vec(10, 0.0), 1.0, 100, 0.9), Error);  // B < 20
  CHECK_THROWS_AS(bootstrap_ci(Vec(50, 0.0), 1.0, 100, 1.5), Error);

  // All-zero replicates collapse the interval onto the point estimate.
  const auto [lo0, hi0] = bootstrap_ci(Vec(50, 0.0), 0.37, 100, 0.9);
  CHECK(lo0 == doctest::Approx(0.37));
  CHECK(hi0 == doctest::Approx(0.37));

  Rng rng(5);
  Vec reps(400);
  for (double& r : reps) r = rng.normal();
  const auto [lo1, hi1] = bootstrap_ci(reps, 0.0, 100, 0.5);
  const auto [lo2, hi2] = bootstrap_ci(reps, 0.0, 100, 0.9);
  const auto [lo3, hi3] = bootstrap_ci(reps, 0.0, 100, 0.95);
  const auto [lo4, hi4] = bootstrap_ci(reps, 0.0, 100, 0.8);
  CHECK(lo2 <= lo1);
  CHECK(hi2 >= hi1);
  CHECK(hi3 - lo3 >= hi4 - lo4);  // monotone width
}

TEST_CASE("replicates are deterministic and thread-count independent") {
  const Matrix xs = sample_two_atoms(300, 11);
  const SmoothedDensity ref = SmoothedDensity::analytic(PointMass{{0.0}}, 1.0);
  MonteCarloPlan mc1{20000, 17, 1};
  MonteCarloPlan mc4{20000, 17, 4};
  const BootstrapResult a =
      bootstrap_distribution(Generator::KL, xs, ref, 1.0, 30, mc1, 99);
  const BootstrapResult b =
      bootstrap_distribution(Generator::KL, xs, ref, 1.0, 30, mc4, 99);
  CHECK(a.replicates == b.replicates);
  CHECK(a.point_estimate == b.point_estimate);
}

TEST_CASE("one-sample replicate spread matches the asymptotic variance") {
  // Replicates approximate N(0, v^2_1); sd within 25%.
  const long n = 2000, B = 400;
  const Matrix xs = sample_two_atoms(n, 2027);
  const SmoothedDensity ref = SmoothedDensity::analytic(PointMass{{0.0}}, 1.0);
  const BootstrapResult res =
      bootstrap_distribution(Generator::KL, xs, ref, 1.0, B, grid_1d(), 31);
  const Estimate v1 = one_sample_variance(
      Generator::KL, DiscreteAtoms{{{-1.0}, {1.0}}, {0.3, 0.7}}, PointMass{{0.0}}, 1.0,
      grid_1d());
  std::vector<double> reps(res.replicates.begin(), res.replicates.end());
  CHECK(testutil::sample_sd(reps) == doctest::Approx(std::sqrt(v1.value)).epsilon(0.25));
}

TEST_CASE("replicate mean shrinks at the CLT rate") {
  const long n = 4000, B = 400;
  const Matrix xs = sample_two_atoms(n, 5150);
  const SmoothedDensity ref = SmoothedDensity::analytic(PointMass{{0.0}}, 1.0);
  const BootstrapResult res =
      bootstrap_distribution(Generator::KL, xs, ref, 1.0, B, grid_1d(), 77);
  std::vector<double> reps(res.replicates.begin(), res.replicates.end());
  CHECK(std::abs(testutil::mean(reps)) <=
        4.0 * testutil::sample_sd(reps) / std::sqrt(static_cast<double>(B)));
}

TEST_CASE("two-sample bootstrap resamples blocks independently") {
  const long n = 500;
  const Matrix xs = sample_two_atoms(n, 21);
  const Matrix ys = sample(DiscreteAtoms{{{-0.5}, {1.5}}, {0.6, 0.4}}, n, 22);
  const BootstrapResult res = bootstrap_distribution_two_sample(
      Generator::KL, xs, ys, 1.0, 50, grid_1d(), 5);
  CHECK(res.replicates.size() == 50);
  double spread = 0;
  for (double r : res.replicates) spread += std::abs(r);
  CHECK(spread > 0.0);  // not degenerate
  CHECK_THROWS_AS(
      bootstrap_distribution_two_sample(Generator::KL, xs, Matrix(10, 1), 1.0, 5, grid_1d(), 5),
      Error);
}
