#include "smoothdiv/integrate.hpp"

#include <atomic>
#include <mutex>
#include <cmath>
#include <thread>

#include "smoothdiv/special.hpp"

namespace smoothdiv {

namespace {
constexpr long kChunk = 8192;
}

Estimate mc_mean(const std::function<double(Rng&)>& draw_value, long n_mc, uint64_t seed,
                 int threads) {
  require(n_mc >= 1, ErrorCode::InvalidArgument, "Monte Carlo: n_mc must be >= 1");
  const long n_chunks = (n_mc + kChunk - 1) / kChunk;
  Vec sums(n_chunks, 0.0), sumsqs(n_chunks, 0.0);
  std::vector<char> bad(n_chunks, 0);
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto run_chunk = [&](long c) {
    Rng rng(substream(seed, static_cast<uint64_t>(c)));
    const long begin = c * kChunk;
    const long end = std::min(n_mc, begin + kChunk);
    double s = 0.0, s2 = 0.0;
    for (long i = begin; i < end; ++i) {
      const double v = draw_value(rng);
      if (!std::isfinite(v)) {
        bad[c] = 1;
        return;
      }
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    sumsqs[c] = s2;
  };
  auto run_chunk_guarded = [&](long c) {
    try {
      run_chunk(c);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1 || n_chunks == 1) {
    for (long c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const long c = next.fetch_add(1);
          if (c >= n_chunks) return;
          run_chunk_guarded(c);
        }
      });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Reduce in chunk order so the result is independent of scheduling.
  double s = 0.0, s2 = 0.0;
  for (long c = 0; c < n_chunks; ++c) {
    if (bad[c]) fail(ErrorCode::NonFiniteIntegrand, "Monte Carlo: non-finite integrand value");
    s += sums[c];
    s2 += sumsqs[c];
  }
  Estimate est;
  est.n_used = n_mc;
  est.value = s / static_cast<double>(n_mc);
  if (n_mc > 1) {
    const double var = std::max(0.0, (s2 - s * s / n_mc) / static_cast<double>(n_mc - 1));
    est.std_error = std::sqrt(var / static_cast<double>(n_mc));
  }
  return est;
}

Estimate integrate_mc(const std::function<double(ConstSpan)>& g, const Proposal& proposal,
                      const MonteCarloPlan& plan) {
  const int d = proposal.dim();
  return mc_mean(
      [&](Rng& rng) {
        static thread_local Vec x;
        x.resize(d);
        proposal.sample_one(rng, x.data());
        const ConstSpan xs(x.data(), static_cast<size_t>(d));
        return g(xs) * std::exp(-proposal.log_pdf(xs));
      },
      plan.n_mc, plan.seed, plan.threads);
}

Estimate integrate_grid(const std::function<double(ConstSpan)>& g, const TensorGridPlan& plan) {
  const int d = static_cast<int>(plan.lo.size());
  require(d >= 1 && d <= 3, ErrorCode::InvalidArgument, "TensorGrid: only d <= 3 supported");
  require(plan.hi.size() == plan.lo.size(), ErrorCode::InvalidArgument,
          "TensorGrid: lo/hi size mismatch");
  require(plan.nodes_per_dim >= 2, ErrorCode::InvalidArgument,
          "TensorGrid: need at least 2 nodes per dimension");
  for (int j = 0; j < d; ++j)
    require(plan.lo[j] < plan.hi[j], ErrorCode::InvalidArgument, "TensorGrid: lo must be < hi");

  std::vector<Vec> nodes(d), wts(d);
  for (int j = 0; j < d; ++j) {
    auto [x, w] = gauss_legendre_on(plan.lo[j], plan.hi[j], plan.nodes_per_dim);
    nodes[j] = std::move(x);
    wts[j] = std::move(w);
  }
  const int m = plan.nodes_per_dim;
  long total = 1;
  for (int j = 0; j < d; ++j) total *= m;

  Vec x(d);
  double acc = 0.0;
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      const int i = static_cast<int>(rem % m);
      rem /= m;
      x[j] = nodes[j][i];
      w *= wts[j][i];
    }
    const double v = g(ConstSpan(x.data(), static_cast<size_t>(d)));
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteIntegrand, "TensorGrid: non-finite integrand");
    acc += w * v;
  }
  Estimate est;
  est.value = acc;
  est.std_error = 0.0;
  est.n_used = total;
  return est;
}

Estimate integrate(const std::function<double(ConstSpan)>& g, const Proposal& proposal,
                   const IntegrationPlan& plan) {
  if (const auto* mc = std::get_if<MonteCarloPlan>(&plan)) return integrate_mc(g, proposal, *mc);
  return integrate_grid(g, std::get<TensorGridPlan>(plan));
}

}  // namespace smoothdiv
