#include "smoothdiv.h"

#include <cmath>
#include <cstring>
#include <string>

#include "smoothdiv/audit.hpp"
#include "smoothdiv/bootstrap.hpp"
#include "smoothdiv/csv.hpp"
#include "smoothdiv/divergence.hpp"
#include "smoothdiv/limits.hpp"
#include "smoothdiv/special.hpp"

using namespace smoothdiv;

struct sd_matrix {
  Matrix m;
};

namespace {

thread_local std::string g_last_error;

sd_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return SD_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return SD_ERR_DIMENSION_MISMATCH;
    case ErrorCode::SigmaMismatch: return SD_ERR_SIGMA_MISMATCH;
    case ErrorCode::UnsupportedCoupling: return SD_ERR_UNSUPPORTED_COUPLING;
    case ErrorCode::UnsupportedGenerator: return SD_ERR_UNSUPPORTED_GENERATOR;
    case ErrorCode::DomainError: return SD_ERR_DOMAIN;
    case ErrorCode::NonFiniteIntegrand: return SD_ERR_NONFINITE_INTEGRAND;
    case ErrorCode::SingularDensity: return SD_ERR_SINGULAR_DENSITY;
    case ErrorCode::CholeskyFailure: return SD_ERR_CHOLESKY_FAILURE;
    case ErrorCode::InsufficientReplicates: return SD_ERR_INSUFFICIENT_REPLICATES;
    case ErrorCode::SigmaTooLarge: return SD_ERR_SIGMA_TOO_LARGE;
    case ErrorCode::IoError: return SD_ERR_IO;
  }
  return SD_ERR_INTERNAL;
}

template <typename Fn>
sd_status guarded(Fn&& fn) {
  try {
    fn();
    return SD_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SD_ERR_INTERNAL;
  }
}

Generator to_gen(sd_divergence gen) {
  switch (gen) {
    case SD_DIV_KL: return Generator::KL;
    case SD_DIV_CHI2: return Generator::ChiSq;
    case SD_DIV_H2: return Generator::HellingerSq;
    case SD_DIV_TV: return Generator::TV;
  }
  fail(ErrorCode::InvalidArgument, "unknown divergence id");
}

IntegrationPlan to_plan(const sd_plan* plan, int d) {
  require(plan != nullptr, ErrorCode::InvalidArgument, "plan must not be NULL");
  if (plan->method == 0) {
    MonteCarloPlan mc;
    mc.n_mc = plan->n_mc > 0 ? plan->n_mc : 100000;
    mc.seed = plan->seed;
    mc.threads = plan->threads > 0 ? plan->threads : 1;
    return mc;
  }
  TensorGridPlan grid;
  grid.nodes_per_dim = plan->grid_nodes > 1 ? plan->grid_nodes : 512;
  if (plan->grid_lo < plan->grid_hi) {
    grid.lo.assign(d, plan->grid_lo);
    grid.hi.assign(d, plan->grid_hi);
  }
  return grid;
}

ProposalPolicy to_policy(const sd_plan* plan) {
  return plan->proposal == 1 ? ProposalPolicy::Balanced : ProposalPolicy::Default;
}

void fill_estimate(const Estimate& e, sd_estimate* out) {
  out->value = e.value;
  out->std_error = e.std_error;
  out->n_used = e.n_used;
  out->presumed_divergent = e.presumed_divergent ? 1 : 0;
}

AuditConfig to_audit_config(const sd_audit_config* cfg) {
  require(cfg != nullptr, ErrorCode::InvalidArgument, "audit config must not be NULL");
  AuditConfig out;
  out.epsilon = cfg->epsilon;
  out.tau = cfg->tau;
  out.b = cfg->b;
  out.sigma = cfg->sigma;
  out.eps_bar = cfg->eps_bar;
  out.s_lo = cfg->s_lo;
  out.s_hi = cfg->s_hi;
  out.m_bar = cfg->m_bar;
  return out;
}

void fill_report(const AuditReport& r, sd_audit_report* out) {
  out->statistic = r.statistic;
  out->critical_value = r.critical_value;
  out->c_bds = r.c_bds;
  out->sigma_used = r.sigma_used;
  out->statistic_std_error = r.statistic_std_error;
  out->stability_margin = r.stability_margin;
  out->n = r.n;
  out->reject = r.reject ? 1 : 0;
  out->support_warning = r.support_warning ? 1 : 0;
}

}  // namespace

extern "C" {

const char* sd_version(void) { return "smoothdiv 1.0.0"; }

const char* sd_last_error(void) { return g_last_error.c_str(); }

sd_status sd_matrix_create(long rows, long cols, const double* data, sd_matrix** out) {
  return guarded([&] {
    require(rows >= 1 && cols >= 1 && data != nullptr && out != nullptr,
            ErrorCode::InvalidArgument, "sd_matrix_create: bad arguments");
    auto* m = new sd_matrix{Matrix(rows, cols)};
    std::memcpy(m->m.data.data(), data, sizeof(double) * static_cast<size_t>(rows) * cols);
    *out = m;
  });
}

sd_status sd_read_csv(const char* path, int skip_header, sd_matrix** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, ErrorCode::InvalidArgument,
            "sd_read_csv: bad arguments");
    *out = new sd_matrix{read_csv(path, skip_header != 0)};
  });
}

long sd_matrix_rows(const sd_matrix* m) { return m ? m->m.rows : 0; }
long sd_matrix_cols(const sd_matrix* m) { return m ? m->m.cols : 0; }
const double* sd_matrix_data(const sd_matrix* m) { return m ? m->m.data.data() : nullptr; }
void sd_matrix_free(sd_matrix* m) { delete m; }

double sd_q_function(double x) { return q_function(x); }

sd_status sd_q_inverse(double tau, double* out) {
  return guarded([&] { *out = q_inverse(tau); });
}

sd_status sd_c_ds(int d, double s, double* out) {
  return guarded([&] { *out = c_ds(d, s); });
}

sd_status sd_stability_bound(double m, double s, int d, double sigma, double* out) {
  return guarded([&] { *out = stability_bound(m, s, d, sigma); });
}

sd_status sd_threshold_constant(double b, int d, double sigma, int paper_literal, double* out) {
  return guarded([&] { *out = threshold_constant(b, d, sigma, paper_literal != 0); });
}

sd_status sd_sigma_star(double epsilon, double eps_bar, double s_lo, double s_hi, int d,
                        double m_bar, double* out) {
  return guarded([&] { *out = sigma_star(epsilon, eps_bar, s_lo, s_hi, d, m_bar); });
}

sd_status sd_closed_form(sd_divergence gen, const double* a, const double* b, int d,
                         double sigma, double* out) {
  return guarded([&] {
    require(a && b && d >= 1, ErrorCode::InvalidArgument, "sd_closed_form: bad arguments");
    *out = closed_form(to_gen(gen), ConstSpan(a, static_cast<size_t>(d)),
                       ConstSpan(b, static_cast<size_t>(d)), sigma);
  });
}

sd_status sd_estimate_divergence(sd_divergence gen, const sd_matrix* xs, const sd_matrix* ys,
                                 double sigma, const sd_plan* plan, sd_estimate* out) {
  return guarded([&] {
    require(xs && ys && out, ErrorCode::InvalidArgument, "sd_estimate_divergence: bad arguments");
    const SmoothedDensity p = SmoothedDensity::empirical(xs->m, sigma);
    const SmoothedDensity q = SmoothedDensity::empirical(ys->m, sigma);
    const IntegrationPlan ip = to_plan(plan, p.dim());
    fill_estimate(estimate_divergence(to_gen(gen), p, q, ip, to_policy(plan)), out);
  });
}

sd_status sd_chi2_information(const sd_matrix* xs, double sigma, const sd_plan* plan,
                              sd_estimate* out) {
  return guarded([&] {
    require(xs && out, ErrorCode::InvalidArgument, "sd_chi2_information: bad arguments");
    const IntegrationPlan ip = to_plan(plan, static_cast<int>(xs->m.cols));
    fill_estimate(chi2_information(xs->m, sigma, ip), out);
  });
}

sd_status sd_null_spectrum(const sd_matrix* points, const sd_matrix* pairs, double sigma,
                           int grid_nodes, double grid_lo, double grid_hi, sd_divergence gen,
                           double* lambdas, long cap, long* out_count, double* out_scale,
                           double* out_trace, double* out_grid_lo, double* out_grid_hi) {
  return guarded([&] {
    require(lambdas && out_count && out_scale && out_trace, ErrorCode::InvalidArgument,
            "sd_null_spectrum: bad output arguments");
    GridSpec spec;
    spec.nodes_per_dim = grid_nodes > 1 ? grid_nodes : 256;
    int d = 0;
    std::optional<CovarianceKernel> kernel;
    if (pairs != nullptr) {
      require(pairs->m.cols % 2 == 0, ErrorCode::InvalidArgument,
              "sd_null_spectrum: pairs must be n x 2d");
      d = static_cast<int>(pairs->m.cols / 2);
      Coupling c;
      EmpiricalPairs ep;
      ep.pairs = pairs->m;
      ep.d = d;
      c.v = std::move(ep);
      kernel = CovarianceKernel::two_sample(c, sigma);
    } else {
      require(points != nullptr, ErrorCode::InvalidArgument,
              "sd_null_spectrum: need points or pairs");
      d = static_cast<int>(points->m.cols);
      kernel = CovarianceKernel::one_sample(points->m, sigma);
    }
    if (grid_lo < grid_hi) {
      spec.lo.assign(d, grid_lo);
      spec.hi.assign(d, grid_hi);
    }
    const NullSpectrum spectrum = null_limit_spectrum(*kernel, to_gen(gen), spec);
    const long count = std::min<long>(cap, static_cast<long>(spectrum.lambdas.size()));
    for (long i = 0; i < count; ++i) lambdas[i] = spectrum.lambdas[i];
    *out_count = count;
    *out_scale = spectrum.scale;
    *out_trace = spectrum.trace;
    if (out_grid_lo) *out_grid_lo = spectrum.grid_lo.at(0);
    if (out_grid_hi) *out_grid_hi = spectrum.grid_hi.at(0);
  });
}

sd_status sd_sample_weighted_chisq(const double* lambdas, long count_lambdas, double scale,
                                   long count, unsigned long long seed, double* out) {
  return guarded([&] {
    require(lambdas && out && count_lambdas >= 1, ErrorCode::InvalidArgument,
            "sd_sample_weighted_chisq: bad arguments");
    WeightedChiSq law;
    law.lambdas.assign(lambdas, lambdas + count_lambdas);
    law.scale = scale;
    const Vec draws = sample_limit(law, count, seed);
    std::memcpy(out, draws.data(), sizeof(double) * static_cast<size_t>(count));
  });
}

sd_status sd_bootstrap(sd_divergence gen, const sd_matrix* xs, const sd_matrix* ys,
                       int two_sample, double sigma, long b_replicates, const sd_plan* plan,
                       unsigned long long seed, double* out_replicates, double* out_point) {
  return guarded([&] {
    require(xs && ys && out_replicates && out_point, ErrorCode::InvalidArgument,
            "sd_bootstrap: bad arguments");
    const IntegrationPlan ip = to_plan(plan, static_cast<int>(xs->m.cols));
    BootstrapResult res;
    if (two_sample) {
      res = bootstrap_distribution_two_sample(to_gen(gen), xs->m, ys->m, sigma, b_replicates,
                                              ip, seed);
    } else {
      const SmoothedDensity ref = SmoothedDensity::empirical(ys->m, sigma);
      res = bootstrap_distribution(to_gen(gen), xs->m, ref, sigma, b_replicates, ip, seed);
    }
    std::memcpy(out_replicates, res.replicates.data(),
                sizeof(double) * res.replicates.size());
    *out_point = res.point_estimate;
  });
}

sd_status sd_bootstrap_ci(const double* replicates, long b_replicates, double point_estimate,
                          long n, double level, double* out_lo, double* out_hi) {
  return guarded([&] {
    require(replicates && out_lo && out_hi, ErrorCode::InvalidArgument,
            "sd_bootstrap_ci: bad arguments");
    const Vec reps(replicates, replicates + b_replicates);
    const auto [lo, hi] = bootstrap_ci(reps, point_estimate, n, level);
    *out_lo = lo;
    *out_hi = hi;
  });
}

sd_status sd_smoothed_kl_audit(const sd_matrix* pairs, const sd_audit_config* cfg,
                               const sd_plan* plan, sd_audit_report* out) {
  return guarded([&] {
    require(pairs && out, ErrorCode::InvalidArgument, "sd_smoothed_kl_audit: bad arguments");
    const int d = static_cast<int>(pairs->m.cols / 2);
    AuditReport rep = smoothed_kl_audit(pairs->m, to_audit_config(cfg), to_plan(plan, d));
    if (cfg->paper_literal_constant) {
      rep.c_bds = threshold_constant(cfg->b, d, cfg->sigma, true);
      rep.critical_value = cfg->epsilon + rep.c_bds * q_inverse(cfg->tau) /
                                              std::sqrt(static_cast<double>(rep.n));
      rep.reject = rep.statistic > rep.critical_value;
    }
    fill_report(rep, out);
  });
}

sd_status sd_kl_audit(const sd_matrix* pairs, const sd_audit_config* cfg, const sd_plan* plan,
                      sd_audit_report* out) {
  return guarded([&] {
    require(pairs && out, ErrorCode::InvalidArgument, "sd_kl_audit: bad arguments");
    const int d = static_cast<int>(pairs->m.cols / 2);
    fill_report(kl_audit(pairs->m, to_audit_config(cfg), to_plan(plan, d)), out);
  });
}

sd_status sd_power_sim(const double* mu_atoms, const double* mu_probs, long k_mu,
                       const double* nu_atoms, const double* nu_probs, long k_nu, int calibrate,
                       double cbar, const sd_audit_config* cfg, long n, long trials,
                       const sd_plan* plan, unsigned long long seed, sd_power_result* out) {
  return guarded([&] {
    require(mu_atoms && mu_probs && nu_atoms && nu_probs && out, ErrorCode::InvalidArgument,
            "sd_power_sim: bad arguments");
    DiscreteAtoms mu0, nu0;
    for (long i = 0; i < k_mu; ++i) {
      mu0.atoms.push_back({mu_atoms[i]});
      mu0.probs.push_back(mu_probs[i]);
    }
    for (long i = 0; i < k_nu; ++i) {
      nu0.atoms.push_back({nu_atoms[i]});
      nu0.probs.push_back(nu_probs[i]);
    }
    AuditConfig acfg = to_audit_config(cfg);
    Distribution nu_cal = nu0;
    if (calibrate) nu_cal = calibrate_weight_shift(mu0, nu0, acfg.epsilon, acfg.sigma);

    Coupling h0;
    h0.v = IndependentProduct{Distribution(mu0), nu_cal};
    auto h1_builder = [&](long nn) {
      if (cbar > 0.0) return local_alternative(h0, cbar, nn);
      return h0;
    };
    const IntegrationPlan ip = to_plan(plan, 1);
    const PowerSimResult res = power_sim(h0, h1_builder, acfg, n, trials, ip, seed);
    out->level_hat = res.level_hat;
    out->power_hat = res.power_hat;
    out->avg_statistic_h0 = res.avg_statistic_h0;
    out->avg_statistic_h1 = res.avg_statistic_h1;
    out->trials = res.trials;
    out->n = res.n;
  });
}

}  // extern "C"
