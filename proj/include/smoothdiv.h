/* C interface to the smoothdiv shared library.
 *
 * Conventions: every fallible function returns sd_status (SD_OK on success)
 * and writes results through out-parameters. On failure, sd_last_error()
 * returns a thread-local description of the most recent error. Matrices are
 * opaque handles owning row-major doubles; free them with sd_matrix_free.
 */
#ifndef SMOOTHDIV_H
#define SMOOTHDIV_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sd_status {
  SD_OK = 0,
  SD_ERR_INVALID_ARGUMENT = 1,
  SD_ERR_DIMENSION_MISMATCH = 2,
  SD_ERR_SIGMA_MISMATCH = 3,
  SD_ERR_UNSUPPORTED_COUPLING = 4,
  SD_ERR_UNSUPPORTED_GENERATOR = 5,
  SD_ERR_DOMAIN = 6,
  SD_ERR_NONFINITE_INTEGRAND = 7,
  SD_ERR_SINGULAR_DENSITY = 8,
  SD_ERR_CHOLESKY_FAILURE = 9,
  SD_ERR_INSUFFICIENT_REPLICATES = 10,
  SD_ERR_SIGMA_TOO_LARGE = 11,
  SD_ERR_IO = 12,
  SD_ERR_INTERNAL = 13
} sd_status;

typedef enum sd_divergence {
  SD_DIV_KL = 0,
  SD_DIV_CHI2 = 1,
  SD_DIV_H2 = 2,
  SD_DIV_TV = 3
} sd_divergence;

typedef struct sd_matrix sd_matrix;

/* Integration plan. method 0 = Monte Carlo, 1 = tensor grid (d <= 3).
 * proposal 0 = default (reference measure; balanced mixture for TV),
 * 1 = balanced mixture for every generator. grid_lo >= grid_hi requests an
 * automatic box from the data extent. */
typedef struct sd_plan {
  int method;
  long n_mc;
  unsigned long long seed;
  int threads;
  int proposal;
  int grid_nodes;
  double grid_lo;
  double grid_hi;
} sd_plan;

typedef struct sd_estimate {
  double value;
  double std_error;
  long n_used;
  int presumed_divergent;
} sd_estimate;

typedef struct sd_audit_config {
  double epsilon;
  double tau;
  double b;
  double sigma; /* <= 0 in KL mode selects 0.9 * sigma_star */
  double eps_bar;
  double s_lo;
  double s_hi;
  double m_bar;
  int paper_literal_constant; /* use the unrooted threshold integral */
} sd_audit_config;

typedef struct sd_audit_report {
  double statistic;
  double critical_value;
  double c_bds;
  double sigma_used;
  double statistic_std_error;
  double stability_margin;
  long n;
  int reject;
  int support_warning;
} sd_audit_report;

typedef struct sd_power_result {
  double level_hat;
  double power_hat;
  double avg_statistic_h0;
  double avg_statistic_h1;
  long trials;
  long n;
} sd_power_result;

const char* sd_version(void);
const char* sd_last_error(void);

/* --- matrices ---------------------------------------------------------- */

sd_status sd_matrix_create(long rows, long cols, const double* data, sd_matrix** out);
sd_status sd_read_csv(const char* path, int skip_header, sd_matrix** out);
long sd_matrix_rows(const sd_matrix* m);
long sd_matrix_cols(const sd_matrix* m);
const double* sd_matrix_data(const sd_matrix* m);
void sd_matrix_free(sd_matrix* m);

/* --- scalar constants --------------------------------------------------- */

double sd_q_function(double x);
sd_status sd_q_inverse(double tau, double* out);
sd_status sd_c_ds(int d, double s, double* out);
sd_status sd_stability_bound(double m, double s, int d, double sigma, double* out);
sd_status sd_threshold_constant(double b, int d, double sigma, int paper_literal, double* out);
sd_status sd_sigma_star(double epsilon, double eps_bar, double s_lo, double s_hi, int d,
                        double m_bar, double* out);
sd_status sd_closed_form(sd_divergence gen, const double* a, const double* b, int d,
                         double sigma, double* out);

/* --- estimation --------------------------------------------------------- */

/* Plug-in divergence between the smoothed empirical measures of xs (n x d)
 * and ys (m x d). */
sd_status sd_estimate_divergence(sd_divergence gen, const sd_matrix* xs, const sd_matrix* ys,
                                 double sigma, const sd_plan* plan, sd_estimate* out);

sd_status sd_chi2_information(const sd_matrix* xs, double sigma, const sd_plan* plan,
                              sd_estimate* out);

/* Null-limit spectrum of the points' empirical law (one-sample), or of the
 * paired empirical coupling when pairs is non-NULL (n x 2d). lambdas must
 * hold cap entries; *out_count receives the number written (descending). */
sd_status sd_null_spectrum(const sd_matrix* points, const sd_matrix* pairs, double sigma,
                           int grid_nodes, double grid_lo, double grid_hi, sd_divergence gen,
                           double* lambdas, long cap, long* out_count, double* out_scale,
                           double* out_trace, double* out_grid_lo, double* out_grid_hi);

sd_status sd_sample_weighted_chisq(const double* lambdas, long count_lambdas, double scale,
                                   long count, unsigned long long seed, double* out);

/* --- bootstrap ---------------------------------------------------------- */

/* Replicates of sqrt(n)(D(resample) - D(original)); out_replicates holds B
 * doubles. two_sample resamples xs and ys independently, otherwise ys is the
 * fixed reference sample. */
sd_status sd_bootstrap(sd_divergence gen, const sd_matrix* xs, const sd_matrix* ys,
                       int two_sample, double sigma, long b_replicates, const sd_plan* plan,
                       unsigned long long seed, double* out_replicates, double* out_point);

sd_status sd_bootstrap_ci(const double* replicates, long b_replicates, double point_estimate,
                          long n, double level, double* out_lo, double* out_hi);

/* --- differential-privacy audit ----------------------------------------- */

sd_status sd_smoothed_kl_audit(const sd_matrix* pairs, const sd_audit_config* cfg,
                               const sd_plan* plan, sd_audit_report* out);

sd_status sd_kl_audit(const sd_matrix* pairs, const sd_audit_config* cfg, const sd_plan* plan,
                      sd_audit_report* out);

/* Level/power simulation over synthetic two-atom couplings in d = 1.
 * mu_atoms/nu_atoms are k-vectors of scalar atom locations with probs.
 * calibrate != 0 shifts mass inside nu0 (two atoms, shared support) until the
 * smoothed KL equals cfg->epsilon. cbar > 0 builds the local alternative at
 * sample size n from the calibrated base. */
sd_status sd_power_sim(const double* mu_atoms, const double* mu_probs, long k_mu,
                       const double* nu_atoms, const double* nu_probs, long k_nu, int calibrate,
                       double cbar, const sd_audit_config* cfg, long n, long trials,
                       const sd_plan* plan, unsigned long long seed, sd_power_result* out);

#ifdef __cplusplus
}
#endif

#endif /* SMOOTHDIV_H */
