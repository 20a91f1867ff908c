// Command-line front end. Links against the C API only; all numerics live
// behind the shared library boundary.
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smoothdiv.h"

namespace {

constexpr const char* kSchema = "smoothdiv/1";

int exit_code_for(sd_status st) {
  switch (st) {
    case SD_OK:
      return 0;
    case SD_ERR_NONFINITE_INTEGRAND:
    case SD_ERR_SINGULAR_DENSITY:
    case SD_ERR_CHOLESKY_FAILURE:
    case SD_ERR_INTERNAL:
      return 1;  // numeric failure
    default:
      return 2;  // usage / validation
  }
}

[[noreturn]] void die(sd_status st) {
  std::cerr << "error: " << sd_last_error() << "\n";
  std::exit(exit_code_for(st));
}

void check(sd_status st) {
  if (st != SD_OK) die(st);
}

// Ordered JSON writer with floats at 17 significant digits, so identical
// numbers serialize to identical bytes regardless of thread count.
class JsonOut {
 public:
  void add(const std::string& key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    fields_.emplace_back(key, buf);
  }
  void add(const std::string& key, long v) { fields_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { fields_.emplace_back(key, v ? "true" : "false"); }
  void add_string(const std::string& key, const std::string& v) {
    fields_.emplace_back(key, "\"" + v + "\"");
  }
  void add_array(const std::string& key, const std::vector<double>& vs) {
    std::string s = "[";
    char buf[40];
    for (size_t i = 0; i < vs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", vs[i]);
      s += buf;
      if (i + 1 < vs.size()) s += ",";
    }
    s += "]";
    fields_.emplace_back(key, s);
  }
  void add_raw(const std::string& key, const std::string& raw) { fields_.emplace_back(key, raw); }

  std::string str() const {
    std::string s = "{\"schema\":\"";
    s += kSchema;
    s += "\"";
    for (const auto& [k, v] : fields_) {
      s += ",\"" + k + "\":" + v;
    }
    s += "}\n";
    return s;
  }

  // key,value lines; strings unquoted, arrays joined with semicolons.
  std::string csv() const {
    std::string s = "schema,";
    s += kSchema;
    s += "\n";
    for (const auto& [k, v] : fields_) {
      std::string flat = v;
      if (!flat.empty() && flat.front() == '"') flat = flat.substr(1, flat.size() - 2);
      if (!flat.empty() && flat.front() == '[') {
        flat = flat.substr(1, flat.size() - 2);
        for (char& c : flat)
          if (c == ',') c = ';';
      }
      s += k + "," + flat + "\n";
    }
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

void emit(const JsonOut& out, const std::string& path, const std::string& format = "json") {
  const std::string text = format == "csv" ? out.csv() : out.str();
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f.good()) {
    std::cerr << "error: cannot open output file " << path << "\n";
    std::exit(2);
  }
  f << text;
}

struct MatrixHandle {
  sd_matrix* m = nullptr;
  ~MatrixHandle() { sd_matrix_free(m); }
};

void load_csv(const std::string& path, bool header, MatrixHandle* out) {
  check(sd_read_csv(path.c_str(), header ? 1 : 0, &out->m));
}

// Plan flags shared by the estimating commands.
struct PlanOpts {
  long n_mc = 100000;
  unsigned long long seed = 0;
  int threads = 1;
  bool grid = false;
  int grid_nodes = 512;
  double grid_lo = 0.0, grid_hi = 0.0;
  std::string proposal = "default";

  void attach(CLI::App* cmd) {
    cmd->add_option("--n-mc", n_mc, "Monte Carlo sample count");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--threads", threads, "worker threads (output is independent of this)");
    cmd->add_flag("--grid", grid, "tensor-grid quadrature instead of Monte Carlo (d <= 3)");
    cmd->add_option("--grid-nodes", grid_nodes, "grid nodes per dimension");
    cmd->add_option("--grid-lo", grid_lo, "grid lower bound (all dims)");
    cmd->add_option("--grid-hi", grid_hi, "grid upper bound (all dims)");
    cmd->add_option("--proposal", proposal, "MC proposal: default | balanced")
        ->check(CLI::IsMember({"default", "balanced"}));
  }

  sd_plan plan() const {
    sd_plan p{};
    p.method = grid ? 1 : 0;
    p.n_mc = n_mc;
    p.seed = seed;
    p.threads = threads;
    p.proposal = proposal == "balanced" ? 1 : 0;
    p.grid_nodes = grid_nodes;
    p.grid_lo = grid_lo;
    p.grid_hi = grid_hi;
    return p;
  }
};

sd_divergence parse_divergence(const std::string& name) {
  if (name == "kl") return SD_DIV_KL;
  if (name == "chi2") return SD_DIV_CHI2;
  if (name == "h2") return SD_DIV_H2;
  if (name == "tv") return SD_DIV_TV;
  std::cerr << "error: unknown divergence '" << name << "'\n";
  std::exit(2);
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      out.push_back(std::stod(field));
    } catch (...) {
      std::cerr << "error: non-numeric list entry '" << field << "'\n";
      std::exit(2);
    }
  }
  if (out.empty()) {
    std::cerr << "error: empty list\n";
    std::exit(2);
  }
  return out;
}

// --config file.json supplies defaults for any long option the user did not
// pass explicitly; flags win over the config file.
void merge_config(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  std::ifstream f(config_path);
  if (!f.good()) {
    std::cerr << "error: cannot open config file " << config_path << "\n";
    std::exit(2);
  }
  nlohmann::json cfg;
  try {
    f >> cfg;
  } catch (const std::exception& e) {
    std::cerr << "error: bad config JSON: " << e.what() << "\n";
    std::exit(2);
  }
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;
    std::string as_text;
    if (value.is_string())
      as_text = value.get<std::string>();
    else if (value.is_boolean())
      as_text = value.get<bool>() ? "true" : "false";
    else
      as_text = value.dump();
    opt->add_result(as_text);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-smoothed f-divergence estimation, limit-law simulation, "
               "bootstrap inference, and differential-privacy audits"};
  app.require_subcommand(1);

  // ---- estimate ----------------------------------------------------------
  auto* est = app.add_subcommand("estimate", "divergence between two sample files");
  struct {
    std::string x, y, divergence = "kl", output, config, format = "json";
    double sigma = 0.0;
    bool header = false;
    PlanOpts plan;
  } e;
  est->add_option("--x", e.x, "CSV of X samples (d columns)");
  est->add_option("--y", e.y, "CSV of Y samples (d columns)");
  est->add_option("--divergence", e.divergence, "kl | chi2 | h2 | tv");
  est->add_option("--sigma", e.sigma, "smoothing bandwidth");
  est->add_flag("--header", e.header, "skip the first CSV row");
  est->add_option("--output", e.output, "write JSON here instead of stdout");
  est->add_option("--config", e.config, "JSON config merged under explicit flags");
  est->add_option("--format", e.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  e.plan.attach(est);
  est->callback([&] {
    merge_config(est, e.config);
    if (e.x.empty() || e.y.empty()) {
      std::cerr << "error: estimate needs --x and --y\n";
      std::exit(2);
    }
    if (e.sigma <= 0) {
      std::cerr << "error: sigma must be positive\n";
      std::exit(2);
    }
    MatrixHandle xs, ys;
    load_csv(e.x, e.header, &xs);
    load_csv(e.y, e.header, &ys);
    sd_plan plan = e.plan.plan();
    sd_estimate out{};
    check(sd_estimate_divergence(parse_divergence(e.divergence), xs.m, ys.m, e.sigma, &plan,
                                 &out));
    JsonOut j;
    j.add_string("command", "estimate");
    j.add_string("divergence", e.divergence);
    j.add("sigma", e.sigma);
    j.add("value", out.value);
    j.add("std_error", out.std_error);
    j.add("n_used", out.n_used);
    j.add("presumed_divergent", out.presumed_divergent != 0);
    j.add("seed", static_cast<long>(e.plan.seed));
    emit(j, e.output, e.format);
  });

  // ---- null-sim ----------------------------------------------------------
  auto* nullsim = app.add_subcommand("null-sim", "null limit spectrum and draws");
  struct {
    std::string input, pairs, divergence = "kl", output, samples_out, config;
    std::string format = "json";
    double sigma = 0.0;
    bool two_sample = false, header = false;
    int grid_nodes = 256, threads = 1;
    double grid_lo = 0.0, grid_hi = 0.0;
    long samples = 0;
    unsigned long long seed = 0;
  } ns;
  nullsim->add_option("--input", ns.input, "CSV of points (one-sample mode)");
  nullsim->add_option("--pairs", ns.pairs, "CSV of pairs, n x 2d (two-sample mode)");
  nullsim->add_flag("--two-sample", ns.two_sample, "use the paired empirical coupling");
  nullsim->add_option("--divergence", ns.divergence, "kl | chi2 | h2");
  nullsim->add_option("--sigma", ns.sigma, "smoothing bandwidth");
  nullsim->add_flag("--header", ns.header, "skip the first CSV row");
  nullsim->add_option("--grid-nodes", ns.grid_nodes, "Nystrom nodes per dimension");
  nullsim->add_option("--grid-lo", ns.grid_lo, "grid lower bound");
  nullsim->add_option("--grid-hi", ns.grid_hi, "grid upper bound");
  nullsim->add_option("--samples", ns.samples, "also draw this many limit samples");
  nullsim->add_option("--samples-out", ns.samples_out, "CSV path for the draws");
  nullsim->add_option("--seed", ns.seed, "RNG seed for the draws");
  nullsim->add_option("--output", ns.output, "write JSON here instead of stdout");
  nullsim->add_option("--config", ns.config, "JSON config merged under explicit flags");
  nullsim->add_option("--format", ns.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  nullsim->add_option("--threads", ns.threads, "accepted for interface parity; unused");
  nullsim->callback([&] {
    merge_config(nullsim, ns.config);
    if (ns.sigma <= 0) {
      std::cerr << "error: sigma must be positive\n";
      std::exit(2);
    }
    MatrixHandle pts, prs;
    if (ns.two_sample) {
      if (ns.pairs.empty()) {
        std::cerr << "error: --two-sample needs --pairs\n";
        std::exit(2);
      }
      load_csv(ns.pairs, ns.header, &prs);
    } else {
      if (ns.input.empty()) {
        std::cerr << "error: need --input (or --pairs with --two-sample)\n";
        std::exit(2);
      }
      load_csv(ns.input, ns.header, &pts);
    }
    std::vector<double> lambdas(4096);
    long count = 0;
    double scale = 0, trace = 0, glo = 0, ghi = 0;
    check(sd_null_spectrum(pts.m, prs.m, ns.sigma, ns.grid_nodes, ns.grid_lo, ns.grid_hi,
                           parse_divergence(ns.divergence), lambdas.data(),
                           static_cast<long>(lambdas.size()), &count, &scale, &trace, &glo,
                           &ghi));
    lambdas.resize(count);
    // Keep the leading block; eigenvalues at discretization-noise level carry
    // no information (lambda_count still reports the full grid size).
    size_t keep = lambdas.size();
    const double floor = lambdas.empty() ? 0.0 : 1e-12 * lambdas.front();
    while (keep > 1 && lambdas[keep - 1] <= floor) --keep;
    std::vector<double> head(lambdas.begin(), lambdas.begin() + keep);

    JsonOut j;
    j.add_string("command", "null-sim");
    j.add_string("divergence", ns.divergence);
    j.add("sigma", ns.sigma);
    j.add("scale", scale);
    j.add("trace", trace);
    j.add_array("lambdas", head);
    j.add("lambda_count", count);
    JsonOut meta;  // grid metadata as a nested object
    std::string grid_meta = "{\"lo\":";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", glo);
    grid_meta += buf;
    grid_meta += ",\"hi\":";
    std::snprintf(buf, sizeof(buf), "%.17g", ghi);
    grid_meta += buf;
    grid_meta += ",\"nodes\":" + std::to_string(ns.grid_nodes) + "}";
    j.add_raw("grid_meta", grid_meta);
    j.add("seed", static_cast<long>(ns.seed));

    if (ns.samples > 0) {
      std::vector<double> draws(ns.samples);
      check(sd_sample_weighted_chisq(lambdas.data(), count, scale, ns.samples, ns.seed,
                                     draws.data()));
      if (!ns.samples_out.empty()) {
        std::ofstream f(ns.samples_out);
        if (!f.good()) {
          std::cerr << "error: cannot open " << ns.samples_out << "\n";
          std::exit(2);
        }
        for (double v : draws) {
          std::snprintf(buf, sizeof(buf), "%.17g", v);
          f << buf << "\n";
        }
        j.add_string("samples_out", ns.samples_out);
        j.add("samples", ns.samples);
      } else {
        j.add_array("samples", draws);
      }
    }
    emit(j, ns.output, ns.format);
  });

  // ---- bootstrap ---------------------------------------------------------
  auto* boot = app.add_subcommand("bootstrap", "bootstrap confidence interval");
  struct {
    std::string x, y, divergence = "kl", output, config, format = "json";
    double sigma = 0.0, level = 0.9;
    long B = 400;
    bool two_sample = false, header = false;
    PlanOpts plan;
  } bo;
  boot->add_option("--x", bo.x, "CSV of X samples");
  boot->add_option("--y", bo.y, "CSV of the reference sample (fixed unless --two-sample)")
      ;
  boot->add_option("--divergence", bo.divergence, "kl | chi2 | h2");
  boot->add_option("--sigma", bo.sigma, "smoothing bandwidth");
  boot->add_option("--B", bo.B, "bootstrap replicates");
  boot->add_option("--level", bo.level, "confidence level in (0,1)");
  boot->add_flag("--two-sample", bo.two_sample, "resample both blocks independently");
  boot->add_flag("--header", bo.header, "skip the first CSV row");
  boot->add_option("--output", bo.output, "write JSON here instead of stdout");
  boot->add_option("--config", bo.config, "JSON config merged under explicit flags");
  boot->add_option("--format", bo.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  bo.plan.attach(boot);
  boot->callback([&] {
    merge_config(boot, bo.config);
    if (bo.x.empty() || bo.y.empty() || bo.sigma <= 0) {
      std::cerr << "error: bootstrap needs --x, --y, and --sigma > 0\n";
      std::exit(2);
    }
    MatrixHandle xs, ys;
    load_csv(bo.x, bo.header, &xs);
    load_csv(bo.y, bo.header, &ys);
    std::vector<double> reps(bo.B > 0 ? bo.B : 1);
    double point = 0;
    sd_plan plan = bo.plan.plan();
    check(sd_bootstrap(parse_divergence(bo.divergence), xs.m, ys.m, bo.two_sample ? 1 : 0,
                       bo.sigma, bo.B, &plan, bo.plan.seed, reps.data(), &point));
    double lo = point, hi = point;
    if (bo.B >= 20)
      check(sd_bootstrap_ci(reps.data(), bo.B, point, sd_matrix_rows(xs.m), bo.level, &lo,
                            &hi));
    JsonOut j;
    j.add_string("command", "bootstrap");
    j.add_string("divergence", bo.divergence);
    j.add("point", point);
    j.add("lo", lo);
    j.add("hi", hi);
    j.add("level", bo.level);
    j.add("B", bo.B);
    j.add("sigma", bo.sigma);
    j.add("n", sd_matrix_rows(xs.m));
    j.add("seed", static_cast<long>(bo.plan.seed));
    if (bo.B < 20) j.add_string("note", "B < 20: interval omitted");
    emit(j, bo.output, bo.format);
  });

  // ---- audit -------------------------------------------------------------
  auto* aud = app.add_subcommand("audit", "differential-privacy hypothesis test");
  struct {
    std::string pairs, mode = "smoothed-kl", output, config, format = "json";
    double epsilon = -1.0, tau = 0.05, b = 1.0, sigma = 0.0;
    double eps_bar = 0.0, s_lo = 1.0, s_hi = 1.0, m_bar = 1.0;
    bool header = false, paper_literal = false;
    PlanOpts plan;
  } au;
  aud->add_option("--pairs", au.pairs, "CSV of mechanism output pairs, n x 2d");
  aud->add_option("--mode", au.mode, "smoothed-kl | kl")
      ->check(CLI::IsMember({"smoothed-kl", "kl"}));
  aud->add_option("--epsilon", au.epsilon, "privacy budget under test");
  aud->add_option("--tau", au.tau, "target level");
  aud->add_option("--b", au.b, "output support half-width");
  aud->add_option("--sigma", au.sigma, "smoothing bandwidth (kl mode: optional)");
  aud->add_option("--eps-bar", au.eps_bar, "kl mode: eps_bar > epsilon");
  aud->add_option("--s-lo", au.s_lo, "kl mode: lower smoothness bound");
  aud->add_option("--s-hi", au.s_hi, "kl mode: upper smoothness bound");
  aud->add_option("--m-bar", au.m_bar, "kl mode: Lipschitz/ratio class bound");
  aud->add_flag("--paper-literal", au.paper_literal,
                "use the unrooted threshold integral in the critical value");
  aud->add_flag("--header", au.header, "skip the first CSV row");
  aud->add_option("--output", au.output, "write JSON here instead of stdout");
  aud->add_option("--config", au.config, "JSON config merged under explicit flags");
  aud->add_option("--format", au.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  au.plan.attach(aud);
  aud->callback([&] {
    merge_config(aud, au.config);
    if (au.pairs.empty() || au.epsilon <= 0) {
      std::cerr << "error: audit needs --pairs and --epsilon > 0\n";
      std::exit(2);
    }
    MatrixHandle prs;
    load_csv(au.pairs, au.header, &prs);
    sd_audit_config cfg{};
    cfg.epsilon = au.epsilon;
    cfg.tau = au.tau;
    cfg.b = au.b;
    cfg.sigma = au.sigma;
    cfg.eps_bar = au.eps_bar;
    cfg.s_lo = au.s_lo;
    cfg.s_hi = au.s_hi;
    cfg.m_bar = au.m_bar;
    cfg.paper_literal_constant = au.paper_literal ? 1 : 0;
    sd_plan plan = au.plan.plan();
    sd_audit_report rep{};
    if (au.mode == "kl") {
      if (au.eps_bar <= au.epsilon) {
        std::cerr << "error: kl mode needs --eps-bar > --epsilon\n";
        std::exit(2);
      }
      check(sd_kl_audit(prs.m, &cfg, &plan, &rep));
    } else {
      if (au.sigma <= 0) {
        std::cerr << "error: smoothed-kl mode needs --sigma > 0\n";
        std::exit(2);
      }
      check(sd_smoothed_kl_audit(prs.m, &cfg, &plan, &rep));
    }
    JsonOut j;
    j.add_string("command", "audit");
    j.add_string("mode", au.mode);
    j.add("epsilon", au.epsilon);
    j.add("tau", au.tau);
    j.add("sigma_used", rep.sigma_used);
    j.add("n", rep.n);
    j.add("T_n", rep.statistic);
    j.add("t_n", rep.critical_value);
    j.add("c_bds", rep.c_bds);
    j.add("reject", rep.reject != 0);
    j.add("statistic_std_error", rep.statistic_std_error);
    j.add("support_warning", rep.support_warning != 0);
    if (au.mode == "kl") j.add("stability_margin", rep.stability_margin);
    j.add("seed", static_cast<long>(au.plan.seed));
    emit(j, au.output, au.format);
  });

  // ---- power-sim ---------------------------------------------------------
  auto* pow = app.add_subcommand("power-sim", "audit level/power simulation (d = 1)");
  struct {
    std::string mu_atoms = "-0.3,0.3", mu_probs = "0.5,0.5";
    std::string nu_atoms = "-0.3,0.3", nu_probs = "0.5,0.5";
    std::string output, config, format = "json";
    double epsilon = 0.03, tau = 0.05, b = 0.3, sigma = 1.0, cbar = 0.0;
    long n = 3000, trials = 300;
    bool calibrate = false;
    PlanOpts plan;
  } ps;
  pow->add_option("--mu-atoms", ps.mu_atoms, "comma list of mu0 atom locations");
  pow->add_option("--mu-probs", ps.mu_probs, "comma list of mu0 atom probabilities");
  pow->add_option("--nu-atoms", ps.nu_atoms, "comma list of nu0 atom locations");
  pow->add_option("--nu-probs", ps.nu_probs, "comma list of nu0 atom probabilities");
  pow->add_flag("--calibrate", ps.calibrate,
                "shift mass inside nu0 so the smoothed KL equals epsilon");
  pow->add_option("--cbar", ps.cbar, "local-alternative strength (0 = alternative equals null)");
  pow->add_option("--epsilon", ps.epsilon, "privacy budget under test");
  pow->add_option("--tau", ps.tau, "target level");
  pow->add_option("--b", ps.b, "output support half-width");
  pow->add_option("--sigma", ps.sigma, "smoothing bandwidth");
  pow->add_option("--n", ps.n, "sample size per trial");
  pow->add_option("--trials", ps.trials, "number of trials");
  pow->add_option("--output", ps.output, "write JSON here instead of stdout");
  pow->add_option("--config", ps.config, "JSON config merged under explicit flags");
  pow->add_option("--format", ps.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  ps.plan.attach(pow);
  pow->callback([&] {
    merge_config(pow, ps.config);
    const auto ma = parse_list(ps.mu_atoms);
    const auto mp = parse_list(ps.mu_probs);
    const auto na = parse_list(ps.nu_atoms);
    const auto np = parse_list(ps.nu_probs);
    if (ma.size() != mp.size() || na.size() != np.size()) {
      std::cerr << "error: atom/prob lists must have equal lengths\n";
      std::exit(2);
    }
    sd_audit_config cfg{};
    cfg.epsilon = ps.epsilon;
    cfg.tau = ps.tau;
    cfg.b = ps.b;
    cfg.sigma = ps.sigma;
    sd_plan plan = ps.plan.plan();
    sd_power_result res{};
    check(sd_power_sim(ma.data(), mp.data(), static_cast<long>(ma.size()), na.data(), np.data(),
                       static_cast<long>(na.size()), ps.calibrate ? 1 : 0, ps.cbar, &cfg, ps.n,
                       ps.trials, &plan, ps.plan.seed, &res));
    JsonOut j;
    j.add_string("command", "power-sim");
    j.add("level_hat", res.level_hat);
    j.add("power_hat", res.power_hat);
    j.add("avg_Tn_h0", res.avg_statistic_h0);
    j.add("avg_Tn_h1", res.avg_statistic_h1);
    j.add("trials", res.trials);
    j.add("n", res.n);
    j.add("epsilon", ps.epsilon);
    j.add("tau", ps.tau);
    j.add("sigma", ps.sigma);
    j.add("cbar", ps.cbar);
    j.add("seed", static_cast<long>(ps.plan.seed));
    emit(j, ps.output, ps.format);
  });

  // ---- constants ---------------------------------------------------------
  auto* con = app.add_subcommand("constants", "audit and stability constants");
  struct {
    std::string output, config, format = "json";
    double b = 1.0, sigma = 1.0, tau = 0.05, M = 1.0, s = 1.0;
    int threads = 1;
    double epsilon = 0.0, eps_bar = 0.0, s_lo = 1.0, s_hi = 1.0, m_bar = 1.0;
    int d = 1;
    bool paper_literal = false;
  } co;
  con->add_option("--b", co.b, "output support half-width");
  con->add_option("--d", co.d, "dimension");
  con->add_option("--sigma", co.sigma, "smoothing bandwidth");
  con->add_option("--tau", co.tau, "level for q_inverse");
  con->add_option("--M", co.M, "Lipschitz/ratio bound for the stability bound");
  con->add_option("--s", co.s, "smoothness parameter in (0,1]");
  con->add_option("--epsilon", co.epsilon, "sigma_star: epsilon");
  con->add_option("--eps-bar", co.eps_bar, "sigma_star: eps_bar");
  con->add_option("--s-lo", co.s_lo, "sigma_star: lower smoothness");
  con->add_option("--s-hi", co.s_hi, "sigma_star: upper smoothness");
  con->add_option("--m-bar", co.m_bar, "sigma_star: class bound");
  con->add_flag("--paper-literal", co.paper_literal, "report the unrooted threshold integral");
  con->add_option("--output", co.output, "write JSON here instead of stdout");
  con->add_option("--config", co.config, "JSON config merged under explicit flags");
  con->add_option("--format", co.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  con->add_option("--threads", co.threads, "accepted for interface parity; unused");
  con->callback([&] {
    merge_config(con, co.config);
    JsonOut j;
    j.add_string("command", "constants");
    double v = 0;
    check(sd_c_ds(co.d, co.s, &v));
    j.add("c_ds", v);
    check(sd_threshold_constant(co.b, co.d, co.sigma, 0, &v));
    j.add("c_bds", v);
    check(sd_threshold_constant(co.b, co.d, co.sigma, 1, &v));
    j.add("c_bds_paper_literal", v);
    if (co.paper_literal) j.add_string("note", "c_bds_paper_literal is the unrooted integral");
    check(sd_stability_bound(co.M, co.s, co.d, co.sigma, &v));
    j.add("stability_bound", v);
    check(sd_q_inverse(co.tau, &v));
    j.add("q_inverse_tau", v);
    if (co.eps_bar > co.epsilon && co.epsilon > 0) {
      check(sd_sigma_star(co.epsilon, co.eps_bar, co.s_lo, co.s_hi, co.d, co.m_bar, &v));
      j.add("sigma_star", v);
    }
    j.add("b", co.b);
    j.add("d", static_cast<long>(co.d));
    j.add("sigma", co.sigma);
    emit(j, co.output, co.format);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage / validation errors exit 2
  }
  return 0;
}
