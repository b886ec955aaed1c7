#include "gpoid/cli.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gpoid/errors.hpp"
#include "gpoid/oracle.hpp"
#include "gpoid/stats.hpp"

namespace gpoid::cli {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kArtifactVersion = "0.1.0";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key '" + ctx + it.key() + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& ctx, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + ctx + key + "' has the wrong type");
  }
}

const json& require(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("missing required config key '" + ctx + key + "'");
  return j.at(key);
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

Eigen::VectorXd to_vector(const json& j, const std::string& ctx) {
  try {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const json::exception&) {
    throw ConfigError("config key '" + ctx + "' must be a numeric array");
  }
}

ExperimentConfig build_config(const json& j) {
  ExperimentConfig cfg;
  reject_unknown(j, {"model", "theta0", "domain", "seed", "gpo", "acquisition", "design",
                     "normality_replicates", "out_dir"},
                 "");

  require(j, "model", "");
  cfg.model_id = get_or<std::string>(j, "model", "", "");
  cfg.theta0 = to_vector(require(j, "theta0", ""), "theta0");
  require(j, "seed", "");
  cfg.gpo.seed = get_or<std::uint64_t>(j, "seed", "", 0);

  const json& dom = require(j, "domain", "");
  check(dom.is_object(), "config key 'domain' must be an object");
  require(dom, "kind", "domain.");
  cfg.domain_kind = get_or<std::string>(dom, "kind", "domain.", "");
  if (cfg.domain_kind == "markov") {
    reject_unknown(dom, {"kind", "alphabet", "n"}, "domain.");
    require(dom, "alphabet", "domain.");
    cfg.alphabet = get_or<std::vector<double>>(dom, "alphabet", "domain.", {});
    cfg.markov_n = get_or<int>(dom, "n", "domain.", 1);
    check(cfg.markov_n >= 1, "config key 'domain.n' must be >= 1");
  } else if (cfg.domain_kind == "ar") {
    reject_unknown(dom, {"kind", "n_a", "coeff_lo", "coeff_hi", "sigma_lo", "sigma_hi"},
                   "domain.");
    cfg.ar.n_a = get_or<int>(dom, "n_a", "domain.", 1);
    cfg.ar.coeff_lo = get_or<double>(dom, "coeff_lo", "domain.", cfg.ar.coeff_lo);
    cfg.ar.coeff_hi = get_or<double>(dom, "coeff_hi", "domain.", cfg.ar.coeff_hi);
    cfg.ar.sigma_lo = get_or<double>(dom, "sigma_lo", "domain.", cfg.ar.sigma_lo);
    cfg.ar.sigma_hi = get_or<double>(dom, "sigma_hi", "domain.", cfg.ar.sigma_hi);
    check(cfg.ar.n_a >= 1, "config key 'domain.n_a' must be >= 1");
    check(cfg.ar.coeff_lo <= cfg.ar.coeff_hi, "config key 'domain.coeff_lo' exceeds coeff_hi");
    check(cfg.ar.sigma_lo > 0.0 && cfg.ar.sigma_lo <= cfg.ar.sigma_hi,
          "config keys 'domain.sigma_lo/sigma_hi' must satisfy 0 < lo <= hi");
  } else {
    throw ConfigError("config key 'domain.kind' must be 'markov' or 'ar'");
  }

  if (j.contains("gpo")) {
    const json& g = j.at("gpo");
    check(g.is_object(), "config key 'gpo' must be an object");
    reject_unknown(g,
                   {"K", "warmup", "T", "N", "M", "N_limit", "replicates", "objective",
                    "matern_order", "fit_restarts", "fit_period", "max_rejection_rounds", "rho"},
                   "gpo.");
    cfg.gpo.K = get_or<int>(g, "K", "gpo.", cfg.gpo.K);
    cfg.gpo.warmup = get_or<int>(g, "warmup", "gpo.", cfg.gpo.warmup);
    cfg.gpo.T = get_or<int>(g, "T", "gpo.", cfg.gpo.T);
    cfg.gpo.N = get_or<int>(g, "N", "gpo.", cfg.gpo.N);
    cfg.gpo.M = get_or<int>(g, "M", "gpo.", cfg.gpo.M);
    cfg.gpo.N_limit = get_or<int>(g, "N_limit", "gpo.", cfg.gpo.N_limit);
    cfg.gpo.replicates = get_or<int>(g, "replicates", "gpo.", cfg.gpo.replicates);
    cfg.gpo.objective = get_or<std::string>(g, "objective", "gpo.", cfg.gpo.objective);
    cfg.gpo.matern_order = get_or<int>(g, "matern_order", "gpo.", cfg.gpo.matern_order);
    cfg.gpo.fit_restarts = get_or<int>(g, "fit_restarts", "gpo.", cfg.gpo.fit_restarts);
    cfg.gpo.fit_period = get_or<int>(g, "fit_period", "gpo.", cfg.gpo.fit_period);
    cfg.gpo.max_rejection_rounds =
        get_or<int>(g, "max_rejection_rounds", "gpo.", cfg.gpo.max_rejection_rounds);
    cfg.gpo.rho = get_or<double>(g, "rho", "gpo.", cfg.gpo.rho);
  }
  check(cfg.gpo.K >= 0, "config key 'gpo.K' must be >= 0");
  check(cfg.gpo.warmup >= 2, "config key 'gpo.warmup' must be >= 2");
  check(cfg.gpo.T >= 1, "config key 'gpo.T' must be >= 1");
  check(cfg.gpo.N >= 1, "config key 'gpo.N' must be >= 1");
  check(cfg.gpo.M >= 1, "config key 'gpo.M' must be >= 1");
  check(cfg.gpo.N_limit >= 0 && cfg.gpo.N_limit <= cfg.gpo.N,
        "config key 'gpo.N_limit' must lie in [0, N]");
  check(cfg.gpo.replicates >= 1, "config key 'gpo.replicates' must be >= 1");
  check(cfg.gpo.objective == "logdet", "config key 'gpo.objective' must be 'logdet'");
  check(cfg.gpo.matern_order == 1 || cfg.gpo.matern_order == 3 || cfg.gpo.matern_order == 5,
        "config key 'gpo.matern_order' must be one of 1, 3, 5");
  check(cfg.gpo.fit_restarts >= 1, "config key 'gpo.fit_restarts' must be >= 1");
  check(cfg.gpo.fit_period >= 1, "config key 'gpo.fit_period' must be >= 1");
  check(cfg.gpo.max_rejection_rounds >= 1,
        "config key 'gpo.max_rejection_rounds' must be >= 1");
  check(cfg.gpo.rho >= 0.0, "config key 'gpo.rho' must be >= 0");

  if (j.contains("acquisition")) {
    const json& a = j.at("acquisition");
    check(a.is_object(), "config key 'acquisition' must be an object");
    reject_unknown(a, {"xi", "restarts", "walk_halfwidth"}, "acquisition.");
    cfg.gpo.acquisition.xi = get_or<double>(a, "xi", "acquisition.", cfg.gpo.acquisition.xi);
    cfg.gpo.acquisition.restarts =
        get_or<int>(a, "restarts", "acquisition.", cfg.gpo.acquisition.restarts);
    cfg.gpo.acquisition.walk_halfwidth =
        get_or<double>(a, "walk_halfwidth", "acquisition.", cfg.gpo.acquisition.walk_halfwidth);
  }
  check(cfg.gpo.acquisition.xi >= 0.0, "config key 'acquisition.xi' must be >= 0");
  check(cfg.gpo.acquisition.restarts >= 1, "config key 'acquisition.restarts' must be >= 1");
  check(cfg.gpo.acquisition.walk_halfwidth >= 0.0,
        "config key 'acquisition.walk_halfwidth' must be >= 0");

  cfg.normality_replicates = get_or<int>(j, "normality_replicates", "", 200);
  check(cfg.normality_replicates >= 10,
        "config key 'normality_replicates' must be >= 10");
  cfg.out_dir = get_or<std::string>(j, "out_dir", "", cfg.out_dir);

  // validate model, theta0 and the domain by construction
  std::unique_ptr<model::ModelSpec> mod;
  try {
    mod = cfg.make_model();
  } catch (const Error& e) {
    throw ConfigError(std::string("config key 'model': ") + e.what());
  }
  check(cfg.theta0.size() == mod->n_theta(),
        "config key 'theta0' has the wrong length for model '" + cfg.model_id + "'");
  check(mod->parameter_domain().contains(cfg.theta0),
        "config key 'theta0' lies outside the model parameter domain");
  std::unique_ptr<inputs::DesignDomain> domain;
  try {
    domain = cfg.make_domain();
  } catch (const Error& e) {
    throw ConfigError(std::string("config key 'domain': ") + e.what());
  }

  if (j.contains("design")) {
    const Eigen::VectorXd d = to_vector(j.at("design"), "design");
    check(d.size() == domain->dim(), "config key 'design' has the wrong length");
    check(domain->feasible(d), "config key 'design' is infeasible in the domain");
    cfg.design = d;
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
}

ordered_json hyp_json(const surrogate::Hyperparameters& h) {
  ordered_json o;
  o["mean_const"] = h.mean_const;
  o["signal_var"] = h.signal_var;
  o["length_scales"] = std::vector<double>(h.length_scales.data(),
                                           h.length_scales.data() + h.length_scales.size());
  o["noise_var"] = h.noise_var;
  o["constant_var"] = h.constant_var;
  o["matern_order"] = h.matern_order;
  return o;
}

ordered_json versions_json() {
  ordered_json v;
  v["artifact"] = kArtifactVersion;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  return v;
}

std::vector<double> eigen_to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

std::unique_ptr<model::ModelSpec> ExperimentConfig::make_model() const {
  return model::make_model(model_id);
}

std::unique_ptr<inputs::DesignDomain> ExperimentConfig::make_domain() const {
  if (domain_kind == "markov")
    return std::make_unique<inputs::MarkovDesignDomain>(inputs::Alphabet(alphabet), markov_n);
  if (domain_kind == "ar") return std::make_unique<inputs::ArDesignDomain>(ar);
  throw ConfigError("domain kind must be 'markov' or 'ar'");
}

std::string ExperimentConfig::resolved_json() const {
  ordered_json j;
  j["model"] = model_id;
  j["theta0"] = eigen_to_std(theta0);
  ordered_json dom;
  dom["kind"] = domain_kind;
  if (domain_kind == "markov") {
    dom["alphabet"] = alphabet;
    dom["n"] = markov_n;
  } else {
    dom["n_a"] = ar.n_a;
    dom["coeff_lo"] = ar.coeff_lo;
    dom["coeff_hi"] = ar.coeff_hi;
    dom["sigma_lo"] = ar.sigma_lo;
    dom["sigma_hi"] = ar.sigma_hi;
  }
  j["domain"] = dom;
  j["seed"] = gpo.seed;
  ordered_json g;
  g["K"] = gpo.K;
  g["warmup"] = gpo.warmup;
  g["T"] = gpo.T;
  g["N"] = gpo.N;
  g["M"] = gpo.M;
  g["N_limit"] = gpo.N_limit;
  g["replicates"] = gpo.replicates;
  g["objective"] = gpo.objective;
  g["matern_order"] = gpo.matern_order;
  g["fit_restarts"] = gpo.fit_restarts;
  g["fit_period"] = gpo.fit_period;
  g["max_rejection_rounds"] = gpo.max_rejection_rounds;
  g["rho"] = gpo.rho;
  j["gpo"] = g;
  ordered_json a;
  a["xi"] = gpo.acquisition.xi;
  a["restarts"] = gpo.acquisition.restarts;
  a["walk_halfwidth"] = gpo.acquisition.walk_halfwidth;
  j["acquisition"] = a;
  if (design) j["design"] = eigen_to_std(*design);
  j["normality_replicates"] = normality_replicates;
  j["out_dir"] = out_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError(
        "config must be a JSON object with required keys model, theta0, domain, seed");
  return build_config(j);
}

ExperimentConfig validate_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config file '" + path + "' does not exist or is unreadable");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string trace_csv_header(const inputs::DesignDomain& domain) {
  std::string h = "k";
  for (const auto& name : domain.param_names()) h += "," + name;
  h += ",h_hat,mu_max,flags,wall_ms";
  return h;
}

std::string trace_csv_row(const driver::IterationRecord& rec) {
  std::string row = std::to_string(rec.k);
  for (int i = 0; i < rec.design.size(); ++i) row += "," + fmt(rec.design[i]);
  row += "," + fmt(rec.h_hat);
  row += "," + fmt(rec.mu_max);
  std::string flags;
  if (rec.regularized) flags = "regularized";
  if (rec.refit_reused) flags += flags.empty() ? "refit_reused" : "|refit_reused";
  row += "," + flags;
  // wall time is written as 0 so reruns with the same seed are byte-identical;
  // real timings go to summary.json
  row += ",0";
  return row;
}

int run(const ExperimentConfig& cfg) {
  const auto mod = cfg.make_model();
  const auto domain = cfg.make_domain();
  std::filesystem::create_directories(cfg.out_dir);

  const std::string trace_path = cfg.out_dir + "/trace.csv";
  std::ofstream trace(trace_path, std::ios::binary);
  if (!trace) throw Error("cannot open '" + trace_path + "' for writing");
  trace << trace_csv_header(*domain) << "\n";
  trace.flush();

  const auto t0 = std::chrono::steady_clock::now();
  driver::GpoResult result =
      driver::run_gpo(*mod, cfg.theta0, *domain, cfg.gpo, [&](const driver::IterationRecord& r) {
        trace << trace_csv_row(r) << "\n";
        trace.flush();
      });
  const double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  ordered_json s;
  s["best_design"] = eigen_to_std(result.best_design);
  s["final_objective_estimate"] = result.best_posterior_mean;
  s["best_posterior_sd"] = result.best_posterior_sd;
  s["best_observed"] = result.best_observed;
  s["hyperparameters"] = hyp_json(result.hyperparameters);
  s["seed"] = cfg.gpo.seed;
  s["evaluations"] = result.trace.size();
  s["failures"] = result.failures.size();
  s["wall_ms_total"] = total_ms;
  s["versions"] = versions_json();
  write_file(cfg.out_dir + "/summary.json", s.dump(2) + "\n");

  std::cout << "best design:";
  for (int i = 0; i < result.best_design.size(); ++i) std::cout << " " << result.best_design[i];
  std::cout << "\nfinal objective estimate (posterior mean): " << result.best_posterior_mean
            << "\nbest observed h_hat: " << result.best_observed << "\ntrace: " << trace_path
            << "\n";
  return 0;
}

int evaluate(const ExperimentConfig& cfg) {
  if (!cfg.design)
    throw ConfigError("config key 'design' is required for the evaluate subcommand");
  const auto mod = cfg.make_model();
  const auto domain = cfg.make_domain();
  rng::StreamKey master(cfg.gpo.seed);
  const driver::EvalResult ev =
      driver::evaluate_objective(*mod, cfg.theta0, *cfg.design, *domain, cfg.gpo,
                                 master.child(1).child(0));
  std::filesystem::create_directories(cfg.out_dir);
  ordered_json o;
  o["design"] = eigen_to_std(*cfg.design);
  o["h_hat"] = ev.h;
  o["loglik"] = ev.loglik;
  o["regularized"] = ev.regularized;
  o["seed"] = cfg.gpo.seed;
  o["versions"] = versions_json();
  write_file(cfg.out_dir + "/evaluate.json", o.dump(2) + "\n");
  std::cout << "h_hat: " << fmt(ev.h) << (ev.regularized ? " (regularized)" : "") << "\n";
  return 0;
}

NormalityReport normality_report(const ExperimentConfig& cfg) {
  if (cfg.model_id != "lgss")
    throw ConfigError("normality-report requires the 'lgss' model");
  const auto mod = cfg.make_model();
  const auto domain = cfg.make_domain();
  Eigen::VectorXd design;
  if (cfg.design) {
    design = *cfg.design;
  } else if (cfg.domain_kind == "markov") {
    design = Eigen::VectorXd::Constant(domain->dim(), 1.0 / domain->dim());
  } else {
    throw ConfigError("config key 'design' is required for AR-domain normality reports");
  }

  rng::StreamKey master(cfg.gpo.seed);
  const int R = cfg.normality_replicates;
  std::vector<double> h(R);
  for (int r = 0; r < R; ++r)
    h[r] = driver::evaluate_objective(*mod, cfg.theta0, design, *domain, cfg.gpo,
                                      master.child(1).child(r))
               .h;

  NormalityReport rep;
  const double mean = stats::mean(h);
  const double sd = stats::stddev(h);
  rep.nu.resize(R);
  for (int r = 0; r < R; ++r) rep.nu[r] = (h[r] - mean) / sd;
  rep.skewness = stats::skewness(rep.nu);
  rep.excess_kurtosis = stats::excess_kurtosis(rep.nu);
  const auto ks = stats::ks_test_standard_normal(rep.nu);
  rep.ks_statistic = ks.statistic;
  rep.ks_p_value = ks.p_value;

  std::filesystem::create_directories(cfg.out_dir);
  std::string csv = "nu\n";
  for (double v : rep.nu) csv += fmt(v) + "\n";
  write_file(cfg.out_dir + "/nu-samples.csv", csv);
  ordered_json o;
  o["replicates"] = R;
  o["skewness"] = rep.skewness;
  o["excess_kurtosis"] = rep.excess_kurtosis;
  o["ks_statistic"] = rep.ks_statistic;
  o["ks_p_value"] = rep.ks_p_value;
  o["seed"] = cfg.gpo.seed;
  o["versions"] = versions_json();
  write_file(cfg.out_dir + "/normality.json", o.dump(2) + "\n");
  return rep;
}

bool oracle_check(std::uint64_t seed, std::string* log) {
  const model::LgssModel lgss;
  Eigen::VectorXd theta(2);
  theta << 0.8, 1.0;
  rng::StreamKey key(seed);
  bool ok = true;
  std::ostringstream out;

  // dense joint-Gaussian agreement, T <= 6
  for (int T = 1; T <= 6; ++T) {
    auto rs = key.child(10 + T).stream();
    std::vector<double> u(T), y(T);
    for (int t = 0; t < T; ++t) u[t] = rs.uniform(-1.0, 1.0);
    const auto tr = model::simulate(lgss, theta, u, key.child(20 + T));
    const double exact = oracle::kalman_loglik(lgss, theta, tr.outputs, u);
    const double dense = oracle::dense_joint_loglik(lgss, theta, tr.outputs, u);
    const double err = std::fabs(exact - dense);
    out << "loglik dense check T=" << T << ": |diff|=" << err << "\n";
    ok = ok && err < 1e-10;
  }

  // finite-difference score agreement
  {
    const int T = 60;
    auto rs = key.child(1).stream();
    std::vector<double> u(T);
    for (int t = 0; t < T; ++t) u[t] = rs.uniform() < 0.5 ? -1.0 : 1.0;
    const auto tr = model::simulate(lgss, theta, u, key.child(2));
    const Eigen::VectorXd score = oracle::kalman_score(lgss, theta, tr.outputs, u);
    const double eps = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[i] += eps;
      tm[i] -= eps;
      const double fd = (oracle::kalman_loglik(lgss, tp, tr.outputs, u) -
                         oracle::kalman_loglik(lgss, tm, tr.outputs, u)) /
                        (2.0 * eps);
      const double rel = std::fabs(score[i] - fd) / std::max(1.0, std::fabs(fd));
      out << "score fd check component " << i << ": rel=" << rel << "\n";
      ok = ok && rel < 1e-6;
    }
  }

  // particle pipeline smoke agreement at reduced size
  {
    const int T = 100, N = 500, S = 10;
    smc::SmootherConfig scfg;
    scfg.M = 50;
    std::vector<double> err0, err1;
    for (int s = 0; s < S; ++s) {
      auto skey = key.child(100 + s);
      auto rs = skey.child(0).stream();
      std::vector<double> u(T);
      for (int t = 0; t < T; ++t) u[t] = rs.uniform() < 0.5 ? -1.0 : 1.0;
      const auto tr = model::simulate(lgss, theta, u, skey.child(1));
      const Eigen::VectorXd exact = oracle::kalman_score(lgss, theta, tr.outputs, u);
      const auto ps = smc::bootstrap_pf(lgss, theta, tr.outputs, u, N, skey.child(2));
      const auto bt = smc::ffbsi_es(lgss, theta, ps, u, scfg, skey.child(3));
      const auto est = smc::estimate_score(lgss, theta, bt, tr.outputs, u);
      err0.push_back(est.total[0] - exact[0]);
      err1.push_back(est.total[1] - exact[1]);
    }
    const double m0 = stats::mean(err0), s0 = stats::stddev(err0) / std::sqrt(double(S));
    const double m1 = stats::mean(err1), s1 = stats::stddev(err1) / std::sqrt(double(S));
    out << "pipeline score bias: " << m0 << " (se " << s0 << "), " << m1 << " (se " << s1
        << ")\n";
    ok = ok && std::fabs(m0) < 4.0 * s0 + 1.0 && std::fabs(m1) < 4.0 * s1 + 1.0;
  }

  out << (ok ? "oracle-check: PASS\n" : "oracle-check: FAIL\n");
  if (log) *log = out.str();
  return ok;
}

std::string extreme_points_csv(const ExperimentConfig& cfg) {
  if (cfg.domain_kind != "markov")
    throw ConfigError("extreme-points requires a markov domain");
  const inputs::Alphabet alphabet(cfg.alphabet);
  const auto points = inputs::enumerate_extreme_points(alphabet, cfg.markov_n);
  const int a = alphabet.size();
  const int blocks = static_cast<int>(points.empty() ? 0 : points.front().size());

  std::string header;
  for (int b = 0; b < blocks; ++b) {
    std::string label;
    int rem = b;
    for (int i = cfg.markov_n - 1; i >= 0; --i) {
      int div = 1;
      for (int k = 0; k < i; ++k) div *= a;
      const int sym = rem / div;
      rem %= div;
      label += (label.empty() ? "" : "|") + fmt(alphabet.values[sym]);
    }
    header += (b ? "," : "") + label;
  }
  std::string csv = header + "\n";
  for (const auto& p : points) {
    std::string row;
    for (int b = 0; b < blocks; ++b) row += (b ? "," : "") + fmt(p[b]);
    csv += row + "\n";
  }
  return csv;
}

}  // namespace gpoid::cli
