#include "gpoid/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gpoid/errors.hpp"

namespace gpoid::driver {

namespace {

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

void validate(const GpoConfig& cfg, const inputs::DesignDomain& domain) {
  if (cfg.K < 0 || cfg.warmup < 2) throw ConfigError("run_gpo: need K >= 0 and warmup >= 2");
  if (cfg.T < 1 || cfg.N < 1 || cfg.M < 1 || cfg.replicates < 1)
    throw ConfigError("run_gpo: sizes must be positive");
  if (cfg.objective != "logdet")
    throw ConfigError("run_gpo: unsupported objective '" + cfg.objective + "'");
  if (domain.dim() < 1) throw ConfigError("run_gpo: empty design domain");
}

surrogate::Hyperparameters initial_hyp(const surrogate::TrainingSet& data,
                                       const GpoConfig& cfg) {
  surrogate::Hyperparameters hyp;
  const double mean = data.values.mean();
  double var = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const double d = data.values[i] - mean;
    var += d * d;
  }
  var = std::max(var / std::max(1, data.size() - 1), 1e-6);
  hyp.mean_const = mean;
  hyp.signal_var = var;
  hyp.noise_var = 0.1 * var;
  hyp.constant_var = 1e-4 * var;
  hyp.length_scales = Eigen::VectorXd::Constant(data.dim(), 0.5);
  hyp.matern_order = cfg.matern_order;
  return hyp;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EvalResult evaluate_objective(const model::ModelSpec& m, const model::ParameterVector& theta0,
                              const Eigen::VectorXd& design, const inputs::DesignDomain& domain,
                              const GpoConfig& cfg, rng::StreamKey key) {
  if (!domain.feasible(design))
    throw InfeasibleProposalError("evaluate_objective: infeasible design parameters");
  if (cfg.objective != "logdet")
    throw ConfigError("evaluate_objective: unsupported objective '" + cfg.objective + "'");

  smc::SmootherConfig scfg;
  scfg.M = cfg.M;
  scfg.N_limit = cfg.N_limit;
  scfg.rho = cfg.rho;
  scfg.max_rejection_rounds = cfg.max_rejection_rounds;

  EvalResult out;
  for (int r = 0; r < cfg.replicates; ++r) {
    auto rep = key.child(r);
    auto input_rs = rep.child(0).stream();
    const std::vector<double> u = domain.generate_signal(design, cfg.T, input_rs);
    const model::Trajectory data = model::simulate(m, theta0, u, rep.child(1));
    const smc::ParticleSystem ps =
        smc::bootstrap_pf(m, theta0, data.outputs, u, cfg.N, rep.child(2), cfg.exec);
    const smc::BackwardTrajectorySet bt =
        smc::ffbsi_es(m, theta0, ps, u, scfg, rep.child(3), cfg.exec);
    const smc::ScoreEstimate score = smc::estimate_score(m, theta0, bt, data.outputs, u, cfg.exec);
    const smc::FisherEstimate fisher = smc::estimate_fisher(score, cfg.T);
    const smc::LogDetResult ld = smc::objective_logdet(fisher);
    out.h += ld.value;
    out.loglik += ps.loglik();
    out.regularized = out.regularized || ld.regularized;
  }
  out.h /= cfg.replicates;
  out.loglik /= cfg.replicates;
  return out;
}

Eigen::VectorXd final_design(const surrogate::GpPosterior& gp, const inputs::DesignDomain& domain) {
  const auto& data = gp.data();
  if (data.size() == 0) throw InvalidInputError("final_design: empty training set");

  const auto mu_at = [&](const Eigen::VectorXd& x) { return gp.predict(x).mu; };

  // compass search on the posterior mean from one start
  const auto polish = [&](Eigen::VectorXd start) {
    Eigen::VectorXd x = domain.project(std::move(start));
    double fx = mu_at(x);
    double step = 0.25;
    for (int it = 0; it < 200 && step >= 1e-5; ++it) {
      Eigen::VectorXd best_cand;
      double best_val = fx;
      for (int i = 0; i < domain.dim(); ++i) {
        for (double sgn : {1.0, -1.0}) {
          Eigen::VectorXd cand = x;
          cand[i] += sgn * step;
          cand = domain.project(cand);
          const double v = mu_at(cand);
          if (v > best_val) {
            best_val = v;
            best_cand = cand;
          }
        }
      }
      if (best_cand.size() > 0) {
        x = best_cand;
        fx = best_val;
      } else {
        step *= 0.5;
      }
    }
    return x;
  };

  const auto merge_count = [&](const Eigen::VectorXd& x) {
    for (int i = 0; i < data.size(); ++i)
      if ((data.points.row(i).transpose() - x).cwiseAbs().maxCoeff() <= 1e-12)
        return data.counts[i];
    return 0;
  };

  Eigen::VectorXd best;
  double best_mu = -std::numeric_limits<double>::infinity();
  int best_count = -1;
  for (int i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd cand = polish(data.points.row(i).transpose());
    const double mu = mu_at(cand);
    const int count = merge_count(cand);
    const bool better = mu > best_mu || (mu == best_mu && count > best_count) ||
                        (mu == best_mu && count == best_count && best.size() > 0 &&
                         lex_less(cand, best));
    if (better) {
      best = cand;
      best_mu = mu;
      best_count = count;
    }
  }
  if (!domain.feasible(best))
    throw InfeasibleProposalError("final_design: maximizer is infeasible");
  return best;
}

GpoResult run_gpo(const model::ModelSpec& m, const model::ParameterVector& theta0,
                  const inputs::DesignDomain& domain, const GpoConfig& cfg,
                  const RecordSink& sink) {
  validate(cfg, domain);
  rng::StreamKey master(cfg.seed);
  const int planned = cfg.warmup + cfg.K;

  GpoResult result;
  surrogate::TrainingSet data;

  const auto check_abort = [&] {
    if (static_cast<double>(result.failures.size()) > 0.2 * planned)
      throw RunAbortError("run_gpo: more than 20% of evaluations failed (" +
                          std::to_string(result.failures.size()) + " of " +
                          std::to_string(planned) + " planned); last: " +
                          result.failures.back().message);
  };

  const auto try_evaluate = [&](int k, const Eigen::VectorXd& design, EvalResult& ev) {
    try {
      ev = evaluate_objective(m, theta0, design, domain, cfg, master.child(1).child(k));
      return true;
    } catch (const DegenerateFilterError& e) {
      result.failures.push_back({k, design, e.what()});
    } catch (const SingularInformationError& e) {
      result.failures.push_back({k, design, e.what()});
    }
    check_abort();
    return false;
  };

  for (int j = 0; j < cfg.warmup; ++j) {
    auto ws = master.child(3).child(j).stream();
    const Eigen::VectorXd design = domain.sample_uniform(ws);
    const auto t0 = std::chrono::steady_clock::now();
    EvalResult ev;
    if (!try_evaluate(j, design, ev)) continue;
    data.add(design, ev.h);
    IterationRecord rec;
    rec.k = j;
    rec.design = design;
    rec.h_hat = ev.h;
    rec.regularized = ev.regularized;
    rec.wall_ms = elapsed_ms(t0);
    result.trace.push_back(rec);
    if (sink) sink(result.trace.back());
    result.best_observed = std::max(result.best_observed, ev.h);
  }
  if (data.size() < 2)
    throw RunAbortError("run_gpo: fewer than two successful warm-up evaluations");

  surrogate::Hyperparameters hyp = initial_hyp(data, cfg);
  const surrogate::FitBounds bounds;

  for (int it = 0; it < cfg.K; ++it) {
    const int k = cfg.warmup + it;
    const auto t0 = std::chrono::steady_clock::now();

    surrogate::FitOptions fo;
    fo.seed = master.child(4).child(k).value();
    fo.restarts = (it % cfg.fit_period == 0) ? cfg.fit_restarts : 1;
    bool reused = false;
    try {
      hyp = surrogate::fit_hyperparameters(data, hyp, bounds, fo);
    } catch (const FittingError&) {
      reused = true;
    }
    const surrogate::GpPosterior gp(hyp, data);
    const double mu_max = acquisition::incumbent(gp);
    const Eigen::VectorXd proposal =
        acquisition::propose_next(gp, domain, cfg.acquisition, master.child(2).child(k));
    const double proposal_sd = std::sqrt(gp.predict(proposal).var_observed);

    EvalResult ev;
    if (!try_evaluate(k, proposal, ev)) continue;
    data.add(proposal, ev.h);

    IterationRecord rec;
    rec.k = k;
    rec.design = proposal;
    rec.h_hat = ev.h;
    rec.mu_max = mu_max;
    rec.proposal_sd = proposal_sd;
    rec.hyp = hyp;
    rec.regularized = ev.regularized;
    rec.refit_reused = reused;
    rec.wall_ms = elapsed_ms(t0);
    result.trace.push_back(rec);
    if (sink) sink(result.trace.back());
    result.best_observed = std::max(result.best_observed, ev.h);
  }

  {
    surrogate::FitOptions fo;
    fo.seed = master.child(4).child(planned).value();
    fo.restarts = cfg.fit_restarts;
    try {
      hyp = surrogate::fit_hyperparameters(data, hyp, bounds, fo);
    } catch (const FittingError&) {
      // keep the last working hyperparameters
    }
  }
  const surrogate::GpPosterior gp(hyp, data);
  result.hyperparameters = hyp;
  result.best_design = final_design(gp, domain);
  const auto pred = gp.predict(result.best_design);
  result.best_posterior_mean = pred.mu;
  result.best_posterior_sd = std::sqrt(std::max(0.0, pred.var_latent));
  return result;
}

}  // namespace gpoid::driver
