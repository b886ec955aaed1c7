#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gpoid/acquisition.hpp"
#include "gpoid/inputs.hpp"
#include "gpoid/model.hpp"
#include "gpoid/rng.hpp"
#include "gpoid/smc.hpp"
#include "gpoid/surrogate.hpp"

namespace gpoid::driver {

struct GpoConfig {
  int K = 500;
  int warmup = 20;
  int T = 1000;
  int N = 2500;
  int M = 100;
  int N_limit = 0;  // 0 -> ceil(sqrt(N))
  int replicates = 1;
  std::string objective = "logdet";
  std::uint64_t seed = 0;
  int matern_order = 3;
  int fit_restarts = 8;
  int fit_period = 25;  // full multi-start refit every this many iterations
  int max_rejection_rounds = 1000;
  double rho = 0.0;  // 0 -> model transition density bound
  acquisition::AcquisitionConfig acquisition;
  smc::Exec exec = smc::Exec::Parallel;
};

struct EvalResult {
  double h = 0.0;
  bool regularized = false;
  double loglik = 0.0;  // by-product, averaged over replicates
};

struct IterationRecord {
  int k = 0;
  Eigen::VectorXd design;
  double h_hat = 0.0;
  double mu_max = std::numeric_limits<double>::quiet_NaN();      // NaN during warm-up
  double proposal_sd = std::numeric_limits<double>::quiet_NaN(); // predictive std at the proposal
  surrogate::Hyperparameters hyp;
  bool regularized = false;
  bool refit_reused = false;
  double wall_ms = 0.0;
};

struct FailureRecord {
  int k = 0;
  Eigen::VectorXd design;
  std::string message;
};

struct GpoResult {
  Eigen::VectorXd best_design;
  double best_posterior_mean = 0.0;
  double best_posterior_sd = 0.0;
  double best_observed = -std::numeric_limits<double>::infinity();
  std::vector<IterationRecord> trace;
  std::vector<FailureRecord> failures;
  surrogate::Hyperparameters hyperparameters;  // after the final refit
};

// RNG layout: from the master key (config seed), child(1).child(k) drives
// evaluation k (warm-up evaluations first), child(2).child(k) the proposal,
// child(3).child(j) the warm-up design draw, child(4).child(k).value() seeds
// the hyperparameter fit. Within an evaluation, replicate r uses child(r)
// with child(0)=input, child(1)=data simulation, child(2)=filter,
// child(3)=smoother.
EvalResult evaluate_objective(const model::ModelSpec& m, const model::ParameterVector& theta0,
                              const Eigen::VectorXd& design, const inputs::DesignDomain& domain,
                              const GpoConfig& cfg, rng::StreamKey key);

// The sink, when set, receives each trace record as soon as it exists so
// callers can flush partial traces before a possible abort.
using RecordSink = std::function<void(const IterationRecord&)>;

GpoResult run_gpo(const model::ModelSpec& m, const model::ParameterVector& theta0,
                  const inputs::DesignDomain& domain, const GpoConfig& cfg,
                  const RecordSink& sink = {});

// Posterior-mean maximization seeded by every evaluated point; ties resolved
// toward points with more merged evaluations, then lexicographically.
Eigen::VectorXd final_design(const surrogate::GpPosterior& gp, const inputs::DesignDomain& domain);

}  // namespace gpoid::driver
