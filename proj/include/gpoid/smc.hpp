#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gpoid/model.hpp"
#include "gpoid/rng.hpp"

namespace gpoid::smc {

enum class Exec { Serial, Parallel };

// Output of the bootstrap particle filter. Time runs down the rows:
// particles row t holds x_t^(i) for t = 0..T, weight/ancestor row t-1
// corresponds to time step t = 1..T (weights at time 0 are uniform).
struct ParticleSystem {
  Eigen::MatrixXd particles;           // (T+1) x N
  Eigen::MatrixXd normalized_weights;  // T x N, each row sums to 1
  Eigen::MatrixXi ancestors;           // T x N, values in [0, N)
  Eigen::VectorXd log_weight_sums;     // T, log sum_i of unnormalized weights

  int T() const { return static_cast<int>(normalized_weights.rows()); }
  int N() const { return static_cast<int>(particles.cols()); }
  double loglik() const {
    return log_weight_sums.sum() - T() * std::log(static_cast<double>(N()));
  }
};

// M backward trajectories x~_0..x~_T; the sweep is extended to time 0 so the
// boundary score term at t = 1 has a smoothed predecessor state.
struct BackwardTrajectorySet {
  Eigen::MatrixXd states;  // M x (T+1)

  int M() const { return static_cast<int>(states.rows()); }
  int T() const { return static_cast<int>(states.cols()) - 1; }
};

struct SmootherConfig {
  int M = 100;
  int N_limit = 0;                 // 0 -> ceil(sqrt(N))
  double rho = 0.0;                // 0 -> model transition_density_bound
  int max_rejection_rounds = 1000; // safety cap; leftovers fall back to exact sampling
};

struct ScoreEstimate {
  Eigen::MatrixXd per_time;  // T x n_theta, row t-1 = S_t
  Eigen::VectorXd total;     // column sums
};

struct FisherEstimate {
  Eigen::MatrixXd matrix;  // n_theta x n_theta, symmetric PSD
};

struct LogDetResult {
  double value = 0.0;
  bool regularized = false;
};

ParticleSystem bootstrap_pf(const model::ModelSpec& m, const model::ParameterVector& theta,
                            const std::vector<double>& y, const std::vector<double>& u, int N,
                            rng::StreamKey key, Exec exec = Exec::Parallel);

BackwardTrajectorySet ffbsi_es(const model::ModelSpec& m, const model::ParameterVector& theta,
                               const ParticleSystem& ps, const std::vector<double>& u,
                               const SmootherConfig& cfg, rng::StreamKey key,
                               Exec exec = Exec::Parallel);

ScoreEstimate estimate_score(const model::ModelSpec& m, const model::ParameterVector& theta,
                             const BackwardTrajectorySet& traj, const std::vector<double>& y,
                             const std::vector<double>& u, Exec exec = Exec::Parallel);

FisherEstimate estimate_fisher(const ScoreEstimate& score, int T);

LogDetResult objective_logdet(const FisherEstimate& fisher);

}  // namespace gpoid::smc
