#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "gpoid/model.hpp"
#include "gpoid/rng.hpp"

// Exact Kalman machinery for the LGSS benchmark: log-likelihood through the
// prediction-error decomposition, score through tangent-linear sensitivity
// recursions, RTS smoother moments with lag-one cross-covariances, and a
// Monte-Carlo Fisher matrix from exact scores. Shares the u_0 := u_T and
// x_0 ~ N(0, sigma_v^2) conventions with model::simulate so that comparisons
// against the particle pipeline are exact.

namespace gpoid::oracle {

struct KalmanState {
  std::vector<double> pred_mean, pred_var;    // t = 1..T
  std::vector<double> filt_mean, filt_var;    // t = 0..T
  std::vector<double> innovation, innovation_var;  // t = 1..T
  double loglik = 0.0;
};

KalmanState kalman_filter(const model::LgssModel& m, const Eigen::VectorXd& theta,
                          const std::vector<double>& y, const std::vector<double>& u);

double kalman_loglik(const model::LgssModel& m, const Eigen::VectorXd& theta,
                     const std::vector<double>& y, const std::vector<double>& u);

Eigen::VectorXd kalman_score(const model::LgssModel& m, const Eigen::VectorXd& theta,
                             const std::vector<double>& y, const std::vector<double>& u);

struct SmootherMoments {
  std::vector<double> mean, var;   // E[x_t | y], Var[x_t | y], t = 0..T
  std::vector<double> lag_one_cov; // Cov(x_{t-1}, x_t | y), index t = 1..T
};

SmootherMoments exact_smoother_moments(const model::LgssModel& m, const Eigen::VectorXd& theta,
                                       const std::vector<double>& y,
                                       const std::vector<double>& u);

// Brute-force log-density of y_{1:T} under the joint Gaussian law implied by
// the LGSS model (dense covariance assembly; for small T cross-checks only).
double dense_joint_loglik(const model::LgssModel& m, const Eigen::VectorXd& theta,
                          const std::vector<double>& y, const std::vector<double>& u);

using InputSampler = std::function<std::vector<double>(int T, rng::Stream&)>;

// (1/R) sum_r S_r S_r^T / T with S_r the exact score on a fresh realization
Eigen::MatrixXd exact_fisher_mc(const model::LgssModel& m, const Eigen::VectorXd& theta,
                                const InputSampler& input_source, int T, int R,
                                rng::StreamKey key);

}  // namespace gpoid::oracle
