#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gpoid::surrogate {

// Covariance is signal_var * Matern_{s/2}(ARD distance) + constant_var.
struct Hyperparameters {
  double mean_const = 0.0;
  double signal_var = 1.0;
  Eigen::VectorXd length_scales;
  double noise_var = 1e-4;
  double constant_var = 0.0;
  int matern_order = 3;  // s in {1, 3, 5}
};

struct TrainingSet {
  Eigen::MatrixXd points;  // k x d
  Eigen::VectorXd values;  // k
  std::vector<int> counts; // observations merged into each row

  int size() const { return static_cast<int>(values.size()); }
  int dim() const { return static_cast<int>(points.cols()); }

  // Appends an observation; rows matching an existing point within 1e-12
  // (max-norm) are merged by averaging the values.
  void add(const Eigen::VectorXd& x, double value);
};

double kernel(const Hyperparameters& hyp, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

double log_marginal_likelihood(const Hyperparameters& hyp, const TrainingSet& data);

struct Prediction {
  double mu = 0.0;
  double var_latent = 0.0;
  double var_observed = 0.0;
};

class GpPosterior {
 public:
  GpPosterior(Hyperparameters hyp, TrainingSet data);

  Prediction predict(const Eigen::VectorXd& x) const;
  double log_marginal_likelihood() const { return lml_; }
  const Hyperparameters& hyp() const { return hyp_; }
  const TrainingSet& data() const { return data_; }
  double jitter() const { return jitter_; }

 private:
  Hyperparameters hyp_;
  TrainingSet data_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;  // Gamma^-1 (values - mean)
  double lml_ = 0.0;
  double jitter_ = 0.0;
};

inline Prediction posterior(const GpPosterior& gp, const Eigen::VectorXd& x) {
  return gp.predict(x);
}

struct FitBounds {
  double signal_var_lo = 1e-6, signal_var_hi = 1e6;
  double length_lo = 1e-3, length_hi = 1e3;
  double noise_lo = 1e-10, noise_hi = 1e3;
  double constant_lo = 1e-12, constant_hi = 1e6;
};

struct FitOptions {
  int restarts = 8;
  std::uint64_t seed = 0x9a7c6f5d;
  int max_iters = 250;
};

// Empirical-Bayes fit: Nelder-Mead over log-transformed positive parameters
// with the constant mean profiled out in closed form.
Hyperparameters fit_hyperparameters(const TrainingSet& data, const Hyperparameters& init,
                                    const FitBounds& bounds = {}, const FitOptions& opts = {});

}  // namespace gpoid::surrogate
