#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "gpoid/rng.hpp"

namespace gpoid::model {

using ParameterVector = Eigen::VectorXd;

struct BoxBounds {
  Eigen::VectorXd lo, hi;
  bool contains(const Eigen::VectorXd& x) const;
};

struct Trajectory {
  std::vector<double> states;   // x_0 .. x_T
  std::vector<double> outputs;  // y_1 .. y_T
  std::vector<double> inputs;   // u_1 .. u_T
};

// Scalar nonlinear state-space model
//   x_t | x_{t-1} ~ f_theta(. | x_{t-1}, u_{t-1})
//   y_t | x_t     ~ g_theta(. | x_t, u_t)
//   x_0 ~ mu_theta
// with theta restricted to a box domain. Both benchmark models are scalar in
// state, output and input; the interfaces stay scalar for that reason.
class ModelSpec {
 public:
  virtual ~ModelSpec() = default;

  int n_x() const { return 1; }
  int n_y() const { return 1; }
  int n_u() const { return 1; }
  int n_theta() const { return n_theta_; }
  const BoxBounds& parameter_domain() const { return domain_; }
  bool has_analytic_gradient() const { return has_analytic_gradient_; }
  bool has_exact_oracle() const { return has_exact_oracle_; }
  const std::string& id() const { return id_; }

  virtual double log_f(const ParameterVector& theta, double x_t, double x_prev,
                       double u_prev) const = 0;
  virtual double log_g(const ParameterVector& theta, double y_t, double x_t,
                       double u_t) const = 0;

  // gradient of xi_theta(x_{t-1:t}) = log f(x_t|x_{t-1},u_{t-1}) + log g(y_t|x_t,u_t)
  virtual Eigen::VectorXd grad_xi(const ParameterVector& theta, double x_prev, double x_t,
                                  double y_t, double u_prev, double u_t) const = 0;

  virtual double sample_initial(const ParameterVector& theta, rng::Stream& rs) const = 0;
  virtual double sample_transition(const ParameterVector& theta, double x_prev, double u_prev,
                                   rng::Stream& rs) const = 0;
  virtual double sample_observation(const ParameterVector& theta, double x_t, double u_t,
                                    rng::Stream& rs) const = 0;

  // rho with f_theta(x|x',u) <= rho for all arguments
  virtual double transition_density_bound(const ParameterVector& theta) const = 0;

 protected:
  ModelSpec(std::string id, int n_theta, BoxBounds domain, bool analytic_gradient,
            bool exact_oracle)
      : id_(std::move(id)),
        n_theta_(n_theta),
        domain_(std::move(domain)),
        has_analytic_gradient_(analytic_gradient),
        has_exact_oracle_(exact_oracle) {}

  void check_theta(const ParameterVector& theta) const;

  std::string id_;
  int n_theta_;
  BoxBounds domain_;
  bool has_analytic_gradient_;
  bool has_exact_oracle_;
};

// x_t = phi x_{t-1} + u_{t-1} + v_t,  y_t = alpha x_t + e_t,  theta = (phi, alpha)
class LgssModel : public ModelSpec {
 public:
  // sigma overrides exist as a test hook (sigma = 0 degenerates to the
  // noise-free recursion; densities are then unavailable)
  explicit LgssModel(double sigma_v = 0.1, double sigma_e = 0.1);

  double sigma_v() const { return sigma_v_; }
  double sigma_e() const { return sigma_e_; }

  double log_f(const ParameterVector& theta, double x_t, double x_prev,
               double u_prev) const override;
  double log_g(const ParameterVector& theta, double y_t, double x_t, double u_t) const override;
  Eigen::VectorXd grad_xi(const ParameterVector& theta, double x_prev, double x_t, double y_t,
                          double u_prev, double u_t) const override;
  double sample_initial(const ParameterVector& theta, rng::Stream& rs) const override;
  double sample_transition(const ParameterVector& theta, double x_prev, double u_prev,
                           rng::Stream& rs) const override;
  double sample_observation(const ParameterVector& theta, double x_t, double u_t,
                            rng::Stream& rs) const override;
  double transition_density_bound(const ParameterVector& theta) const override;

 private:
  double sigma_v_, sigma_e_;
};

// x_t = 1/(gamma + x_{t-1}^2) + u_{t-1} + v_t,  y_t = beta x_t^2 + e_t,  theta = (gamma, beta)
class BenchNonlinearModel : public ModelSpec {
 public:
  BenchNonlinearModel();

  double sigma_v() const { return sigma_v_; }
  double sigma_e() const { return sigma_e_; }

  double log_f(const ParameterVector& theta, double x_t, double x_prev,
               double u_prev) const override;
  double log_g(const ParameterVector& theta, double y_t, double x_t, double u_t) const override;
  Eigen::VectorXd grad_xi(const ParameterVector& theta, double x_prev, double x_t, double y_t,
                          double u_prev, double u_t) const override;
  double sample_initial(const ParameterVector& theta, rng::Stream& rs) const override;
  double sample_transition(const ParameterVector& theta, double x_prev, double u_prev,
                           rng::Stream& rs) const override;
  double sample_observation(const ParameterVector& theta, double x_t, double u_t,
                            rng::Stream& rs) const override;
  double transition_density_bound(const ParameterVector& theta) const override;

 private:
  double sigma_v_, sigma_e_;
};

// Simulates x_0 ~ mu, x_t ~ f(.|x_{t-1}, u_{t-1}), y_t ~ g(.|x_t, u_t) for
// t = 1..T with the circular input convention u_0 := u_T. Pure in (theta, u, key).
Trajectory simulate(const ModelSpec& model, const ParameterVector& theta,
                    const std::vector<double>& u, rng::StreamKey key);

std::unique_ptr<ModelSpec> make_model(const std::string& id);

double gaussian_logpdf(double x, double mean, double stddev);

}  // namespace gpoid::model
