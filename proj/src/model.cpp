#include "gpoid/model.hpp"

#include <cmath>

#include "gpoid/errors.hpp"

namespace gpoid::model {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_finite(std::initializer_list<double> vals) {
  for (double v : vals) {
    if (!std::isfinite(v)) throw InvalidInputError("non-finite argument");
  }
}
}  // namespace

double gaussian_logpdf(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return -0.5 * z * z - std::log(stddev) - 0.5 * kLog2Pi;
}

bool BoxBounds::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

void ModelSpec::check_theta(const ParameterVector& theta) const {
  if (theta.size() != n_theta_ || !theta.allFinite())
    throw InvalidInputError("bad parameter vector for model " + id_);
  if (!domain_.contains(theta))
    throw InvalidInputError("parameter outside the domain of model " + id_);
}

namespace {
BoxBounds make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  BoxBounds b;
  b.lo = Eigen::VectorXd(static_cast<Eigen::Index>(lo.size()));
  b.hi = Eigen::VectorXd(static_cast<Eigen::Index>(hi.size()));
  Eigen::Index i = 0;
  for (double v : lo) b.lo[i++] = v;
  i = 0;
  for (double v : hi) b.hi[i++] = v;
  return b;
}
}  // namespace

LgssModel::LgssModel(double sigma_v, double sigma_e)
    : ModelSpec("lgss", 2, make_box({-0.999, -10.0}, {0.999, 10.0}),
                /*analytic_gradient=*/true, /*exact_oracle=*/true),
      sigma_v_(sigma_v),
      sigma_e_(sigma_e) {
  if (sigma_v < 0 || sigma_e < 0) throw InvalidInputError("negative noise std");
}

double LgssModel::log_f(const ParameterVector& theta, double x_t, double x_prev,
                        double u_prev) const {
  check_theta(theta);
  check_finite({x_t, x_prev, u_prev});
  if (sigma_v_ == 0) throw CapabilityError("transition density undefined at sigma_v = 0");
  return gaussian_logpdf(x_t, theta[0] * x_prev + u_prev, sigma_v_);
}

double LgssModel::log_g(const ParameterVector& theta, double y_t, double x_t,
                        double /*u_t*/) const {
  check_theta(theta);
  check_finite({y_t, x_t});
  if (sigma_e_ == 0) throw CapabilityError("observation density undefined at sigma_e = 0");
  return gaussian_logpdf(y_t, theta[1] * x_t, sigma_e_);
}

Eigen::VectorXd LgssModel::grad_xi(const ParameterVector& theta, double x_prev, double x_t,
                                   double y_t, double u_prev, double /*u_t*/) const {
  check_theta(theta);
  check_finite({x_prev, x_t, y_t, u_prev});
  Eigen::VectorXd g(2);
  g[0] = (x_t - theta[0] * x_prev - u_prev) * x_prev / (sigma_v_ * sigma_v_);
  g[1] = (y_t - theta[1] * x_t) * x_t / (sigma_e_ * sigma_e_);
  return g;
}

double LgssModel::sample_initial(const ParameterVector& /*theta*/, rng::Stream& rs) const {
  return rs.normal(0.0, sigma_v_);
}

double LgssModel::sample_transition(const ParameterVector& theta, double x_prev, double u_prev,
                                    rng::Stream& rs) const {
  return rs.normal(theta[0] * x_prev + u_prev, sigma_v_);
}

double LgssModel::sample_observation(const ParameterVector& theta, double x_t, double /*u_t*/,
                                     rng::Stream& rs) const {
  return rs.normal(theta[1] * x_t, sigma_e_);
}

double LgssModel::transition_density_bound(const ParameterVector& /*theta*/) const {
  if (sigma_v_ == 0) throw CapabilityError("unbounded transition density at sigma_v = 0");
  return 1.0 / (sigma_v_ * std::sqrt(2.0 * M_PI));
}

BenchNonlinearModel::BenchNonlinearModel()
    : ModelSpec("bench-nonlinear", 2, make_box({1e-3, -10.0}, {100.0, 10.0}),
                /*analytic_gradient=*/true, /*exact_oracle=*/false),
      sigma_v_(0.1),
      sigma_e_(1.0) {}

double BenchNonlinearModel::log_f(const ParameterVector& theta, double x_t, double x_prev,
                                  double u_prev) const {
  check_theta(theta);
  check_finite({x_t, x_prev, u_prev});
  return gaussian_logpdf(x_t, 1.0 / (theta[0] + x_prev * x_prev) + u_prev, sigma_v_);
}

double BenchNonlinearModel::log_g(const ParameterVector& theta, double y_t, double x_t,
                                  double /*u_t*/) const {
  check_theta(theta);
  check_finite({y_t, x_t});
  return gaussian_logpdf(y_t, theta[1] * x_t * x_t, sigma_e_);
}

Eigen::VectorXd BenchNonlinearModel::grad_xi(const ParameterVector& theta, double x_prev,
                                             double x_t, double y_t, double u_prev,
                                             double /*u_t*/) const {
  check_theta(theta);
  check_finite({x_prev, x_t, y_t, u_prev});
  const double denom = theta[0] + x_prev * x_prev;
  const double mean_f = 1.0 / denom + u_prev;
  const double x2 = x_t * x_t;
  Eigen::VectorXd g(2);
  g[0] = (x_t - mean_f) * (-1.0 / (denom * denom)) / (sigma_v_ * sigma_v_);
  g[1] = (y_t - theta[1] * x2) * x2 / (sigma_e_ * sigma_e_);
  return g;
}

double BenchNonlinearModel::sample_initial(const ParameterVector& /*theta*/,
                                           rng::Stream& rs) const {
  return rs.normal(0.0, sigma_v_);
}

double BenchNonlinearModel::sample_transition(const ParameterVector& theta, double x_prev,
                                              double u_prev, rng::Stream& rs) const {
  return rs.normal(1.0 / (theta[0] + x_prev * x_prev) + u_prev, sigma_v_);
}

double BenchNonlinearModel::sample_observation(const ParameterVector& theta, double x_t,
                                               double /*u_t*/, rng::Stream& rs) const {
  return rs.normal(theta[1] * x_t * x_t, sigma_e_);
}

double BenchNonlinearModel::transition_density_bound(const ParameterVector& /*theta*/) const {
  return 1.0 / (sigma_v_ * std::sqrt(2.0 * M_PI));
}

Trajectory simulate(const ModelSpec& model, const ParameterVector& theta,
                    const std::vector<double>& u, rng::StreamKey key) {
  if (u.empty()) throw InvalidInputError("simulate needs T >= 1");
  for (double v : u) {
    if (!std::isfinite(v)) throw InvalidInputError("non-finite input value");
  }
  const int T = static_cast<int>(u.size());
  Trajectory tr;
  tr.inputs = u;
  tr.states.resize(T + 1);
  tr.outputs.resize(T);
  auto rs = key.stream();
  tr.states[0] = model.sample_initial(theta, rs);
  for (int t = 1; t <= T; ++t) {
    const double u_prev = (t == 1) ? u[T - 1] : u[t - 2];  // u_0 := u_T
    tr.states[t] = model.sample_transition(theta, tr.states[t - 1], u_prev, rs);
    tr.outputs[t - 1] = model.sample_observation(theta, tr.states[t], u[t - 1], rs);
  }
  return tr;
}

std::unique_ptr<ModelSpec> make_model(const std::string& id) {
  if (id == "lgss") return std::make_unique<LgssModel>();
  if (id == "bench-nonlinear") return std::make_unique<BenchNonlinearModel>();
  throw InvalidInputError("unknown model id: " + id);
}

}  // namespace gpoid::model
