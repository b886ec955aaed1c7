#include "gpoid/oracle.hpp"

#include <cmath>

#include "gpoid/errors.hpp"

namespace gpoid::oracle {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double u_prev_at(const std::vector<double>& u, int t) {
  // u_{t-1} for t = 1..T with the circular convention u_0 := u_T
  return (t == 1) ? u.back() : u[t - 2];
}
}  // namespace

KalmanState kalman_filter(const model::LgssModel& m, const Eigen::VectorXd& theta,
                          const std::vector<double>& y, const std::vector<double>& u) {
  if (y.size() != u.size() || y.empty()) throw InvalidInputError("kalman_filter: bad lengths");
  const int T = static_cast<int>(y.size());
  const double phi = theta[0], alpha = theta[1];
  const double q = m.sigma_v() * m.sigma_v();
  const double r = m.sigma_e() * m.sigma_e();

  KalmanState ks;
  ks.pred_mean.resize(T);
  ks.pred_var.resize(T);
  ks.filt_mean.resize(T + 1);
  ks.filt_var.resize(T + 1);
  ks.innovation.resize(T);
  ks.innovation_var.resize(T);

  double mf = 0.0, Pf = q;  // x_0 ~ N(0, sigma_v^2)
  ks.filt_mean[0] = mf;
  ks.filt_var[0] = Pf;
  for (int t = 1; t <= T; ++t) {
    const double mp = phi * mf + u_prev_at(u, t);
    const double Pp = phi * phi * Pf + q;
    const double e = y[t - 1] - alpha * mp;
    const double S = alpha * alpha * Pp + r;
    const double K = Pp * alpha / S;
    mf = mp + K * e;
    Pf = (1.0 - K * alpha) * Pp;
    ks.pred_mean[t - 1] = mp;
    ks.pred_var[t - 1] = Pp;
    ks.innovation[t - 1] = e;
    ks.innovation_var[t - 1] = S;
    ks.filt_mean[t] = mf;
    ks.filt_var[t] = Pf;
    ks.loglik += -0.5 * (kLog2Pi + std::log(S)) - 0.5 * e * e / S;
  }
  return ks;
}

double kalman_loglik(const model::LgssModel& m, const Eigen::VectorXd& theta,
                     const std::vector<double>& y, const std::vector<double>& u) {
  return kalman_filter(m, theta, y, u).loglik;
}

Eigen::VectorXd kalman_score(const model::LgssModel& m, const Eigen::VectorXd& theta,
                             const std::vector<double>& y, const std::vector<double>& u) {
  if (y.size() != u.size() || y.empty()) throw InvalidInputError("kalman_score: bad lengths");
  const int T = static_cast<int>(y.size());
  const double phi = theta[0], alpha = theta[1];
  const double q = m.sigma_v() * m.sigma_v();
  const double r = m.sigma_e() * m.sigma_e();

  // tangent-linear sensitivities of the filter recursions w.r.t. (phi, alpha)
  double mf = 0.0, Pf = q;
  Eigen::Vector2d dm = Eigen::Vector2d::Zero();
  Eigen::Vector2d dP = Eigen::Vector2d::Zero();
  Eigen::Vector2d dll = Eigen::Vector2d::Zero();
  for (int t = 1; t <= T; ++t) {
    const double mp = phi * mf + u_prev_at(u, t);
    const Eigen::Vector2d dmp(mf + phi * dm[0], phi * dm[1]);
    const double Pp = phi * phi * Pf + q;
    const Eigen::Vector2d dPp(2.0 * phi * Pf + phi * phi * dP[0], phi * phi * dP[1]);

    const double e = y[t - 1] - alpha * mp;
    const Eigen::Vector2d de(-alpha * dmp[0], -(mp + alpha * dmp[1]));
    const double S = alpha * alpha * Pp + r;
    const Eigen::Vector2d dS(alpha * alpha * dPp[0], 2.0 * alpha * Pp + alpha * alpha * dPp[1]);

    dll += -0.5 * dS / S - (e / S) * de + 0.5 * (e * e / (S * S)) * dS;

    const double K = Pp * alpha / S;
    const Eigen::Vector2d dK(dPp[0] * alpha / S - Pp * alpha * dS[0] / (S * S),
                             Pp / S + dPp[1] * alpha / S - Pp * alpha * dS[1] / (S * S));
    mf = mp + K * e;
    dm = dmp + e * dK + K * de;
    Pf = (1.0 - K * alpha) * Pp;
    dP[0] = -dK[0] * alpha * Pp + (1.0 - K * alpha) * dPp[0];
    dP[1] = -(dK[1] * alpha + K) * Pp + (1.0 - K * alpha) * dPp[1];
  }
  return dll;
}

SmootherMoments exact_smoother_moments(const model::LgssModel& m, const Eigen::VectorXd& theta,
                                       const std::vector<double>& y,
                                       const std::vector<double>& u) {
  const KalmanState ks = kalman_filter(m, theta, y, u);
  const int T = static_cast<int>(y.size());
  const double phi = theta[0];

  SmootherMoments sm;
  sm.mean.resize(T + 1);
  sm.var.resize(T + 1);
  sm.lag_one_cov.resize(T + 1, 0.0);  // index t holds Cov(x_{t-1}, x_t | y); [0] unused

  sm.mean[T] = ks.filt_mean[T];
  sm.var[T] = ks.filt_var[T];
  for (int t = T - 1; t >= 0; --t) {
    const double J = ks.filt_var[t] * phi / ks.pred_var[t];  // pred_var[t] = Var(x_{t+1}|y_{1:t})
    sm.mean[t] = ks.filt_mean[t] + J * (sm.mean[t + 1] - ks.pred_mean[t]);
    sm.var[t] = ks.filt_var[t] + J * J * (sm.var[t + 1] - ks.pred_var[t]);
    sm.lag_one_cov[t + 1] = J * sm.var[t + 1];
  }
  return sm;
}

double dense_joint_loglik(const model::LgssModel& m, const Eigen::VectorXd& theta,
                          const std::vector<double>& y, const std::vector<double>& u) {
  const int T = static_cast<int>(y.size());
  const double phi = theta[0], alpha = theta[1];
  const double q = m.sigma_v() * m.sigma_v();
  const double r = m.sigma_e() * m.sigma_e();

  // state means and variances, then pairwise covariances Cov(x_s, x_t)
  Eigen::VectorXd mx(T + 1);
  Eigen::VectorXd vx(T + 1);
  mx[0] = 0.0;
  vx[0] = q;
  for (int t = 1; t <= T; ++t) {
    mx[t] = phi * mx[t - 1] + u_prev_at(u, t);
    vx[t] = phi * phi * vx[t - 1] + q;
  }
  Eigen::MatrixXd cy(T, T);
  Eigen::VectorXd my(T);
  for (int s = 1; s <= T; ++s) {
    my[s - 1] = alpha * mx[s];
    for (int t = s; t <= T; ++t) {
      const double cov_x = std::pow(phi, t - s) * vx[s];
      double c = alpha * alpha * cov_x;
      if (s == t) c += r;
      cy(s - 1, t - 1) = c;
      cy(t - 1, s - 1) = c;
    }
  }
  const Eigen::VectorXd resid =
      Eigen::Map<const Eigen::VectorXd>(y.data(), T) - my;
  const Eigen::LLT<Eigen::MatrixXd> llt(cy);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * resid.dot(llt.solve(resid)) - 0.5 * logdet - 0.5 * T * kLog2Pi;
}

Eigen::MatrixXd exact_fisher_mc(const model::LgssModel& m, const Eigen::VectorXd& theta,
                                const InputSampler& input_source, int T, int R,
                                rng::StreamKey key) {
  if (T < 1 || R < 1) throw InvalidInputError("exact_fisher_mc: T and R must be positive");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  for (int rep = 0; rep < R; ++rep) {
    auto ukey = key.child(rep);
    auto rs = ukey.child(0).stream();
    const std::vector<double> u = input_source(T, rs);
    const model::Trajectory tr = model::simulate(m, theta, u, ukey.child(1));
    const Eigen::VectorXd s = kalman_score(m, theta, tr.outputs, u);
    acc += s * s.transpose();
  }
  return acc / (static_cast<double>(R) * T);
}

}  // namespace gpoid::oracle
