#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"

#include "gpoid/model.hpp"
#include "gpoid/oracle.hpp"
#include "gpoid/rng.hpp"

using namespace gpoid;

namespace {

Eigen::Vector2d theta2(double a, double b) {
  Eigen::Vector2d t;
  t << a, b;
  return t;
}

struct Problem {
  std::vector<double> y, u;
};

Problem make_problem(const model::LgssModel& m, const Eigen::VectorXd& theta, int T,
                     std::uint64_t seed) {
  rng::StreamKey key(seed);
  auto rs = key.child(0).stream();
  Problem p;
  p.u.resize(T);
  for (auto& v : p.u) v = rs.uniform(-1, 1);
  p.y = model::simulate(m, theta, p.u, key.child(1)).outputs;
  return p;
}

// joint Gaussian of (x_0..x_T, y_1..y_T) assembled densely, then conditioned
struct DenseJoint {
  Eigen::VectorXd x_mean;
  Eigen::MatrixXd x_cov;       // (T+1) x (T+1)
  Eigen::MatrixXd y_cov;       // T x T
  Eigen::MatrixXd xy_cov;      // (T+1) x T
  Eigen::VectorXd y_mean;
};

DenseJoint assemble(const model::LgssModel& m, const Eigen::VectorXd& theta,
                    const std::vector<double>& u) {
  const int T = static_cast<int>(u.size());
  const double phi = theta[0], alpha = theta[1];
  const double qv = m.sigma_v() * m.sigma_v(), qe = m.sigma_e() * m.sigma_e();
  DenseJoint d;
  d.x_mean = Eigen::VectorXd::Zero(T + 1);
  for (int t = 1; t <= T; ++t) {
    const double up = (t == 1) ? u[T - 1] : u[t - 2];
    d.x_mean[t] = phi * d.x_mean[t - 1] + up;
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(T + 1, T + 1);
  std::vector<double> v(T + 1);
  v[0] = qv;
  for (int t = 1; t <= T; ++t) v[t] = phi * phi * v[t - 1] + qv;
  for (int s = 0; s <= T; ++s)
    for (int t = s; t <= T; ++t) P(s, t) = P(t, s) = std::pow(phi, t - s) * v[s];
  d.x_cov = P;
  d.y_mean = alpha * d.x_mean.tail(T);
  d.y_cov = alpha * alpha * P.bottomRightCorner(T, T) +
            qe * Eigen::MatrixXd::Identity(T, T);
  d.xy_cov = alpha * P.rightCols(T);
  return d;
}

}  // namespace

TEST_CASE("kalman loglik equals the dense joint gaussian loglik") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  for (int T = 1; T <= 6; ++T) {
    const auto p = make_problem(m, theta, T, 50 + T);
    const double a = oracle::kalman_loglik(m, theta, p.y, p.u);
    const double b = oracle::dense_joint_loglik(m, theta, p.y, p.u);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("kalman filter moments match dense conditioning") {
  model::LgssModel m;
  const auto theta = theta2(0.6, 1.2);
  const int T = 5;
  const auto p = make_problem(m, theta, T, 77);
  const auto ks = oracle::kalman_filter(m, theta, p.y, p.u);
  const auto d = assemble(m, theta, p.u);

  // condition x_T on all of y
  Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(p.y.data(), T);
  Eigen::MatrixXd S = d.y_cov;
  Eigen::VectorXd r = yv - d.y_mean;
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  const Eigen::VectorXd w = llt.solve(r);
  const double mean_T = d.x_mean[T] + d.xy_cov.row(T).dot(w);
  const Eigen::VectorXd k = llt.solve(d.xy_cov.row(T).transpose());
  const double var_T = d.x_cov(T, T) - d.xy_cov.row(T).dot(k);
  CHECK(ks.filt_mean[T] == doctest::Approx(mean_T).epsilon(1e-10));
  CHECK(ks.filt_var[T] == doctest::Approx(var_T).epsilon(1e-10));
}

TEST_CASE("kalman score matches finite differences of the loglik") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const int T = 60;
  const auto p = make_problem(m, theta, T, 91);
  const auto score = oracle::kalman_score(m, theta, p.y, p.u);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    const double fd = (oracle::kalman_loglik(m, tp, p.y, p.u) -
                       oracle::kalman_loglik(m, tm, p.y, p.u)) /
                      (2 * h);
    CHECK(score[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("smoother moments match dense conditioning including lag-one") {
  model::LgssModel m;
  const auto theta = theta2(0.7, 0.9);
  const int T = 4;
  const auto p = make_problem(m, theta, T, 123);
  const auto sm = oracle::exact_smoother_moments(m, theta, p.y, p.u);
  const auto d = assemble(m, theta, p.u);

  Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(p.y.data(), T);
  Eigen::LLT<Eigen::MatrixXd> llt(d.y_cov);
  const Eigen::VectorXd w = llt.solve(yv - d.y_mean);
  const Eigen::MatrixXd gain = llt.solve(d.xy_cov.transpose()).transpose();  // (T+1) x T
  const Eigen::VectorXd mean = d.x_mean + d.xy_cov * w;
  const Eigen::MatrixXd cov = d.x_cov - gain * d.xy_cov.transpose();

  for (int t = 0; t <= T; ++t) {
    CHECK(sm.mean[t] == doctest::Approx(mean[t]).epsilon(1e-9));
    CHECK(sm.var[t] == doctest::Approx(cov(t, t)).epsilon(1e-9));
  }
  for (int t = 1; t <= T; ++t)
    CHECK(sm.lag_one_cov[t] == doctest::Approx(cov(t - 1, t)).epsilon(1e-9));
}

TEST_CASE("exact score has mean close to zero at the true parameter") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const int T = 80, R = 400;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  Eigen::Vector2d acc2 = Eigen::Vector2d::Zero();
  for (int r = 0; r < R; ++r) {
    const auto p = make_problem(m, theta, T, 3000 + r);
    const Eigen::VectorXd s = oracle::kalman_score(m, theta, p.y, p.u);
    acc += s;
    acc2 += s.cwiseProduct(s);
  }
  for (int i = 0; i < 2; ++i) {
    const double mean = acc[i] / R;
    const double sd = std::sqrt((acc2[i] / R - mean * mean) / R);
    CHECK(std::abs(mean) < 4 * sd);
  }
}

TEST_CASE("monte carlo fisher is symmetric psd and matches score covariance scaling") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto sampler = [](int T, rng::Stream& rs) {
    std::vector<double> u(T);
    for (auto& v : u) v = rs.uniform() < 0.5 ? -1.0 : 1.0;
    return u;
  };
  const Eigen::MatrixXd info =
      oracle::exact_fisher_mc(m, theta, sampler, 100, 200, rng::StreamKey(17));
  CHECK(info.rows() == 2);
  CHECK((info - info.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  CHECK(es.eigenvalues().minCoeff() > 0);
}
