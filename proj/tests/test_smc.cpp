#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Dense>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"

#include "gpoid/errors.hpp"
#include "gpoid/model.hpp"
#include "gpoid/oracle.hpp"
#include "gpoid/rng.hpp"
#include "gpoid/smc.hpp"
#include "gpoid/stats.hpp"

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

Problem make_problem(const model::ModelSpec& m, const Eigen::VectorXd& theta, int T,
                     std::uint64_t seed) {
  rng::StreamKey key(seed);
  auto rs = key.child(0).stream();
  Problem p;
  p.u.resize(T);
  for (auto& v : p.u) v = rs.uniform() < 0.5 ? -1.0 : 1.0;
  p.y = model::simulate(m, theta, p.u, key.child(1)).outputs;
  return p;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST_CASE("pf weight rows are normalized and ancestors stay in range") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 40, 1);
  const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 64, rng::StreamKey(2));
  CHECK(ps.T() == 40);
  CHECK(ps.N() == 64);
  for (int t = 0; t < ps.T(); ++t) {
    CHECK(ps.normalized_weights.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ps.normalized_weights.row(t).minCoeff() >= 0.0);
    CHECK(ps.ancestors.row(t).minCoeff() >= 0);
    CHECK(ps.ancestors.row(t).maxCoeff() < 64);
  }
}

TEST_CASE("pf loglik agrees with the kalman loglik on lgss") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 50, 3);
  const double exact = oracle::kalman_loglik(m, theta, p.y, p.u);
  double sum = 0, sumsq = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const double ll = smc::bootstrap_pf(m, theta, p.y, p.u, 4000, rng::StreamKey(100 + r)).loglik();
    sum += ll;
    sumsq += ll * ll;
  }
  const double mean = sum / reps;
  const double sd = std::sqrt((sumsq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - exact) < std::max(4 * sd, 0.05));
}

TEST_CASE("pf with one particle degenerates to a single simulated path") {
  model::LgssModel m;
  const auto theta = theta2(0.5, 1.0);
  const auto p = make_problem(m, theta, 10, 4);
  const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 1, rng::StreamKey(5));
  CHECK(ps.N() == 1);
  for (int t = 0; t < ps.T(); ++t) {
    CHECK(ps.normalized_weights(t, 0) == 1.0);
    CHECK(ps.ancestors(t, 0) == 0);
  }
}

TEST_CASE("pf raises DegenerateFilterError on non-finite observations") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  auto p = make_problem(m, theta, 10, 6);
  p.y[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(smc::bootstrap_pf(m, theta, p.y, p.u, 32, rng::StreamKey(6)), DegenerateFilterError);
}

TEST_CASE("smoothed states are drawn from the filter's support") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 30, 7);
  const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 128, rng::StreamKey(8));
  smc::SmootherConfig cfg;
  cfg.M = 40;
  const auto traj = smc::ffbsi_es(m, theta, ps, p.u, cfg, rng::StreamKey(9));
  CHECK(traj.M() == 40);
  CHECK(traj.T() == 30);
  for (int t = 0; t <= traj.T(); ++t) {
    std::set<double> support;
    for (int i = 0; i < ps.N(); ++i) support.insert(ps.particles(t, i));
    for (int j = 0; j < traj.M(); ++j)
      CHECK(support.count(traj.states(j, t)) == 1);
  }
}

TEST_CASE("smoother works at T = 1") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 1, 10);
  const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 16, rng::StreamKey(11));
  smc::SmootherConfig cfg;
  cfg.M = 8;
  const auto traj = smc::ffbsi_es(m, theta, ps, p.u, cfg, rng::StreamKey(12));
  CHECK(traj.M() == 8);
  CHECK(traj.T() == 1);
}

TEST_CASE("a too-small density bound raises BoundViolationError") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 20, 13);
  const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 64, rng::StreamKey(14));
  smc::SmootherConfig cfg;
  cfg.M = 16;
  cfg.rho = 1e-12;
  CHECK_THROWS_AS(smc::ffbsi_es(m, theta, ps, p.u, cfg, rng::StreamKey(15)), BoundViolationError);
}

TEST_CASE("rejection and exact-only smoother branches sample the same law") {
  // force the pure exact branch with N_limit > M and compare smoothed means
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 25, 16);
  const int seeds = 50;
  std::vector<double> a, b;
  for (int s = 0; s < seeds; ++s) {
    const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 256, rng::StreamKey(500 + s));
    smc::SmootherConfig rej;
    rej.M = 32;
    smc::SmootherConfig exact = rej;
    exact.N_limit = 257;
    const auto ta = smc::ffbsi_es(m, theta, ps, p.u, rej, rng::StreamKey(900 + s));
    const auto tb = smc::ffbsi_es(m, theta, ps, p.u, exact, rng::StreamKey(900 + s));
    a.push_back(ta.states.mean());
    b.push_back(tb.states.mean());
  }
  // same smoothing law, so paired differences should straddle zero
  double mean_diff = 0, var_diff = 0;
  for (int s = 0; s < seeds; ++s) mean_diff += a[s] - b[s];
  mean_diff /= seeds;
  for (int s = 0; s < seeds; ++s)
    var_diff += (a[s] - b[s] - mean_diff) * (a[s] - b[s] - mean_diff);
  var_diff /= (seeds - 1);
  const double t_stat = mean_diff / std::sqrt(var_diff / seeds);
  CHECK(std::abs(t_stat) < 3.3);
}

TEST_CASE("smoothed means track the exact smoother") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 20, 17);
  const auto exact = oracle::exact_smoother_moments(m, theta, p.y, p.u);
  const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 4000, rng::StreamKey(18));
  smc::SmootherConfig cfg;
  cfg.M = 800;
  const auto traj = smc::ffbsi_es(m, theta, ps, p.u, cfg, rng::StreamKey(19));
  for (int t = 0; t <= 20; ++t) {
    const double mc_mean = traj.states.col(t).mean();
    const double se = std::sqrt(exact.var[t] / traj.M());
    CHECK(std::abs(mc_mean - exact.mean[t]) < std::max(6 * se, 0.05));
  }
}

TEST_CASE("particle score agrees with the kalman score") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 60, 20);
  const Eigen::VectorXd exact = oracle::kalman_score(m, theta, p.y, p.u);
  const int reps = 12;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero(), acc2 = Eigen::Vector2d::Zero();
  for (int r = 0; r < reps; ++r) {
    const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, 2000, rng::StreamKey(2000 + r));
    smc::SmootherConfig cfg;
    cfg.M = 100;
    const auto traj = smc::ffbsi_es(m, theta, ps, p.u, cfg, rng::StreamKey(3000 + r));
    const auto sc = smc::estimate_score(m, theta, traj, p.y, p.u);
    CHECK(sc.per_time.rows() == 60);
    acc += sc.total;
    acc2 += sc.total.cwiseProduct(sc.total);
  }
  for (int i = 0; i < 2; ++i) {
    const double mean = acc[i] / reps;
    const double sd = std::sqrt((acc2[i] / reps - mean * mean) / reps);
    CHECK(std::abs(mean - exact[i]) < std::max(4 * sd, 0.3));
  }
}

TEST_CASE("score error shrinks as N and M grow") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 40, 21);
  const Eigen::VectorXd exact = oracle::kalman_score(m, theta, p.y, p.u);
  const auto median_err = [&](int N, int M) {
    std::vector<double> errs;
    for (int s = 0; s < 20; ++s) {
      const auto ps = smc::bootstrap_pf(m, theta, p.y, p.u, N, rng::StreamKey(6000 + s));
      smc::SmootherConfig cfg;
      cfg.M = M;
      const auto traj = smc::ffbsi_es(m, theta, ps, p.u, cfg, rng::StreamKey(7000 + s));
      errs.push_back((smc::estimate_score(m, theta, traj, p.y, p.u).total - exact).norm());
    }
    std::sort(errs.begin(), errs.end());
    return 0.5 * (errs[9] + errs[10]);
  };
  CHECK(median_err(4000, 400) <= median_err(1000, 50));
}

TEST_CASE("serial and parallel execution produce bit-identical results") {
#ifdef _OPENMP
  omp_set_num_threads(4);
#endif
  model::BenchNonlinearModel m;
  const auto theta = theta2(2.0, 0.8);
  const auto p = make_problem(m, theta, 30, 22);
  const auto ps_s = smc::bootstrap_pf(m, theta, p.y, p.u, 200, rng::StreamKey(23), smc::Exec::Serial);
  const auto ps_p = smc::bootstrap_pf(m, theta, p.y, p.u, 200, rng::StreamKey(23), smc::Exec::Parallel);
  CHECK(same_matrix(ps_s.particles, ps_p.particles));
  CHECK(same_matrix(ps_s.normalized_weights, ps_p.normalized_weights));
  CHECK((ps_s.ancestors.array() == ps_p.ancestors.array()).all());
  smc::SmootherConfig cfg;
  cfg.M = 50;
  const auto tr_s = smc::ffbsi_es(m, theta, ps_s, p.u, cfg, rng::StreamKey(24), smc::Exec::Serial);
  const auto tr_p = smc::ffbsi_es(m, theta, ps_p, p.u, cfg, rng::StreamKey(24), smc::Exec::Parallel);
  CHECK(same_matrix(tr_s.states, tr_p.states));
  const auto sc_s = smc::estimate_score(m, theta, tr_s, p.y, p.u, smc::Exec::Serial);
  const auto sc_p = smc::estimate_score(m, theta, tr_p, p.y, p.u, smc::Exec::Parallel);
  CHECK(same_matrix(sc_s.per_time, sc_p.per_time));
}

TEST_CASE("fisher estimate is the centered second moment of per-time scores") {
  smc::ScoreEstimate sc;
  sc.per_time.resize(3, 1);
  sc.per_time << 1, 2, 3;
  sc.total = sc.per_time.colwise().sum();
  const auto fi = smc::estimate_fisher(sc, 3);
  CHECK(fi.matrix(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("fisher estimate is symmetric psd on random scores") {
  auto rs = rng::StreamKey(25).stream();
  smc::ScoreEstimate sc;
  sc.per_time.resize(50, 3);
  for (int t = 0; t < 50; ++t)
    for (int j = 0; j < 3; ++j) sc.per_time(t, j) = rs.normal();
  sc.total = sc.per_time.colwise().sum();
  const auto fi = smc::estimate_fisher(sc, 50);
  CHECK((fi.matrix - fi.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fi.matrix);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("objective_logdet handles identity, diagonal and singular inputs") {
  smc::FisherEstimate fi;
  fi.matrix = Eigen::MatrixXd::Identity(3, 3);
  auto r = smc::objective_logdet(fi);
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_FALSE(r.regularized);

  fi.matrix = Eigen::Vector2d(std::exp(1.0), std::exp(2.0)).asDiagonal();
  r = smc::objective_logdet(fi);
  CHECK(r.value == doctest::Approx(3.0).epsilon(1e-12));

  fi.matrix = Eigen::MatrixXd::Zero(2, 2);
  r = smc::objective_logdet(fi);
  CHECK(r.regularized);

  fi.matrix.resize(2, 2);
  fi.matrix << 1, 0, 0, -1;
  CHECK_THROWS_AS(smc::objective_logdet(fi), SingularInformationError);
}

TEST_CASE("pf and smoother are deterministic given the key") {
  model::LgssModel m;
  const auto theta = theta2(0.8, 1.0);
  const auto p = make_problem(m, theta, 15, 26);
  const auto a = smc::bootstrap_pf(m, theta, p.y, p.u, 100, rng::StreamKey(27));
  const auto b = smc::bootstrap_pf(m, theta, p.y, p.u, 100, rng::StreamKey(27));
  CHECK(same_matrix(a.particles, b.particles));
  smc::SmootherConfig cfg;
  cfg.M = 20;
  const auto ta = smc::ffbsi_es(m, theta, a, p.u, cfg, rng::StreamKey(28));
  const auto tb = smc::ffbsi_es(m, theta, b, p.u, cfg, rng::StreamKey(28));
  CHECK(same_matrix(ta.states, tb.states));
}
