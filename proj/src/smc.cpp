#include "gpoid/smc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "gpoid/errors.hpp"

namespace gpoid::smc {

namespace {

template <class Body>
void for_each_index(int n, Exec exec, Body&& body) {
  if (exec == Exec::Parallel) {
    std::exception_ptr err;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
}

// Inverse-CDF lookup on a cumulative weight array; v is uniform on [0,1).
int multinomial_index(const std::vector<double>& cdf, double v) {
  const double target = v * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  int idx = static_cast<int>(it - cdf.begin());
  if (idx >= static_cast<int>(cdf.size())) idx = static_cast<int>(cdf.size()) - 1;
  return idx;
}

void cumulative(const double* w, int n, std::vector<double>& cdf) {
  cdf.resize(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += w[i];
    cdf[i] = acc;
  }
}

double input_before(const std::vector<double>& u, int t) {
  // u_{t-1} driving the transition into time t, with the circular rule u_0 = u_T
  return (t <= 1) ? u.back() : u[t - 2];
}

}  // namespace

ParticleSystem bootstrap_pf(const model::ModelSpec& m, const model::ParameterVector& theta,
                            const std::vector<double>& y, const std::vector<double>& u, int N,
                            rng::StreamKey key, Exec exec) {
  if (N < 1) throw InvalidInputError("bootstrap_pf: N must be >= 1");
  if (y.empty() || y.size() != u.size())
    throw InvalidInputError("bootstrap_pf: y and u must be non-empty and of equal length");
  const int T = static_cast<int>(y.size());
  for (int t = 1; t <= T; ++t)
    if (!std::isfinite(y[t - 1])) throw DegenerateFilterError(t);
  for (double v : u)
    if (!std::isfinite(v)) throw InvalidInputError("bootstrap_pf: non-finite input value");

  ParticleSystem ps;
  ps.particles.resize(T + 1, N);
  ps.normalized_weights.resize(T, N);
  ps.ancestors.resize(T, N);
  ps.log_weight_sums.resize(T);

  auto key0 = key.child(0);
  for_each_index(N, exec, [&](int i) {
    auto rs = key0.child(i).stream();
    ps.particles(0, i) = m.sample_initial(theta, rs);
  });

  std::vector<double> cdf;
  std::vector<double> prev_w(N, 1.0 / N);
  std::vector<double> logw(N);

  for (int t = 1; t <= T; ++t) {
    cumulative(prev_w.data(), N, cdf);
    auto keyt = key.child(t);
    const double u_prev = input_before(u, t);
    const double u_t = u[t - 1];
    for_each_index(N, exec, [&](int i) {
      auto rs = keyt.child(i).stream();
      const int a = multinomial_index(cdf, rs.uniform());
      const double x = m.sample_transition(theta, ps.particles(t - 1, a), u_prev, rs);
      ps.ancestors(t - 1, i) = a;
      ps.particles(t, i) = x;
      logw[i] = m.log_g(theta, y[t - 1], x, u_t);
    });

    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) mx = std::max(mx, logw[i]);
    if (!std::isfinite(mx)) throw DegenerateFilterError(t);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
      prev_w[i] = std::exp(logw[i] - mx);
      sum += prev_w[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) throw DegenerateFilterError(t);
    for (int i = 0; i < N; ++i) {
      prev_w[i] /= sum;
      ps.normalized_weights(t - 1, i) = prev_w[i];
    }
    ps.log_weight_sums[t - 1] = mx + std::log(sum);
  }
  return ps;
}

BackwardTrajectorySet ffbsi_es(const model::ModelSpec& m, const model::ParameterVector& theta,
                               const ParticleSystem& ps, const std::vector<double>& u,
                               const SmootherConfig& cfg, rng::StreamKey key, Exec exec) {
  const int T = ps.T();
  const int N = ps.N();
  const int M = cfg.M;
  if (M < 1) throw InvalidInputError("ffbsi_es: M must be >= 1");
  if (static_cast<int>(u.size()) != T) throw InvalidInputError("ffbsi_es: u length mismatch");
  const int n_limit =
      cfg.N_limit > 0 ? cfg.N_limit : static_cast<int>(std::ceil(std::sqrt(double(N))));
  const double rho = cfg.rho > 0.0 ? cfg.rho : m.transition_density_bound(theta);
  if (!(rho > 0.0)) throw InvalidInputError("ffbsi_es: rho must be positive");
  const double log_rho = std::log(rho);

  BackwardTrajectorySet out;
  out.states.resize(M, T + 1);
  std::vector<int> sel(M);
  std::vector<rng::Stream> streams;
  streams.reserve(M);

  {
    streams.clear();
    for (int j = 0; j < M; ++j) streams.push_back(key.child(j).child(T).stream());
    std::vector<double> cdf;
    const Eigen::VectorXd w_last = ps.normalized_weights.row(T - 1);
    cumulative(w_last.data(), N, cdf);
    for_each_index(M, exec, [&](int j) {
      sel[j] = multinomial_index(cdf, streams[j].uniform());
      out.states(j, T) = ps.particles(T, sel[j]);
    });
  }

  std::vector<double> wt(N);
  std::vector<double> cdf;
  std::vector<int> pending(M), next_pending(M);
  std::vector<int> accepted(M);

  for (int t = T - 1; t >= 0; --t) {
    if (t == 0) {
      std::fill(wt.begin(), wt.end(), 1.0 / N);
    } else {
      Eigen::VectorXd row = ps.normalized_weights.row(t - 1);
      std::copy(row.data(), row.data() + N, wt.begin());
    }
    cumulative(wt.data(), N, cdf);
    const double u_t = input_before(u, t + 1);

    streams.clear();
    for (int j = 0; j < M; ++j) streams.push_back(key.child(j).child(t).stream());

    pending.resize(M);
    for (int j = 0; j < M; ++j) pending[j] = j;
    int rounds = 0;
    std::atomic<bool> bound_violation{false};
    while (static_cast<int>(pending.size()) >= n_limit && rounds < cfg.max_rejection_rounds) {
      std::fill(accepted.begin(), accepted.end(), 0);
      const int n = static_cast<int>(pending.size());
      for_each_index(n, exec, [&](int k) {
        const int j = pending[k];
        const int cand = multinomial_index(cdf, streams[j].uniform());
        const double lf = m.log_f(theta, out.states(j, t + 1), ps.particles(t, cand), u_t);
        if (lf > log_rho) {
          bound_violation.store(true, std::memory_order_relaxed);
          return;
        }
        if (streams[j].uniform() <= std::exp(lf - log_rho)) {
          sel[j] = cand;
          accepted[j] = 1;
        }
      });
      if (bound_violation.load())
        throw BoundViolationError(
            "ffbsi_es: transition density exceeds rejection bound rho at t=" + std::to_string(t));
      next_pending.clear();
      for (int j : pending)
        if (!accepted[j]) next_pending.push_back(j);
      pending.swap(next_pending);
      ++rounds;
    }

    if (!pending.empty()) {
      const int n = static_cast<int>(pending.size());
      std::atomic<bool> degenerate{false};
      for_each_index(n, exec, [&](int k) {
        const int j = pending[k];
        std::vector<double> logbw(N);
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < N; ++i) {
          logbw[i] =
              std::log(wt[i]) + m.log_f(theta, out.states(j, t + 1), ps.particles(t, i), u_t);
          mx = std::max(mx, logbw[i]);
        }
        if (!std::isfinite(mx)) {
          degenerate.store(true, std::memory_order_relaxed);
          return;
        }
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
          acc += std::exp(logbw[i] - mx);
          logbw[i] = acc;
        }
        sel[j] = multinomial_index(logbw, streams[j].uniform());
      });
      if (degenerate.load()) throw DegenerateFilterError(t);
    }

    for_each_index(M, exec, [&](int j) { out.states(j, t) = ps.particles(t, sel[j]); });
  }
  return out;
}

ScoreEstimate estimate_score(const model::ModelSpec& m, const model::ParameterVector& theta,
                             const BackwardTrajectorySet& traj, const std::vector<double>& y,
                             const std::vector<double>& u, Exec exec) {
  const int T = static_cast<int>(y.size());
  if (traj.T() != T || static_cast<int>(u.size()) != T)
    throw InvalidInputError("estimate_score: length mismatch");
  const int M = traj.M();
  const int p = m.n_theta();

  ScoreEstimate est;
  est.per_time.resize(T, p);
  for_each_index(T, exec, [&](int k) {
    const int t = k + 1;
    const double u_prev = input_before(u, t);
    const double u_t = u[t - 1];
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < M; ++j)
      acc += m.grad_xi(theta, traj.states(j, t - 1), traj.states(j, t), y[t - 1], u_prev, u_t);
    est.per_time.row(k) = acc / M;
  });
  est.total = est.per_time.colwise().sum();
  return est;
}

FisherEstimate estimate_fisher(const ScoreEstimate& score, int T) {
  if (T != score.per_time.rows())
    throw InvalidInputError("estimate_fisher: T does not match the score estimate");
  const int p = static_cast<int>(score.per_time.cols());
  const Eigen::VectorXd mean = score.total / T;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd d = score.per_time.row(t).transpose() - mean;
    info += d * d.transpose();
  }
  FisherEstimate fe;
  fe.matrix = info / T;
  return fe;
}

LogDetResult objective_logdet(const FisherEstimate& fisher) {
  const Eigen::MatrixXd& a = fisher.matrix;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  LogDetResult r;
  if (es.eigenvalues().minCoeff() <= 0.0) {
    const double eps = 1e-10 * std::max(a.trace(), 1.0);
    es.compute(a + eps * Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    r.regularized = true;
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw SingularInformationError("information matrix is singular after jitter");
  }
  r.value = es.eigenvalues().array().log().sum();
  return r;
}

}  // namespace gpoid::smc
