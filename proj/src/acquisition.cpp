#include "gpoid/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gpoid/errors.hpp"
#include "gpoid/stats.hpp"

namespace gpoid::acquisition {

namespace {

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

// Projected compass search maximizing EI; deterministic given the start.
Eigen::VectorXd compass_search(const surrogate::GpPosterior& gp,
                               const inputs::DesignDomain& domain, double mu_max, double xi,
                               Eigen::VectorXd start) {
  const int d = domain.dim();
  Eigen::VectorXd x = domain.project(std::move(start));
  double fx = expected_improvement(gp, mu_max, xi, x);
  double step = 0.25;
  for (int it = 0; it < 200 && step >= 1e-4; ++it) {
    Eigen::VectorXd best_cand;
    double best_val = fx;
    for (int i = 0; i < d; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Eigen::VectorXd cand = x;
        cand[i] += sgn * step;
        cand = domain.project(cand);
        const double v = expected_improvement(gp, mu_max, xi, cand);
        if (v > best_val || (v == best_val && best_cand.size() > 0 && lex_less(cand, best_cand))) {
          best_val = v;
          best_cand = cand;
        }
      }
    }
    if (best_cand.size() > 0 && best_val > fx) {
      x = best_cand;
      fx = best_val;
    } else {
      step *= 0.5;
    }
  }
  return x;
}

}  // namespace

double incumbent(const surrogate::GpPosterior& gp) {
  const auto& data = gp.data();
  if (data.size() == 0) throw InvalidInputError("incumbent: empty training set");
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < data.size(); ++i)
    best = std::max(best, gp.predict(data.points.row(i)).mu);
  return best;
}

double expected_improvement(const surrogate::GpPosterior& gp, double mu_max, double xi,
                            const Eigen::VectorXd& x) {
  const auto pred = gp.predict(x);
  const double gain = pred.mu - mu_max - xi;
  const double sigma = std::sqrt(std::max(0.0, pred.var_latent));
  if (sigma <= 0.0) return std::max(0.0, gain);
  const double z = gain / sigma;
  const double ei = gain * stats::normal_cdf(z) + sigma * stats::normal_pdf(z);
  return std::max(0.0, ei);
}

Eigen::VectorXd propose_next(const surrogate::GpPosterior& gp, const inputs::DesignDomain& domain,
                             const AcquisitionConfig& config, rng::StreamKey key) {
  if (config.restarts < 1) throw InvalidInputError("propose_next: restarts must be >= 1");
  const auto& data = gp.data();
  const int d = domain.dim();
  const double mu_max = incumbent(gp);

  // rank training points by observed value for the jittered starts
  std::vector<int> rank(data.size());
  for (int i = 0; i < data.size(); ++i) rank[i] = i;
  std::stable_sort(rank.begin(), rank.end(),
                   [&](int a, int b) { return data.values[a] > data.values[b]; });

  Eigen::VectorXd best_x;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    auto rs = key.child(r).stream();
    Eigen::VectorXd start;
    if (r % 2 == 0 || data.size() == 0) {
      start = domain.sample_uniform(rs);
    } else {
      const int j = rank[(r / 2) % data.size()];
      start = data.points.row(j).transpose();
      for (int i = 0; i < d; ++i) start[i] += rs.uniform(-0.05, 0.05);
      start = domain.project(start);
    }
    const Eigen::VectorXd x = compass_search(gp, domain, mu_max, config.xi, start);
    const double v = expected_improvement(gp, mu_max, config.xi, x);
    if (v > best_val || (v == best_val && best_x.size() > 0 && lex_less(x, best_x))) {
      best_val = v;
      best_x = x;
    }
  }

  auto walk_rs = key.child(config.restarts).stream();
  for (int i = 0; i < d; ++i)
    best_x[i] += walk_rs.uniform(-config.walk_halfwidth, config.walk_halfwidth);
  best_x = domain.project(best_x);
  if (!domain.feasible(best_x))
    throw InfeasibleProposalError("propose_next: projected proposal is infeasible");
  return best_x;
}

}  // namespace gpoid::acquisition
