#include "gpoid/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "gpoid/errors.hpp"
#include "gpoid/rng.hpp"

namespace gpoid::surrogate {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double matern(int order, double r) {
  switch (order) {
    case 1:
      return std::exp(-r);
    case 3: {
      const double a = std::sqrt(3.0) * r;
      return (1.0 + a) * std::exp(-a);
    }
    case 5: {
      const double a = std::sqrt(5.0) * r;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
    default:
      throw InvalidInputError("matern_order must be 1, 3 or 5");
  }
}

double scaled_distance(const Hyperparameters& hyp, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / hyp.length_scales[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Eigen::MatrixXd gram(const Hyperparameters& hyp, const TrainingSet& data) {
  const int k = data.size();
  Eigen::MatrixXd g(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel(hyp, data.points.row(i), data.points.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
    g(i, i) += hyp.noise_var;
  }
  return g;
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Factorization factorize(Eigen::MatrixXd gamma) {
  const double base = gamma.diagonal().mean();
  double eps = 1e-10 * base;
  for (int attempt = 0; attempt < 7; ++attempt) {
    Eigen::MatrixXd g = gamma + eps * Eigen::MatrixXd::Identity(gamma.rows(), gamma.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() == Eigen::Success) return {std::move(llt), eps};
    if (eps >= 1e-4 * base) break;
    eps *= 10.0;
  }
  throw ConditioningError("GP covariance matrix is numerically singular after jitter");
}

double lml_from_factorization(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& cent,
                              const Eigen::VectorXd& alpha) {
  const int k = static_cast<int>(cent.size());
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * cent.dot(alpha) - 0.5 * logdet - 0.5 * k * kLog2Pi;
}

void check_hyp(const Hyperparameters& hyp, int d) {
  if (!(hyp.signal_var > 0.0) || !(hyp.noise_var >= 0.0) || !(hyp.constant_var >= 0.0))
    throw InvalidInputError("hyperparameter variances out of range");
  if (hyp.length_scales.size() != d)
    throw InvalidInputError("length_scales dimension mismatch");
  if ((hyp.length_scales.array() <= 0.0).any())
    throw InvalidInputError("length scales must be positive");
}
}  // namespace

void TrainingSet::add(const Eigen::VectorXd& x, double value) {
  if (size() == 0) {
    points.resize(1, x.size());
    points.row(0) = x;
    values.resize(1);
    values[0] = value;
    counts.assign(1, 1);
    return;
  }
  if (x.size() != dim()) throw InvalidInputError("TrainingSet::add dimension mismatch");
  for (int i = 0; i < size(); ++i) {
    if ((points.row(i).transpose() - x).cwiseAbs().maxCoeff() <= 1e-12) {
      values[i] = (values[i] * counts[i] + value) / (counts[i] + 1);
      counts[i] += 1;
      return;
    }
  }
  const int n = size();
  points.conservativeResize(n + 1, dim());
  points.row(n) = x;
  values.conservativeResize(n + 1);
  values[n] = value;
  counts.push_back(1);
}

double kernel(const Hyperparameters& hyp, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || hyp.length_scales.size() != a.size())
    throw InvalidInputError("kernel dimension mismatch");
  return hyp.signal_var * matern(hyp.matern_order, scaled_distance(hyp, a, b)) + hyp.constant_var;
}

double log_marginal_likelihood(const Hyperparameters& hyp, const TrainingSet& data) {
  if (data.size() < 1) throw InvalidInputError("log_marginal_likelihood: empty training set");
  check_hyp(hyp, data.dim());
  auto fact = factorize(gram(hyp, data));
  const Eigen::VectorXd cent =
      data.values - Eigen::VectorXd::Constant(data.size(), hyp.mean_const);
  const Eigen::VectorXd alpha = fact.llt.solve(cent);
  return lml_from_factorization(fact.llt, cent, alpha);
}

GpPosterior::GpPosterior(Hyperparameters hyp, TrainingSet data)
    : hyp_(std::move(hyp)), data_(std::move(data)) {
  if (data_.size() < 1) throw InvalidInputError("GpPosterior: empty training set");
  check_hyp(hyp_, data_.dim());
  auto fact = factorize(gram(hyp_, data_));
  llt_ = std::move(fact.llt);
  jitter_ = fact.jitter;
  const Eigen::VectorXd cent =
      data_.values - Eigen::VectorXd::Constant(data_.size(), hyp_.mean_const);
  alpha_ = llt_.solve(cent);
  lml_ = lml_from_factorization(llt_, cent, alpha_);
}

Prediction GpPosterior::predict(const Eigen::VectorXd& x) const {
  const int k = data_.size();
  Eigen::VectorXd ks(k);
  for (int i = 0; i < k; ++i) ks[i] = kernel(hyp_, data_.points.row(i), x);
  Prediction p;
  p.mu = hyp_.mean_const + ks.dot(alpha_);
  const double prior_var = kernel(hyp_, x, x);
  p.var_latent = std::max(0.0, prior_var - ks.dot(llt_.solve(ks)));
  p.var_observed = p.var_latent + hyp_.noise_var;
  return p;
}

namespace {

struct LogParams {
  // layout: [log signal_var, log l_1..l_d, log noise_var, log constant_var]
  static int dims(int d) { return d + 3; }

  static Eigen::VectorXd pack(const Hyperparameters& h) {
    const int d = static_cast<int>(h.length_scales.size());
    Eigen::VectorXd v(dims(d));
    v[0] = std::log(h.signal_var);
    for (int i = 0; i < d; ++i) v[1 + i] = std::log(h.length_scales[i]);
    v[d + 1] = std::log(std::max(h.noise_var, 1e-300));
    v[d + 2] = std::log(std::max(h.constant_var, 1e-300));
    return v;
  }

  static Hyperparameters unpack(const Eigen::VectorXd& v, int d, int matern_order) {
    Hyperparameters h;
    h.signal_var = std::exp(v[0]);
    h.length_scales.resize(d);
    for (int i = 0; i < d; ++i) h.length_scales[i] = std::exp(v[1 + i]);
    h.noise_var = std::exp(v[d + 1]);
    h.constant_var = std::exp(v[d + 2]);
    h.matern_order = matern_order;
    return h;
  }

  static void box(const FitBounds& b, int d, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
    lo.resize(dims(d));
    hi.resize(dims(d));
    lo[0] = std::log(b.signal_var_lo);
    hi[0] = std::log(b.signal_var_hi);
    for (int i = 0; i < d; ++i) {
      lo[1 + i] = std::log(b.length_lo);
      hi[1 + i] = std::log(b.length_hi);
    }
    lo[d + 1] = std::log(b.noise_lo);
    hi[d + 1] = std::log(b.noise_hi);
    lo[d + 2] = std::log(b.constant_lo);
    hi[d + 2] = std::log(b.constant_hi);
  }
};

// Profile the constant mean out of the LML in closed form.
struct ProfiledLml {
  double lml = -std::numeric_limits<double>::infinity();
  double mean_const = 0.0;
};

std::optional<ProfiledLml> profiled_lml(const Hyperparameters& hyp, const TrainingSet& data) {
  try {
    auto fact = factorize(gram(hyp, data));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.size());
    const Eigen::VectorXd gi_h = fact.llt.solve(data.values);
    const Eigen::VectorXd gi_1 = fact.llt.solve(ones);
    const double denom = ones.dot(gi_1);
    if (!(denom > 0.0)) return std::nullopt;
    const double c = ones.dot(gi_h) / denom;
    const Eigen::VectorXd cent = data.values - c * ones;
    const Eigen::VectorXd alpha = gi_h - c * gi_1;
    ProfiledLml out;
    out.lml = lml_from_factorization(fact.llt, cent, alpha);
    out.mean_const = c;
    if (!std::isfinite(out.lml)) return std::nullopt;
    return out;
  } catch (const ConditioningError&) {
    return std::nullopt;
  }
}

Eigen::VectorXd clamp_box(Eigen::VectorXd v, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  for (int i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
  return v;
}

// Nelder-Mead maximization of f over a box; f returns -inf on failure.
Eigen::VectorXd nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& f,
                                Eigen::VectorXd start, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, int max_iters) {
  const int n = static_cast<int>(start.size());
  std::vector<Eigen::VectorXd> pts(n + 1);
  std::vector<double> vals(n + 1);
  pts[0] = clamp_box(std::move(start), lo, hi);
  vals[0] = f(pts[0]);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p = pts[0];
    const double step = std::min(0.5, 0.25 * (hi[i] - lo[i]));
    p[i] = (p[i] + step <= hi[i]) ? p[i] + step : p[i] - step;
    pts[i + 1] = clamp_box(std::move(p), lo, hi);
    vals[i + 1] = f(pts[i + 1]);
  }

  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] > vals[b]; });
    std::vector<Eigen::VectorXd> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  order();
  for (int it = 0; it < max_iters; ++it) {
    if (std::isfinite(vals[0]) && std::isfinite(vals[n]) && vals[0] - vals[n] < 1e-9) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    const Eigen::VectorXd refl = clamp_box(centroid + (centroid - pts[n]), lo, hi);
    const double frefl = f(refl);
    if (frefl > vals[0]) {
      const Eigen::VectorXd expa = clamp_box(centroid + 2.0 * (centroid - pts[n]), lo, hi);
      const double fexpa = f(expa);
      if (fexpa > frefl) {
        pts[n] = expa;
        vals[n] = fexpa;
      } else {
        pts[n] = refl;
        vals[n] = frefl;
      }
    } else if (frefl > vals[n - 1]) {
      pts[n] = refl;
      vals[n] = frefl;
    } else {
      const Eigen::VectorXd contr = clamp_box(centroid + 0.5 * (pts[n] - centroid), lo, hi);
      const double fcontr = f(contr);
      if (fcontr > vals[n]) {
        pts[n] = contr;
        vals[n] = fcontr;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = clamp_box(pts[0] + 0.5 * (pts[i] - pts[0]), lo, hi);
          vals[i] = f(pts[i]);
        }
      }
    }
    order();
  }
  return pts[0];
}

}  // namespace

Hyperparameters fit_hyperparameters(const TrainingSet& data, const Hyperparameters& init,
                                    const FitBounds& bounds, const FitOptions& opts) {
  if (data.size() < 2) throw InvalidInputError("fit_hyperparameters: need at least two points");
  const int d = data.dim();
  check_hyp(init, d);

  Eigen::VectorXd lo, hi;
  LogParams::box(bounds, d, lo, hi);

  const auto objective = [&](const Eigen::VectorXd& v) -> double {
    const Hyperparameters h = LogParams::unpack(v, d, init.matern_order);
    const auto r = profiled_lml(h, data);
    return r ? r->lml : -std::numeric_limits<double>::infinity();
  };

  rng::StreamKey key(opts.seed);
  double best_val = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd start;
    if (r == 0) {
      start = clamp_box(LogParams::pack(init), lo, hi);
    } else {
      auto rs = key.child(r).stream();
      start.resize(lo.size());
      for (int i = 0; i < start.size(); ++i) start[i] = rs.uniform(lo[i], hi[i]);
    }
    if (!std::isfinite(objective(start))) continue;
    const Eigen::VectorXd v = nelder_mead_max(objective, start, lo, hi, opts.max_iters);
    const double fv = objective(v);
    if (fv > best_val) {
      best_val = fv;
      best_v = v;
    }
  }
  if (!std::isfinite(best_val))
    throw FittingError("hyperparameter fitting failed: no start produced a usable covariance");

  Hyperparameters out = LogParams::unpack(best_v, d, init.matern_order);
  const auto r = profiled_lml(out, data);
  if (!r) throw FittingError("hyperparameter fitting failed at the final candidate");
  out.mean_const = r->mean_const;
  return out;
}

}  // namespace gpoid::surrogate
