#include "gpoid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "gpoid/errors.hpp"

namespace gpoid::stats {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kInvSqrt2 = 0.7071067811865475244;

// Regularized lower incomplete gamma P(a, x), Numerical Recipes style.
double gammp_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gammq_cf(double a, double x) {
  const double fpmin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}
}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double mean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidInputError("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) throw InvalidInputError("stddev needs at least two points");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

double skewness(const std::vector<double>& v) {
  const double m = mean(v);
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= v.size();
  m3 /= v.size();
  return m3 / std::pow(m2, 1.5);
}

double excess_kurtosis(const std::vector<double>& v) {
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= v.size();
  m4 /= v.size();
  return m4 / (m2 * m2) - 3.0;
}

KsResult ks_test_standard_normal(std::vector<double> v) {
  if (v.empty()) throw InvalidInputError("ks test on empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max(d, std::fabs(f - double(i) / n));
    d = std::max(d, std::fabs(double(i + 1) / n - f));
  }
  // Asymptotic Kolmogorov distribution with the Stephens finite-sample correction.
  const double sn = std::sqrt(double(n));
  const double lambda = d * (sn + 0.12 + 0.11 / sn);
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  KsResult r;
  r.statistic = d;
  r.p_value = std::clamp(2.0 * p, 0.0, 1.0);
  return r;
}

double chi2_sf(double x, int dof) {
  if (dof < 1 || x < 0.0) throw InvalidInputError("chi2_sf: bad arguments");
  if (x == 0.0) return 1.0;
  const double a = 0.5 * dof;
  const double hx = 0.5 * x;
  if (hx < a + 1.0) return 1.0 - gammp_series(a, hx);
  return gammq_cf(a, hx);
}

double chi2_gof_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw InvalidInputError("chi2_gof_pvalue: need matching bins, at least two");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw InvalidInputError("chi2_gof_pvalue: expected counts must be positive");
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return chi2_sf(stat, static_cast<int>(observed.size()) - 1);
}

}  // namespace gpoid::stats
