#pragma once

#include <vector>

namespace gpoid::stats {

double normal_pdf(double x);
double normal_cdf(double x);

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);   // unbiased (n-1)
double skewness(const std::vector<double>& v); // biased moment estimator
double excess_kurtosis(const std::vector<double>& v);

// One-sample Kolmogorov-Smirnov test against N(0,1).
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_test_standard_normal(std::vector<double> v);

// Upper tail of the chi-squared distribution with `dof` degrees of freedom.
double chi2_sf(double x, int dof);

// Pearson chi-squared goodness-of-fit p-value for observed counts vs expected.
double chi2_gof_pvalue(const std::vector<double>& observed, const std::vector<double>& expected);

}  // namespace gpoid::stats
