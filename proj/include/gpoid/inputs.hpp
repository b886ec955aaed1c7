#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "gpoid/rng.hpp"

namespace gpoid::inputs {

struct Alphabet {
  std::vector<double> values;  // strictly increasing, >= 2 entries

  explicit Alphabet(std::vector<double> v);
  int size() const { return static_cast<int>(values.size()); }
};

// pmf over blocks C^n, stored in lexicographic block order.
using Pmf = Eigen::VectorXd;

struct SimplexWeights {
  Eigen::VectorXd alpha;
};

// Extreme points of the stationary-pmf polytope: uniform distributions over
// the edge sets of elementary cycles of the de Bruijn graph (nodes C^{n-1},
// edges C^n). For n = 1 these are the point masses on C.
std::vector<Pmf> enumerate_extreme_points(const Alphabet& alphabet, int n);

struct MarkovDomain {
  Alphabet alphabet;
  int n;
  std::vector<Pmf> extreme_points;

  MarkovDomain(Alphabet a, int order);
  int n_V() const { return static_cast<int>(extreme_points.size()); }
  int block_count() const;
};

Pmf compose_pmf(const SimplexWeights& weights, const MarkovDomain& domain);

SimplexWeights project_weights(const Eigen::VectorXd& raw);

std::vector<double> generate_markov(const Pmf& pmf, const Alphabet& alphabet, int n, int T,
                                    rng::Stream& rs);

struct ArDomain {
  int n_a = 1;
  double coeff_lo = -2.0, coeff_hi = 2.0;
  double sigma_lo = 0.05, sigma_hi = 2.0;
};

bool ar_is_stable(const Eigen::VectorXd& coeffs);

std::vector<double> ar_generate(const Eigen::VectorXd& coeffs, double sigma_e, int T,
                                rng::Stream& rs);

// Shared view of a design-parameter space for the optimizer: simplex weights
// over Markov extreme points, or AR coefficients plus innovation scale.
class DesignDomain {
 public:
  virtual ~DesignDomain() = default;
  virtual int dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual bool feasible(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd project(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd sample_uniform(rng::Stream& rs) const = 0;
  virtual std::vector<double> generate_signal(const Eigen::VectorXd& x, int T,
                                              rng::Stream& rs) const = 0;
};

class MarkovDesignDomain : public DesignDomain {
 public:
  MarkovDesignDomain(Alphabet alphabet, int order);

  int dim() const override { return domain_.n_V(); }
  std::vector<std::string> param_names() const override;
  bool feasible(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd project(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd sample_uniform(rng::Stream& rs) const override;
  std::vector<double> generate_signal(const Eigen::VectorXd& x, int T,
                                      rng::Stream& rs) const override;
  const MarkovDomain& markov() const { return domain_; }

 private:
  MarkovDomain domain_;
};

class ArDesignDomain : public DesignDomain {
 public:
  explicit ArDesignDomain(ArDomain spec);

  int dim() const override { return spec_.n_a + 1; }  // coefficients, then sigma_e
  std::vector<std::string> param_names() const override;
  bool feasible(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd project(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd sample_uniform(rng::Stream& rs) const override;
  std::vector<double> generate_signal(const Eigen::VectorXd& x, int T,
                                      rng::Stream& rs) const override;
  const ArDomain& spec() const { return spec_; }

 private:
  ArDomain spec_;
};

}  // namespace gpoid::inputs
