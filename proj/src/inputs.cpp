#include "gpoid/inputs.hpp"

#include <algorithm>
#include <cmath>

#include "gpoid/errors.hpp"

namespace gpoid::inputs {

namespace {
constexpr int kMaxBlocks = 4096;
constexpr int kMaxCycles = 100000;
constexpr double kStabilityMargin = 1e-9;

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

int draw_index(const Eigen::VectorXd& pmf, rng::Stream& rs) {
  const double target = rs.uniform() * pmf.sum();
  double acc = 0.0;
  for (int i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (target < acc) return i;
  }
  return static_cast<int>(pmf.size()) - 1;
}

// Elementary cycles of the de Bruijn graph whose minimal node is `start`,
// found by DFS over nodes with index > start.
struct CycleSearch {
  int n_nodes, a;
  std::vector<std::vector<int>>* cycles;
  std::vector<int> path;
  std::vector<char> on_path;

  void run(int start) {
    path = {start};
    on_path.assign(n_nodes, 0);
    on_path[start] = 1;
    dfs(start, start);
  }

  void dfs(int node, int start) {
    for (int c = 0; c < a; ++c) {
      const int next = (node * a + c) % n_nodes;  // de Bruijn shift
      if (next == start) {
        cycles->push_back(path);
        if (static_cast<int>(cycles->size()) > kMaxCycles)
          throw CapacityError("extreme-point enumeration: too many elementary cycles");
      } else if (next > start && !on_path[next]) {
        on_path[next] = 1;
        path.push_back(next);
        dfs(next, start);
        path.pop_back();
        on_path[next] = 0;
      }
    }
  }
};

double max_root_modulus(const Eigen::VectorXd& coeffs) {
  const int n = static_cast<int>(coeffs.size());
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(coeffs[0]);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) companion(0, i) = -coeffs[i];
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  return companion.eigenvalues().cwiseAbs().maxCoeff();
}
}  // namespace

Alphabet::Alphabet(std::vector<double> v) : values(std::move(v)) {
  if (values.size() < 2) throw InvalidInputError("alphabet needs at least two values");
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    if (!(values[i] < values[i + 1]))
      throw InvalidInputError("alphabet values must be strictly increasing");
  for (double x : values)
    if (!std::isfinite(x)) throw InvalidInputError("alphabet values must be finite");
}

std::vector<Pmf> enumerate_extreme_points(const Alphabet& alphabet, int n) {
  if (n < 1) throw InvalidInputError("Markov order must be >= 1");
  const int a = alphabet.size();
  double blocks_d = std::pow(double(a), double(n));
  if (blocks_d > kMaxBlocks)
    throw CapacityError("extreme-point enumeration: |C|^n exceeds the supported size");
  const int blocks = ipow(a, n);

  std::vector<Pmf> out;
  if (n == 1) {
    for (int c = 0; c < a; ++c) {
      Pmf p = Pmf::Zero(a);
      p[c] = 1.0;
      out.push_back(p);
    }
    return out;
  }

  const int n_nodes = ipow(a, n - 1);
  std::vector<std::vector<int>> cycles;
  CycleSearch search{n_nodes, a, &cycles, {}, {}};
  for (int s = 0; s < n_nodes; ++s) search.run(s);

  for (const auto& nodes : cycles) {
    const int k = static_cast<int>(nodes.size());
    Pmf p = Pmf::Zero(blocks);
    for (int i = 0; i < k; ++i) {
      const int v = nodes[i];
      const int w = nodes[(i + 1) % k];
      const int block = v * a + w % a;  // v followed by the symbol appended to reach w
      p[block] += 1.0 / k;
    }
    out.push_back(p);
  }

  std::sort(out.begin(), out.end(), [](const Pmf& x, const Pmf& y) {
    for (int i = 0; i < x.size(); ++i)
      if (x[i] != y[i]) return x[i] < y[i];
    return false;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Pmf& x, const Pmf& y) { return (x - y).cwiseAbs().maxCoeff() <= 1e-12; }),
            out.end());
  return out;
}

MarkovDomain::MarkovDomain(Alphabet a, int order)
    : alphabet(std::move(a)), n(order), extreme_points(enumerate_extreme_points(alphabet, order)) {}

int MarkovDomain::block_count() const { return ipow(alphabet.size(), n); }

Pmf compose_pmf(const SimplexWeights& weights, const MarkovDomain& domain) {
  if (weights.alpha.size() != domain.n_V())
    throw InvalidInputError("compose_pmf: weight length does not match extreme-point count");
  Pmf p = Pmf::Zero(domain.block_count());
  for (int i = 0; i < domain.n_V(); ++i) p += weights.alpha[i] * domain.extreme_points[i];
  return p;
}

SimplexWeights project_weights(const Eigen::VectorXd& raw) {
  Eigen::VectorXd a = raw.cwiseMax(0.0);
  const double s = a.sum();
  if (s > 0.0)
    a /= s;
  else
    a.setConstant(1.0 / raw.size());
  return {a};
}

std::vector<double> generate_markov(const Pmf& pmf, const Alphabet& alphabet, int n, int T,
                                    rng::Stream& rs) {
  if (T < 1) throw InvalidInputError("generate_markov: T must be >= 1");
  const int a = alphabet.size();
  if (pmf.size() != ipow(a, n)) throw InvalidInputError("generate_markov: pmf size mismatch");
  std::vector<double> u(T);

  if (n == 1) {
    for (int t = 0; t < T; ++t) u[t] = alphabet.values[draw_index(pmf, rs)];
    return u;
  }

  const int n_prefix = ipow(a, n - 1);
  Eigen::VectorXd marginal = Eigen::VectorXd::Zero(n_prefix);
  for (int b = 0; b < pmf.size(); ++b) marginal[b / a] += pmf[b];
  Eigen::VectorXd symbol_marginal = Eigen::VectorXd::Zero(a);
  for (int b = 0; b < pmf.size(); ++b) symbol_marginal[b % a] += pmf[b];

  std::vector<int> sym(T);
  int prefix = draw_index(marginal, rs);
  {
    int rem = prefix;
    for (int i = 0; i < n - 1; ++i) {
      const int div = ipow(a, n - 2 - i);
      const int s = rem / div;
      rem %= div;
      if (i < T) sym[i] = s;
    }
  }
  if (T <= n - 1) {
    for (int t = 0; t < T; ++t) u[t] = alphabet.values[sym[t]];
    return u;
  }

  for (int t = n - 1; t < T; ++t) {
    int c;
    if (marginal[prefix] > 0.0) {
      Eigen::VectorXd cond(a);
      for (int s = 0; s < a; ++s) cond[s] = pmf[prefix * a + s];
      c = draw_index(cond, rs);
    } else {
      c = draw_index(symbol_marginal, rs);
    }
    sym[t] = c;
    prefix = (prefix * a + c) % n_prefix;
  }
  for (int t = 0; t < T; ++t) u[t] = alphabet.values[sym[t]];
  return u;
}

bool ar_is_stable(const Eigen::VectorXd& coeffs) {
  return max_root_modulus(coeffs) < 1.0 - kStabilityMargin;
}

std::vector<double> ar_generate(const Eigen::VectorXd& coeffs, double sigma_e, int T,
                                rng::Stream& rs) {
  if (T < 1 || !(sigma_e > 0.0)) throw InvalidInputError("ar_generate: bad arguments");
  const double r = max_root_modulus(coeffs);
  if (r >= 1.0 - kStabilityMargin)
    throw StabilityError("ar_generate: AR coefficients are not stable");
  const int n_a = static_cast<int>(coeffs.size());
  const double burn_d = 10.0 * n_a / std::max(1.0 - r, 1e-6);
  const int burn = static_cast<int>(std::min(burn_d, 1e6)) + 1;

  std::vector<double> buf(burn + T, 0.0);
  for (int t = 0; t < burn + T; ++t) {
    double v = sigma_e * rs.normal();
    for (int i = 1; i <= n_a && i <= t; ++i) v -= coeffs[i - 1] * buf[t - i];
    buf[t] = v;
  }
  return std::vector<double>(buf.begin() + burn, buf.end());
}

MarkovDesignDomain::MarkovDesignDomain(Alphabet alphabet, int order)
    : domain_(std::move(alphabet), order) {}

std::vector<std::string> MarkovDesignDomain::param_names() const {
  std::vector<std::string> names;
  names.reserve(domain_.n_V());
  for (int i = 0; i < domain_.n_V(); ++i) names.push_back("alpha" + std::to_string(i));
  return names;
}

bool MarkovDesignDomain::feasible(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) return false;
  if ((x.array() < -1e-12).any()) return false;
  return std::abs(x.sum() - 1.0) <= 1e-9;
}

Eigen::VectorXd MarkovDesignDomain::project(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw InvalidInputError("project: dimension mismatch");
  return project_weights(x).alpha;
}

Eigen::VectorXd MarkovDesignDomain::sample_uniform(rng::Stream& rs) const {
  // Dirichlet(1,...,1) via normalized exponentials
  Eigen::VectorXd g(dim());
  for (int i = 0; i < dim(); ++i) g[i] = -std::log(rs.uniform_pos());
  return g / g.sum();
}

std::vector<double> MarkovDesignDomain::generate_signal(const Eigen::VectorXd& x, int T,
                                                        rng::Stream& rs) const {
  if (!feasible(x)) throw InfeasibleProposalError("generate_signal: infeasible simplex weights");
  const Pmf p = compose_pmf({x}, domain_);
  return generate_markov(p, domain_.alphabet, domain_.n, T, rs);
}

ArDesignDomain::ArDesignDomain(ArDomain spec) : spec_(spec) {
  if (spec_.n_a < 1 || !(spec_.sigma_lo > 0.0) || !(spec_.sigma_hi >= spec_.sigma_lo) ||
      !(spec_.coeff_hi >= spec_.coeff_lo))
    throw InvalidInputError("ArDesignDomain: bad bounds");
}

std::vector<std::string> ArDesignDomain::param_names() const {
  std::vector<std::string> names;
  for (int i = 1; i <= spec_.n_a; ++i) names.push_back("a" + std::to_string(i));
  names.push_back("sigma_e");
  return names;
}

bool ArDesignDomain::feasible(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) return false;
  const Eigen::VectorXd coeffs = x.head(spec_.n_a);
  const double sigma = x[spec_.n_a];
  if (!(sigma >= spec_.sigma_lo && sigma <= spec_.sigma_hi)) return false;
  if ((coeffs.array() < spec_.coeff_lo - 1e-12).any() ||
      (coeffs.array() > spec_.coeff_hi + 1e-12).any())
    return false;
  return ar_is_stable(coeffs);
}

Eigen::VectorXd ArDesignDomain::project(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw InvalidInputError("project: dimension mismatch");
  Eigen::VectorXd out = x;
  Eigen::VectorXd coeffs = out.head(spec_.n_a)
                               .cwiseMax(spec_.coeff_lo)
                               .cwiseMin(spec_.coeff_hi);
  const double r = max_root_modulus(coeffs);
  if (r >= 1.0 - kStabilityMargin) {
    // shrink the roots radially: scaling a_i by s^i scales every root by s
    const double s = 0.999 / r;
    for (int i = 0; i < spec_.n_a; ++i) coeffs[i] *= std::pow(s, i + 1);
  }
  out.head(spec_.n_a) = coeffs;
  out[spec_.n_a] = std::clamp(out[spec_.n_a], spec_.sigma_lo, spec_.sigma_hi);
  if (!feasible(out)) throw InfeasibleProposalError("AR projection failed to produce a feasible point");
  return out;
}

Eigen::VectorXd ArDesignDomain::sample_uniform(rng::Stream& rs) const {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Eigen::VectorXd x(dim());
    for (int i = 0; i < spec_.n_a; ++i) x[i] = rs.uniform(spec_.coeff_lo, spec_.coeff_hi);
    x[spec_.n_a] = rs.uniform(spec_.sigma_lo, spec_.sigma_hi);
    if (feasible(x)) return x;
  }
  throw InfeasibleProposalError("could not sample a stable AR model from the coefficient box");
}

std::vector<double> ArDesignDomain::generate_signal(const Eigen::VectorXd& x, int T,
                                                    rng::Stream& rs) const {
  if (!feasible(x)) throw InfeasibleProposalError("generate_signal: infeasible AR parameters");
  return ar_generate(x.head(spec_.n_a), x[spec_.n_a], T, rs);
}

}  // namespace gpoid::inputs
