#pragma once

#include <Eigen/Dense>

#include "gpoid/inputs.hpp"
#include "gpoid/rng.hpp"
#include "gpoid/surrogate.hpp"

namespace gpoid::acquisition {

struct AcquisitionConfig {
  double xi = 0.01;
  int restarts = 16;
  double walk_halfwidth = 0.01;
};

// Max over the training points of the posterior mean.
double incumbent(const surrogate::GpPosterior& gp);

double expected_improvement(const surrogate::GpPosterior& gp, double mu_max, double xi,
                            const Eigen::VectorXd& x);

// EI maximization by projected compass search from multiple starts, followed
// by a componentwise uniform random walk and projection back into the domain.
Eigen::VectorXd propose_next(const surrogate::GpPosterior& gp, const inputs::DesignDomain& domain,
                             const AcquisitionConfig& config, rng::StreamKey key);

}  // namespace gpoid::acquisition
