#pragma once

#include <Eigen/Dense>

#include "ccsgp/gp.hpp"
#include "ccsgp/optimizer.hpp"
#include "ccsgp/trajectory.hpp"

namespace ccsgp {

// Noisy-input GP: input noise is pushed through a first-order expansion of
// the posterior mean, which inflates each target's variance by
// slope * Sigma_r * slope^T. `slopes` is always N x d with row i the posterior
// mean gradient at training input i.

// sigma_r^2 |slope|^2 + sigma_w^2 + sigma_r^2.
double ni_output_variance(const Eigen::Ref<const Eigen::VectorXd>& slope, const KernelHyperparams& hp);

// K(X, X) + diag(ni_output_variance(slope_i)).
Eigen::MatrixXd ni_covariance(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              const Eigen::Ref<const Eigen::MatrixXd>& slopes);

// Alternates hyperparameter search (slopes frozen) and slope recomputation,
// `opts.iterations` times. Slopes start at zero, so one iteration is a
// standard GP with a lumped noise variance. The returned model carries the
// slopes its covariance was built from.
TrainedGP ni_fit(const Dataset& data, const FitOptions& opts);

// One independent NI model per state component, each with its own
// hyperparameters.
std::vector<TrainedGP> ni_fit_components(const TrajectorySet& traj, const FitOptions& opts);

// Same for the standard GP baseline.
std::vector<TrainedGP> st_fit_components(const TrajectorySet& traj, const OptimizerOptions& opts);

}  // namespace ccsgp
