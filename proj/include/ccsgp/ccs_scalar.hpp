#pragma once

#include <Eigen/Dense>

#include "ccsgp/gp.hpp"
#include "ccsgp/optimizer.hpp"
#include "ccsgp/trajectory.hpp"

namespace ccsgp {

// Consecutive-sample covariance for scalar systems. Because the noisy target
// of pair t is also the noisy input of pair t+1, the two targets share one
// measurement-noise draw r and covary by -slope_{t+1} * sigma_r^2, where
// slope_{t+1} is the posterior-mean slope at the shared sample (the input of
// pair t+1). Pairs from different trajectories share nothing.

// Noisy-input covariance plus the first off-diagonal corrections, split so
// the corrections can be scaled if the sum is numerically indefinite.
// `slopes` has one entry per regression pair.
CovarianceBuild ccs_build_scalar(const KernelHyperparams& hp, const TrajectorySet& traj,
                                 const Eigen::Ref<const Eigen::VectorXd>& slopes,
                                 bool consecutive_corrections = true);

// The assembled covariance (corrections at full strength).
Eigen::MatrixXd ccs_covariance_scalar(const KernelHyperparams& hp, const TrajectorySet& traj,
                                      const Eigen::Ref<const Eigen::VectorXd>& slopes);

// Same outer iteration as ni_fit on the corrected covariance. Requires a
// scalar trajectory set.
TrainedGP ccs_fit_scalar(const TrajectorySet& traj, const FitOptions& opts);

struct ScalarPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

ScalarPrediction ccs_predict_scalar(const TrainedGP& model, double x_star);

}  // namespace ccsgp
