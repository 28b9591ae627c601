#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ccsgp/gp.hpp"

namespace ccsgp {

// Measured state trajectories used as training data. Each trajectory is an
// n x (L_k + 1) matrix whose columns are consecutive samples. Sample t is a
// regression input and sample t+1 its target, so trajectory k contributes L_k
// regression pairs. Regression pairs are numbered globally in trajectory
// order; pairs t and t+1 are "consecutive" when they come from the same
// trajectory (target t is then the input of pair t+1).
class TrajectorySet {
 public:
  TrajectorySet() = default;
  // Throws InputError for empty sets, trajectories with fewer than two
  // samples, mismatched state dimensions or non-finite values.
  explicit TrajectorySet(std::vector<Eigen::MatrixXd> trajectories);

  // Convenience for scalar systems.
  static TrajectorySet scalar(const std::vector<std::vector<double>>& trajectories);

  int state_dim() const { return n_; }
  int trajectory_count() const { return static_cast<int>(trajectories_.size()); }
  // N, the number of regression pairs.
  int target_count() const { return total_; }
  const std::vector<Eigen::MatrixXd>& trajectories() const { return trajectories_; }

  // n x N regression inputs and targets.
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& targets() const { return targets_; }

  // Targets stacked time-major, component-minor: entry t*n + j is component j
  // of target t.
  Eigen::VectorXd stacked_targets() const;
  int stacked_index(int t, int component) const { return t * n_ + component; }
  int stacked_time(int index) const { return index / n_; }
  int stacked_component(int index) const { return index % n_; }

  // consecutive(t) is true when pairs t and t+1 lie in one trajectory.
  bool consecutive(int t) const;
  // Number of consecutive pairs, sum_k (L_k - 1).
  int consecutive_count() const;
  // Which trajectory pair t belongs to.
  int trajectory_of(int t) const { return owner_[static_cast<std::size_t>(t)]; }

  // Single-output regression problem for component j.
  Dataset component_dataset(int j) const;

 private:
  std::vector<Eigen::MatrixXd> trajectories_;
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd targets_;
  std::vector<int> owner_;
  int n_ = 0;
  int total_ = 0;
};

}  // namespace ccsgp
