#include "ccsgp/trajectory.hpp"

#include <string>

#include "ccsgp/errors.hpp"

namespace ccsgp {

TrajectorySet::TrajectorySet(std::vector<Eigen::MatrixXd> trajectories) : trajectories_(std::move(trajectories)) {
  if (trajectories_.empty()) throw InputError("trajectory set is empty");
  n_ = static_cast<int>(trajectories_.front().rows());
  if (n_ < 1) throw InputError("trajectories must have at least one state component");
  for (std::size_t k = 0; k < trajectories_.size(); ++k) {
    const Eigen::MatrixXd& tr = trajectories_[k];
    if (tr.rows() != n_) throw InputError("trajectory " + std::to_string(k) + " has a different state dimension");
    if (tr.cols() < 2) throw InputError("trajectory " + std::to_string(k) + " has fewer than two samples");
    if (!tr.allFinite()) throw InputError("trajectory " + std::to_string(k) + " has non-finite samples");
    total_ += static_cast<int>(tr.cols() - 1);
  }
  inputs_.resize(n_, total_);
  targets_.resize(n_, total_);
  owner_.reserve(static_cast<std::size_t>(total_));
  int t = 0;
  for (std::size_t k = 0; k < trajectories_.size(); ++k) {
    const Eigen::MatrixXd& tr = trajectories_[k];
    const Eigen::Index len = tr.cols() - 1;
    inputs_.middleCols(t, len) = tr.leftCols(len);
    targets_.middleCols(t, len) = tr.rightCols(len);
    for (Eigen::Index i = 0; i < len; ++i) owner_.push_back(static_cast<int>(k));
    t += static_cast<int>(len);
  }
}

TrajectorySet TrajectorySet::scalar(const std::vector<std::vector<double>>& trajectories) {
  std::vector<Eigen::MatrixXd> m;
  m.reserve(trajectories.size());
  for (const auto& tr : trajectories) {
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = tr[i];
    m.push_back(std::move(row));
  }
  return TrajectorySet(std::move(m));
}

Eigen::VectorXd TrajectorySet::stacked_targets() const {
  // column-major storage of an n x N matrix is already time-major
  return Eigen::Map<const Eigen::VectorXd>(targets_.data(), targets_.size());
}

bool TrajectorySet::consecutive(int t) const {
  if (t < 0 || t + 1 >= total_) return false;
  return owner_[static_cast<std::size_t>(t)] == owner_[static_cast<std::size_t>(t + 1)];
}

int TrajectorySet::consecutive_count() const {
  int c = 0;
  for (const auto& tr : trajectories_) c += static_cast<int>(tr.cols()) - 2;
  return c;
}

Dataset TrajectorySet::component_dataset(int j) const {
  if (j < 0 || j >= n_) throw InputError("component index out of range");
  return Dataset{inputs_, targets_.row(j).transpose()};
}

}  // namespace ccsgp
