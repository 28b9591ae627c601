#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ccsgp/gp.hpp"
#include "ccsgp/optimizer.hpp"
#include "ccsgp/trajectory.hpp"

namespace ccsgp {

// Per training input i, the n x n Jacobian of the joint posterior mean with
// entry (j, m) = d m_j / d x_m.
using JacobianCache = std::vector<Eigen::MatrixXd>;

JacobianCache zero_jacobians(int count, int n);

// Joint covariance of the stacked targets (time-major, component-minor):
//   (K_x + (sigma_r^2 + sigma_w^2) I_N) (x) I_n
//   + blockdiag(J_t Sigma_r J_t^T)                      (base)
//   + blocks (t, t+1) = -sigma_r^2 J_{t+1}^T,
//     blocks (t+1, t) = -sigma_r^2 J_{t+1}              (correction)
// for consecutive pairs t, t+1 of one trajectory.
CovarianceBuild ccs_build_md(const KernelHyperparams& hp, const TrajectorySet& traj, const JacobianCache& jac,
                             bool consecutive_corrections = true);

Eigen::MatrixXd ccs_covariance_md(const KernelHyperparams& hp, const TrajectorySet& traj, const JacobianCache& jac);

struct JointPrediction {
  Eigen::VectorXd mean;        // n
  Eigen::MatrixXd covariance;  // n x n
};

// Multi-output GP over all state components with one shared kernel.
class JointGP {
 public:
  JointGP(KernelHyperparams hp, TrajectorySet traj, PsdFactor factor, JacobianCache jacobians);

  Eigen::VectorXd mean(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Covariance is symmetrized and eigenvalues in [-1e-10, 0) are clamped to
  // zero; more negative eigenvalues raise NumericalError.
  JointPrediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd mean_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  JacobianCache training_jacobians() const;

  int state_dim() const { return traj_.state_dim(); }
  const KernelHyperparams& hyperparams() const { return hp_; }
  const TrajectorySet& trajectories() const { return traj_; }
  const JacobianCache& jacobians() const { return jac_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const PsdFactor& factor() const { return factor_; }
  Method method() const { return Method::CCS; }

  double beta = 1.0;
  double lml = 0.0;
  FitDiagnostics diagnostics;

 private:
  void check_dim(Eigen::Index n, const char* where) const;

  KernelHyperparams hp_;
  TrajectorySet traj_;
  PsdFactor factor_;
  JacobianCache jac_;
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd alpha_by_time_;  // n x N view of alpha
};

// Joint fit: shared hyperparameters by lml of the stacked targets with frozen
// Jacobians, then Jacobian refresh, `opts.iterations` times.
JointGP ccs_fit_md(const TrajectorySet& traj, const FitOptions& opts);

JointPrediction ccs_predict_md(const JointGP& model, const Eigen::Ref<const Eigen::VectorXd>& x_star);
Eigen::MatrixXd component_posterior_grad(const JointGP& model, const Eigen::Ref<const Eigen::VectorXd>& x_star);

}  // namespace ccsgp
