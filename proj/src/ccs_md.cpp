#include "ccsgp/ccs_md.hpp"

#include <spdlog/spdlog.h>

#include "ccsgp/errors.hpp"

namespace ccsgp {

JacobianCache zero_jacobians(int count, int n) {
  return JacobianCache(static_cast<std::size_t>(count), Eigen::MatrixXd::Zero(n, n));
}

CovarianceBuild ccs_build_md(const KernelHyperparams& hp, const TrajectorySet& traj, const JacobianCache& jac,
                             bool consecutive_corrections) {
  const int n = traj.state_dim();
  const int N = traj.target_count();
  if (hp.dim() != n) throw InputError("ccs_build_md: lengthscales do not match state dimension");
  if (static_cast<int>(jac.size()) != N) {
    throw InputError("ccs_build_md: " + std::to_string(jac.size()) + " Jacobians for " + std::to_string(N) +
                     " regression pairs");
  }
  for (const auto& J : jac) {
    if (J.rows() != n || J.cols() != n) throw InputError("ccs_build_md: Jacobians must be n x n");
  }
  const double sr2 = hp.measurement_noise_var;
  const double noise = hp.output_noise_var();
  const Eigen::MatrixXd Kx = kernel_matrix(hp, traj.inputs(), traj.inputs());

  CovarianceBuild b;
  b.base = Eigen::MatrixXd::Zero(N * n, N * n);
  for (int s = 0; s < N; ++s) {
    for (int t = 0; t < N; ++t) {
      const double k = Kx(t, s);
      for (int j = 0; j < n; ++j) b.base(t * n + j, s * n + j) = k;
    }
  }
  for (int t = 0; t < N; ++t) {
    const Eigen::MatrixXd& J = jac[static_cast<std::size_t>(t)];
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const double shared = sr2 * J.row(j).dot(J.row(l));
        if (j == l) {
          b.base(t * n + j, t * n + l) += shared + noise;
        } else {
          b.base(t * n + j, t * n + l) = shared;
        }
      }
    }
  }
  if (!consecutive_corrections || sr2 == 0.0) return b;
  b.correction = Eigen::MatrixXd::Zero(N * n, N * n);
  for (int t = 0; t + 1 < N; ++t) {
    if (!traj.consecutive(t)) continue;
    const Eigen::MatrixXd& J = jac[static_cast<std::size_t>(t + 1)];
    // cov(target_t[j], target_{t+1}[l]) = -sr2 * d m_l / d x_j at the shared sample
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const double c = -sr2 * J(l, j);
        b.correction(t * n + j, (t + 1) * n + l) = c;
        b.correction((t + 1) * n + l, t * n + j) = c;
      }
    }
  }
  return b;
}

Eigen::MatrixXd ccs_covariance_md(const KernelHyperparams& hp, const TrajectorySet& traj, const JacobianCache& jac) {
  return ccs_build_md(hp, traj, jac).assembled();
}

JointGP::JointGP(KernelHyperparams hp, TrajectorySet traj, PsdFactor factor, JacobianCache jacobians)
    : hp_(std::move(hp)), traj_(std::move(traj)), factor_(std::move(factor)), jac_(std::move(jacobians)) {
  hp_.validate();
  const int n = traj_.state_dim();
  const int N = traj_.target_count();
  if (hp_.dim() != n) throw InputError("JointGP: lengthscales do not match state dimension");
  if (factor_.size() != static_cast<Eigen::Index>(n) * N) throw InputError("JointGP: factor size mismatch");
  alpha_ = factor_.solve(traj_.stacked_targets());
  alpha_by_time_ = Eigen::Map<const Eigen::MatrixXd>(alpha_.data(), n, N);
}

void JointGP::check_dim(Eigen::Index n, const char* where) const {
  if (n != state_dim()) {
    throw InputError(std::string(where) + ": query has dimension " + std::to_string(n) + ", expected " +
                     std::to_string(state_dim()));
  }
}

Eigen::VectorXd JointGP::mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size(), "JointGP::mean");
  return alpha_by_time_ * kernel_row(hp_, x, traj_.inputs()).transpose();
}

JointPrediction JointGP::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size(), "JointGP::predict");
  const int n = state_dim();
  const int N = traj_.target_count();
  const Eigen::RowVectorXd k = kernel_row(hp_, x, traj_.inputs());
  JointPrediction p;
  p.mean = alpha_by_time_ * k.transpose();

  // (k (x) I_n)^T, nN x n
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N) * n, n);
  for (int t = 0; t < N; ++t) {
    for (int j = 0; j < n; ++j) cross(t * n + j, j) = k[t];
  }
  const Eigen::MatrixXd V = factor_.solve_lower(cross);
  Eigen::MatrixXd cov = hp_.signal_variance * Eigen::MatrixXd::Identity(n, n) - V.transpose() * V;
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10) {
    throw NumericalError("joint posterior covariance has eigenvalue " + std::to_string(ev.minCoeff()));
  }
  if (ev.minCoeff() < 0.0) {
    ev = ev.cwiseMax(0.0);
    cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
  }
  p.covariance = std::move(cov);
  return p;
}

Eigen::MatrixXd JointGP::mean_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size(), "JointGP::mean_jacobian");
  return alpha_by_time_ * kernel_row_grad_input(hp_, x, traj_.inputs());
}

JacobianCache JointGP::training_jacobians() const {
  JacobianCache out;
  out.reserve(static_cast<std::size_t>(traj_.target_count()));
  for (int t = 0; t < traj_.target_count(); ++t) out.push_back(mean_jacobian(traj_.inputs().col(t)));
  return out;
}

JointGP ccs_fit_md(const TrajectorySet& traj, const FitOptions& opts) {
  if (opts.iterations < 1) throw InputError("ccs_fit_md: iterations must be >= 1");
  const Eigen::VectorXd targets = traj.stacked_targets();
  JacobianCache jac = zero_jacobians(traj.target_count(), traj.state_dim());
  std::optional<KernelHyperparams> warm;
  FitDiagnostics diag;
  std::optional<JointGP> model;
  for (int it = 0; it < opts.iterations; ++it) {
    if (it > 0) jac = model->training_jacobians();
    const CovarianceBuilder builder = [&](const KernelHyperparams& hp) {
      return ccs_build_md(hp, traj, jac, opts.consecutive_corrections);
    };
    OptimizerOptions o = opts.optimizer;
    o.seed = iteration_seed(opts.optimizer.seed, it);
    o.warm_start = warm;
    const OptimizationResult res = optimize_hyperparams(builder, traj.inputs(), targets, o);
    diag += res.diagnostics;
    FactorizedCovariance fc = factorize_build(builder(res.hyperparams), &diag);
    if (fc.beta < 1.0) spdlog::info("ccs_fit_md: corrections scaled by beta = {}", fc.beta);
    model.emplace(res.hyperparams, traj, std::move(fc.factor), jac);
    model->beta = fc.beta;
    model->lml = res.lml;
    spdlog::debug("ccs_fit_md iteration {}: lml={:.6g} {}", it, res.lml, describe(res.hyperparams));
    warm = res.hyperparams;
  }
  model->diagnostics = diag;
  return *model;
}

JointPrediction ccs_predict_md(const JointGP& model, const Eigen::Ref<const Eigen::VectorXd>& x_star) {
  return model.predict(x_star);
}

Eigen::MatrixXd component_posterior_grad(const JointGP& model, const Eigen::Ref<const Eigen::VectorXd>& x_star) {
  return model.mean_jacobian(x_star);
}

}  // namespace ccsgp
