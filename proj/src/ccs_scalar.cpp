#include "ccsgp/ccs_scalar.hpp"

#include <spdlog/spdlog.h>

#include "ccsgp/errors.hpp"
#include "ccsgp/nigp.hpp"

namespace ccsgp {

CovarianceBuild ccs_build_scalar(const KernelHyperparams& hp, const TrajectorySet& traj,
                                 const Eigen::Ref<const Eigen::VectorXd>& slopes, bool consecutive_corrections) {
  if (traj.state_dim() != 1) throw InputError("ccs_build_scalar: trajectory set is not scalar");
  const int N = traj.target_count();
  if (slopes.size() != N) {
    throw InputError("ccs_build_scalar: " + std::to_string(slopes.size()) + " slopes for " + std::to_string(N) +
                     " regression pairs");
  }
  CovarianceBuild b;
  b.base = ni_covariance(hp, traj.inputs(), slopes);
  if (!consecutive_corrections || hp.measurement_noise_var == 0.0) return b;
  b.correction = Eigen::MatrixXd::Zero(N, N);
  for (int t = 0; t + 1 < N; ++t) {
    if (!traj.consecutive(t)) continue;
    const double c = -slopes[t + 1] * hp.measurement_noise_var;
    b.correction(t, t + 1) = c;
    b.correction(t + 1, t) = c;
  }
  return b;
}

Eigen::MatrixXd ccs_covariance_scalar(const KernelHyperparams& hp, const TrajectorySet& traj,
                                      const Eigen::Ref<const Eigen::VectorXd>& slopes) {
  return ccs_build_scalar(hp, traj, slopes).assembled();
}

TrainedGP ccs_fit_scalar(const TrajectorySet& traj, const FitOptions& opts) {
  if (traj.state_dim() != 1) throw InputError("ccs_fit_scalar: trajectory set is not scalar");
  if (opts.iterations < 1) throw InputError("ccs_fit_scalar: iterations must be >= 1");
  const Dataset data = traj.component_dataset(0);
  Eigen::VectorXd slopes = Eigen::VectorXd::Zero(data.size());
  std::optional<KernelHyperparams> warm;
  FitDiagnostics diag;
  std::optional<TrainedGP> model;
  for (int it = 0; it < opts.iterations; ++it) {
    if (it > 0) slopes = model->training_slopes().col(0);
    const CovarianceBuilder builder = [&](const KernelHyperparams& hp) {
      return ccs_build_scalar(hp, traj, slopes, opts.consecutive_corrections);
    };
    OptimizerOptions o = opts.optimizer;
    o.seed = iteration_seed(opts.optimizer.seed, it);
    o.warm_start = warm;
    const OptimizationResult res = optimize_hyperparams(builder, data, o);
    diag += res.diagnostics;
    FactorizedCovariance fc = factorize_build(builder(res.hyperparams), &diag);
    if (fc.beta < 1.0) spdlog::info("ccs_fit_scalar: corrections scaled by beta = {}", fc.beta);
    model.emplace(res.hyperparams, data, std::move(fc.factor), Method::CCS);
    model->slopes = slopes;
    model->beta = fc.beta;
    model->lml = res.lml;
    spdlog::debug("ccs_fit_scalar iteration {}: lml={:.6g} {}", it, res.lml, describe(res.hyperparams));
    warm = res.hyperparams;
  }
  model->diagnostics = diag;
  return *model;
}

ScalarPrediction ccs_predict_scalar(const TrainedGP& model, double x_star) {
  if (model.hyperparams().dim() != 1) throw InputError("ccs_predict_scalar: model is not scalar");
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, x_star);
  return {model.posterior_mean(x), model.posterior_var(x)};
}

}  // namespace ccsgp
