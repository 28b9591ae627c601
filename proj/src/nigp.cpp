#include "ccsgp/nigp.hpp"

#include <spdlog/spdlog.h>

#include "ccsgp/errors.hpp"

namespace ccsgp {

double ni_output_variance(const Eigen::Ref<const Eigen::VectorXd>& slope, const KernelHyperparams& hp) {
  return hp.measurement_noise_var * slope.squaredNorm() + hp.output_noise_var();
}

Eigen::MatrixXd ni_covariance(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              const Eigen::Ref<const Eigen::MatrixXd>& slopes) {
  if (slopes.rows() != inputs.cols() || slopes.cols() != inputs.rows()) {
    throw InputError("ni_covariance: slopes must be N x d");
  }
  Eigen::MatrixXd K = kernel_matrix(hp, inputs, inputs);
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    K(i, i) += ni_output_variance(slopes.row(i).transpose(), hp);
  }
  return K;
}

TrainedGP ni_fit(const Dataset& data, const FitOptions& opts) {
  data.validate();
  if (opts.iterations < 1) throw InputError("ni_fit: iterations must be >= 1");
  Eigen::MatrixXd slopes = Eigen::MatrixXd::Zero(data.size(), data.dim());
  std::optional<KernelHyperparams> warm;
  FitDiagnostics diag;
  std::optional<TrainedGP> model;
  for (int it = 0; it < opts.iterations; ++it) {
    if (it > 0) slopes = model->training_slopes();
    const CovarianceBuilder builder = [&](const KernelHyperparams& hp) {
      return CovarianceBuild{ni_covariance(hp, data.inputs, slopes), {}};
    };
    OptimizerOptions o = opts.optimizer;
    o.seed = iteration_seed(opts.optimizer.seed, it);
    o.warm_start = warm;
    const OptimizationResult res = optimize_hyperparams(builder, data, o);
    diag += res.diagnostics;
    FactorizedCovariance fc = factorize_build(builder(res.hyperparams), &diag);
    model.emplace(res.hyperparams, data, std::move(fc.factor), Method::NI);
    model->slopes = slopes;
    model->lml = res.lml;
    spdlog::debug("ni_fit iteration {}: lml={:.6g} {}", it, res.lml, describe(res.hyperparams));
    warm = res.hyperparams;
  }
  model->diagnostics = diag;
  return *model;
}

std::vector<TrainedGP> ni_fit_components(const TrajectorySet& traj, const FitOptions& opts) {
  std::vector<TrainedGP> out;
  for (int j = 0; j < traj.state_dim(); ++j) {
    FitOptions o = opts;
    o.optimizer.seed = opts.optimizer.seed + static_cast<std::uint64_t>(j) * 0xD1B54A32D192ED03ull;
    out.push_back(ni_fit(traj.component_dataset(j), o));
  }
  return out;
}

std::vector<TrainedGP> st_fit_components(const TrajectorySet& traj, const OptimizerOptions& opts) {
  std::vector<TrainedGP> out;
  for (int j = 0; j < traj.state_dim(); ++j) {
    OptimizerOptions o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(j) * 0xD1B54A32D192ED03ull;
    out.push_back(fit_standard_gp(traj.component_dataset(j), o));
  }
  return out;
}

}  // namespace ccsgp
