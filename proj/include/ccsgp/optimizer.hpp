#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "ccsgp/gp.hpp"
#include "ccsgp/kernel.hpp"
#include "ccsgp/linalg.hpp"

namespace ccsgp {

// A training covariance split into the part that is positive definite by
// construction and a symmetric correction (empty when there is none). When
// base + correction cannot be factorized the correction is scaled down.
struct CovarianceBuild {
  Eigen::MatrixXd base;
  Eigen::MatrixXd correction;

  bool has_correction() const { return correction.size() != 0; }
  Eigen::MatrixXd assembled(double beta = 1.0) const;
};

using CovarianceBuilder = std::function<CovarianceBuild(const KernelHyperparams&)>;

struct FactorizedCovariance {
  PsdFactor factor;
  double beta = 1.0;
};

// Factorize base + correction with the jitter schedule; if that fails, find
// the largest beta in (0, 1] for which base + beta * correction factorizes
// (bisection, `beta_steps` halvings). Updates `diag` when given.
FactorizedCovariance factorize_build(const CovarianceBuild& build, FitDiagnostics* diag = nullptr,
                                     const JitterPolicy& policy = {}, int beta_steps = 20);

// Which entries of KernelHyperparams the search may move. Fixed entries keep
// the value of the starting point.
struct HyperparamMask {
  bool signal_variance = true;
  bool lengthscales = true;
  bool process_noise = true;
  bool measurement_noise = true;
};

struct OptimizerOptions {
  int starts = 5;
  int max_iterations = 200;   // Nelder-Mead iterations per start
  double tolerance = 1e-6;    // stop once the simplex lml spread drops below this
  double initial_step = 0.5;  // simplex edge in log units
  double perturbation_sd = 1.0;  // log-normal spread of the extra starts
  double log_bound = 25.0;    // |log theta| beyond this is rejected
  std::uint64_t seed = 0;
  HyperparamMask mask;
  // Replaces the default initial point as start 0.
  std::optional<KernelHyperparams> warm_start;
  // Used for fixed entries when given (e.g. sigma_r^2 = 0 for the standard GP).
  std::optional<KernelHyperparams> fixed_values;
};

struct OptimizationResult {
  KernelHyperparams hyperparams;
  double lml = 0.0;
  double start_lml = 0.0;  // best lml among the starting points
  int evaluations = 0;
  int failed_starts = 0;
  FitDiagnostics diagnostics;
};

// Default starting point: sf2 = var(targets), l_m = std of input dimension m,
// sigma_w^2 = sigma_r^2 = 1e-2 var(targets).
KernelHyperparams initial_hyperparams(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                      const Eigen::Ref<const Eigen::VectorXd>& targets);

// Multi-start Nelder-Mead on the log marginal likelihood of `targets` under the
// covariance produced by `builder`, in log-hyperparameter space. Throws
// FitError if no start can be evaluated.
OptimizationResult optimize_hyperparams(const CovarianceBuilder& builder,
                                        const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                        const Eigen::Ref<const Eigen::VectorXd>& targets,
                                        const OptimizerOptions& opts);

OptimizationResult optimize_hyperparams(const CovarianceBuilder& builder, const Dataset& data,
                                        const OptimizerOptions& opts);

// Generic derivative-free minimizer used by the hyperparameter search. The
// objective may return +inf to reject a point.
struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             double step, int max_iterations, double tolerance);

// Options for the iterated slope/hyperparameter fits (noisy-input and
// consecutive-sample models).
struct FitOptions {
  int iterations = 5;
  OptimizerOptions optimizer;
  // When false the consecutive-sample corrections are dropped for every pair.
  bool consecutive_corrections = true;
};

// Seed for outer iteration `iteration`; iteration 0 keeps the base seed.
std::uint64_t iteration_seed(std::uint64_t base, int iteration);

// Standard GP baseline: K + sigma^2 I with a single lumped noise variance
// (stored as process_noise_var; measurement_noise_var is held at 0).
TrainedGP fit_standard_gp(const Dataset& data, const OptimizerOptions& opts);

}  // namespace ccsgp
