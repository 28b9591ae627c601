#pragma once

#include <string>

#include <Eigen/Dense>

#include "ccsgp/kernel.hpp"
#include "ccsgp/linalg.hpp"

namespace ccsgp {

enum class Method { ST, NI, CCS };

std::string to_string(Method m);
// Accepts "ST"/"NI"/"CCS" in any case; throws InputError otherwise.
Method parse_method(const std::string& s);

// Regression data: one input per column, one target per column.
struct Dataset {
  Eigen::MatrixXd inputs;   // d x N
  Eigen::VectorXd targets;  // N

  Eigen::Index size() const { return inputs.cols(); }
  Eigen::Index dim() const { return inputs.rows(); }
  // Shapes agree, entries finite, N >= 1 unless allow_empty.
  void validate(bool allow_empty = false) const;
};

// Counters accumulated over every covariance factorization of a fit.
struct FitDiagnostics {
  long factorizations = 0;
  long jitter_events = 0;  // factorizations that needed diagonal jitter
  long beta_events = 0;    // factorizations whose off-diagonal corrections were scaled down
  long failed_evaluations = 0;

  FitDiagnostics& operator+=(const FitDiagnostics& o);
};

// A conditioned GP with a cached factorization of its training covariance.
// The training covariance is method-specific (standard, noisy-input, or
// consecutive-sample corrected); posterior formulas are shared.
class TrainedGP {
 public:
  // Factorizes `training_cov` with the default jitter policy.
  TrainedGP(KernelHyperparams hp, Dataset data, const Eigen::MatrixXd& training_cov, Method method);
  // Uses an existing factorization of the training covariance.
  TrainedGP(KernelHyperparams hp, Dataset data, PsdFactor factor, Method method);
  // The prior: no training data.
  static TrainedGP prior(KernelHyperparams hp);

  double posterior_mean(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Clamps values in [-1e-10, 0) to zero; throws NumericalError below that.
  double posterior_var(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd posterior_mean_grad(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Gradients at every training input, as an N x d matrix.
  Eigen::MatrixXd training_slopes() const;

  const KernelHyperparams& hyperparams() const { return hp_; }
  const Dataset& dataset() const { return data_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  Method method() const { return method_; }
  double jitter() const { return has_factor_ ? factor_.jitter() : 0.0; }
  const PsdFactor& factor() const { return factor_; }

  // Set by the fitting routines.
  Eigen::MatrixXd slopes;  // N x d, slopes used to build the covariance (zero for ST)
  double beta = 1.0;       // scaling applied to the off-diagonal corrections
  double lml = 0.0;
  FitDiagnostics diagnostics;

 private:
  TrainedGP() = default;
  void check_dim(Eigen::Index n, const char* where) const;

  KernelHyperparams hp_;
  Dataset data_;
  PsdFactor factor_;
  bool has_factor_ = false;
  Eigen::VectorXd alpha_;
  Method method_ = Method::ST;
};

double log_marginal_likelihood(const PsdFactor& factor, const Eigen::VectorXd& targets);
double log_marginal_likelihood(const Eigen::MatrixXd& cov, const Eigen::VectorXd& targets);

// K(X, X) + (sigma_w^2 + sigma_r^2) I.
Eigen::MatrixXd st_covariance(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

}  // namespace ccsgp
