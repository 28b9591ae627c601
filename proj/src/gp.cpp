#include "ccsgp/gp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "ccsgp/errors.hpp"

namespace ccsgp {

std::string to_string(Method m) {
  switch (m) {
    case Method::ST: return "ST";
    case Method::NI: return "NI";
    case Method::CCS: return "CCS";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "ST") return Method::ST;
  if (u == "NI") return Method::NI;
  if (u == "CCS") return Method::CCS;
  throw InputError("unknown method '" + s + "' (expected ST, NI or CCS)");
}

void Dataset::validate(bool allow_empty) const {
  if (inputs.cols() != targets.size()) {
    throw InputError("dataset has " + std::to_string(inputs.cols()) + " inputs but " +
                     std::to_string(targets.size()) + " targets");
  }
  if (!allow_empty && inputs.cols() < 1) throw InputError("dataset is empty");
  if (inputs.rows() < 1) throw InputError("dataset inputs have zero dimension");
  if (!inputs.allFinite() || !targets.allFinite()) throw InputError("dataset has non-finite entries");
}

FitDiagnostics& FitDiagnostics::operator+=(const FitDiagnostics& o) {
  factorizations += o.factorizations;
  jitter_events += o.jitter_events;
  beta_events += o.beta_events;
  failed_evaluations += o.failed_evaluations;
  return *this;
}

TrainedGP::TrainedGP(KernelHyperparams hp, Dataset data, const Eigen::MatrixXd& training_cov, Method method)
    : TrainedGP(hp, data, [&] {
        if (training_cov.rows() != data.size()) {
          throw InputError("training covariance size does not match dataset");
        }
        return PsdFactor::factorize(training_cov);
      }(), method) {}

TrainedGP::TrainedGP(KernelHyperparams hp, Dataset data, PsdFactor factor, Method method)
    : hp_(std::move(hp)), data_(std::move(data)), factor_(std::move(factor)), has_factor_(true), method_(method) {
  hp_.validate();
  data_.validate();
  if (data_.dim() != hp_.dim()) throw InputError("dataset dimension does not match lengthscales");
  if (factor_.size() != data_.size()) throw InputError("factor size does not match dataset");
  alpha_ = factor_.solve(data_.targets);
  slopes = Eigen::MatrixXd::Zero(data_.size(), data_.dim());
}

TrainedGP TrainedGP::prior(KernelHyperparams hp) {
  hp.validate();
  TrainedGP gp;
  gp.data_.inputs = Eigen::MatrixXd(hp.dim(), 0);
  gp.data_.targets = Eigen::VectorXd(0);
  gp.alpha_ = Eigen::VectorXd(0);
  gp.slopes = Eigen::MatrixXd(0, hp.dim());
  gp.hp_ = std::move(hp);
  return gp;
}

void TrainedGP::check_dim(Eigen::Index n, const char* where) const {
  if (n != hp_.dim()) {
    throw InputError(std::string(where) + ": query has dimension " + std::to_string(n) + ", expected " +
                     std::to_string(hp_.dim()));
  }
}

double TrainedGP::posterior_mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size(), "posterior_mean");
  if (data_.size() == 0) return 0.0;
  return kernel_row(hp_, x, data_.inputs).dot(alpha_);
}

double TrainedGP::posterior_var(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size(), "posterior_var");
  const double prior = hp_.signal_variance;
  if (data_.size() == 0) return prior;
  const Eigen::VectorXd k = kernel_row(hp_, x, data_.inputs).transpose();
  const Eigen::VectorXd v = factor_.solve_lower(k);
  const double var = prior - v.squaredNorm();
  if (var < -1e-10) throw NumericalError("posterior variance is negative: " + std::to_string(var));
  return std::max(var, 0.0);
}

Eigen::VectorXd TrainedGP::posterior_mean_grad(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size(), "posterior_mean_grad");
  if (data_.size() == 0) return Eigen::VectorXd::Zero(hp_.dim());
  return kernel_row_grad_input(hp_, x, data_.inputs).transpose() * alpha_;
}

Eigen::MatrixXd TrainedGP::training_slopes() const {
  Eigen::MatrixXd s(data_.size(), data_.dim());
  for (Eigen::Index i = 0; i < data_.size(); ++i) s.row(i) = posterior_mean_grad(data_.inputs.col(i)).transpose();
  return s;
}

double log_marginal_likelihood(const PsdFactor& factor, const Eigen::VectorXd& targets) {
  if (factor.size() != targets.size()) throw InputError("log_marginal_likelihood: size mismatch");
  const Eigen::VectorXd a = factor.solve(targets);
  const double n = static_cast<double>(targets.size());
  return -0.5 * targets.dot(a) - 0.5 * factor.log_determinant() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(const Eigen::MatrixXd& cov, const Eigen::VectorXd& targets) {
  if (cov.rows() != targets.size()) throw InputError("log_marginal_likelihood: size mismatch");
  return log_marginal_likelihood(PsdFactor::factorize(cov), targets);
}

Eigen::MatrixXd st_covariance(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  Eigen::MatrixXd K = kernel_matrix(hp, inputs, inputs);
  K.diagonal().array() += hp.output_noise_var();
  return K;
}

}  // namespace ccsgp
