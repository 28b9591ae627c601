#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccsgp {

// Hyperparameters shared by every estimator. The noise variances are part of
// the same record so one vector serves the standard, noisy-input and
// consecutive-sample models.
struct KernelHyperparams {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;       // one per input dimension
  double process_noise_var = 0.0;     // sigma_w^2
  double measurement_noise_var = 0.0; // sigma_r^2

  static KernelHyperparams isotropic(int dim, double signal_variance, double lengthscale,
                                     double process_noise_var = 0.0,
                                     double measurement_noise_var = 0.0);

  int dim() const { return static_cast<int>(lengthscales.size()); }

  // Lumped variance of a one-step target: process noise plus the measurement
  // noise on the target itself.
  double output_noise_var() const { return process_noise_var + measurement_noise_var; }

  // Throws InputError unless signal_variance > 0, lengthscales > 0 and both
  // noise variances are >= 0 and everything is finite.
  void validate() const;
};

bool operator==(const KernelHyperparams& a, const KernelHyperparams& b);
// One-line human-readable form, for logs.
std::string describe(const KernelHyperparams& hp);

// Squared-exponential ARD kernel
//   k(x, x') = sf2 * exp(-0.5 * sum_m (x_m - x'_m)^2 / l_m^2).
// Inputs are column vectors; matrices hold one point per column.
double kernel_eval(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

Eigen::MatrixXd kernel_matrix(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::MatrixXd>& X2);

// k(x, X) as a row vector of length X.cols().
Eigen::RowVectorXd kernel_row(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::MatrixXd>& X);

// d k(x, x2) / d x.
Eigen::VectorXd kernel_grad_input(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& x2);

// d k(x, X_i) / d x for every column i, returned as an N x d matrix.
Eigen::MatrixXd kernel_row_grad_input(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X);

// dK/dlog(theta) for theta = (sf2, l_1, ..., l_d), in that order.
std::vector<Eigen::MatrixXd> kernel_grad_hyper(const KernelHyperparams& hp,
                                               const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace ccsgp
