#include "ccsgp/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "ccsgp/errors.hpp"

namespace ccsgp {

namespace {

void check_dim(const KernelHyperparams& hp, Eigen::Index rows, const char* where) {
  if (rows != hp.lengthscales.size()) {
    throw InputError(std::string(where) + ": input dimension " + std::to_string(rows) +
                     " does not match " + std::to_string(hp.lengthscales.size()) + " lengthscales");
  }
}

}  // namespace

KernelHyperparams KernelHyperparams::isotropic(int dim, double signal_variance, double lengthscale,
                                               double process_noise_var, double measurement_noise_var) {
  KernelHyperparams hp;
  hp.signal_variance = signal_variance;
  hp.lengthscales = Eigen::VectorXd::Constant(dim, lengthscale);
  hp.process_noise_var = process_noise_var;
  hp.measurement_noise_var = measurement_noise_var;
  return hp;
}

void KernelHyperparams::validate() const {
  if (!(std::isfinite(signal_variance) && signal_variance > 0.0)) {
    throw InputError("signal variance must be finite and positive");
  }
  if (lengthscales.size() == 0) throw InputError("at least one lengthscale is required");
  for (Eigen::Index m = 0; m < lengthscales.size(); ++m) {
    if (!(std::isfinite(lengthscales[m]) && lengthscales[m] > 0.0)) {
      throw InputError("lengthscale " + std::to_string(m) + " must be finite and positive");
    }
  }
  if (!(std::isfinite(process_noise_var) && process_noise_var >= 0.0)) {
    throw InputError("process noise variance must be finite and nonnegative");
  }
  if (!(std::isfinite(measurement_noise_var) && measurement_noise_var >= 0.0)) {
    throw InputError("measurement noise variance must be finite and nonnegative");
  }
}

bool operator==(const KernelHyperparams& a, const KernelHyperparams& b) {
  return a.signal_variance == b.signal_variance && a.lengthscales.size() == b.lengthscales.size() &&
         a.lengthscales == b.lengthscales && a.process_noise_var == b.process_noise_var &&
         a.measurement_noise_var == b.measurement_noise_var;
}

std::string describe(const KernelHyperparams& hp) {
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof(buf), "sf2=%.4g l=[", hp.signal_variance);
  out += buf;
  for (Eigen::Index m = 0; m < hp.lengthscales.size(); ++m) {
    std::snprintf(buf, sizeof(buf), m ? " %.4g" : "%.4g", hp.lengthscales[m]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "] sw2=%.4g sr2=%.4g", hp.process_noise_var, hp.measurement_noise_var);
  return out + buf;
}

double kernel_eval(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2) {
  check_dim(hp, x.size(), "kernel_eval");
  check_dim(hp, x2.size(), "kernel_eval");
  const double r2 = ((x - x2).array() / hp.lengthscales.array()).square().sum();
  return hp.signal_variance * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::MatrixXd>& X2) {
  check_dim(hp, X.rows(), "kernel_matrix");
  check_dim(hp, X2.rows(), "kernel_matrix");
  const Eigen::ArrayXd inv_l = hp.lengthscales.array().inverse();
  const Eigen::MatrixXd A = (X.array().colwise() * inv_l).matrix();
  const Eigen::MatrixXd B = (X2.array().colwise() * inv_l).matrix();
  Eigen::MatrixXd K(X.cols(), X2.cols());
  const Eigen::Index d = A.rows();
  auto sqdist = [&](Eigen::Index i, Eigen::Index j) {
    double r2 = 0.0;
    for (Eigen::Index m = 0; m < d; ++m) {
      const double diff = A(m, i) - B(m, j);
      r2 += diff * diff;
    }
    return r2;
  };
  if (X.data() == X2.data() && X.cols() == X2.cols() && X.outerStride() == X2.outerStride()) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      K(j, j) = hp.signal_variance;
      for (Eigen::Index i = j + 1; i < A.cols(); ++i) {
        K(i, j) = K(j, i) = hp.signal_variance * std::exp(-0.5 * sqdist(i, j));
      }
    }
    return K;
  }
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.cols(); ++i) K(i, j) = hp.signal_variance * std::exp(-0.5 * sqdist(i, j));
  }
  return K;
}

Eigen::RowVectorXd kernel_row(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return kernel_matrix(hp, x, X);
}

Eigen::VectorXd kernel_grad_input(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& x2) {
  const double k = kernel_eval(hp, x, x2);
  return -k * ((x - x2).array() / hp.lengthscales.array().square()).matrix();
}

Eigen::MatrixXd kernel_row_grad_input(const KernelHyperparams& hp, const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X) {
  check_dim(hp, x.size(), "kernel_row_grad_input");
  check_dim(hp, X.rows(), "kernel_row_grad_input");
  const Eigen::ArrayXd inv_l2 = hp.lengthscales.array().square().inverse();
  Eigen::MatrixXd G(X.cols(), x.size());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const Eigen::ArrayXd diff = (x - X.col(i)).array();
    const double k = hp.signal_variance * std::exp(-0.5 * (diff.square() * inv_l2).sum());
    G.row(i) = (-k * diff * inv_l2).matrix().transpose();
  }
  return G;
}

std::vector<Eigen::MatrixXd> kernel_grad_hyper(const KernelHyperparams& hp,
                                               const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::MatrixXd K = kernel_matrix(hp, X, X);
  std::vector<Eigen::MatrixXd> grads;
  grads.reserve(1 + hp.lengthscales.size());
  grads.push_back(K);
  for (Eigen::Index m = 0; m < hp.lengthscales.size(); ++m) {
    const double l2 = hp.lengthscales[m] * hp.lengthscales[m];
    Eigen::MatrixXd D(X.cols(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const double diff = X(m, i) - X(m, j);
        D(i, j) = K(i, j) * diff * diff / l2;
      }
    }
    grads.push_back(std::move(D));
  }
  return grads;
}

}  // namespace ccsgp
