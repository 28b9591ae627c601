#include "ccsgp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccsgp/errors.hpp"

namespace ccsgp {

namespace {

void check_input(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw InputError("covariance must be square");
  if (cov.size() == 0) throw InputError("covariance must be non-empty");
  const Eigen::Index n = cov.rows();
  double scale = 0.0;
  double asym = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double a = cov(i, j), b = cov(j, i);
      if (!std::isfinite(a) || !std::isfinite(b)) throw InputError("covariance has non-finite entries");
      scale = std::max(scale, std::max(std::abs(a), std::abs(b)));
      asym = std::max(asym, std::abs(a - b));
    }
  }
  if (asym > 1e-10 * scale) {
    throw InputError("covariance is not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
  }
}

}  // namespace

bool PsdFactor::try_factorize(const Eigen::MatrixXd& cov, double jitter, PsdFactor& out) {
  if (jitter > 0.0) {
    Eigen::MatrixXd a = cov;
    a.diagonal().array() += jitter;
    out.llt_.compute(a);
  } else {
    out.llt_.compute(cov);
  }
  if (out.llt_.info() != Eigen::Success) return false;
  const auto diag = out.llt_.matrixLLT().diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) return false;
  out.log_det_ = 2.0 * diag.array().log().sum();
  out.jitter_ = jitter;
  return true;
}

PsdFactor PsdFactor::factorize(const Eigen::MatrixXd& cov, const JitterPolicy& policy) {
  check_input(cov);
  PsdFactor f;
  if (try_factorize(cov, 0.0, f)) return f;
  const double mean_diag = cov.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
  double rel = policy.start;
  double last = 0.0;
  while (rel <= policy.max * (1.0 + 1e-12)) {
    last = rel * scale;
    if (try_factorize(cov, last, f)) return f;
    rel *= policy.factor;
  }
  Eigen::MatrixXd a = cov;
  a.diagonal().array() += last;
  const long minor = first_nonpositive_minor(a);
  throw NumericalError("covariance not positive definite after jitter " + std::to_string(last) +
                           " (leading minor " + std::to_string(minor) + ")",
                       minor);
}

Eigen::MatrixXd PsdFactor::solve_lower(const Eigen::MatrixXd& rhs) const {
  return llt_.matrixL().solve(rhs);
}

PsdSolveResult psd_solve(const Eigen::MatrixXd& cov, const Eigen::VectorXd& rhs,
                         const JitterPolicy& policy) {
  if (rhs.size() != cov.rows()) throw InputError("psd_solve: rhs length does not match covariance");
  const PsdFactor f = PsdFactor::factorize(cov, policy);
  return {f.solve(rhs), f.log_determinant(), f.jitter()};
}

long first_nonpositive_minor(const Eigen::MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = cov(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) return static_cast<long>(j);
    L(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      L(i, j) = (cov(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }
  return -1;
}

}  // namespace ccsgp
