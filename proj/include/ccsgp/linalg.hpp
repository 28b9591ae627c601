#pragma once

#include <Eigen/Dense>

namespace ccsgp {

// Diagonal jitter schedule, expressed relative to the mean diagonal entry.
// Factorization is first attempted without jitter, then with
// start, start*factor, ... up to and including max.
struct JitterPolicy {
  double start = 1e-10;
  double max = 1e-6;
  double factor = 10.0;
};

// Cholesky factor of a symmetric positive-definite matrix, possibly after
// diagonal jitter. Immutable once built.
class PsdFactor {
 public:
  // Throws InputError for non-square, non-finite or asymmetric input and
  // NumericalError when the largest jitter still fails.
  static PsdFactor factorize(const Eigen::MatrixXd& cov, const JitterPolicy& policy = {});

  // Single attempt with a fixed absolute jitter; returns false on failure.
  static bool try_factorize(const Eigen::MatrixXd& cov, double jitter, PsdFactor& out);

  Eigen::Index size() const { return llt_.rows(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }
  // L^{-1} rhs.
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  double log_determinant() const { return log_det_; }
  // Absolute amount added to the diagonal (0 when none was needed).
  double jitter() const { return jitter_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

struct PsdSolveResult {
  Eigen::VectorXd solution;
  double log_determinant = 0.0;
  double jitter = 0.0;
};

PsdSolveResult psd_solve(const Eigen::MatrixXd& cov, const Eigen::VectorXd& rhs,
                         const JitterPolicy& policy = {});

// Index of the first leading minor that is not positive, or -1 if the matrix
// is positive definite. Unblocked Cholesky; used for error reporting only.
long first_nonpositive_minor(const Eigen::MatrixXd& cov);

}  // namespace ccsgp
