#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ccsgp/errors.hpp"
#include "ccsgp/optimizer.hpp"
#include "test_util.hpp"

namespace ccsgp {
namespace {

CovarianceBuilder st_builder(const Eigen::MatrixXd& X) {
  return [X](const KernelHyperparams& hp) { return CovarianceBuild{st_covariance(hp, X), {}}; };
}

// One draw from the GP prior with the given hyperparameters.
Dataset sample_prior(const KernelHyperparams& hp, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(1, N);
  for (int i = 0; i < N; ++i) X(0, i) = u(rng);
  const Eigen::MatrixXd C = st_covariance(hp, X);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(C).matrixL();
  Eigen::VectorXd e(N);
  for (int i = 0; i < N; ++i) e[i] = z(rng);
  return {X, L * e};
}

TEST(InitialHyperparams, FollowsDataScale) {
  Eigen::MatrixXd X(2, 4);
  X << 0, 1, 2, 3, 5, 5, 5, 5;
  Eigen::VectorXd y(4);
  y << 1, -1, 1, -1;
  const KernelHyperparams hp = initial_hyperparams(X, y);
  EXPECT_DOUBLE_EQ(hp.signal_variance, 1.0);
  EXPECT_DOUBLE_EQ(hp.lengthscales[0], std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(hp.lengthscales[1], 1.0);  // constant dimension falls back to 1
  EXPECT_DOUBLE_EQ(hp.process_noise_var, 1e-2);
  EXPECT_DOUBLE_EQ(hp.measurement_noise_var, 1e-2);
}

TEST(NelderMead, MinimizesRosenbrock) {
  auto rosen = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const NelderMeadResult r = nelder_mead(rosen, Eigen::Vector2d(-1.2, 1.0), 0.5, 2000, 1e-14);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], 1.0, 2e-3);
  EXPECT_LT(r.value, 1e-6);
}

TEST(NelderMead, TreatsNonFiniteAsRejected) {
  auto f = [](const Eigen::VectorXd& x) { return x[0] < 0.5 ? NAN : (x[0] - 1.0) * (x[0] - 1.0); };
  const NelderMeadResult r = nelder_mead(f, Eigen::VectorXd::Constant(1, 3.0), 0.5, 500, 1e-12);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(OptimizeHyperparams, RecoversGeneratingHyperparameters) {
  const KernelHyperparams truth = KernelHyperparams::isotropic(1, 1.5, 0.6, 0.04, 0.0);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Dataset d = sample_prior(truth, 200, seed);
    OptimizerOptions o;
    o.seed = seed;
    o.mask.measurement_noise = false;
    KernelHyperparams fixed = truth;
    fixed.measurement_noise_var = 0.0;
    o.fixed_values = fixed;
    const OptimizationResult r = optimize_hyperparams(st_builder(d.inputs), d, o);
    EXPECT_NEAR(std::log(r.hyperparams.signal_variance), std::log(truth.signal_variance), 0.5) << seed;
    EXPECT_NEAR(std::log(r.hyperparams.lengthscales[0]), std::log(truth.lengthscales[0]), 0.5) << seed;
    EXPECT_NEAR(std::log(r.hyperparams.process_noise_var), std::log(truth.process_noise_var), 0.5) << seed;
    EXPECT_EQ(r.hyperparams.measurement_noise_var, 0.0);
  }
}

TEST(OptimizeHyperparams, NeverWorseThanBestStart) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd X = testing::random_matrix(rng, 2, 40, -2, 2);
    const Eigen::VectorXd y = (X.row(0).array().sin() + 0.3 * X.row(1).array()).matrix().transpose() +
                              0.1 * testing::random_vector(rng, 40);
    OptimizerOptions o;
    o.seed = static_cast<std::uint64_t>(trial);
    o.max_iterations = 30;
    const OptimizationResult r = optimize_hyperparams(st_builder(X), Dataset{X, y}, o);
    EXPECT_GE(r.lml, r.start_lml);
    EXPECT_NEAR(r.lml, log_marginal_likelihood(st_covariance(r.hyperparams, X), y), 1e-9 * std::abs(r.lml));
  }
}

TEST(OptimizeHyperparams, DeterministicForFixedSeed) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 1, 50, -3, 3);
  const Eigen::VectorXd y = X.row(0).array().cos().matrix().transpose() + 0.1 * testing::random_vector(rng, 50);
  OptimizerOptions o;
  o.seed = 99;
  const OptimizationResult a = optimize_hyperparams(st_builder(X), Dataset{X, y}, o);
  const OptimizationResult b = optimize_hyperparams(st_builder(X), Dataset{X, y}, o);
  EXPECT_TRUE(a.hyperparams == b.hyperparams);
  EXPECT_EQ(a.lml, b.lml);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(OptimizeHyperparams, MaskedEntriesKeepFixedValues) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 1, 30);
  const Eigen::VectorXd y = testing::random_vector(rng, 30);
  OptimizerOptions o;
  o.mask.signal_variance = false;
  o.mask.measurement_noise = false;
  KernelHyperparams fixed = KernelHyperparams::isotropic(1, 2.75, 1.0, 0.1, 0.125);
  o.fixed_values = fixed;
  o.max_iterations = 40;
  const OptimizationResult r = optimize_hyperparams(st_builder(X), Dataset{X, y}, o);
  EXPECT_EQ(r.hyperparams.signal_variance, 2.75);
  EXPECT_EQ(r.hyperparams.measurement_noise_var, 0.125);
}

TEST(OptimizeHyperparams, AllStartsFailingIsAFitError) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 3);
  const CovarianceBuilder broken = [](const KernelHyperparams&) -> CovarianceBuild {
    throw NumericalError("indefinite", 0);
  };
  EXPECT_THROW(optimize_hyperparams(broken, Dataset{X, Eigen::VectorXd::Ones(3)}, OptimizerOptions{}), FitError);
}

TEST(FactorizeBuild, ScalesIndefiniteCorrection) {
  CovarianceBuild b;
  b.base = Eigen::MatrixXd::Identity(2, 2);
  b.correction = Eigen::MatrixXd::Zero(2, 2);
  b.correction(0, 1) = b.correction(1, 0) = 2.0;  // eigenvalues of base + beta C are 1 +- 2 beta
  FitDiagnostics diag;
  const FactorizedCovariance fc = factorize_build(b, &diag);
  EXPECT_GT(fc.beta, 0.49);
  EXPECT_LE(fc.beta, 0.5);
  EXPECT_EQ(diag.beta_events, 1);
  EXPECT_EQ(diag.factorizations, 1);
}

TEST(FactorizeBuild, KeepsFeasibleCorrectionIntact) {
  CovarianceBuild b;
  b.base = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  b.correction = Eigen::MatrixXd::Zero(2, 2);
  b.correction(0, 1) = b.correction(1, 0) = -0.5;
  FitDiagnostics diag;
  const FactorizedCovariance fc = factorize_build(b, &diag);
  EXPECT_EQ(fc.beta, 1.0);
  EXPECT_EQ(diag.beta_events, 0);
  EXPECT_EQ(diag.jitter_events, 0);
  const Eigen::MatrixXd L = fc.factor.lower();
  EXPECT_LT((L * L.transpose() - b.assembled()).norm(), 1e-14);
}

TEST(IterationSeed, IterationZeroKeepsBase) {
  EXPECT_EQ(iteration_seed(42, 0), 42u);
  EXPECT_NE(iteration_seed(42, 1), iteration_seed(42, 2));
}

TEST(FitStandardGp, LumpsNoiseAndHoldsMeasurementNoiseAtZero) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 1, 60, -3, 3);
  const Eigen::VectorXd y = X.row(0).array().sin().matrix().transpose() + 0.2 * testing::random_vector(rng, 60);
  OptimizerOptions o;
  o.seed = 3;
  const TrainedGP gp = fit_standard_gp(Dataset{X, y}, o);
  EXPECT_EQ(gp.hyperparams().measurement_noise_var, 0.0);
  EXPECT_GT(gp.hyperparams().process_noise_var, 0.0);
  EXPECT_EQ(gp.method(), Method::ST);
  EXPECT_NEAR(gp.lml, log_marginal_likelihood(st_covariance(gp.hyperparams(), X), y), 1e-9 * std::abs(gp.lml));
}

}  // namespace
}  // namespace ccsgp
