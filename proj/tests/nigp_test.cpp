#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ccsgp/errors.hpp"
#include "ccsgp/nigp.hpp"
#include "test_util.hpp"

namespace ccsgp {
namespace {

FitOptions quick_options(std::uint64_t seed, int iterations = 5) {
  FitOptions fo;
  fo.iterations = iterations;
  fo.optimizer.seed = seed;
  fo.optimizer.starts = 3;
  fo.optimizer.max_iterations = 80;
  return fo;
}

Dataset noisy_sine(std::uint64_t seed, int N) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 1, N, -3, 3);
  std::normal_distribution<double> z(0.0, 0.1);
  Eigen::VectorXd y(N);
  for (int i = 0; i < N; ++i) y[i] = std::sin(X(0, i)) + z(rng);
  return {X, y};
}

TEST(NiOutputVariance, ZeroSlopeIsOutputNoise) {
  const auto hp = KernelHyperparams::isotropic(2, 1.0, 1.0, 0.3, 0.2);
  EXPECT_DOUBLE_EQ(ni_output_variance(Eigen::Vector2d::Zero(), hp), 0.5);
}

TEST(NiOutputVariance, ScalarSlope) {
  const auto hp = KernelHyperparams::isotropic(1, 1.0, 1.0, 0.1, 0.4);
  EXPECT_DOUBLE_EQ(ni_output_variance(Eigen::VectorXd::Constant(1, 1.5), hp), 1.5 * 1.5 * 0.4 + 0.5);
}

TEST(NiOutputVariance, NormOfSlopeVector) {
  const auto hp = KernelHyperparams::isotropic(2, 1.0, 1.0, 0.0, 1.0);
  // With sigma_w^2 = 0 the output noise is sigma_r^2 = 1; subtract it to get |slope|^2.
  EXPECT_DOUBLE_EQ(ni_output_variance(Eigen::Vector2d(3, 4), hp) - hp.output_noise_var(), 25.0);
}

TEST(NiCovariance, ZeroSlopesGiveStandardCovariance) {
  std::mt19937_64 rng(31);
  const auto hp = testing::random_hyperparams(rng, 2);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 2, 20);
  const Eigen::MatrixXd C = ni_covariance(hp, X, Eigen::MatrixXd::Zero(20, 2));
  EXPECT_EQ((C - st_covariance(hp, X)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(NiCovariance, ConstantSlopesInflateNoiseUniformly) {
  std::mt19937_64 rng(32);
  const auto hp = testing::random_hyperparams(rng, 1);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 1, 15);
  const double c = 1.7;
  const Eigen::MatrixXd C = ni_covariance(hp, X, Eigen::MatrixXd::Constant(15, 1, c));
  const Eigen::MatrixXd ref = kernel_matrix(hp, X, X) +
                              (c * c * hp.measurement_noise_var + hp.output_noise_var()) *
                                  Eigen::MatrixXd::Identity(15, 15);
  EXPECT_LT((C - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NiCovariance, TwoPointHandComputation) {
  KernelHyperparams hp;
  hp.signal_variance = 2.0;
  hp.lengthscales = Eigen::Vector2d(1.0, 2.0);
  hp.process_noise_var = 0.1;
  hp.measurement_noise_var = 0.3;
  Eigen::MatrixXd X(2, 2);
  X << 0.0, 1.0,
       0.0, 2.0;
  Eigen::MatrixXd S(2, 2);
  S << 1.0, -1.0,
       0.5, 2.0;
  const Eigen::MatrixXd C = ni_covariance(hp, X, S);
  const double k01 = 2.0 * std::exp(-0.5 * (1.0 + 1.0));
  EXPECT_NEAR(C(0, 0), 2.0 + 0.3 * 2.0 + 0.4, 1e-14);
  EXPECT_NEAR(C(1, 1), 2.0 + 0.3 * 4.25 + 0.4, 1e-14);
  EXPECT_NEAR(C(0, 1), k01, 1e-14);
  EXPECT_EQ(C(0, 1), C(1, 0));
}

TEST(NiCovariance, DifferenceFromKernelIsDiagonalAndBounded) {
  std::mt19937_64 rng(33);
  const auto hp = testing::random_hyperparams(rng, 3);
  const Eigen::MatrixXd X = testing::random_matrix(rng, 3, 25);
  const Eigen::MatrixXd S = testing::random_matrix(rng, 25, 3, -3, 3);
  const Eigen::MatrixXd D = ni_covariance(hp, X, S) - kernel_matrix(hp, X, X);
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 25; ++j) {
      if (i != j) EXPECT_EQ(D(i, j), 0.0);
    }
    EXPECT_GE(D(i, i), hp.output_noise_var());
  }
}

TEST(NiCovariance, RejectsWrongSlopeShape) {
  const auto hp = KernelHyperparams::isotropic(2, 1.0, 1.0, 0.1, 0.1);
  EXPECT_THROW(ni_covariance(hp, Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Zero(4, 1)), InputError);
}

TEST(NiCovariance, NoInputNoiseMakesSlopesIrrelevant) {
  std::mt19937_64 rng(34);
  auto hp = testing::random_hyperparams(rng, 1);
  hp.measurement_noise_var = 0.0;
  const Eigen::MatrixXd X = testing::random_matrix(rng, 1, 30);
  const Eigen::MatrixXd S = testing::random_matrix(rng, 30, 1, -5, 5);
  EXPECT_EQ((ni_covariance(hp, X, S) - st_covariance(hp, X)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(NiFit, FirstIterationIsLumpedNoiseStandardGp) {
  const Dataset d = noisy_sine(35, 40);
  const TrainedGP gp = ni_fit(d, quick_options(1, 1));
  EXPECT_EQ(gp.slopes.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(gp.method(), Method::NI);
  const Eigen::MatrixXd C = st_covariance(gp.hyperparams(), d.inputs);
  EXPECT_NEAR(gp.lml, log_marginal_likelihood(C, d.targets), 1e-9 * std::abs(gp.lml));
}

TEST(NiFit, WithoutInputNoiseEqualsStandardFit) {
  const Dataset d = noisy_sine(36, 40);
  FitOptions fo = quick_options(2, 1);
  fo.optimizer.mask.measurement_noise = false;
  KernelHyperparams fixed = initial_hyperparams(d.inputs, d.targets);
  fixed.measurement_noise_var = 0.0;
  fo.optimizer.fixed_values = fixed;
  const TrainedGP ni = ni_fit(d, fo);
  const TrainedGP st = fit_standard_gp(d, fo.optimizer);
  EXPECT_TRUE(ni.hyperparams() == st.hyperparams());
  std::mt19937_64 rng(1);
  for (int q = 0; q < 20; ++q) {
    const Eigen::VectorXd x = testing::random_vector(rng, 1, -3, 3);
    EXPECT_NEAR(ni.posterior_mean(x), st.posterior_mean(x), 1e-12);
    EXPECT_NEAR(ni.posterior_var(x), st.posterior_var(x), 1e-12);
  }
}

TEST(NiFit, SlopesComeFromThePreviousIteration) {
  const Dataset d = noisy_sine(37, 30);
  const FitOptions two = quick_options(4, 2);
  const FitOptions three = quick_options(4, 3);
  const TrainedGP a = ni_fit(d, two);
  const TrainedGP b = ni_fit(d, three);
  EXPECT_EQ((b.slopes - a.training_slopes()).cwiseAbs().maxCoeff(), 0.0);
  for (int i = 0; i < d.size(); ++i) {
    EXPECT_EQ(b.slopes(i, 0), a.posterior_mean_grad(d.inputs.col(i))[0]);
  }
}

TEST(NiFit, LinearDataGivesSlopeTwo) {
  std::mt19937_64 rng(38);
  const int N = 80;
  Eigen::MatrixXd X(1, N);
  Eigen::VectorXd y(N);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::normal_distribution<double> e(0.0, 0.05);
  for (int i = 0; i < N; ++i) {
    const double x = u(rng);
    X(0, i) = x + e(rng);
    y[i] = 2.0 * x + e(rng);
  }
  const TrainedGP gp = ni_fit(Dataset{X, y}, quick_options(5));
  const Eigen::MatrixXd s = gp.training_slopes();
  EXPECT_NEAR(s.mean(), 2.0, 0.05);
  for (int i = 0; i < N; ++i) {
    if (std::abs(X(0, i)) < 1.5) EXPECT_NEAR(s(i, 0), 2.0, 0.15) << X(0, i);
  }
  EXPECT_GT(gp.hyperparams().measurement_noise_var, 0.0);
}

TEST(NiFitComponents, OneModelPerComponent) {
  std::mt19937_64 rng(39);
  Eigen::MatrixXd tr(2, 21);
  tr.col(0) << 1.0, 0.5;
  for (int t = 0; t < 20; ++t) {
    tr(0, t + 1) = 0.9 * tr(0, t) + 0.1 * tr(1, t);
    tr(1, t + 1) = 0.8 * tr(1, t);
  }
  tr += 0.01 * testing::random_matrix(rng, 2, 21);
  const TrajectorySet traj({tr});
  const auto models = ni_fit_components(traj, quick_options(6, 2));
  ASSERT_EQ(models.size(), 2u);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(models[static_cast<std::size_t>(j)].dataset().targets, traj.targets().row(j).transpose());
    EXPECT_EQ(models[static_cast<std::size_t>(j)].hyperparams().dim(), 2);
  }
  const auto st = st_fit_components(traj, quick_options(6).optimizer);
  ASSERT_EQ(st.size(), 2u);
  EXPECT_EQ(st[0].hyperparams().measurement_noise_var, 0.0);
}

}  // namespace
}  // namespace ccsgp
