#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ccsgp/errors.hpp"
#include "ccsgp/systems.hpp"

namespace ccsgp {
namespace {

SystemSpec logistic() { return default_system("logistic_growth"); }

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double e : v) s += (e - m) * (e - m);
  return s / static_cast<double>(v.size() - 1);
}

TEST(Step, LogisticGrowthFixedPoints) {
  EXPECT_EQ(step(logistic(), scalar(0.0))[0], 0.0);
  EXPECT_EQ(step(logistic(), scalar(100.0))[0], 100.0);
}

TEST(Step, LogisticGrowthMidpoint) { EXPECT_DOUBLE_EQ(step(logistic(), scalar(50.0))[0], 52.5); }

TEST(Step, BatchReactor) {
  const Eigen::VectorXd y = step(default_system("batch_reactor"), Eigen::Vector2d(1.0, 1.0));
  EXPECT_NEAR(y[0], 0.96928, 1e-14);
  EXPECT_NEAR(y[1], 1.01536, 1e-14);
}

TEST(Step, BatchReactorConservesMass) {
  // 2A -> B keeps x1 + 2 x2 constant under the Euler map
  const SystemSpec s = default_system("batch_reactor");
  Eigen::VectorXd x = Eigen::Vector2d(1.7, 0.3);
  const double total = x[0] + 2.0 * x[1];
  for (int t = 0; t < 50; ++t) x = step(s, x);
  EXPECT_NEAR(x[0] + 2.0 * x[1], total, 1e-12);
}

TEST(Step, TwoLinkRobotRestsHangingDown) {
  const SystemSpec s = default_system("two_link_robot");
  const Eigen::Vector4d down(-std::numbers::pi / 2, 0.0, 0.0, 0.0);
  EXPECT_LT((step(s, down) - down).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Step, TwoLinkRobotFallsFromHorizontal) {
  const SystemSpec s = default_system("two_link_robot");
  const Eigen::VectorXd y = step(s, Eigen::Vector4d::Zero());
  EXPECT_EQ(y[0], 0.0);  // Euler: positions move with the old velocities
  EXPECT_LT(y[2], 0.0);
}

TEST(Step, CartPoleUprightIsFixedAndTiltFalls) {
  const SystemSpec s = default_system("cart_pole");
  EXPECT_EQ(step(s, Eigen::Vector4d::Zero()).norm(), 0.0);
  const Eigen::VectorXd y = step(s, Eigen::Vector4d(0.0, 0.0, 0.1, 0.0));
  EXPECT_GT(y[3], 0.0);
  EXPECT_LT(y[1], 0.0);
}

TEST(Step, RejectsWrongDimensionAndDivergence) {
  EXPECT_THROW(step(logistic(), Eigen::Vector2d(1.0, 2.0)), InputError);
  EXPECT_THROW(step(logistic(), scalar(1e300)), SimulationError);
}

TEST(DefaultSystem, KnownNamesAndDimensions) {
  EXPECT_EQ(default_system("logistic_growth").state_dim(), 1);
  EXPECT_EQ(default_system("batch_reactor").state_dim(), 2);
  EXPECT_EQ(default_system("two_link_robot").state_dim(), 4);
  EXPECT_EQ(default_system("cart_pole").state_dim(), 4);
  EXPECT_EQ(default_system("cart_pole").name(), "cart_pole");
  EXPECT_THROW(default_system("pendulum"), InputError);
  const Region r = default_system("logistic_growth").operating_region;
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].lo, 0.0);
  EXPECT_EQ(r[0].hi, 100.0);
}

TEST(SystemSpec, ValidateRejectsMalformedRegions) {
  SystemSpec s = logistic();
  s.operating_region = {{1.0, 0.0}};
  EXPECT_THROW(s.validate(), InputError);
  s = logistic();
  s.initial_region = {{0.0, 1.0}, {0.0, 1.0}};
  EXPECT_THROW(s.validate(), InputError);
  s = logistic();
  std::get<LogisticGrowth>(s.dynamics).C = NAN;
  EXPECT_THROW(s.validate(), InputError);
}

TEST(SimulateTrajectory, NoiseFreeIsDeterministicRollout) {
  const SystemSpec s = logistic();
  Rng a(1), b(2);
  const SimulatedTrajectory tr = simulate_trajectory(s, {0.0, 0.0}, scalar(10.0), 20, a, b);
  ASSERT_EQ(tr.clean.cols(), 21);
  double x = 10.0;
  for (int t = 0; t <= 20; ++t) {
    EXPECT_EQ(tr.clean(0, t), x);
    EXPECT_EQ(tr.measured(0, t), x);
    x = step(s, scalar(x))[0];
  }
}

TEST(SimulateTrajectory, MeasurementNoiseVariance) {
  const SystemSpec s = logistic();
  Rng p(3), m(4);
  const double sr2 = 0.5;
  const SimulatedTrajectory tr = simulate_trajectory(s, {0.0, sr2}, scalar(100.0), 99999, p, m);
  std::vector<double> r;
  for (Eigen::Index t = 0; t < tr.clean.cols(); ++t) r.push_back(tr.measured(0, t) - tr.clean(0, t));
  // var of a sample variance of Gaussians is 2 s^4 / (n - 1)
  const double se = sr2 * std::sqrt(2.0 / static_cast<double>(r.size() - 1));
  EXPECT_NEAR(variance_of(r), sr2, 3.0 * se);
}

TEST(SimulateTrajectory, ProcessNoiseVariance) {
  const SystemSpec s = logistic();
  Rng p(5), m(6);
  const double sw2 = 0.2;
  const SimulatedTrajectory tr = simulate_trajectory(s, {sw2, 0.1}, scalar(100.0), 100000, p, m);
  std::vector<double> w;
  for (Eigen::Index t = 0; t + 1 < tr.clean.cols(); ++t) {
    w.push_back(tr.clean(0, t + 1) - step(s, scalar(tr.clean(0, t)))[0]);
  }
  const double se = sw2 * std::sqrt(2.0 / static_cast<double>(w.size() - 1));
  EXPECT_NEAR(variance_of(w), sw2, 3.0 * se);
}

TEST(SimulateTrajectory, MeasurementStreamDoesNotTouchCleanStates) {
  const SystemSpec s = default_system("batch_reactor");
  Rng p1(7), m1(8), p2(7), m2(9);
  const NoiseSpec noise{1e-4, 1e-2};
  const SimulatedTrajectory a = simulate_trajectory(s, noise, Eigen::Vector2d(1.0, 0.5), 50, p1, m1);
  const SimulatedTrajectory b = simulate_trajectory(s, noise, Eigen::Vector2d(1.0, 0.5), 50, p2, m2);
  EXPECT_EQ(a.clean, b.clean);
  EXPECT_NE(a.measured, b.measured);
}

TEST(SimulateTrajectory, ReproducibleFromSeeds) {
  const SystemSpec s = default_system("cart_pole");
  const Eigen::Vector4d x0(0.1, 0.0, 0.05, 0.0);
  RngStreams a = RngStreams::from_seed(77), b = RngStreams::from_seed(77);
  const SimulatedTrajectory ta = simulate_trajectory(s, {1e-6, 1e-4}, x0, 30, a.process, a.measurement);
  const SimulatedTrajectory tb = simulate_trajectory(s, {1e-6, 1e-4}, x0, 30, b.process, b.measurement);
  EXPECT_EQ(ta.clean, tb.clean);
  EXPECT_EQ(ta.measured, tb.measured);
}

TEST(SimulateTrajectory, RejectsBadArguments) {
  Rng p(1), m(2);
  EXPECT_THROW(simulate_trajectory(logistic(), {-1.0, 0.0}, scalar(1.0), 5, p, m), InputError);
  EXPECT_THROW(simulate_trajectory(logistic(), {0.0, 0.0}, scalar(1.0), -1, p, m), InputError);
  EXPECT_THROW(simulate_trajectory(logistic(), {0.0, 0.0}, Eigen::Vector2d(1, 1), 5, p, m), InputError);
}

TEST(RngStreams, StreamsDiffer) {
  RngStreams s = RngStreams::from_seed(1);
  const auto a = s.process(), b = s.measurement(), c = s.initial(), d = s.test();
  EXPECT_NE(a, b);
  EXPECT_NE(a, c);
  EXPECT_NE(b, d);
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
  EXPECT_NE(splitmix64(0), 0u);
}

TEST(SampleTestPoints, WithinRegionAndPairedWithTruth) {
  const SystemSpec s = logistic();
  Rng rng(10);
  const TestSet ts = sample_test_points(s, 500, rng);
  ASSERT_EQ(ts.points.cols(), 500);
  for (Eigen::Index i = 0; i < 500; ++i) {
    EXPECT_GE(ts.points(0, i), 0.0);
    EXPECT_LE(ts.points(0, i), 100.0);
    EXPECT_EQ(ts.truths(0, i), step(s, ts.points.col(i))[0]);
  }
}

TEST(SampleTestPoints, MeanIsRegionMidpoint) {
  SystemSpec s = default_system("batch_reactor");
  s.operating_region = {{0.5, 2.0}, {-1.0, 3.0}};
  Rng rng(11);
  const int count = 100000;
  const TestSet ts = sample_test_points(s, count, rng);
  for (int m = 0; m < 2; ++m) {
    const Interval iv = s.operating_region[static_cast<std::size_t>(m)];
    const double se = (iv.hi - iv.lo) / std::sqrt(12.0 * count);
    EXPECT_NEAR(ts.points.row(m).mean(), 0.5 * (iv.lo + iv.hi), 3.0 * se);
    EXPECT_GE(ts.points.row(m).minCoeff(), iv.lo);
    EXPECT_LE(ts.points.row(m).maxCoeff(), iv.hi);
  }
}

TEST(SampleTestPoints, NeedsAnOperatingRegion) {
  SystemSpec s = default_system("batch_reactor");
  s.operating_region.clear();
  Rng rng(1);
  EXPECT_THROW(sample_test_points(s, 10, rng), InputError);
}

TEST(EnvelopeRegion, InflatesBoundingBox) {
  Eigen::MatrixXd a(2, 3), b(2, 2);
  a << 0.0, 1.0, 2.0,
       5.0, 5.0, 5.0;
  b << -2.0, 1.0,
       5.0, 5.0;
  const Region r = envelope_region({a, b}, 0.1);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0].lo, -2.2);
  EXPECT_DOUBLE_EQ(r[0].hi, 2.2);
  EXPECT_LT(r[1].lo, 5.0);  // degenerate dimension still gets a nonempty interval
  EXPECT_GT(r[1].hi, 5.0);
}

}  // namespace
}  // namespace ccsgp
