#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ccsgp {

// x+ = x + T q x (1 - x / C)
struct LogisticGrowth {
  double T = 1.0;
  double q = 0.1;
  double C = 100.0;
};

// Euler-discretized 2A -> B batch reactor:
//   x1+ = x1 + T (-2 c1 x1^2 + 2 c2 x2)
//   x2+ = x2 + T (c1 x1^2 - c2 x2)
struct BatchReactor {
  double T = 0.1;
  double c1 = 0.16;
  double c2 = 0.0064;
};

// Unactuated planar two-link arm with uniform rods, state
// (q1, q2, dq1, dq2), explicit Euler with step dt.
struct TwoLinkRobot {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double gravity = 9.81;
  double damping = 0.0;  // viscous joint friction
  double dt = 0.01;
};

// Classic cart-pole with zero applied force, state (x, dx, theta, dtheta),
// explicit Euler with step dt. `half_pole_length` is the distance from the
// pivot to the pole's center of mass.
struct CartPole {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_pole_length = 0.5;
  double dt = 0.02;
};

using Dynamics = std::variant<LogisticGrowth, BatchReactor, TwoLinkRobot, CartPole>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

using Region = std::vector<Interval>;

struct SystemSpec {
  Dynamics dynamics;
  // Where test points are drawn. Empty means "derive from the training
  // trajectories" (see envelope_region).
  Region operating_region;
  // Where training initial conditions are drawn.
  Region initial_region;

  std::string name() const;
  int state_dim() const;
  // Throws InputError on non-finite parameters or malformed regions.
  void validate() const;
};

SystemSpec default_system(const std::string& name);

struct NoiseSpec {
  double process_var = 0.0;      // sigma_w^2
  double measurement_var = 0.0;  // sigma_r^2
};

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);
// Order-sensitive combination of a seed with one more key.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

// Independent streams for process noise, measurement noise, initial
// conditions and test points.
struct RngStreams {
  Rng process;
  Rng measurement;
  Rng initial;
  Rng test;

  static RngStreams from_seed(std::uint64_t seed);
};

// Noise-free one-step map f(x). Throws SimulationError on non-finite output.
Eigen::VectorXd step(const SystemSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

struct SimulatedTrajectory {
  Eigen::MatrixXd clean;     // n x (L+1), x(t+1) = f(x(t)) + w(t)
  Eigen::MatrixXd measured;  // n x (L+1), x~(t) = x(t) + r(t)
};

// L transitions starting at x0. Process noise is drawn from `process_rng`,
// measurement noise from `measurement_rng`.
SimulatedTrajectory simulate_trajectory(const SystemSpec& spec, const NoiseSpec& noise,
                                        const Eigen::Ref<const Eigen::VectorXd>& x0, int length, Rng& process_rng,
                                        Rng& measurement_rng);

Eigen::VectorXd sample_uniform(const Region& region, Rng& rng);

struct TestSet {
  Eigen::MatrixXd points;  // n x count
  Eigen::MatrixXd truths;  // n x count, f(points)
};

TestSet sample_test_points(const SystemSpec& spec, int count, Rng& rng);

// Per-dimension bounding box of the given state matrices, widened by
// `inflation` times its width (half on each side).
Region envelope_region(const std::vector<Eigen::MatrixXd>& states, double inflation = 0.1);

}  // namespace ccsgp
