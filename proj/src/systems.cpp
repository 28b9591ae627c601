#include "ccsgp/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ccsgp/errors.hpp"

namespace ccsgp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::VectorXd step_logistic(const LogisticGrowth& s, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd y(1);
  y[0] = x[0] + s.T * s.q * x[0] * (1.0 - x[0] / s.C);
  return y;
}

Eigen::VectorXd step_reactor(const BatchReactor& s, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double x1sq = x[0] * x[0];
  Eigen::VectorXd y(2);
  y[0] = x[0] + s.T * (-2.0 * s.c1 * x1sq + 2.0 * s.c2 * x[1]);
  y[1] = x[1] + s.T * (s.c1 * x1sq - s.c2 * x[1]);
  return y;
}

Eigen::VectorXd step_two_link(const TwoLinkRobot& s, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double q1 = x[0], q2 = x[1], dq1 = x[2], dq2 = x[3];
  const double lc1 = 0.5 * s.l1, lc2 = 0.5 * s.l2;
  const double I1 = s.m1 * s.l1 * s.l1 / 12.0, I2 = s.m2 * s.l2 * s.l2 / 12.0;
  const double c2 = std::cos(q2), s2 = std::sin(q2);
  Eigen::Matrix2d M;
  M(0, 0) = s.m1 * lc1 * lc1 + I1 + s.m2 * (s.l1 * s.l1 + lc2 * lc2 + 2.0 * s.l1 * lc2 * c2) + I2;
  M(0, 1) = s.m2 * (lc2 * lc2 + s.l1 * lc2 * c2) + I2;
  M(1, 0) = M(0, 1);
  M(1, 1) = s.m2 * lc2 * lc2 + I2;
  const double h = s.m2 * s.l1 * lc2 * s2;
  Eigen::Vector2d coriolis(-h * (2.0 * dq1 * dq2 + dq2 * dq2), h * dq1 * dq1);
  Eigen::Vector2d grav((s.m1 * lc1 + s.m2 * s.l1) * s.gravity * std::cos(q1) + s.m2 * lc2 * s.gravity * std::cos(q1 + q2),
                       s.m2 * lc2 * s.gravity * std::cos(q1 + q2));
  Eigen::Vector2d friction(s.damping * dq1, s.damping * dq2);
  const Eigen::Vector2d ddq = M.ldlt().solve(-(coriolis + grav + friction));
  Eigen::VectorXd y(4);
  y << q1 + s.dt * dq1, q2 + s.dt * dq2, dq1 + s.dt * ddq[0], dq2 + s.dt * ddq[1];
  return y;
}

Eigen::VectorXd step_cart_pole(const CartPole& s, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double pos = x[0], vel = x[1], theta = x[2], omega = x[3];
  const double force = 0.0;
  const double total = s.cart_mass + s.pole_mass;
  const double pml = s.pole_mass * s.half_pole_length;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double temp = (force + pml * omega * omega * st) / total;
  const double alpha =
      (s.gravity * st - ct * temp) / (s.half_pole_length * (4.0 / 3.0 - s.pole_mass * ct * ct / total));
  const double acc = temp - pml * alpha * ct / total;
  Eigen::VectorXd y(4);
  y << pos + s.dt * vel, vel + s.dt * acc, theta + s.dt * omega, omega + s.dt * alpha;
  return y;
}

void check_region(const Region& r, int n, const char* what) {
  if (r.empty()) return;
  if (static_cast<int>(r.size()) != n) {
    throw InputError(std::string(what) + " has " + std::to_string(r.size()) + " intervals, expected " +
                     std::to_string(n));
  }
  for (const Interval& iv : r) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo <= iv.hi)) {
      throw InputError(std::string(what) + " has an empty or non-finite interval");
    }
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) { return splitmix64(splitmix64(seed) ^ key); }

RngStreams RngStreams::from_seed(std::uint64_t seed) {
  return RngStreams{Rng(mix_seed(seed, 1)), Rng(mix_seed(seed, 2)), Rng(mix_seed(seed, 3)), Rng(mix_seed(seed, 4))};
}

std::string SystemSpec::name() const {
  return std::visit(overloaded{[](const LogisticGrowth&) { return std::string("logistic_growth"); },
                               [](const BatchReactor&) { return std::string("batch_reactor"); },
                               [](const TwoLinkRobot&) { return std::string("two_link_robot"); },
                               [](const CartPole&) { return std::string("cart_pole"); }},
                    dynamics);
}

int SystemSpec::state_dim() const {
  return std::visit(overloaded{[](const LogisticGrowth&) { return 1; }, [](const BatchReactor&) { return 2; },
                               [](const TwoLinkRobot&) { return 4; }, [](const CartPole&) { return 4; }},
                    dynamics);
}

void SystemSpec::validate() const {
  auto finite_all = [](std::initializer_list<double> v) {
    for (double d : v) {
      if (!std::isfinite(d)) return false;
    }
    return true;
  };
  const bool ok = std::visit(
      overloaded{[&](const LogisticGrowth& s) { return finite_all({s.T, s.q, s.C}) && s.C != 0.0; },
                 [&](const BatchReactor& s) { return finite_all({s.T, s.c1, s.c2}); },
                 [&](const TwoLinkRobot& s) {
                   return finite_all({s.m1, s.m2, s.l1, s.l2, s.gravity, s.damping, s.dt}) && s.m1 > 0 && s.m2 > 0 &&
                          s.l1 > 0 && s.l2 > 0;
                 },
                 [&](const CartPole& s) {
                   return finite_all({s.gravity, s.cart_mass, s.pole_mass, s.half_pole_length, s.dt}) &&
                          s.cart_mass > 0 && s.pole_mass > 0 && s.half_pole_length > 0;
                 }},
      dynamics);
  if (!ok) throw InputError("system '" + name() + "' has invalid parameters");
  check_region(operating_region, state_dim(), "operating_region");
  check_region(initial_region, state_dim(), "initial_region");
  if (initial_region.empty()) throw InputError("system '" + name() + "' needs an initial_region");
}

SystemSpec default_system(const std::string& name) {
  SystemSpec s;
  if (name == "logistic_growth") {
    s.dynamics = LogisticGrowth{};
    s.operating_region = {{0.0, 100.0}};
    s.initial_region = {{0.0, 100.0}};
  } else if (name == "batch_reactor") {
    s.dynamics = BatchReactor{};
    s.initial_region = {{0.5, 2.0}, {0.0, 1.0}};
  } else if (name == "two_link_robot") {
    s.dynamics = TwoLinkRobot{};
    s.initial_region = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  } else if (name == "cart_pole") {
    s.dynamics = CartPole{};
    s.initial_region = {{-0.5, 0.5}, {-0.5, 0.5}, {-0.2, 0.2}, {-0.5, 0.5}};
  } else {
    throw InputError("unknown system '" + name + "'");
  }
  return s;
}

Eigen::VectorXd step(const SystemSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != spec.state_dim()) {
    throw InputError("step: state has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(spec.state_dim()));
  }
  if (!x.allFinite()) throw SimulationError("step: non-finite state");
  Eigen::VectorXd y = std::visit(overloaded{[&](const LogisticGrowth& s) { return step_logistic(s, x); },
                                            [&](const BatchReactor& s) { return step_reactor(s, x); },
                                            [&](const TwoLinkRobot& s) { return step_two_link(s, x); },
                                            [&](const CartPole& s) { return step_cart_pole(s, x); }},
                                 spec.dynamics);
  if (!y.allFinite()) throw SimulationError("step: " + spec.name() + " produced a non-finite state");
  return y;
}

SimulatedTrajectory simulate_trajectory(const SystemSpec& spec, const NoiseSpec& noise,
                                        const Eigen::Ref<const Eigen::VectorXd>& x0, int length, Rng& process_rng,
                                        Rng& measurement_rng) {
  if (length < 0) throw InputError("simulate_trajectory: negative length");
  if (!(noise.process_var >= 0.0) || !(noise.measurement_var >= 0.0)) {
    throw InputError("simulate_trajectory: noise variances must be nonnegative");
  }
  const int n = spec.state_dim();
  if (x0.size() != n) throw InputError("simulate_trajectory: initial state has wrong dimension");
  const double sw = std::sqrt(noise.process_var);
  const double sr = std::sqrt(noise.measurement_var);
  std::normal_distribution<double> normal(0.0, 1.0);
  SimulatedTrajectory out;
  out.clean.resize(n, length + 1);
  out.measured.resize(n, length + 1);
  out.clean.col(0) = x0;
  for (int t = 0; t < length; ++t) {
    Eigen::VectorXd next = step(spec, out.clean.col(t));
    for (int j = 0; j < n; ++j) next[j] += sw * normal(process_rng);
    if (!next.allFinite()) throw SimulationError("simulate_trajectory: diverged at step " + std::to_string(t));
    out.clean.col(t + 1) = next;
  }
  for (int t = 0; t <= length; ++t) {
    for (int j = 0; j < n; ++j) out.measured(j, t) = out.clean(j, t) + sr * normal(measurement_rng);
  }
  return out;
}

Eigen::VectorXd sample_uniform(const Region& region, Rng& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(region.size()));
  for (std::size_t m = 0; m < region.size(); ++m) {
    std::uniform_real_distribution<double> u(region[m].lo, region[m].hi);
    x[static_cast<Eigen::Index>(m)] = u(rng);
  }
  return x;
}

TestSet sample_test_points(const SystemSpec& spec, int count, Rng& rng) {
  if (count < 1) throw InputError("sample_test_points: count must be >= 1");
  if (spec.operating_region.empty()) throw InputError("sample_test_points: no operating region");
  const int n = spec.state_dim();
  TestSet ts;
  ts.points.resize(n, count);
  ts.truths.resize(n, count);
  for (int i = 0; i < count; ++i) {
    ts.points.col(i) = sample_uniform(spec.operating_region, rng);
    ts.truths.col(i) = step(spec, ts.points.col(i));
  }
  return ts;
}

Region envelope_region(const std::vector<Eigen::MatrixXd>& states, double inflation) {
  if (states.empty()) throw InputError("envelope_region: no states");
  const Eigen::Index n = states.front().rows();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (const auto& s : states) {
    if (s.rows() != n) throw InputError("envelope_region: mixed state dimensions");
    if (s.cols() == 0) continue;
    lo = lo.cwiseMin(s.rowwise().minCoeff());
    hi = hi.cwiseMax(s.rowwise().maxCoeff());
  }
  Region r(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m) {
    const double width = hi[m] - lo[m];
    const double pad = 0.5 * inflation * (width > 0.0 ? width : std::max(1.0, std::abs(lo[m])));
    r[static_cast<std::size_t>(m)] = {lo[m] - pad, hi[m] + pad};
  }
  return r;
}

}  // namespace ccsgp
