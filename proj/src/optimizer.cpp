#include "ccsgp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ccsgp/errors.hpp"

namespace ccsgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int packed_size(int dim, const HyperparamMask& m) {
  return (m.signal_variance ? 1 : 0) + (m.lengthscales ? dim : 0) + (m.process_noise ? 1 : 0) +
         (m.measurement_noise ? 1 : 0);
}

double safe_log(double v) { return std::log(std::max(v, 1e-10)); }

Eigen::VectorXd pack(const KernelHyperparams& hp, const HyperparamMask& m) {
  Eigen::VectorXd v(packed_size(hp.dim(), m));
  int k = 0;
  if (m.signal_variance) v[k++] = safe_log(hp.signal_variance);
  if (m.lengthscales) {
    for (int i = 0; i < hp.dim(); ++i) v[k++] = safe_log(hp.lengthscales[i]);
  }
  if (m.process_noise) v[k++] = safe_log(hp.process_noise_var);
  if (m.measurement_noise) v[k++] = safe_log(hp.measurement_noise_var);
  return v;
}

KernelHyperparams unpack(const Eigen::VectorXd& v, const KernelHyperparams& fixed, const HyperparamMask& m) {
  KernelHyperparams hp = fixed;
  int k = 0;
  if (m.signal_variance) hp.signal_variance = std::exp(v[k++]);
  if (m.lengthscales) {
    for (int i = 0; i < hp.dim(); ++i) hp.lengthscales[i] = std::exp(v[k++]);
  }
  if (m.process_noise) hp.process_noise_var = std::exp(v[k++]);
  if (m.measurement_noise) hp.measurement_noise_var = std::exp(v[k++]);
  return hp;
}

KernelHyperparams apply_fixed(KernelHyperparams hp, const OptimizerOptions& opts) {
  if (!opts.fixed_values) return hp;
  const KernelHyperparams& f = *opts.fixed_values;
  const HyperparamMask& m = opts.mask;
  if (!m.signal_variance) hp.signal_variance = f.signal_variance;
  if (!m.lengthscales) hp.lengthscales = f.lengthscales;
  if (!m.process_noise) hp.process_noise_var = f.process_noise_var;
  if (!m.measurement_noise) hp.measurement_noise_var = f.measurement_noise_var;
  return hp;
}

}  // namespace

Eigen::MatrixXd CovarianceBuild::assembled(double beta) const {
  if (!has_correction()) return base;
  if (beta == 1.0) return base + correction;
  return base + beta * correction;
}

FactorizedCovariance factorize_build(const CovarianceBuild& build, FitDiagnostics* diag,
                                     const JitterPolicy& policy, int beta_steps) {
  FitDiagnostics local;
  FitDiagnostics& d = diag ? *diag : local;
  ++d.factorizations;
  if (!build.has_correction()) {
    PsdFactor f = PsdFactor::factorize(build.base, policy);
    if (f.jitter() > 0.0) ++d.jitter_events;
    return {std::move(f), 1.0};
  }
  try {
    PsdFactor f = PsdFactor::factorize(build.assembled(1.0), policy);
    if (f.jitter() > 0.0) ++d.jitter_events;
    return {std::move(f), 1.0};
  } catch (const NumericalError&) {
    // fall through to correction scaling
  }
  const double mean_diag = build.base.diagonal().mean();
  const double max_jitter = policy.max * (mean_diag > 0.0 ? mean_diag : 1.0);
  double lo = 0.0;
  double hi = 1.0;
  PsdFactor probe;
  for (int s = 0; s < beta_steps; ++s) {
    const double mid = 0.5 * (lo + hi);
    if (PsdFactor::try_factorize(build.assembled(mid), max_jitter, probe)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  ++d.beta_events;
  PsdFactor f = PsdFactor::factorize(build.assembled(lo), policy);
  if (f.jitter() > 0.0) ++d.jitter_events;
  return {std::move(f), lo};
}

KernelHyperparams initial_hyperparams(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                      const Eigen::Ref<const Eigen::VectorXd>& targets) {
  if (targets.size() < 1 || inputs.cols() < 1) throw InputError("initial_hyperparams: no data");
  const double mean_t = targets.mean();
  double var_t = (targets.array() - mean_t).square().mean();
  if (!(var_t > 0.0)) var_t = 1.0;
  KernelHyperparams hp;
  hp.signal_variance = var_t;
  hp.lengthscales.resize(inputs.rows());
  for (Eigen::Index m = 0; m < inputs.rows(); ++m) {
    const double mu = inputs.row(m).mean();
    const double sd = std::sqrt((inputs.row(m).array() - mu).square().mean());
    hp.lengthscales[m] = sd > 0.0 ? sd : 1.0;
  }
  hp.process_noise_var = 1e-2 * var_t;
  hp.measurement_noise_var = 1e-2 * var_t;
  return hp;
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             double step, int max_iterations, double tolerance) {
  const Eigen::Index n = x0.size();
  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  if (n == 0) {
    res.x = x0;
    res.value = eval(x0);
    return res;
  }
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  vals[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[i + 1][i] += step;
    vals[i + 1] = eval(pts[i + 1]);
  }
  std::vector<int> order(n + 1);
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[n - 1];
    if (vals[worst] - vals[best] < tolerance) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += pts[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + kReflect * (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + kExpand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + kContract * (xr - centroid))
                                       : Eigen::VectorXd(centroid + kContract * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (Eigen::Index i = 1; i <= n; ++i) {
      const int k = order[i];
      pts[k] = pts[best] + kShrink * (pts[k] - pts[best]);
      vals[k] = eval(pts[k]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.value = *it;
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  return res;
}

OptimizationResult optimize_hyperparams(const CovarianceBuilder& builder,
                                        const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                        const Eigen::Ref<const Eigen::VectorXd>& targets,
                                        const OptimizerOptions& opts) {
  if (opts.starts < 1) throw InputError("optimizer needs at least one start");
  const KernelHyperparams init = apply_fixed(initial_hyperparams(inputs, targets), opts);
  const HyperparamMask& mask = opts.mask;
  const Eigen::VectorXd targets_copy = targets;

  OptimizationResult out;
  auto objective = [&](const Eigen::VectorXd& v) -> double {
    if ((v.array().abs() > opts.log_bound).any()) return kInf;
    const KernelHyperparams hp = unpack(v, init, mask);
    try {
      const CovarianceBuild build = builder(hp);
      const FactorizedCovariance fc = factorize_build(build, &out.diagnostics);
      const double lml = log_marginal_likelihood(fc.factor, targets_copy);
      return std::isfinite(lml) ? -lml : kInf;
    } catch (const NumericalError&) {
      ++out.diagnostics.failed_evaluations;
      return kInf;
    } catch (const InputError&) {
      ++out.diagnostics.failed_evaluations;
      return kInf;
    }
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(pack(opts.warm_start ? apply_fixed(*opts.warm_start, opts) : init, mask));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, opts.perturbation_sd);
  const Eigen::VectorXd base = pack(init, mask);
  for (int s = 1; s < opts.starts; ++s) {
    Eigen::VectorXd v = base;
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += normal(rng);
    starts.push_back(std::move(v));
  }

  double best_value = kInf;
  double best_start = kInf;
  Eigen::VectorXd best_x;
  for (const Eigen::VectorXd& x0 : starts) {
    const double f0 = objective(x0);
    ++out.evaluations;
    if (!std::isfinite(f0)) {
      ++out.failed_starts;
      continue;
    }
    best_start = std::min(best_start, f0);
    const NelderMeadResult r = nelder_mead(objective, x0, opts.initial_step, opts.max_iterations, opts.tolerance);
    out.evaluations += r.evaluations;
    if (r.value < best_value) {
      best_value = r.value;
      best_x = r.x;
    }
  }
  if (!std::isfinite(best_value)) {
    throw FitError("hyperparameter search failed: all " + std::to_string(opts.starts) + " starts were infeasible");
  }
  out.hyperparams = unpack(best_x, init, mask);
  out.lml = -best_value;
  out.start_lml = -best_start;
  return out;
}

OptimizationResult optimize_hyperparams(const CovarianceBuilder& builder, const Dataset& data,
                                        const OptimizerOptions& opts) {
  data.validate();
  return optimize_hyperparams(builder, data.inputs, data.targets, opts);
}

std::uint64_t iteration_seed(std::uint64_t base, int iteration) {
  return base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(iteration);
}

TrainedGP fit_standard_gp(const Dataset& data, const OptimizerOptions& opts) {
  data.validate();
  OptimizerOptions o = opts;
  o.mask.measurement_noise = false;
  KernelHyperparams fixed = initial_hyperparams(data.inputs, data.targets);
  fixed.measurement_noise_var = 0.0;
  o.fixed_values = fixed;
  if (o.warm_start) o.warm_start->measurement_noise_var = 0.0;

  const CovarianceBuilder builder = [&](const KernelHyperparams& hp) {
    return CovarianceBuild{st_covariance(hp, data.inputs), {}};
  };
  const OptimizationResult res = optimize_hyperparams(builder, data, o);
  FitDiagnostics diag = res.diagnostics;
  FactorizedCovariance fc = factorize_build(builder(res.hyperparams), &diag);
  TrainedGP gp(res.hyperparams, data, std::move(fc.factor), Method::ST);
  gp.lml = res.lml;
  gp.diagnostics = diag;
  return gp;
}

}  // namespace ccsgp
