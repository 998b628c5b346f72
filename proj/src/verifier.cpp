#include "dpwfl/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dpwfl {

namespace {

constexpr long kOutcomeCap = 10000;

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > 100 * kOutcomeCap) return result;  // enough to trip the cap
  }
  return result;
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> current(k);
  for (int i = 0; i < k; ++i) current[i] = i;
  while (true) {
    out.push_back(current);
    int i = k - 1;
    while (i >= 0 && current[i] == n - k + i) --i;
    if (i < 0) break;
    ++current[i];
    for (int j = i + 1; j < k; ++j) current[j] = current[j - 1] + 1;
  }
  return out;
}

double clip_scalar(double g, double c) {
  return std::abs(g) <= c ? g : std::copysign(c, g);
}

// Component means of theta^(1) for one dataset: one Gaussian per
// (device-subset, per-device batch-subset) outcome, all with equal weight.
std::vector<double> outcome_means(const Eigen::MatrixXd& grads, const HyperParams& params,
                                  double scale, double theta0) {
  const int n = static_cast<int>(grads.rows());
  const int m = static_cast<int>(grads.cols());
  const int k_dev = params.active_count();
  const int k_batch = params.batch_count();

  const auto device_sets = combinations(n, k_dev);
  const auto batch_sets = combinations(m, k_batch);

  // per device, the clipped-gradient sum of each possible batch
  Eigen::MatrixXd batch_sums(n, static_cast<Eigen::Index>(batch_sets.size()));
  for (int dev = 0; dev < n; ++dev)
    for (std::size_t b = 0; b < batch_sets.size(); ++b) {
      double sum = 0.0;
      for (int s : batch_sets[b]) sum += clip_scalar(grads(dev, s), params.c);
      batch_sums(dev, static_cast<Eigen::Index>(b)) = sum;
    }

  std::vector<double> means;
  means.reserve(device_sets.size() * batch_sets.size());
  std::vector<std::size_t> odometer(static_cast<std::size_t>(k_dev), 0);
  for (const auto& devs : device_sets) {
    std::fill(odometer.begin(), odometer.end(), 0);
    while (true) {
      double total = 0.0;
      for (int i = 0; i < k_dev; ++i)
        total += batch_sums(devs[static_cast<std::size_t>(i)],
                            static_cast<Eigen::Index>(odometer[static_cast<std::size_t>(i)]));
      means.push_back(theta0 - scale * total);
      // advance the per-device batch odometer
      int pos = k_dev - 1;
      while (pos >= 0) {
        if (++odometer[static_cast<std::size_t>(pos)] < batch_sets.size()) break;
        odometer[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
  return means;
}

}  // namespace

double trapezoid(const Eigen::ArrayXd& values, double step) {
  if (values.size() < 2) throw std::invalid_argument("trapezoid: need at least two samples");
  return step * (values.sum() - 0.5 * (values[0] + values[values.size() - 1]));
}

OutputDistribution gaussian_mixture_density(const std::vector<double>& means,
                                            const std::vector<double>& weights, double stddev,
                                            const Grid1D& grid) {
  if (means.empty() || means.size() != weights.size())
    throw std::invalid_argument("gaussian_mixture_density: means/weights mismatch");
  if (!(stddev > 0.0)) throw std::invalid_argument("gaussian_mixture_density: stddev must be positive");
  if (grid.points < 2 || !(grid.hi > grid.lo))
    throw std::invalid_argument("gaussian_mixture_density: malformed grid");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("gaussian_mixture_density: weights must be positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("gaussian_mixture_density: weights must sum to 1");

  OutputDistribution dist;
  dist.grid = grid;
  dist.means = means;
  dist.weights = weights;
  dist.stddev = stddev;

  const Eigen::ArrayXd x = grid.nodes();
  const double log_norm = -std::log(stddev * std::sqrt(2.0 * std::numbers::pi));
  const double inv2v = 1.0 / (2.0 * stddev * stddev);

  dist.log_density.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // log-sum-exp over components
    double max_term = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < means.size(); ++k) {
      const double d = x[i] - means[k];
      max_term = std::max(max_term, std::log(weights[k]) - d * d * inv2v);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      const double d = x[i] - means[k];
      acc += std::exp(std::log(weights[k]) - d * d * inv2v - max_term);
    }
    dist.log_density[i] = log_norm + max_term + std::log(acc);
  }
  dist.density = dist.log_density.exp();
  dist.normalization = trapezoid(dist.density, grid.step());
  return dist;
}

double renyi_divergence_numeric(const OutputDistribution& P, const OutputDistribution& Q,
                                double alpha) {
  if (!(alpha > 1.0)) throw std::domain_error("renyi_divergence_numeric: alpha must be > 1");
  if (P.grid.lo != Q.grid.lo || P.grid.hi != Q.grid.hi || P.grid.points != Q.grid.points)
    throw std::invalid_argument("renyi_divergence_numeric: distributions must share a grid");
  if ((P.density <= 0.0).any() || (Q.density <= 0.0).any() || !P.density.isFinite().all() ||
      !Q.density.isFinite().all())
    throw std::domain_error(
        "renyi_divergence_numeric: density underflows on the grid; extend the quadrature support");

  // integrate exp(alpha log P + (1-alpha) log Q) with the peak factored out
  const Eigen::ArrayXd combined = alpha * P.log_density + (1.0 - alpha) * Q.log_density;
  const double peak = combined.maxCoeff();
  const double integral = trapezoid((combined - peak).exp().eval(), P.grid.step());
  return (peak + std::log(integral)) / (alpha - 1.0);
}

OneStepInstance worst_case_instance(const HyperParams& params) {
  OneStepInstance inst;
  inst.sample_grads = Eigen::MatrixXd::Zero(params.n, params.dataset_size);
  inst.sample_grads(0, 0) = 2.0 * params.c;  // clips to +c
  inst.swap = {0, 0, -2.0 * params.c};       // clips to -c
  inst.theta0 = 0.0;
  return inst;
}

BoundCheck one_step_bound_check(const HyperParams& params, double gamma, double alpha,
                                const OneStepInstance& instance) {
  params.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("one_step_bound_check: gamma must be positive");
  if (!(alpha > 1.0)) throw std::domain_error("one_step_bound_check: alpha must be > 1");
  if (!(params.sigma > 0.0))
    throw std::invalid_argument("one_step_bound_check: sigma must be positive");
  if (instance.sample_grads.rows() != params.n ||
      instance.sample_grads.cols() != params.dataset_size)
    throw std::invalid_argument("one_step_bound_check: instance shape does not match params");
  if (instance.swap.device < 0 || instance.swap.device >= params.n ||
      instance.swap.sample < 0 || instance.swap.sample >= params.dataset_size)
    throw std::invalid_argument("one_step_bound_check: swap index out of range");

  const long total_outcomes = binomial(params.n, params.active_count()) *
                              static_cast<long>(std::pow(
                                  static_cast<double>(binomial(params.dataset_size,
                                                               params.batch_count())),
                                  params.active_count()));
  if (total_outcomes > kOutcomeCap)
    throw std::length_error("one_step_bound_check: outcome count exceeds the enumeration cap");

  const double pqn = params.p * params.q * params.n;
  const double scale = params.eta / pqn;
  const double noise_std = scale * params.sigma / gamma;

  Eigen::MatrixXd swapped = instance.sample_grads;
  swapped(instance.swap.device, instance.swap.sample) = instance.swap.replacement;

  const std::vector<double> means_p =
      outcome_means(instance.sample_grads, params, scale, instance.theta0);
  const std::vector<double> means_q = outcome_means(swapped, params, scale, instance.theta0);
  const std::vector<double> weights(means_p.size(), 1.0 / static_cast<double>(means_p.size()));

  // Shared grid covering both mixtures and the P^alpha Q^(1-alpha) integrand,
  // whose peaks sit at alpha*m_i - (alpha-1)*m_j; covering those per side
  // keeps the grid wide enough without pushing the tails into underflow.
  double mean_lo = instance.theta0, mean_hi = instance.theta0;
  for (double m : means_p) { mean_lo = std::min(mean_lo, m); mean_hi = std::max(mean_hi, m); }
  for (double m : means_q) { mean_lo = std::min(mean_lo, m); mean_hi = std::max(mean_hi, m); }
  const double shift_lo = alpha * mean_lo - (alpha - 1.0) * mean_hi;
  const double shift_hi = alpha * mean_hi - (alpha - 1.0) * mean_lo;
  // 9 sigma past the outermost peak: well past the 8-sigma support floor,
  // still short of where the Gaussian tail underflows (~37.6 sigma).
  Grid1D grid;
  grid.lo = std::min(mean_lo, shift_lo) - 9.0 * noise_std;
  grid.hi = std::max(mean_hi, shift_hi) + 9.0 * noise_std;
  grid.points = static_cast<int>(std::ceil((grid.hi - grid.lo) / (noise_std / 64.0))) + 1;

  const OutputDistribution P = gaussian_mixture_density(means_p, weights, noise_std, grid);
  const OutputDistribution Q = gaussian_mixture_density(means_q, weights, noise_std, grid);

  BoundCheck check;
  check.outcomes = static_cast<long>(means_p.size());
  check.numeric = renyi_divergence_numeric(P, Q, alpha);
  check.bound = 2.0 * alpha * params.p * params.q * params.c * params.c * gamma * gamma /
                (params.sigma * params.sigma);
  check.margin = (check.bound - check.numeric) / check.bound;
  check.pass = check.numeric <= check.bound * (1.0 + 1e-3);
  check.in_regime =
      (params.p == 1.0 && params.q == 1.0) || params.sigma / (params.c * gamma) >= 5.0;
  return check;
}

}  // namespace dpwfl
