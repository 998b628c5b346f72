#pragma once

#include <Eigen/Core>
#include <vector>

#include "dpwfl/hyperparams.hpp"

namespace dpwfl {

// Independent numerical cross-check of the one-step privacy bound for a
// one-dimensional instance: the exact output distribution of theta^(1) is a
// Gaussian mixture over all (device-subset, batch-subset) outcomes, and its
// Renyi divergence against the adjacent dataset's mixture is computed by
// quadrature. One dimension suffices because the mechanism's sensitivity
// argument is norm-based; multi-step density propagation is out of scope.

struct Grid1D {
  double lo = 0.0, hi = 0.0;
  int points = 0;  // >= 2, trapezoid nodes inclusive of both ends
  double step() const { return (hi - lo) / (points - 1); }
  Eigen::ArrayXd nodes() const { return Eigen::ArrayXd::LinSpaced(points, lo, hi); }
};

// trapezoid rule over uniformly spaced samples
double trapezoid(const Eigen::ArrayXd& values, double step);

// Equal-variance Gaussian mixture evaluated on a grid. density = exp(log_density),
// with the log computed by log-sum-exp so tails stay finite.
struct OutputDistribution {
  Grid1D grid;
  Eigen::ArrayXd log_density;
  Eigen::ArrayXd density;
  double normalization = 0.0;  // trapezoid integral of density over the grid
  std::vector<double> means;
  std::vector<double> weights;
  double stddev = 0.0;
};

OutputDistribution gaussian_mixture_density(const std::vector<double>& means,
                                            const std::vector<double>& weights, double stddev,
                                            const Grid1D& grid);

// D_alpha(P||Q) = 1/(alpha-1) * log integral P^alpha Q^(1-alpha), trapezoid
// quadrature on the common grid. Throws std::domain_error if the densities
// are non-positive anywhere on the grid (insufficient quadrature support;
// the grid must extend at least ~8 standard deviations past every component).
double renyi_divergence_numeric(const OutputDistribution& P, const OutputDistribution& Q,
                                double alpha);

// Adjacency spec: the base per-sample gradient values (n x dataset_size, raw,
// clipped at c inside the check) and a single-sample replacement.
struct SampleSwap {
  int device = 0;
  int sample = 0;
  double replacement = 0.0;
};

struct OneStepInstance {
  Eigen::MatrixXd sample_grads;  // n rows, dataset_size columns
  SampleSwap swap;
  double theta0 = 0.0;
};

// Worst-case adjacent pair: the swapped sample moves between the clip
// extremes +-c, every other sample gradient is zero.
OneStepInstance worst_case_instance(const HyperParams& params);

struct BoundCheck {
  double numeric = 0.0;   // quadrature Renyi divergence
  double bound = 0.0;     // 2 alpha p q c^2 gamma^2 / sigma^2
  double margin = 0.0;    // (bound - numeric) / bound
  bool pass = false;      // numeric <= bound * (1 + 1e-3)
  bool in_regime = false; // p = q = 1, or sigma/(c*gamma) >= 5 for subsampled cases
  long outcomes = 0;      // mixture components enumerated per dataset
};

// Builds the exact output mixtures for both datasets of the instance,
// computes the numeric divergence, and compares it against the one-round
// bound. Enumeration is capped at 10^4 outcomes (std::length_error beyond).
BoundCheck one_step_bound_check(const HyperParams& params, double gamma, double alpha,
                                const OneStepInstance& instance);

}  // namespace dpwfl
