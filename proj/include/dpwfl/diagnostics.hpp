#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>

#include "dpwfl/hyperparams.hpp"
#include "dpwfl/losses.hpp"
#include "dpwfl/simulator.hpp"

namespace dpwfl {

// The four error components of the convergence bound on
// min_t E|grad f(theta^(t))|, each evaluated with its leading constant set
// to one (the bound is an asymptotic order, so acceptance is based on
// orderings and limits rather than absolute domination):
//   C1  initialization error, decays with T
//   C2  stochastic noise & dissimilarity & clipping error
//   C3  unavoidable clipping bias (independent of eta and T)
//   C4  estimation & channel noise error
struct BoundReport {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
  double total = 0.0;                       // component sum
  double measured_min_grad_norm = 0.0;      // NaN until a trace is compared
  long T = 0;
};

// Evaluates the components verbatim:
//   C1 = (f(theta0) - f*)/(eta c T) + sqrt((f(theta0) - f*)/(eta T))
//   C2 = sqrt(eta L (sl^2 + sg^2)/(p q n)) + min{eta L sqrt(sl^2 + sg^2), c}
//   C3 = min{sl + sg, (sl^2 + sg^2)/c}
//   C4 = (d eta L sigma^2/(p q n c)) mean_t 1/gamma_t^2
//        + sqrt(d eta L/(p q n)) mean_t sigma/gamma_t
// Throws std::domain_error if f(theta0) < f*.
BoundReport bound_components(const HyperParams& params, const LossModel& loss,
                             const Eigen::VectorXd& theta0, std::span<const double> gamma_seq);

// Privacy-utility trade-off at RDP level (alpha, eps_target): C1 + C2 + C3
// plus the channel term of the bound with the noise scale eliminated via
// sigma^2 = 2 alpha p q c^2 Gamma / eps, i.e.
//   (2 alpha d eta L c/(n eps)) mean_t Gamma/gamma_t^2
//   + c sqrt(2 alpha d eta L/(n eps)) mean_t sqrt(Gamma)/gamma_t.
double tradeoff_bound(const HyperParams& params, const LossModel& loss,
                      const Eigen::VectorXd& theta0, std::span<const double> gamma_seq,
                      double alpha, double eps_target);

struct TraceComparison {
  double measured_min_grad_norm = 0.0;  // min_t |grad f(theta^(t))| over the trace
  double bound_total = 0.0;
  double ratio = 0.0;  // measured / bound
};

TraceComparison compare_trace(const TrainingTrace& trace, const BoundReport& report);

// Seeded multi-run estimate of min_t |grad f(theta^(t))|: the loss is
// regenerated and trained once per seed, runs execute in parallel. The
// median is reported alongside the mean to resist heavy tails at large
// noise scales.
struct SweepStats {
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> values;
};

SweepStats mc_min_grad_stats(const HyperParams& params, const TrainOptions& base_options,
                             const std::function<LossModel(std::mt19937_64&)>& loss_factory,
                             int n_seeds);

// Same machinery for the final global loss f(theta^(T)).
SweepStats mc_final_loss_stats(const HyperParams& params, const TrainOptions& base_options,
                               const std::function<LossModel(std::mt19937_64&)>& loss_factory,
                               int n_seeds);

}  // namespace dpwfl
