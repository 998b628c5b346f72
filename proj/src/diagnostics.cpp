#include "dpwfl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpwfl/accountant.hpp"
#include "dpwfl/parallel.hpp"
#include "dpwfl/rng.hpp"

namespace dpwfl {

namespace {

struct GammaMoments {
  double mean_inv_sq = 0.0;  // mean_t 1/gamma_t^2
  double mean_inv = 0.0;     // mean_t 1/gamma_t
};

GammaMoments gamma_moments(std::span<const double> gamma_seq) {
  GammaMoments m;
  for (double g : gamma_seq) {
    if (!(g > 0.0))
      throw std::domain_error("diagnostics: gamma schedule must be positive");
    m.mean_inv_sq += 1.0 / (g * g);
    m.mean_inv += 1.0 / g;
  }
  const auto T = static_cast<double>(gamma_seq.size());
  m.mean_inv_sq /= T;
  m.mean_inv /= T;
  return m;
}

// C1 + C2 + C3: everything except the channel term.
double optimization_terms(const HyperParams& params, const LossModel& loss,
                          const Eigen::VectorXd& theta0, double T) {
  const double gap = loss.loss(theta0) - loss.f_star();
  if (gap < 0.0) throw std::domain_error("diagnostics: f(theta0) < f*");
  const double sl = loss.sigma_l(), sg = loss.sigma_g();
  const double s2 = sl * sl + sg * sg;
  const double pqn = params.p * params.q * params.n;

  const double C1 = gap / (params.eta * params.c * T) + std::sqrt(gap / (params.eta * T));
  const double C2 = std::sqrt(params.eta * params.L * s2 / pqn) +
                    std::min(params.eta * params.L * std::sqrt(s2), params.c);
  const double C3 = sl + sg == 0.0 ? 0.0 : std::min(sl + sg, s2 / params.c);
  return C1 + C2 + C3;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SweepStats stats_from(std::vector<double> values) {
  SweepStats s;
  s.mean = 0.0;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  s.median = median_of(values);
  s.values = std::move(values);
  return s;
}

std::vector<double> per_seed_measure(const HyperParams& params, const TrainOptions& base_options,
                                     const std::function<LossModel(std::mt19937_64&)>& loss_factory,
                                     int n_seeds, bool final_loss) {
  if (n_seeds < 1) throw std::invalid_argument("diagnostics: n_seeds must be >= 1");
  const RngStream streams(base_options.seed);
  return parallel_map(static_cast<std::size_t>(n_seeds), [&](std::size_t seed_index) {
    auto data_rng = streams.substream(seed_index, StreamPurpose::DataGeneration);
    const LossModel loss = loss_factory(data_rng);
    TrainOptions options = base_options;
    auto seed_rng = streams.substream(seed_index, StreamPurpose::SeedSweep);
    options.seed = seed_rng();
    const auto [trace, ledger] = run_training(params, loss, options);
    if (final_loss) return loss.loss(trace.theta_final);
    double min_norm = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.rounds) min_norm = std::min(min_norm, r.true_grad_norm);
    // the trace records |grad f| at theta^(t) before each update; include the endpoint
    min_norm = std::min(min_norm, loss.gradient(trace.theta_final).norm());
    return min_norm;
  });
}

}  // namespace

BoundReport bound_components(const HyperParams& params, const LossModel& loss,
                             const Eigen::VectorXd& theta0, std::span<const double> gamma_seq) {
  params.validate();
  if (gamma_seq.empty()) throw std::invalid_argument("bound_components: empty gamma schedule");
  const auto T = static_cast<double>(gamma_seq.size());
  const double gap = loss.loss(theta0) - loss.f_star();
  if (gap < 0.0) throw std::domain_error("bound_components: f(theta0) < f*");

  const double sl = loss.sigma_l(), sg = loss.sigma_g();
  const double s2 = sl * sl + sg * sg;
  const double pqn = params.p * params.q * params.n;
  const GammaMoments moments = gamma_moments(gamma_seq);

  BoundReport report;
  report.T = static_cast<long>(gamma_seq.size());
  report.C1 = gap / (params.eta * params.c * T) + std::sqrt(gap / (params.eta * T));
  report.C2 = std::sqrt(params.eta * params.L * s2 / pqn) +
              std::min(params.eta * params.L * std::sqrt(s2), params.c);
  report.C3 = sl + sg == 0.0 ? 0.0 : std::min(sl + sg, s2 / params.c);
  report.C4 = (params.dim * params.eta * params.L * params.sigma * params.sigma /
               (pqn * params.c)) * moments.mean_inv_sq +
              std::sqrt(params.dim * params.eta * params.L / pqn) * params.sigma * moments.mean_inv;
  report.total = report.C1 + report.C2 + report.C3 + report.C4;
  report.measured_min_grad_norm = std::numeric_limits<double>::quiet_NaN();
  return report;
}

double tradeoff_bound(const HyperParams& params, const LossModel& loss,
                      const Eigen::VectorXd& theta0, std::span<const double> gamma_seq,
                      double alpha, double eps_target) {
  params.validate();
  if (gamma_seq.empty()) throw std::invalid_argument("tradeoff_bound: empty gamma schedule");
  if (!(alpha > 1.0)) throw std::domain_error("tradeoff_bound: alpha must be > 1");
  if (!(eps_target > 0.0)) throw std::domain_error("tradeoff_bound: eps_target must be positive");

  const double Gamma = capped_gamma_sq(params, gamma_seq);
  const GammaMoments moments = gamma_moments(gamma_seq);
  const double base =
      optimization_terms(params, loss, theta0, static_cast<double>(gamma_seq.size()));

  const double dEtaL = params.dim * params.eta * params.L;
  const double linear =
      (2.0 * alpha * dEtaL * params.c / (params.n * eps_target)) * Gamma * moments.mean_inv_sq;
  const double sqrt_term = params.c * std::sqrt(2.0 * alpha * dEtaL / (params.n * eps_target)) *
                           std::sqrt(Gamma) * moments.mean_inv;
  return base + linear + sqrt_term;
}

TraceComparison compare_trace(const TrainingTrace& trace, const BoundReport& report) {
  if (trace.rounds.empty()) throw std::invalid_argument("compare_trace: empty trace");
  TraceComparison cmp;
  cmp.measured_min_grad_norm = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.rounds)
    cmp.measured_min_grad_norm = std::min(cmp.measured_min_grad_norm, r.true_grad_norm);
  cmp.bound_total = report.total;
  cmp.ratio = cmp.measured_min_grad_norm / report.total;
  return cmp;
}

SweepStats mc_min_grad_stats(const HyperParams& params, const TrainOptions& base_options,
                             const std::function<LossModel(std::mt19937_64&)>& loss_factory,
                             int n_seeds) {
  return stats_from(per_seed_measure(params, base_options, loss_factory, n_seeds, false));
}

SweepStats mc_final_loss_stats(const HyperParams& params, const TrainOptions& base_options,
                               const std::function<LossModel(std::mt19937_64&)>& loss_factory,
                               int n_seeds) {
  return stats_from(per_seed_measure(params, base_options, loss_factory, n_seeds, true));
}

}  // namespace dpwfl
