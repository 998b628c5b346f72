#include "dpwfl/simulator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "dpwfl/rng.hpp"

namespace dpwfl {

namespace {

// Partial Fisher-Yates: uniform k-subset of {0..n-1}, returned ascending.
std::vector<int> uniform_subset(std::mt19937_64& rng, int n, int k) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double update_divisor(const HyperParams& params, Normalization normalization) {
  double divisor = params.p * params.q * params.n;
  if (normalization == Normalization::SampleMean) divisor *= params.dataset_size;
  return divisor;
}

}  // namespace

std::vector<int> select_devices(std::mt19937_64& rng, const HyperParams& params) {
  params.validate();
  return uniform_subset(rng, params.n, params.active_count());
}

std::vector<int> sample_batch(std::mt19937_64& rng, const HyperParams& params) {
  params.validate();
  return uniform_subset(rng, params.dataset_size, params.batch_count());
}

std::pair<ModelState, RoundRecord> run_round(const ModelState& state, const HyperParams& params,
                                             const LossModel& loss, const ChannelRound& channel,
                                             const std::vector<int>& active,
                                             const std::vector<std::vector<int>>& batches,
                                             std::mt19937_64& noise_rng,
                                             Normalization normalization,
                                             const Projection& projection) {
  if (state.theta.size() != loss.dim() || loss.dim() != params.dim)
    throw std::invalid_argument("run_round: model / loss dimension mismatch");
  if (batches.size() != active.size())
    throw std::invalid_argument("run_round: batches must align with the active set");
  if (!(channel.gamma > 0.0)) throw std::invalid_argument("run_round: channel gamma must be positive");

  RoundRecord record;
  record.active = active;
  record.batches = batches;
  record.gamma = channel.gamma;
  record.loss = loss.loss(state.theta);
  record.true_grad_norm = loss.gradient(state.theta).norm();

  Eigen::VectorXd clipped_sum = Eigen::VectorXd::Zero(params.dim);
  for (std::size_t k = 0; k < active.size(); ++k) {
    for (int s : batches[k]) {
      const Eigen::VectorXd g = loss.sample_gradient(state.theta, active[k], s);
      if (g.norm() > params.c) ++record.clipped_count;
      clipped_sum += clip(g, params.c);
    }
  }

  const Eigen::VectorXd zeta = channel_noise(noise_rng, params.dim, channel.noise_sigma);
  const double divisor = update_divisor(params, normalization);
  const Eigen::VectorXd estimate = (clipped_sum + zeta / channel.gamma) / divisor;
  record.grad_estimate_norm = estimate.norm();

  ModelState next;
  next.theta = state.theta - params.eta * estimate;
  next.round = state.round + 1;

  if (projection.enabled) {
    const Eigen::VectorXd offset = next.theta - projection.center;
    const double radius = projection.diameter / 2.0;
    const double dist = offset.norm();
    if (dist > radius) next.theta = projection.center + offset * (radius / dist);
  }
  return {std::move(next), std::move(record)};
}

std::pair<TrainingTrace, PrivacyLedger> run_training(const HyperParams& params,
                                                     const LossModel& loss,
                                                     const TrainOptions& options) {
  params.validate();
  options.policy.validate();
  options.fading.validate();
  if (options.rounds < 1) throw std::invalid_argument("run_training: T >= 1 required");
  if (loss.dim() != params.dim)
    throw std::invalid_argument("run_training: loss dimension does not match params.dim");

  Eigen::VectorXd theta0 = options.theta0.size() ? options.theta0
                                                 : Eigen::VectorXd::Zero(params.dim);
  if (theta0.size() != params.dim)
    throw std::invalid_argument("run_training: theta0 dimension does not match params.dim");

  Projection projection;
  if (options.project) projection = {true, theta0, params.D};

  const RngStream streams(options.seed);
  ModelState state{theta0, 0};
  TrainingTrace trace;
  trace.theta0 = theta0;
  trace.rounds.reserve(static_cast<size_t>(options.rounds));
  PrivacyLedger ledger;

  for (long t = 0; t < options.rounds; ++t) {
    const auto round_index = static_cast<std::uint64_t>(t);
    auto selection_rng = streams.substream(round_index, StreamPurpose::DeviceSelection);
    const std::vector<int> active = select_devices(selection_rng, params);

    std::vector<std::vector<int>> batches;
    batches.reserve(active.size());
    for (int device : active) {
      auto batch_rng = streams.substream(round_index, StreamPurpose::BatchSampling,
                                         static_cast<std::uint64_t>(device));
      batches.push_back(sample_batch(batch_rng, params));
    }

    auto fading_rng = streams.substream(round_index, StreamPurpose::FadingGains);
    const ChannelRound channel =
        draw_round(fading_rng, params, active, options.policy, options.fading);

    auto noise_rng = streams.substream(round_index, StreamPurpose::ChannelNoise);
    auto [next, record] = run_round(state, params, loss, channel, active, batches, noise_rng,
                                    options.normalization, projection);
    state = std::move(next);
    trace.rounds.push_back(std::move(record));
    trace.thetas.push_back(state.theta);
    ledger.append(channel.gamma);
  }

  trace.theta_final = state.theta;
  return {std::move(trace), std::move(ledger)};
}

}  // namespace dpwfl
