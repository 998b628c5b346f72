#pragma once

#include <Eigen/Core>
#include <random>
#include <utility>
#include <vector>

#include "dpwfl/channel.hpp"
#include "dpwfl/hyperparams.hpp"
#include "dpwfl/ledger.hpp"
#include "dpwfl/losses.hpp"

namespace dpwfl {

// clip_c(x) = x * min(1, c / |x|); the zero vector maps to itself (the
// rescaling branch is never taken when |x| = 0).
template <typename Derived>
Eigen::VectorXd clip(const Eigen::MatrixBase<Derived>& g, double c) {
  const double norm = g.norm();
  if (norm <= c || norm == 0.0) return g;
  return g * (c / norm);
}

// Uniform without-replacement subset of {0..n-1} of size round(p*n),
// ascending order.
std::vector<int> select_devices(std::mt19937_64& rng, const HyperParams& params);

// Uniform without-replacement subset of {0..dataset_size-1} of size
// round(q*dataset_size), ascending order.
std::vector<int> sample_batch(std::mt19937_64& rng, const HyperParams& params);

// Divisor of the server update.
//   PaperSum:   eta / (p*q*n)                -- the protocol's display form;
//               each active device contributes |B_i| clipped sample
//               gradients, so the effective averaging constant depends on
//               the dataset size.
//   SampleMean: eta / (p*q*n*dataset_size)   -- mean of clipped sample
//               gradients; the variant used for convergence experiments.
enum class Normalization { PaperSum, SampleMean };

// Optional Euclidean projection keeping iterates inside the ball of the
// given diameter around the center (the bounded-domain assumption behind
// the saturating privacy bound).
struct Projection {
  bool enabled = false;
  Eigen::VectorXd center;
  double diameter = 0.0;
};

struct ModelState {
  Eigen::VectorXd theta;
  long round = 0;
};

struct RoundRecord {
  std::vector<int> active;                 // I^(t)
  std::vector<std::vector<int>> batches;   // B_i^(t), aligned with active
  long clipped_count = 0;                  // samples whose gradient norm exceeded c
  double gamma = 0.0;
  double grad_estimate_norm = 0.0;         // normalized noisy estimate
  double true_grad_norm = 0.0;             // |grad f(theta^(t))|
  double loss = 0.0;                       // f(theta^(t))
};

struct TrainingTrace {
  std::vector<RoundRecord> rounds;
  std::vector<Eigen::VectorXd> thetas;  // theta^(t+1) after round t
  Eigen::VectorXd theta0;
  Eigen::VectorXd theta_final;
};

struct TrainOptions {
  long rounds = 100;  // T
  std::uint64_t seed = 1;
  GammaPolicy policy{};
  FadingSpec fading{};
  Normalization normalization = Normalization::PaperSum;
  bool project = false;
  Eigen::VectorXd theta0;  // empty: zeros(dim)
};

// One protocol round:
//   theta' = theta - eta/divisor * ( sum_{i in I} sum_{xi in B_i}
//            clip_c(grad l(theta; xi)) + zeta / gamma ),  zeta ~ N(0, sigma^2 I),
// with zeta drawn once at the server-equivalent point.
std::pair<ModelState, RoundRecord> run_round(
    const ModelState& state, const HyperParams& params, const LossModel& loss,
    const ChannelRound& channel, const std::vector<int>& active,
    const std::vector<std::vector<int>>& batches, std::mt19937_64& noise_rng,
    Normalization normalization = Normalization::PaperSum, const Projection& projection = {});

// Full training run: device selection, batch sampling, channel draw, update.
// Appends exactly one gamma per executed round to the returned ledger.
std::pair<TrainingTrace, PrivacyLedger> run_training(const HyperParams& params,
                                                     const LossModel& loss,
                                                     const TrainOptions& options);

}  // namespace dpwfl
