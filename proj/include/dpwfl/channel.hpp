#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

#include "dpwfl/hyperparams.hpp"

namespace dpwfl {

// Fading gain model for the block flat-fading uplink. Gains stay constant
// within a round and are truncated below at h_min so the inverse-gain
// scaling s_i = gamma / h_i stays bounded.
struct FadingSpec {
  enum class Kind { Constant, Rayleigh };
  Kind kind = Kind::Rayleigh;
  double value = 1.0;  // Constant: the gain itself
  double scale = 1.0;  // Rayleigh scale parameter
  double h_min = 0.1;  // lower truncation applied to every draw
  void validate() const;
};

// Rule for choosing the common received amplitude gamma^(t).
//   Constant:     gamma^(t) = value.
//   PowerLimited: gamma^(t) = sqrt(P) * min_i h_i / (c * |B|), which keeps
//                 every active device's transmit norm at or below sqrt(P).
struct GammaPolicy {
  enum class Kind { Constant, PowerLimited };
  Kind kind = Kind::Constant;
  double value = 1.0;
  double power_budget = 1.0;  // P
  void validate() const;
};

// One realized uplink round. Invariant: h_i * s_i = gamma for every active
// device, gamma > 0, gains >= h_min.
struct ChannelRound {
  std::vector<int> devices;  // active ids, ascending
  Eigen::VectorXd gains;     // h_i, aligned with devices
  Eigen::VectorXd scalings;  // s_i = gamma / h_i
  double gamma = 0.0;
  double noise_sigma = 0.0;
};

// Inverse-CDF draw from a Rayleigh(scale) conditioned on exceeding h_min.
double truncated_rayleigh(std::mt19937_64& rng, double scale, double h_min);

ChannelRound draw_round(std::mt19937_64& rng, const HyperParams& params,
                        const std::vector<int>& active, const GammaPolicy& policy,
                        const FadingSpec& fading);

// i.i.d. N(0, sigma^2) per coordinate; sigma = 0 yields the zero vector
// without touching the engine.
Eigen::VectorXd channel_noise(std::mt19937_64& rng, int dim, double sigma);

}  // namespace dpwfl
