#include "dpwfl/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace dpwfl {

void FadingSpec::validate() const {
  switch (kind) {
    case Kind::Constant:
      if (!(value > 0.0)) throw std::invalid_argument("FadingSpec: constant gain must be positive");
      break;
    case Kind::Rayleigh:
      if (!(scale > 0.0)) throw std::invalid_argument("FadingSpec: Rayleigh scale must be positive");
      if (!(h_min > 0.0)) throw std::invalid_argument("FadingSpec: h_min must be positive");
      break;
  }
}

void GammaPolicy::validate() const {
  switch (kind) {
    case Kind::Constant:
      if (!(value > 0.0)) throw std::invalid_argument("GammaPolicy: constant gamma must be positive");
      break;
    case Kind::PowerLimited:
      if (!(power_budget > 0.0))
        throw std::invalid_argument("GammaPolicy: power budget must be positive");
      break;
  }
}

double truncated_rayleigh(std::mt19937_64& rng, double scale, double h_min) {
  // Survival S(x) = exp(-x^2 / (2 scale^2)); conditioning on x >= h_min gives
  // the closed-form inverse  x = scale * sqrt((h_min/scale)^2 - 2 ln(1-u)).
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const double a = h_min / scale;
  return scale * std::sqrt(a * a - 2.0 * std::log1p(-u));
}

ChannelRound draw_round(std::mt19937_64& rng, const HyperParams& params,
                        const std::vector<int>& active, const GammaPolicy& policy,
                        const FadingSpec& fading) {
  params.validate();
  policy.validate();
  fading.validate();
  if (active.empty()) throw std::invalid_argument("draw_round: active set must be non-empty");

  ChannelRound round;
  round.devices = active;
  round.noise_sigma = params.sigma;

  const auto k = static_cast<Eigen::Index>(active.size());
  round.gains.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    switch (fading.kind) {
      case FadingSpec::Kind::Constant:
        round.gains[i] = fading.value;
        break;
      case FadingSpec::Kind::Rayleigh:
        round.gains[i] = truncated_rayleigh(rng, fading.scale, fading.h_min);
        break;
    }
    if (!(round.gains[i] > 0.0))
      throw std::invalid_argument("draw_round: fading spec produced a non-positive gain");
  }

  switch (policy.kind) {
    case GammaPolicy::Kind::Constant:
      round.gamma = policy.value;
      break;
    case GammaPolicy::Kind::PowerLimited:
      round.gamma = std::sqrt(policy.power_budget) * round.gains.minCoeff() /
                    (params.c * params.batch_count());
      break;
  }

  round.scalings = round.gamma / round.gains.array();
  return round;
}

Eigen::VectorXd channel_noise(std::mt19937_64& rng, int dim, double sigma) {
  if (dim < 1) throw std::invalid_argument("channel_noise: dim must be >= 1");
  if (sigma == 0.0) return Eigen::VectorXd::Zero(dim);
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::VectorXd zeta(dim);
  for (int i = 0; i < dim; ++i) zeta[i] = normal(rng);
  return zeta;
}

}  // namespace dpwfl
