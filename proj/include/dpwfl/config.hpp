#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpwfl/channel.hpp"
#include "dpwfl/hyperparams.hpp"
#include "dpwfl/losses.hpp"
#include "dpwfl/simulator.hpp"

namespace dpwfl {

// Experiment configuration: flat `key = value` lines, '#' comments, unknown
// keys rejected. Up to two sweep axes (`sweep.<field> = v1,v2,...`) expand
// into a row-major cross product.
struct ExperimentConfig {
  HyperParams params{};
  long T = 1000;
  std::uint64_t seed = 1;
  double alpha = 2.0;  // RDP order used in reports

  GammaPolicy policy{};
  FadingSpec fading{FadingSpec::Kind::Constant, 1.0, 1.0, 0.1};

  LossModel::Kind loss = LossModel::Kind::Quadratic;
  QuadraticSpread spread{};
  double feature_radius = 2.0;
  double feature_scale = 1.0;

  Normalization normalization = Normalization::PaperSum;
  bool project = false;
  double theta0_value = 1.0;  // every coordinate of the initial model
  int mc_reps = 20;

  std::vector<double> eps_targets;  // tradeoff subcommand; default grid if empty

  // sweep axes in declaration order, at most two
  std::vector<std::pair<std::string, std::vector<double>>> sweeps;
};

// Named starting points. "default" carries the standard experiment
// parameters; "fig1a" sweeps the domain diameter, "fig1b" sweeps both
// sampling rates.
ExperimentConfig preset_config(const std::string& name);

// Parse a config file on top of the given base; throws std::invalid_argument
// with the offending key in the message.
ExperimentConfig parse_config_file(const std::string& path, const ExperimentConfig& base);

// Same, from in-memory text (used by tests).
ExperimentConfig parse_config_text(const std::string& text, const ExperimentConfig& base);

// Canonical `key = value` listing, one per line, echoed as '#' comments into
// every artifact for provenance.
std::string serialize_config(const ExperimentConfig& config);

// One sweep point: the field values to apply, in axis order.
struct SweepPoint {
  std::vector<std::pair<std::string, double>> assignments;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

// Apply a sweep assignment to a copy of the config. Throws on fields that
// are not sweepable scalars.
ExperimentConfig apply_sweep(const ExperimentConfig& config, const SweepPoint& point);

}  // namespace dpwfl
