#pragma once

#include <string>
#include <vector>

#include "dpwfl/config.hpp"

namespace dpwfl {

// A named CSV artifact; every artifact starts with the serialized config as
// '#' comment lines, so outputs are a pure function of (config, seed).
struct Artifact {
  std::string name;
  std::string bytes;
};

// eps_DP(t) for t = 1..T per sweep point, plus the naive-composition curve.
std::vector<Artifact> run_privacy_curve(const ExperimentConfig& config);

// Full training run: trace, ledger, bound report, dataset.
std::vector<Artifact> run_simulate(const ExperimentConfig& config);

// Trade-off bound across the configured privacy targets.
std::vector<Artifact> run_tradeoff(const ExperimentConfig& config);

struct VerifyOutcome {
  std::vector<Artifact> artifacts;
  bool in_regime_failure = false;
};

// One-step bound checks: the exact p=q=1 sweep plus subsampled mixtures.
VerifyOutcome run_verify(const ExperimentConfig& config);

// Write artifacts into the directory (created if needed); returns the paths.
std::vector<std::string> write_artifacts(const std::vector<Artifact>& artifacts,
                                         const std::string& out_dir);

}  // namespace dpwfl
