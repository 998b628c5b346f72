#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpwfl {

// Protocol and privacy scalars shared by every module.
//
//   n             number of devices
//   p             device sampling rate in (0,1]
//   q             mini-batch sampling rate in (0,1]
//   c             per-sample gradient clipping norm
//   D             diameter of the model parameter domain
//   L             smoothness constant of the sample loss
//   eta           server step size
//   sigma         channel noise standard deviation per coordinate
//                 (sigma = 0 is the noiseless verification mode)
//   delta         DP failure probability
//   dataset_size  samples held by each device
//   dim           model dimension
struct HyperParams {
  int n = 10;
  double p = 1.0;
  double q = 1.0;
  double c = 2.0;
  double D = 0.5;
  double L = 1.0;
  double eta = 0.1;
  double sigma = 10.0;
  double delta = 1e-5;
  int dataset_size = 8;
  int dim = 2;

  // Devices selected per round: round(p*n), floored at one.
  int active_count() const {
    return static_cast<int>(std::max(1L, std::lround(p * n)));
  }

  // Samples drawn per device per round: round(q*|D_i|), floored at one.
  int batch_count() const {
    return static_cast<int>(std::max(1L, std::lround(q * dataset_size)));
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("HyperParams: " + msg); };
    if (n < 1) fail("n must be a positive integer");
    if (!(p > 0.0) || p > 1.0) fail("p must lie in (0,1]");
    if (!(q > 0.0) || q > 1.0) fail("q must lie in (0,1]");
    if (!(c > 0.0)) fail("c must be positive");
    if (!(D > 0.0)) fail("D must be positive");
    if (!(L > 0.0)) fail("L must be positive");
    if (!(eta > 0.0)) fail("eta must be positive");
    if (!(sigma >= 0.0) || std::isnan(sigma)) fail("sigma must be non-negative");
    if (!(delta > 0.0) || !(delta < 1.0)) fail("delta must lie in (0,1)");
    if (dataset_size < 1) fail("dataset_size must be a positive integer");
    if (dim < 1) fail("dim must be a positive integer");
    if (std::lround(p * n) < 1) fail("round(p*n) must be at least 1");
    if (std::lround(q * dataset_size) < 1) fail("round(q*dataset_size) must be at least 1");
  }
};

}  // namespace dpwfl
