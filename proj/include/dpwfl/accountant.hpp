#pragma once

#include <span>

#include "dpwfl/hyperparams.hpp"
#include "dpwfl/ledger.hpp"

namespace dpwfl {

// Privacy accounting for the over-the-air FedAvg protocol. All functions are
// pure: the gamma schedule comes in through the ledger, so a recorded run can
// be re-accounted offline and from any number of threads.
//
// The per-round RDP mass accumulates as sum_t gamma_t^2 but is capped by the
// saturation term Phi once the bounded parameter domain dominates; past the
// crossover round the privacy loss is constant in T.

// Phi = ( gamma * (1 + (1+eta*L)*sqrt(p*q)*D*n / (2*eta*c)) )^2,
// evaluated at the final round's gamma. Homogeneous of degree 2 in gamma.
double saturation_phi(const HyperParams& params, double gamma_last);

// Gamma = min{ sum_t gamma_t^2, Phi(gamma_last) }. Zero for an all-zero
// schedule (nothing transmitted); see dp_summary for the status flag.
double capped_gamma_sq(const HyperParams& params, std::span<const double> gammas);
double capped_gamma_sq(const HyperParams& params, const PrivacyLedger& ledger);

// RDP loss of order alpha > 1 after the ledger's rounds:
//   eps = (2*alpha*p*q*c^2 / sigma^2) * Gamma.
double rdp_epsilon(const HyperParams& params, const PrivacyLedger& ledger, double alpha);

// (alpha,eps)-RDP implies (eps + ln(1/delta)/(alpha-1), delta)-DP.
// Natural logarithm throughout.
double rdp_to_dp(double eps_rdp, double alpha, double delta);

// Closed-form DP loss: with K = 2*p*q*c^2*Gamma/sigma^2,
//   eps = K + 2*sqrt(K*ln(1/delta)).
// Equals the RDP->DP conversion minimized over alpha.
double dp_epsilon(const HyperParams& params, const PrivacyLedger& ledger);

// The order minimizing the conversion: alpha* = 1 + sqrt(ln(1/delta)/K).
// Throws std::domain_error when Gamma = 0 (delta-only regime; every alpha > 1
// yields eps_RDP = 0 and there is no finite optimum).
double optimal_alpha(const HyperParams& params, const PrivacyLedger& ledger);

// Naive RDP composition: the accumulating branch alone, never capped by Phi.
// Grows without bound in T.
double baseline_composition_epsilon(const HyperParams& params, const PrivacyLedger& ledger,
                                    double alpha);

// DP conversion of the naive branch (same closed form with Gamma replaced by
// the uncapped squared sum), for curve comparisons.
double baseline_dp_epsilon(const HyperParams& params, const PrivacyLedger& ledger);

// First T at which the min saturates under a constant gamma schedule:
// ceil(Phi / gamma^2). The RDP loss is constant in T from there on.
long crossover_round(const HyperParams& params, double gamma_const);

// True if the schedule ever decreases. Phi is evaluated at the last gamma,
// so emitted artifacts flag such schedules.
bool non_monotone_gamma(std::span<const double> gammas);

struct DpSummary {
  double epsilon = 0.0;
  double Gamma = 0.0;      // min{sum gamma^2, Phi}
  double K = 0.0;          // 2*p*q*c^2*Gamma/sigma^2
  bool saturated = false;  // Phi branch active
  bool no_signal = false;  // Gamma == 0: nothing transmitted
};

DpSummary dp_summary(const HyperParams& params, const PrivacyLedger& ledger);

}  // namespace dpwfl
