#include "dpwfl/accountant.hpp"

#include <cmath>
#include <stdexcept>

namespace dpwfl {

namespace {

// Phi for gamma >= 0; the public entry point rejects gamma <= 0 but the
// accumulated-mass cap needs the gamma = 0 limit (Phi -> 0, no signal).
double phi_at(const HyperParams& params, double gamma) {
  const double blowup =
      (1.0 + params.eta * params.L) * std::sqrt(params.p * params.q) * params.D * params.n /
      (2.0 * params.eta * params.c);
  const double root = gamma * (1.0 + blowup);
  return root * root;
}

double rdp_prefactor(const HyperParams& params, double alpha) {
  return 2.0 * alpha * params.p * params.q * params.c * params.c / (params.sigma * params.sigma);
}

}  // namespace

double saturation_phi(const HyperParams& params, double gamma_last) {
  params.validate();
  if (!(gamma_last > 0.0)) throw std::domain_error("saturation_phi: gamma_last must be positive");
  return phi_at(params, gamma_last);
}

double capped_gamma_sq(const HyperParams& params, std::span<const double> gammas) {
  params.validate();
  if (gammas.empty()) throw std::invalid_argument("capped_gamma_sq: empty gamma schedule");
  double sq_sum = 0.0;
  for (double g : gammas) sq_sum += g * g;
  return std::min(sq_sum, phi_at(params, gammas.back()));
}

double capped_gamma_sq(const HyperParams& params, const PrivacyLedger& ledger) {
  params.validate();
  if (ledger.empty()) throw std::invalid_argument("capped_gamma_sq: empty ledger");
  return std::min(ledger.gamma_sq_sum(), phi_at(params, ledger.last_gamma()));
}

double rdp_epsilon(const HyperParams& params, const PrivacyLedger& ledger, double alpha) {
  if (!(alpha > 1.0)) throw std::domain_error("rdp_epsilon: alpha must be > 1");
  return rdp_prefactor(params, alpha) * capped_gamma_sq(params, ledger);
}

double rdp_to_dp(double eps_rdp, double alpha, double delta) {
  if (!(alpha > 1.0)) throw std::domain_error("rdp_to_dp: alpha must be > 1");
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::domain_error("rdp_to_dp: delta must lie in (0,1)");
  if (!(eps_rdp >= 0.0)) throw std::domain_error("rdp_to_dp: eps_rdp must be non-negative");
  return eps_rdp + std::log(1.0 / delta) / (alpha - 1.0);
}

double dp_epsilon(const HyperParams& params, const PrivacyLedger& ledger) {
  const double K = rdp_prefactor(params, 1.0) * capped_gamma_sq(params, ledger);
  return K + 2.0 * std::sqrt(K * std::log(1.0 / params.delta));
}

double optimal_alpha(const HyperParams& params, const PrivacyLedger& ledger) {
  const double K = rdp_prefactor(params, 1.0) * capped_gamma_sq(params, ledger);
  if (K <= 0.0)
    throw std::domain_error("optimal_alpha: Gamma = 0, no signal transmitted (delta-only regime)");
  return 1.0 + std::sqrt(std::log(1.0 / params.delta) / K);
}

double baseline_composition_epsilon(const HyperParams& params, const PrivacyLedger& ledger,
                                    double alpha) {
  if (!(alpha > 1.0)) throw std::domain_error("baseline_composition_epsilon: alpha must be > 1");
  params.validate();
  if (ledger.empty()) throw std::invalid_argument("baseline_composition_epsilon: empty ledger");
  return rdp_prefactor(params, alpha) * ledger.gamma_sq_sum();
}

double baseline_dp_epsilon(const HyperParams& params, const PrivacyLedger& ledger) {
  params.validate();
  if (ledger.empty()) throw std::invalid_argument("baseline_dp_epsilon: empty ledger");
  const double K = rdp_prefactor(params, 1.0) * ledger.gamma_sq_sum();
  return K + 2.0 * std::sqrt(K * std::log(1.0 / params.delta));
}

long crossover_round(const HyperParams& params, double gamma_const) {
  params.validate();
  if (!(gamma_const > 0.0))
    throw std::invalid_argument("crossover_round: gamma_const must be positive");
  // Phi / gamma^2 is scale free in gamma, so the crossover is too.
  return static_cast<long>(std::ceil(phi_at(params, gamma_const) / (gamma_const * gamma_const)));
}

bool non_monotone_gamma(std::span<const double> gammas) {
  for (std::size_t t = 1; t < gammas.size(); ++t)
    if (gammas[t] < gammas[t - 1]) return true;
  return false;
}

DpSummary dp_summary(const HyperParams& params, const PrivacyLedger& ledger) {
  DpSummary s;
  s.Gamma = capped_gamma_sq(params, ledger);
  s.K = rdp_prefactor(params, 1.0) * s.Gamma;
  s.epsilon = s.K + 2.0 * std::sqrt(s.K * std::log(1.0 / params.delta));
  s.no_signal = s.Gamma == 0.0;
  s.saturated = !s.no_signal && phi_at(params, ledger.last_gamma()) <= ledger.gamma_sq_sum();
  return s;
}

}  // namespace dpwfl
