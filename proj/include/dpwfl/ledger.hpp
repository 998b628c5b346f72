#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace dpwfl {

// Per-round record of the alignment factors gamma^(t). The squared sum is
// maintained incrementally so prefix accounting stays O(1) per round.
// Accounting is replayable offline: the accountant takes this record as
// input and holds no simulator state.
class PrivacyLedger {
 public:
  PrivacyLedger() = default;

  explicit PrivacyLedger(std::span<const double> gammas) {
    for (double g : gammas) append(g);
  }

  void append(double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("PrivacyLedger: gamma must be >= 0");
    gamma_seq_.push_back(gamma);
    gamma_sq_sum_ += gamma * gamma;
  }

  std::span<const double> gammas() const { return gamma_seq_; }
  double gamma_sq_sum() const { return gamma_sq_sum_; }
  std::size_t rounds() const { return gamma_seq_.size(); }
  bool empty() const { return gamma_seq_.empty(); }

  double last_gamma() const {
    if (empty()) throw std::logic_error("PrivacyLedger: empty ledger");
    return gamma_seq_.back();
  }

 private:
  std::vector<double> gamma_seq_;
  double gamma_sq_sum_ = 0.0;
};

}  // namespace dpwfl
