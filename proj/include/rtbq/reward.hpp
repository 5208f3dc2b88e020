#pragma once

#include <stdexcept>

#include "rtbq/money.hpp"

namespace rtbq {

struct RewardConfig {
  double lambda = 0.5;  // 0 = margin only, 1 = efficiency only

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("reward: lambda outside [0,1]");
  }
};

// Everything the reward needs about one (publisher, campaign) pair across one
// action interval. Efficiency values arrive with the undefined case already
// resolved.
struct RewardSnapshot {
  double m_prev = 0.0;
  double m_now = 0.0;
  double eta_prev = 0.0;
  double eta_now = 0.0;
  Micros budget_i_remaining = 0;
  Micros total_budget_remaining = 0;
  Micros spend_j = 0;
  Micros total_spend = 0;
};

struct AttributionWeights {
  double kappa_rm = 0.0;   // campaign's share of the unutilized budget
  double kappa_reta = 0.0;  // publisher's share of the total spend
};

// A pair's action can only be credited approximately: margin changes are
// attributed by leftover-budget share, efficiency changes by spend share.
// With no leftover budget or no spend there is nothing to attribute.
inline AttributionWeights attribution_weights(const RewardSnapshot& snap) {
  AttributionWeights w;
  if (snap.total_budget_remaining > 0) {
    w.kappa_rm = static_cast<double>(snap.budget_i_remaining) /
                 static_cast<double>(snap.total_budget_remaining);
  }
  if (snap.total_spend > 0) {
    w.kappa_reta =
        static_cast<double>(snap.spend_j) / static_cast<double>(snap.total_spend);
  }
  return w;
}

// Intermediate reward: weighted margin increase plus weighted efficiency
// decrease. Nonzero whenever the underlying aggregates moved, even if the
// quantized state did not, which is what lets delayed install feedback reach
// the learner between state transitions.
inline double reward(const RewardSnapshot& snap, const RewardConfig& cfg) {
  cfg.validate();
  const AttributionWeights w = attribution_weights(snap);
  return (1.0 - cfg.lambda) * w.kappa_rm * (snap.m_now - snap.m_prev) +
         cfg.lambda * w.kappa_reta * (snap.eta_prev - snap.eta_now);
}

}  // namespace rtbq
