#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "rtbq/simulator.hpp"

namespace rtbq {

// Margin-only feedback baseline: a PI controller per publisher scales the
// exchange bid toward a margin setpoint and never touches advertiser costs.
struct PiConfig {
  double kp = 1.0;
  double ki = 0.1;
  double margin_target = 0.05;  // setpoint; paired with the neutral-bin half-width
  double integral_clamp = 2.0;
  double multiplier_lo = 0.5;
  double multiplier_hi = 2.0;
  int update_epoch_minutes = 60;

  void validate() const {
    if (!(integral_clamp >= 0.0)) throw std::invalid_argument("pi: negative integral clamp");
    if (!(multiplier_lo > 0.0 && multiplier_hi >= multiplier_lo))
      throw std::invalid_argument("pi: bad multiplier bounds");
    if (update_epoch_minutes <= 0) throw std::invalid_argument("pi: bad update epoch");
  }
};

struct PiState {
  double integral = 0.0;
};

// One controller step: accumulate the clamped error integral and return the
// bid multiplier for the next epoch.
inline double pi_update(PiState& state, double m_observed, const PiConfig& cfg) {
  if (!std::isfinite(m_observed)) throw std::invalid_argument("pi_update: non-finite margin");
  const double e = cfg.margin_target - m_observed;
  state.integral = std::clamp(state.integral + e, -cfg.integral_clamp, cfg.integral_clamp);
  const double raw = 1.0 + cfg.kp * e + cfg.ki * state.integral;
  return std::clamp(raw, cfg.multiplier_lo, cfg.multiplier_hi);
}

// Applies the per-publisher multiplier to every pair's base bid each epoch;
// costs stay at base.
class PiBidder : public Bidder {
 public:
  explicit PiBidder(const PiConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  void on_epoch(Simulation& sim) override {
    if (states_.empty()) states_.resize(sim.n_publishers());
    for (std::size_t j = 0; j < sim.n_publishers(); ++j) {
      const double mult = pi_update(states_[j], sim.margin_now(j), cfg_);
      for (std::size_t i = 0; i < sim.n_campaigns(); ++i) {
        PriceQuote q = sim.base_quote_of(j, i);
        q.bid *= mult;
        sim.set_quote(j, i, q);
      }
    }
  }

  const std::vector<PiState>& states() const { return states_; }

 private:
  PiConfig cfg_;
  std::vector<PiState> states_;
};

}  // namespace rtbq
