#pragma once

#include <cmath>
#include <stdexcept>

#include "rtbq/domain.hpp"

namespace rtbq {

// Bins for the discrete state space: margin gets a neutral bin around zero
// with l_m bins on each side, efficiency gets l_eta bins below the happiness
// knee and l_eta above it, leftover budget fraction gets 2*l_b uniform bins.
struct QuantizerConfig {
  double delta_m = 0.05;  // half-width of the neutral margin bin
  int l_m = 1;
  double epsilon = 0.2;  // efficiency tolerance
  double eta_upper = 5.0;
  int l_eta = 2;
  int l_b = 2;

  int margin_bins() const { return 2 * l_m + 1; }
  int eta_bins() const { return 2 * l_eta; }
  int budget_bins() const { return 2 * l_b; }
  int n_states() const { return margin_bins() * eta_bins() * budget_bins(); }

  void validate() const {
    if (!(delta_m > 0.0)) throw std::invalid_argument("quantizer: delta_m must be > 0");
    if (l_m < 1) throw std::invalid_argument("quantizer: l_m must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("quantizer: epsilon must be > 0");
    if (!(eta_upper > 1.0 + epsilon))
      throw std::invalid_argument("quantizer: eta_upper must exceed 1 + epsilon");
    if (l_eta < 1) throw std::invalid_argument("quantizer: l_eta must be >= 1");
    if (l_b < 1) throw std::invalid_argument("quantizer: l_b must be >= 1");
  }
};

struct StateIndex {
  int margin_bin = 0;
  int eta_bin = 0;
  int budget_bin = 0;

  int flat(const QuantizerConfig& cfg) const {
    return margin_bin * (cfg.eta_bins() * cfg.budget_bins()) + eta_bin * cfg.budget_bins() +
           budget_bin;
  }

  static StateIndex from_flat(int flat, const QuantizerConfig& cfg) {
    if (flat < 0 || flat >= cfg.n_states()) throw std::out_of_range("state: flat index");
    StateIndex s;
    s.budget_bin = flat % cfg.budget_bins();
    flat /= cfg.budget_bins();
    s.eta_bin = flat % cfg.eta_bins();
    s.margin_bin = flat / cfg.eta_bins();
    return s;
  }

  bool operator==(const StateIndex&) const = default;
};

// Margin bins are half-open (lo, hi]; the neutral bin is (-delta_m, delta_m]
// and values past the outermost edges clamp into the outermost bins.
inline int quantize_margin(double m, const QuantizerConfig& cfg) {
  if (std::isnan(m)) throw std::invalid_argument("quantize_margin: NaN");
  const int side = cfg.l_m;
  for (int b = 0; b < 2 * side; ++b) {
    if (m <= cfg.delta_m * (2.0 * (b - side) + 1.0)) return b;
  }
  return 2 * side;
}

inline int quantize_margin(const std::optional<double>& m, const QuantizerConfig& cfg) {
  if (!m) return cfg.l_m;  // nothing spent yet: neutral
  return quantize_margin(*m, cfg);
}

// [0, 1+eps] and (1+eps, eta_upper] each split into l_eta bins; bins are
// half-open (lo, hi] with the lowest closed at zero, and eta above eta_upper
// clamps into the worst bin.
inline int quantize_eta(double eta, const QuantizerConfig& cfg) {
  if (!(eta >= 0.0)) throw std::invalid_argument("quantize_eta: negative or NaN efficiency");
  const double knee = 1.0 + cfg.epsilon;
  if (eta <= knee) {
    for (int k = 0; k + 1 < cfg.l_eta; ++k) {
      if (eta <= knee * (k + 1) / cfg.l_eta) return k;
    }
    return cfg.l_eta - 1;
  }
  const double width = (cfg.eta_upper - knee) / cfg.l_eta;
  for (int k = 0; k + 1 < cfg.l_eta; ++k) {
    if (eta <= knee + width * (k + 1)) return cfg.l_eta + k;
  }
  return 2 * cfg.l_eta - 1;
}

// Leftover budget fraction in [0,1]; bin k covers (k/n, (k+1)/n] with bin 0
// closed at zero. Out-of-range input means a ledger invariant was broken.
inline int quantize_budget(double beta, const QuantizerConfig& cfg) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::domain_error("quantize_budget: fraction outside [0,1]");
  const int n = cfg.budget_bins();
  for (int b = 0; b + 1 < n; ++b) {
    if (beta <= static_cast<double>(b + 1) / n) return b;
  }
  return n - 1;
}

inline double margin_bin_midpoint(int bin, const QuantizerConfig& cfg) {
  return cfg.delta_m * 2.0 * (bin - cfg.l_m);
}

inline double eta_bin_midpoint(int bin, const QuantizerConfig& cfg) {
  const double knee = 1.0 + cfg.epsilon;
  if (bin < cfg.l_eta) return knee * (bin + 0.5) / cfg.l_eta;
  const double width = (cfg.eta_upper - knee) / cfg.l_eta;
  return knee + width * (bin - cfg.l_eta + 0.5);
}

inline double budget_bin_midpoint(int bin, const QuantizerConfig& cfg) {
  return (bin + 0.5) / cfg.budget_bins();
}

// Current discrete state of a (publisher, campaign) pair.
inline StateIndex state_of(const LedgerState& ledger, const Campaign& campaign,
                           std::size_t campaign_idx, std::size_t publisher_idx,
                           const QuantizerConfig& cfg) {
  StateIndex s;
  s.margin_bin = quantize_margin(margin(ledger, publisher_idx), cfg);
  s.eta_bin = quantize_eta(effective_eta(ledger, campaign, campaign_idx, cfg.eta_upper), cfg);
  const double beta = static_cast<double>(ledger.remaining_budget(campaign_idx)) /
                      static_cast<double>(ledger.budget(campaign_idx));
  s.budget_bin = quantize_budget(beta, cfg);
  return s;
}

}  // namespace rtbq
