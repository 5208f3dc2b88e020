#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rtbq/domain.hpp"
#include "rtbq/quantizer.hpp"

namespace rtbq {

// Finite compound-action space: one multiplier step for the exchange bid
// (through f_m) and one for the advertiser cost (through f_eta, scaled by
// leftover budget). Both grids must contain 0 so "leave prices alone" is an
// expressible action.
struct ActionSpace {
  std::vector<double> f_m_values;
  std::vector<double> f_eta_values;
  double kappa_bid = 0.2;
  double kappa_beta = 0.5;
  double kappa_eta = 0.2;

  int n_bid() const { return static_cast<int>(f_m_values.size()); }
  int n_cost() const { return static_cast<int>(f_eta_values.size()); }
  int n_actions() const { return n_bid() * n_cost(); }

  int zero_m_index() const { return index_of_zero(f_m_values, "f_m"); }
  int zero_eta_index() const { return index_of_zero(f_eta_values, "f_eta"); }

  void validate() const {
    if (f_m_values.empty() || f_eta_values.empty())
      throw std::invalid_argument("action space: empty grid");
    if (!std::is_sorted(f_m_values.begin(), f_m_values.end()) ||
        !std::is_sorted(f_eta_values.begin(), f_eta_values.end()))
      throw std::invalid_argument("action space: grids must be sorted ascending");
    index_of_zero(f_m_values, "f_m");
    index_of_zero(f_eta_values, "f_eta");
  }

  // 8 bid steps and 14 cost steps over [-1, 1]: a uniform odd grid plus one
  // extra negative point, so 0 stays on the grid.
  static ActionSpace production_default() {
    ActionSpace sp;
    for (int k = -3; k <= 3; ++k) sp.f_m_values.push_back(k / 3.0);
    sp.f_m_values.push_back(-0.15);
    for (int k = -6; k <= 6; ++k) sp.f_eta_values.push_back(k / 6.0);
    sp.f_eta_values.push_back(-1.0 / 12.0);
    std::sort(sp.f_m_values.begin(), sp.f_m_values.end());
    std::sort(sp.f_eta_values.begin(), sp.f_eta_values.end());
    return sp;
  }

 private:
  static int index_of_zero(const std::vector<double>& grid, const char* name) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] == 0.0) return static_cast<int>(k);
    }
    throw std::invalid_argument(std::string("action space: ") + name + " grid must contain 0");
  }
};

struct ActionIndex {
  int m_idx = 0;
  int eta_idx = 0;

  int flat(const ActionSpace& sp) const { return m_idx * sp.n_cost() + eta_idx; }

  static ActionIndex from_flat(int flat, const ActionSpace& sp) {
    if (flat < 0 || flat >= sp.n_actions()) throw std::out_of_range("action: flat index");
    return ActionIndex{flat / sp.n_cost(), flat % sp.n_cost()};
  }

  bool operator==(const ActionIndex&) const = default;
};

// Prices in currency units: bid per impression, cost per click.
struct PriceQuote {
  double bid = 0.0;
  double cost = 0.0;
};

// Pre-update prices: bid = expected value of an impression, cost = expected
// value of a click to the advertiser.
inline PriceQuote base_quote(const Campaign& campaign, const Publisher& publisher) {
  const auto it = publisher.pctr.find(campaign.id);
  if (it == publisher.pctr.end())
    throw std::out_of_range("base_quote: no pctr for campaign " + std::to_string(campaign.id));
  const double cpi = to_units(campaign.target_cpi);
  PriceQuote q;
  q.cost = cpi * campaign.pcvr;
  q.bid = q.cost * it->second;
  return q;
}

struct ApplyActionStats {
  std::int64_t negative_bids_floored = 0;
  std::int64_t negative_costs_floored = 0;
};

// One additive multiplier step on top of a quote. beta_hat is the bin
// representative of the leftover budget fraction; more leftover budget makes
// the cost move larger. Results are floored at zero; a pre-floor negative
// marks a degenerate parameterization and is counted when stats are passed.
inline PriceQuote apply_action(const PriceQuote& quote, ActionIndex action,
                               const ActionSpace& space, double beta_hat,
                               ApplyActionStats* stats = nullptr) {
  if (!(beta_hat >= 0.0 && beta_hat <= 1.0))
    throw std::domain_error("apply_action: beta_hat outside [0,1]");
  const double f_m = space.f_m_values.at(action.m_idx);
  const double f_eta = space.f_eta_values.at(action.eta_idx);
  PriceQuote out;
  out.bid = quote.bid * (1.0 + space.kappa_bid * f_m);
  out.cost = quote.cost * (1.0 + (1.0 + space.kappa_beta * beta_hat) * space.kappa_eta * f_eta);
  if (std::isnan(out.bid) || std::isnan(out.cost))
    throw std::invalid_argument("apply_action: NaN price");
  if (out.bid < 0.0) {
    out.bid = 0.0;
    if (stats) ++stats->negative_bids_floored;
  }
  if (out.cost < 0.0) {
    out.cost = 0.0;
    if (stats) ++stats->negative_costs_floored;
  }
  return out;
}

// Hand-written sanity policy: push the bid with the margin and the cost
// against bad efficiency. Neutral margin leaves the bid alone; with good
// efficiency the cost is raised only while the margin is negative.
inline ActionIndex intuitive_action(const StateIndex& state, const ActionSpace& space,
                                    const QuantizerConfig& cfg) {
  const bool margin_negative = state.margin_bin < cfg.l_m;
  const bool margin_positive = state.margin_bin > cfg.l_m;
  const bool eta_bad = state.eta_bin >= cfg.l_eta;

  ActionIndex a;
  if (margin_negative) {
    a.m_idx = 0;  // most negative bid step
  } else if (margin_positive) {
    a.m_idx = space.n_bid() - 1;
  } else {
    a.m_idx = space.zero_m_index();
  }

  if (eta_bad) {
    a.eta_idx = 0;  // most negative cost step
  } else if (margin_negative) {
    a.eta_idx = space.n_cost() - 1;
  } else {
    a.eta_idx = space.zero_eta_index();
  }
  return a;
}

}  // namespace rtbq
