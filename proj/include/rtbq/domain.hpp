#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtbq/money.hpp"

namespace rtbq {

using CampaignId = std::int32_t;
using PublisherId = std::int32_t;

struct Campaign {
  CampaignId id = 0;
  Micros target_cpi = 0;  // advertiser's money-per-install goal
  Micros budget = 0;
  double pcvr = 0.0;  // estimated P(install | click); prices are quoted off this
  std::int64_t baseline_installs = 0;  // historical installs, feeds the activity filter
  // realized P(install | click); negative means "the estimate is exact"
  double conversion_rate = -1.0;

  double realized_cvr() const { return conversion_rate < 0.0 ? pcvr : conversion_rate; }

  void validate() const {
    if (target_cpi <= 0) throw std::invalid_argument("campaign: target_cpi must be > 0");
    if (budget <= 0) throw std::invalid_argument("campaign: budget must be > 0");
    if (!(pcvr >= 0.0 && pcvr <= 1.0)) throw std::invalid_argument("campaign: pcvr outside [0,1]");
    if (baseline_installs < 0) throw std::invalid_argument("campaign: negative baseline_installs");
    if (conversion_rate >= 0.0 && conversion_rate > 1.0)
      throw std::invalid_argument("campaign: conversion_rate outside [0,1]");
  }
};

struct Publisher {
  PublisherId id = 0;
  Micros floor_price = 0;  // per impression
  double landscape_a = 1.0;
  double request_rate = 0.0;  // expected opportunities per minute
  std::map<CampaignId, double> pctr;  // P(click | impression), keyed by campaign id

  void validate() const {
    if (floor_price < 0) throw std::invalid_argument("publisher: negative floor_price");
    if (!(landscape_a > 0.0)) throw std::invalid_argument("publisher: landscape_a must be > 0");
    if (!(request_rate >= 0.0)) throw std::invalid_argument("publisher: negative request_rate");
    for (const auto& [cid, p] : pctr) {
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("publisher: pctr outside [0,1] for campaign " + std::to_string(cid));
    }
  }
};

// The event stream is the single mutation path into LedgerState: replaying a
// log reproduces every aggregate exactly.
enum class EventType : std::uint8_t {
  kAuction = 0,     // one bid submitted for one opportunity; aux = won flag
  kImpression = 1,  // amount = clearing price paid to the exchange
  kClick = 2,       // amount = cost charged to the advertiser (post budget cap)
  kInstall = 3,     // delivered install notification; aux = click minute
};

struct Event {
  std::int32_t minute = 0;
  EventType type = EventType::kAuction;
  std::int32_t publisher = -1;
  std::int32_t campaign = -1;
  Micros amount = 0;
  std::int32_t aux = 0;

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

struct PendingInstall {
  std::int32_t campaign = -1;
  std::int32_t publisher = -1;
  std::int32_t click_time = 0;   // minutes
  std::int32_t notify_time = 0;  // minutes, >= click_time
};

// Running aggregates at publisher and campaign granularity. All money fields
// are integer micros and mutate only through apply(), so the ledger is a pure
// fold over the event log.
class LedgerState {
 public:
  LedgerState(std::size_t n_publishers, std::vector<Micros> campaign_budgets,
              std::int32_t horizon_minutes)
      : spend_(n_publishers, 0),
        pub_cost_(n_publishers, 0),
        budgets_(std::move(campaign_budgets)),
        camp_cost_(budgets_.size(), 0),
        installs_(budgets_.size(), 0),
        clicks_(budgets_.size(), 0),
        horizon_(horizon_minutes) {}

  void apply(const Event& e) {
    switch (e.type) {
      case EventType::kAuction:
        break;  // no money moves at auction time
      case EventType::kImpression:
        check_pub(e.publisher);
        spend_.at(e.publisher) += e.amount;
        total_spend_ += e.amount;
        break;
      case EventType::kClick: {
        check_pub(e.publisher);
        check_camp(e.campaign);
        if (camp_cost_[e.campaign] + e.amount > budgets_[e.campaign])
          throw std::logic_error("ledger: click charge exceeds campaign budget");
        camp_cost_[e.campaign] += e.amount;
        pub_cost_[e.publisher] += e.amount;
        clicks_[e.campaign] += 1;
        total_cost_ += e.amount;
        break;
      }
      case EventType::kInstall:
        check_camp(e.campaign);
        installs_[e.campaign] += 1;
        break;
    }
  }

  void advance_clock(std::int32_t minute) {
    if (minute < clock_) throw std::logic_error("ledger: clock moved backwards");
    if (minute > horizon_) throw std::logic_error("ledger: clock beyond horizon");
    clock_ = minute;
  }

  std::size_t n_publishers() const { return spend_.size(); }
  std::size_t n_campaigns() const { return budgets_.size(); }
  std::int32_t clock() const { return clock_; }
  std::int32_t horizon() const { return horizon_; }

  Micros spend(std::size_t j) const { return spend_.at(j); }
  Micros publisher_cost(std::size_t j) const { return pub_cost_.at(j); }
  Micros campaign_cost(std::size_t i) const { return camp_cost_.at(i); }
  Micros budget(std::size_t i) const { return budgets_.at(i); }
  Micros remaining_budget(std::size_t i) const { return budgets_.at(i) - camp_cost_.at(i); }
  std::int64_t installs(std::size_t i) const { return installs_.at(i); }
  std::int64_t clicks(std::size_t i) const { return clicks_.at(i); }

  Micros total_spend() const { return total_spend_; }
  Micros total_cost() const { return total_cost_; }
  Micros total_budget() const {
    Micros t = 0;
    for (Micros b : budgets_) t += b;
    return t;
  }
  Micros total_remaining_budget() const {
    Micros t = 0;
    for (std::size_t i = 0; i < budgets_.size(); ++i) t += budgets_[i] - camp_cost_[i];
    return t;
  }

  std::int64_t total_installs() const {
    std::int64_t t = 0;
    for (auto v : installs_) t += v;
    return t;
  }
  std::int64_t total_clicks() const {
    std::int64_t t = 0;
    for (auto v : clicks_) t += v;
    return t;
  }

 private:
  void check_pub(std::int32_t j) const {
    if (j < 0 || static_cast<std::size_t>(j) >= spend_.size())
      throw std::out_of_range("ledger: publisher index");
  }
  void check_camp(std::int32_t i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= budgets_.size())
      throw std::out_of_range("ledger: campaign index");
  }

  std::vector<Micros> spend_;     // paid to the exchange, per publisher
  std::vector<Micros> pub_cost_;  // charged to advertisers, per publisher
  std::vector<Micros> budgets_;
  std::vector<Micros> camp_cost_;
  std::vector<std::int64_t> installs_;
  std::vector<std::int64_t> clicks_;
  Micros total_spend_ = 0;
  Micros total_cost_ = 0;
  std::int32_t clock_ = 0;
  std::int32_t horizon_ = 0;
};

// Relative profit made on publisher j: (cost_j - spend_j) / total spend.
// Undefined until any money has been spent; callers map that to the neutral
// state bin.
inline std::optional<double> margin(const LedgerState& ledger, std::size_t j) {
  if (ledger.total_spend() <= 0) return std::nullopt;
  const Micros num = ledger.publisher_cost(j) - ledger.spend(j);
  return static_cast<double>(num) / static_cast<double>(ledger.total_spend());
}

// Actual cost-per-install over the target. Undefined until the first install
// is observed. Computed as one division so scaling cost and target together
// cancels exactly.
inline std::optional<double> efficiency(const LedgerState& ledger, const Campaign& campaign,
                                        std::size_t i) {
  const std::int64_t installs = ledger.installs(i);
  if (installs <= 0) return std::nullopt;
  return static_cast<double>(ledger.campaign_cost(i)) /
         (static_cast<double>(installs) * static_cast<double>(campaign.target_cpi));
}

inline bool is_happy(double eta, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("is_happy: epsilon must be > 0");
  return eta < 1.0 + epsilon;
}

// Efficiency with the undefined case resolved: a campaign that spent without
// converting is maximally inefficient, an untouched one is neutral.
inline double effective_eta(const LedgerState& ledger, const Campaign& campaign, std::size_t i,
                            double eta_upper) {
  if (const auto eta = efficiency(ledger, campaign, i)) return *eta;
  return ledger.campaign_cost(i) > 0 ? eta_upper : 0.0;
}

inline bool campaign_happy(const LedgerState& ledger, const Campaign& campaign, std::size_t i,
                           double epsilon, double eta_upper) {
  return is_happy(effective_eta(ledger, campaign, i, eta_upper), epsilon);
}

}  // namespace rtbq
