#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "rtbq/action.hpp"
#include "rtbq/quantizer.hpp"
#include "rtbq/reward.hpp"
#include "rtbq/rng.hpp"

namespace rtbq {

// Click-to-install notification lag.
struct DelayModel {
  enum class Kind { kFixed, kExponential };
  Kind kind = Kind::kExponential;
  double value_minutes = 1440.0;    // fixed: the constant lag; exponential: the median
  double max_lag_minutes = 10080.0;  // samples clamp here

  void validate() const {
    if (!(value_minutes >= 0.0)) throw std::invalid_argument("delay: negative value");
    if (!(max_lag_minutes >= 0.0)) throw std::invalid_argument("delay: negative max lag");
    if (kind == Kind::kExponential && !(value_minutes > 0.0))
      throw std::invalid_argument("delay: exponential median must be > 0");
  }
};

inline double sample_delay(const DelayModel& model, double u01) {
  double d = 0.0;
  switch (model.kind) {
    case DelayModel::Kind::kFixed:
      d = model.value_minutes;
      break;
    case DelayModel::Kind::kExponential:
      // median m => rate ln2/m; inverted CDF of u in [0,1)
      d = -(model.value_minutes / std::log(2.0)) * std::log1p(-u01);
      break;
  }
  return std::min(d, model.max_lag_minutes);
}

struct SimConfig {
  static constexpr int kAuctionTickMinutes = 1;  // one auction slot per publisher-minute

  int horizon_minutes = 10080;
  int action_epoch_minutes = 60;
  double clearing_fraction = 0.5;  // share of (bid - floor) paid on top of the floor
  double landscape_bid_scale = 1000.0;  // win landscape sees per-mille prices
  DelayModel delay;
  std::uint64_t seed = 1;

  int n_epochs() const { return horizon_minutes / action_epoch_minutes; }

  void validate() const {
    if (horizon_minutes <= 0) throw std::invalid_argument("sim: horizon must be > 0");
    if (action_epoch_minutes <= 0) throw std::invalid_argument("sim: epoch must be > 0");
    if (horizon_minutes % action_epoch_minutes != 0)
      throw std::invalid_argument("sim: horizon must be a multiple of the action epoch");
    if (!(clearing_fraction >= 0.0 && clearing_fraction <= 1.0))
      throw std::invalid_argument("sim: clearing_fraction outside [0,1]");
    if (!(landscape_bid_scale > 0.0))
      throw std::invalid_argument("sim: landscape_bid_scale must be > 0");
    delay.validate();
  }
};

// Per-publisher win landscape; floor here is in the same (scaled) units as
// the bid passed to win_probability.
struct WinModel {
  double a = 1.0;
  double floor = 0.0;
};

inline double win_probability(double bid, const WinModel& model) {
  if (!(bid >= 0.0)) throw std::invalid_argument("win_probability: negative bid");
  if (bid < model.floor) return 0.0;
  return 1.0 / (1.0 + model.a * std::exp(model.floor - bid));
}

inline constexpr std::int64_t kMinBaselineInstalls = 10;

// Highest-bid eligible campaign for one publisher's next minute; ties break
// to the lowest campaign id. Eligible: enough historical installs, not
// budget-exhausted, and remaining budget above the pair's click cost.
inline std::optional<std::size_t> select_campaign(
    std::span<const Campaign> campaigns, std::span<const PriceQuote> quotes,
    const LedgerState& ledger, std::span<const char> exhausted,
    std::int64_t min_baseline_installs = kMinBaselineInstalls) {
  std::optional<std::size_t> best;
  double best_bid = 0.0;
  for (std::size_t i = 0; i < campaigns.size(); ++i) {
    if (campaigns[i].baseline_installs < min_baseline_installs) continue;
    if (exhausted[i]) continue;
    if (ledger.remaining_budget(i) <= micros_from_units(quotes[i].cost)) continue;
    const double bid = quotes[i].bid;
    if (!best || bid > best_bid || (bid == best_bid && campaigns[i].id < campaigns[*best].id)) {
      best = i;
      best_bid = bid;
    }
  }
  return best;
}

class Simulation;

// A bidder is asked once per action epoch to reprice (publisher, campaign)
// pairs; the simulator then runs the next hour of minute auctions.
class Bidder {
 public:
  virtual ~Bidder() = default;
  virtual void on_epoch(Simulation& sim) = 0;
};

// Leaves every quote where it is. Quotes start at the eCPM base, so this is
// the pure base-priced bidder.
class HoldBidder : public Bidder {
 public:
  void on_epoch(Simulation&) override {}
};

// Minute-granularity auction environment: per minute each publisher is served
// by its current highest-bidding campaign, wins follow the publisher's
// landscape, clicks charge the advertiser (capped by budget), installs come
// back after a sampled delay.
class Simulation {
 public:
  struct EpochRow {
    int epoch = 0;
    int clock_minutes = 0;
    Micros total_spend = 0;
    Micros total_cost = 0;
    double margin_total = 0.0;  // == sum of per-publisher margins
    double budget_util = 0.0;
    int happy = 0;
    std::int64_t clicks = 0;
    std::int64_t installs = 0;
  };

  Simulation(const std::vector<Publisher>& publishers, const std::vector<Campaign>& campaigns,
             const SimConfig& sim, const QuantizerConfig& quantizer, const ActionSpace& actions,
             std::uint64_t domain, std::uint64_t seed, EventLog* log = nullptr)
      : pubs_(publishers),
        camps_(campaigns),
        sim_(sim),
        quant_(quantizer),
        actions_(actions),
        rnd_(seed, domain),
        log_(log),
        ledger_(publishers.size(), budgets_of(campaigns), sim.horizon_minutes) {
    sim_.validate();
    quant_.validate();
    actions_.validate();
    for (const auto& p : pubs_) p.validate();
    for (const auto& c : camps_) c.validate();

    const std::size_t m = pubs_.size();
    const std::size_t n = camps_.size();
    base_quotes_.resize(m * n);
    quotes_.resize(m * n);
    cost_micros_.resize(m * n);
    pctr_.resize(m * n);
    wins_hour_.assign(m * n, 0);
    win_models_.resize(m);
    exhausted_.assign(n, 0);
    selected_.assign(m, -1);
    for (std::size_t j = 0; j < m; ++j) {
      win_models_[j] = WinModel{pubs_[j].landscape_a,
                                to_units(pubs_[j].floor_price) * sim_.landscape_bid_scale};
      for (std::size_t i = 0; i < n; ++i) {
        const PriceQuote q = base_quote(camps_[i], pubs_[j]);
        base_quotes_[j * n + i] = q;
        quotes_[j * n + i] = q;
        cost_micros_[j * n + i] = micros_from_units(q.cost);
        pctr_[j * n + i] = pubs_[j].pctr.at(camps_[i].id);
      }
    }
  }

  std::size_t n_publishers() const { return pubs_.size(); }
  std::size_t n_campaigns() const { return camps_.size(); }
  const std::vector<Publisher>& publishers() const { return pubs_; }
  const std::vector<Campaign>& campaigns() const { return camps_; }
  const SimConfig& config() const { return sim_; }
  const QuantizerConfig& quantizer() const { return quant_; }
  const ActionSpace& actions() const { return actions_; }
  const LedgerState& ledger() const { return ledger_; }
  const RandomField& random() const { return rnd_; }
  int epochs_completed() const { return epochs_completed_; }
  const std::vector<EpochRow>& epoch_rows() const { return rows_; }

  int wins_last_hour(std::size_t j, std::size_t i) const { return wins_hour_[j * camps_.size() + i]; }
  bool pair_active(std::size_t j, std::size_t i) const { return wins_last_hour(j, i) > 0; }

  PriceQuote base_quote_of(std::size_t j, std::size_t i) const {
    return base_quotes_.at(j * camps_.size() + i);
  }
  PriceQuote quote_of(std::size_t j, std::size_t i) const {
    return quotes_.at(j * camps_.size() + i);
  }

  void set_quote(std::size_t j, std::size_t i, const PriceQuote& q) {
    if (!(q.bid >= 0.0) || !(q.cost >= 0.0))
      throw std::invalid_argument("set_quote: negative or NaN price");
    quotes_.at(j * camps_.size() + i) = q;
    cost_micros_[j * camps_.size() + i] = micros_from_units(q.cost);
  }

  double margin_now(std::size_t j) const { return margin(ledger_, j).value_or(0.0); }
  double eta_now(std::size_t i) const {
    return effective_eta(ledger_, camps_[i], i, quant_.eta_upper);
  }
  // Efficiency as rewards see it: any zero-install campaign reads as the
  // upper bound, so a pair's first charge does not register as a collapse
  // from "perfect" to "worst".
  double reward_eta_now(std::size_t i) const {
    const auto eta = efficiency(ledger_, camps_[i], i);
    return eta ? *eta : quant_.eta_upper;
  }
  StateIndex pair_state(std::size_t j, std::size_t i) const {
    return state_of(ledger_, camps_[i], i, j, quant_);
  }

  // Snapshot for rewarding the pair's previous action, with current
  // attribution denominators.
  RewardSnapshot snapshot_for(std::size_t j, std::size_t i, double m_prev,
                              double eta_prev) const {
    RewardSnapshot s;
    s.m_prev = m_prev;
    s.m_now = margin_now(j);
    s.eta_prev = eta_prev;
    s.eta_now = reward_eta_now(i);
    s.budget_i_remaining = ledger_.remaining_budget(i);
    s.total_budget_remaining = ledger_.total_remaining_budget();
    s.spend_j = ledger_.spend(j);
    s.total_spend = ledger_.total_spend();
    return s;
  }

  int happy_count() const {
    int n = 0;
    for (std::size_t i = 0; i < camps_.size(); ++i) {
      if (campaign_happy(ledger_, camps_[i], i, quant_.epsilon, quant_.eta_upper)) ++n;
    }
    return n;
  }

  // Called after each completed epoch, for streamed per-epoch exports.
  void set_epoch_end_hook(std::function<void(const Simulation&)> hook) {
    on_epoch_end_ = std::move(hook);
  }

  void run_minute() {
    const std::int32_t t = ledger_.clock();
    if (t >= sim_.horizon_minutes) throw std::logic_error("run_minute: past horizon");
    if (need_reselect_) {
      reselect_all();
      need_reselect_ = false;
    }
    const std::size_t n = camps_.size();
    for (std::size_t j = 0; j < pubs_.size(); ++j) {
      const int sel = selected_[j];
      if (sel < 0) continue;  // no eligible campaign: the publisher sits out this minute
      const std::size_t i = static_cast<std::size_t>(sel);
      const std::int64_t n_opp =
          rnd_.poisson(pubs_[j].request_rate, RandomField::Stream::kOpportunities, t, j);
      if (n_opp <= 0) continue;

      const PriceQuote& q = quotes_[j * n + i];
      const double p_win = win_probability(q.bid * sim_.landscape_bid_scale, win_models_[j]);
      const Micros bid_micros = micros_from_units(q.bid);
      const double floor_units = to_units(pubs_[j].floor_price);
      const double clearing_units =
          floor_units + sim_.clearing_fraction * (q.bid - floor_units);
      const Micros clearing_micros = micros_from_units(clearing_units);

      for (std::int64_t k = 0; k < n_opp; ++k) {
        const bool won = rnd_.uniform(RandomField::Stream::kWins, t, j, k) < p_win;
        record(Event{t, EventType::kAuction, static_cast<std::int32_t>(j),
                     static_cast<std::int32_t>(i), bid_micros, won ? 1 : 0});
        if (!won) continue;
        ++wins_hour_[j * n + i];
        apply(Event{t, EventType::kImpression, static_cast<std::int32_t>(j),
                    static_cast<std::int32_t>(i), clearing_micros, 0});
        if (rnd_.uniform(RandomField::Stream::kClicks, t, j, k) >= pctr_[j * n + i]) continue;
        const Micros full = cost_micros_[j * n + i];
        const Micros charge = std::min(full, ledger_.remaining_budget(i));
        apply(Event{t, EventType::kClick, static_cast<std::int32_t>(j),
                    static_cast<std::int32_t>(i), charge, 0});
        if ((charge < full || ledger_.remaining_budget(i) == 0) && !exhausted_[i]) {
          exhausted_[i] = 1;
          need_reselect_ = true;
        }
        if (rnd_.uniform(RandomField::Stream::kInstalls, t, j, k) < camps_[i].realized_cvr()) {
          const double lag = sample_delay(sim_.delay, rnd_.uniform(RandomField::Stream::kDelays, t, j, k));
          PendingInstall pi;
          pi.campaign = static_cast<std::int32_t>(i);
          pi.publisher = static_cast<std::int32_t>(j);
          pi.click_time = t;
          pi.notify_time = t + static_cast<std::int32_t>(std::llround(lag));
          pending_.push(Pending{pi, pending_seq_++});
        }
      }
    }
    // installs whose notification has arrived by the end of this minute
    while (!pending_.empty() && pending_.top().install.notify_time <= t) {
      const PendingInstall pi = pending_.top().install;
      pending_.pop();
      apply(Event{t, EventType::kInstall, pi.publisher, pi.campaign, 0, pi.click_time});
    }
    ledger_.advance_clock(t + 1);
  }

  void run_epoch(Bidder& bidder) {
    if (ledger_.clock() % sim_.action_epoch_minutes != 0)
      throw std::logic_error("run_epoch: not at an epoch boundary");
    if (ledger_.clock() >= sim_.horizon_minutes)
      throw std::logic_error("run_epoch: past horizon");
    bidder.on_epoch(*this);
    std::fill(wins_hour_.begin(), wins_hour_.end(), 0);
    need_reselect_ = true;  // repricing may change every selection
    for (int m = 0; m < sim_.action_epoch_minutes; ++m) run_minute();

    EpochRow row;
    row.epoch = epochs_completed_;
    row.clock_minutes = ledger_.clock();
    row.total_spend = ledger_.total_spend();
    row.total_cost = ledger_.total_cost();
    row.margin_total = ledger_.total_spend() > 0
                           ? static_cast<double>(ledger_.total_cost() - ledger_.total_spend()) /
                                 static_cast<double>(ledger_.total_spend())
                           : 0.0;
    row.budget_util =
        static_cast<double>(ledger_.total_cost()) / static_cast<double>(ledger_.total_budget());
    row.happy = happy_count();
    row.clicks = ledger_.total_clicks();
    row.installs = ledger_.total_installs();
    rows_.push_back(row);
    ++epochs_completed_;
    if (on_epoch_end_) on_epoch_end_(*this);
  }

  void run(Bidder& bidder) {
    while (ledger_.clock() < sim_.horizon_minutes) run_epoch(bidder);
  }

 private:
  struct Pending {
    PendingInstall install;
    std::int64_t seq = 0;
    bool operator>(const Pending& o) const {
      if (install.notify_time != o.install.notify_time)
        return install.notify_time > o.install.notify_time;
      return seq > o.seq;
    }
  };

  static std::vector<Micros> budgets_of(const std::vector<Campaign>& camps) {
    std::vector<Micros> b;
    b.reserve(camps.size());
    for (const auto& c : camps) b.push_back(c.budget);
    return b;
  }

  void apply(const Event& e) {
    ledger_.apply(e);
    record(e);
  }
  void record(const Event& e) {
    if (log_) log_->push_back(e);
  }

  void reselect_all() {
    const std::size_t n = camps_.size();
    for (std::size_t j = 0; j < pubs_.size(); ++j) {
      const auto pick = select_campaign(
          std::span<const Campaign>(camps_),
          std::span<const PriceQuote>(quotes_.data() + j * n, n), ledger_,
          std::span<const char>(exhausted_));
      selected_[j] = pick ? static_cast<int>(*pick) : -1;
    }
  }

  std::vector<Publisher> pubs_;
  std::vector<Campaign> camps_;
  SimConfig sim_;
  QuantizerConfig quant_;
  ActionSpace actions_;
  RandomField rnd_;
  EventLog* log_;
  LedgerState ledger_;

  std::vector<PriceQuote> base_quotes_;
  std::vector<PriceQuote> quotes_;
  std::vector<Micros> cost_micros_;
  std::vector<double> pctr_;
  std::vector<int> wins_hour_;
  std::vector<WinModel> win_models_;
  std::vector<char> exhausted_;
  std::vector<int> selected_;
  bool need_reselect_ = true;

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending_;
  std::int64_t pending_seq_ = 0;

  std::vector<EpochRow> rows_;
  int epochs_completed_ = 0;
  std::function<void(const Simulation&)> on_epoch_end_;
};

}  // namespace rtbq
