#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "rtbq/simulator.hpp"

using namespace rtbq;

namespace {

Publisher make_pub(PublisherId id, double floor_units, double a, double rate,
                   std::map<CampaignId, double> pctr) {
  Publisher p;
  p.id = id;
  p.floor_price = micros_from_units(floor_units);
  p.landscape_a = a;
  p.request_rate = rate;
  p.pctr = std::move(pctr);
  return p;
}

Campaign make_camp(CampaignId id, double cpi_units, double budget_units, double pcvr,
                   std::int64_t installs = 50) {
  return Campaign{id, micros_from_units(cpi_units), micros_from_units(budget_units), pcvr,
                  installs};
}

SimConfig fast_sim(int horizon, DelayModel delay = {DelayModel::Kind::kFixed, 0.0, 10080.0}) {
  SimConfig cfg;
  cfg.horizon_minutes = horizon;
  cfg.delay = delay;
  cfg.seed = 7;
  return cfg;
}

// Small two-party world with bids comfortably above the floor.
struct World {
  std::vector<Publisher> pubs;
  std::vector<Campaign> camps;
  QuantizerConfig quant;
  ActionSpace actions = ActionSpace::production_default();
};

World degenerate_world() {
  World w;
  w.camps = {make_camp(0, 2.0, 1e6, 1.0)};
  w.pubs = {make_pub(0, 0.0005, 1.0, 5.0, {{0, 1.0}})};
  return w;
}

}  // namespace

TEST_CASE("win probability follows the floor-anchored sigmoid") {
  const WinModel m{1.0, 2.0};
  CHECK(win_probability(2.0, m) == 0.5);
  CHECK(win_probability(1.9999, m) == 0.0);
  CHECK(win_probability(0.0, m) == 0.0);
  CHECK(win_probability(60.0, m) == Catch::Approx(1.0).epsilon(1e-12));
  double prev = 0.0;
  for (double bid = 2.0; bid < 10.0; bid += 0.25) {
    const double p = win_probability(bid, m);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK_THROWS_AS(win_probability(-1.0, m), std::invalid_argument);
}

TEST_CASE("delay sampling") {
  SECTION("point mass at zero") {
    const DelayModel m{DelayModel::Kind::kFixed, 0.0, 10080.0};
    for (double u : {0.0, 0.3, 0.999}) CHECK(sample_delay(m, u) == 0.0);
  }
  SECTION("median-one-day exponential has ~0.75 mass within two days") {
    const DelayModel m{};  // defaults: exponential, median 1440, cap 10080
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 100000;
    int within = 0;
    for (int k = 0; k < n; ++k) within += (sample_delay(m, u(rng)) <= 2880.0);
    const double frac = static_cast<double>(within) / n;
    CHECK(frac > 0.70);
    CHECK(frac < 0.80);
  }
  SECTION("samples never exceed the configured cap") {
    const DelayModel m{DelayModel::Kind::kExponential, 1440.0, 2000.0};
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
      const double d = sample_delay(m, u(rng));
      CHECK(d >= 0.0);
      CHECK(d <= 2000.0);
    }
  }
}

TEST_CASE("campaign selection picks the maximum bid with id tie-break") {
  std::vector<Campaign> camps = {make_camp(0, 1, 10, 0.1), make_camp(1, 1, 10, 0.1),
                                 make_camp(2, 1, 10, 0.1)};
  LedgerState ledger(1, {camps[0].budget, camps[1].budget, camps[2].budget}, 100);
  std::vector<char> exhausted(3, 0);

  SECTION("single eligible campaign is selected") {
    std::vector<PriceQuote> quotes = {{0.4, 0.05}, {0.0, 0.05}, {0.0, 0.05}};
    camps[1].baseline_installs = 3;  // filtered by the activity threshold
    exhausted[2] = 1;
    const auto pick = select_campaign(camps, quotes, ledger, exhausted);
    REQUIRE(pick.has_value());
    CHECK(*pick == 0);
  }
  SECTION("equal bids go to the lowest id") {
    std::vector<PriceQuote> quotes = {{0.5, 0.05}, {0.7, 0.05}, {0.7, 0.05}};
    const auto pick = select_campaign(camps, quotes, ledger, exhausted);
    REQUIRE(pick.has_value());
    CHECK(*pick == 1);
  }
  SECTION("empty eligible set means no participation") {
    std::vector<PriceQuote> quotes = {{0.5, 0.05}, {0.7, 0.05}, {0.7, 0.05}};
    exhausted = {1, 1, 1};
    CHECK(!select_campaign(camps, quotes, ledger, exhausted).has_value());
  }
  SECTION("remaining budget must cover the pair's click cost") {
    std::vector<PriceQuote> quotes = {{0.9, 20.0}, {0.1, 0.05}, {0.0, 0.05}};
    const auto pick = select_campaign(camps, quotes, ledger, exhausted);
    REQUIRE(pick.has_value());
    CHECK(*pick == 1);  // campaign 0 bids highest but cannot afford a click
  }
}

TEST_CASE("degenerate probabilities: every win yields spend, cost and an install") {
  World w = degenerate_world();
  EventLog log;
  Simulation sim(w.pubs, w.camps, fast_sim(60), w.quant, w.actions, RandomField::kTestDomain, 3,
                 &log);
  HoldBidder hold;
  sim.run(hold);

  std::int64_t auctions = 0, wins = 0, impressions = 0, clicks = 0, installs = 0;
  for (const auto& e : log) {
    switch (e.type) {
      case EventType::kAuction:
        ++auctions;
        wins += e.aux;
        break;
      case EventType::kImpression: ++impressions; break;
      case EventType::kClick: ++clicks; break;
      case EventType::kInstall: ++installs; break;
    }
  }
  REQUIRE(auctions > 0);
  REQUIRE(impressions > 0);
  CHECK(wins == impressions);
  CHECK(clicks == impressions);
  CHECK(installs == clicks);  // immediate notification
  CHECK(sim.ledger().total_installs() == installs);
}

TEST_CASE("fixed notification lag lands installs exactly that far after clicks") {
  World w = degenerate_world();
  const int lag = 2880;
  EventLog log;
  Simulation sim(w.pubs, w.camps, fast_sim(4320, {DelayModel::Kind::kFixed, double(lag), 10080.0}),
                 w.quant, w.actions, RandomField::kTestDomain, 11, &log);
  HoldBidder hold;
  sim.run(hold);

  std::int64_t installs = 0;
  for (const auto& e : log) {
    if (e.type != EventType::kInstall) continue;
    ++installs;
    CHECK(e.minute == e.aux + lag);  // aux carries the click minute
  }
  REQUIRE(installs > 0);
  // clicks in the last two days remain unnotified at the horizon
  CHECK(sim.ledger().total_installs() < sim.ledger().total_clicks());
}

TEST_CASE("zero request rate leaves everything but the clock untouched") {
  World w = degenerate_world();
  w.pubs[0].request_rate = 0.0;
  Simulation sim(w.pubs, w.camps, fast_sim(120), w.quant, w.actions, RandomField::kTestDomain, 5);
  HoldBidder hold;
  sim.run(hold);
  CHECK(sim.ledger().clock() == 120);
  CHECK(sim.ledger().total_spend() == 0);
  CHECK(sim.ledger().total_cost() == 0);
  CHECK(sim.ledger().total_installs() == 0);
}

TEST_CASE("bids below the floor never win") {
  World w = degenerate_world();
  w.pubs[0].floor_price = micros_from_units(5.0);  // far above the 2.0 base bid
  EventLog log;
  Simulation sim(w.pubs, w.camps, fast_sim(120), w.quant, w.actions, RandomField::kTestDomain, 5,
                 &log);
  HoldBidder hold;
  sim.run(hold);
  for (const auto& e : log) {
    CHECK(e.type == EventType::kAuction);
    CHECK(e.aux == 0);
  }
  CHECK(sim.ledger().total_spend() == 0);
}

namespace {

World mixed_world() {
  World w;
  w.camps = {make_camp(0, 2.0, 40.0, 0.25), make_camp(1, 4.0, 60.0, 0.2),
             make_camp(2, 1.5, 25.0, 0.3), make_camp(3, 3.0, 1e5, 0.15, 4 /* filtered */)};
  w.pubs = {
      make_pub(0, 0.0008, 1.5, 4.0, {{0, 0.01}, {1, 0.008}, {2, 0.012}, {3, 0.01}}),
      make_pub(1, 0.0015, 2.5, 6.0, {{0, 0.006}, {1, 0.01}, {2, 0.007}, {3, 0.01}}),
      make_pub(2, 0.0004, 0.9, 2.0, {{0, 0.012}, {1, 0.005}, {2, 0.009}, {3, 0.01}}),
  };
  return w;
}

}  // namespace

TEST_CASE("event log totals equal ledger aggregates exactly") {
  World w = mixed_world();
  EventLog log;
  Simulation sim(w.pubs, w.camps, fast_sim(1440), w.quant, w.actions, RandomField::kTestDomain,
                 17, &log);
  HoldBidder hold;
  sim.run(hold);

  std::vector<Micros> spend(3, 0), pub_cost(3, 0), camp_cost(4, 0);
  std::vector<std::int64_t> impressions(4, 0), clicks(4, 0), installs(4, 0);
  for (const auto& e : log) {
    switch (e.type) {
      case EventType::kImpression:
        spend[e.publisher] += e.amount;
        ++impressions[e.campaign];
        break;
      case EventType::kClick:
        pub_cost[e.publisher] += e.amount;
        camp_cost[e.campaign] += e.amount;
        ++clicks[e.campaign];
        break;
      case EventType::kInstall: ++installs[e.campaign]; break;
      case EventType::kAuction: break;
    }
  }
  Micros total_spend = 0, total_cost = 0;
  for (int j = 0; j < 3; ++j) {
    CHECK(sim.ledger().spend(j) == spend[j]);
    CHECK(sim.ledger().publisher_cost(j) == pub_cost[j]);
    total_spend += spend[j];
    total_cost += pub_cost[j];
  }
  for (int i = 0; i < 4; ++i) {
    CHECK(sim.ledger().campaign_cost(i) == camp_cost[i]);
    CHECK(sim.ledger().installs(i) == installs[i]);
    CHECK(sim.ledger().clicks(i) == clicks[i]);
    // counting chain per campaign
    CHECK(installs[i] <= clicks[i]);
    CHECK(clicks[i] <= impressions[i]);
    // budget cap
    CHECK(camp_cost[i] <= w.camps[i].budget);
  }
  CHECK(sim.ledger().total_spend() == total_spend);
  CHECK(sim.ledger().total_cost() == total_cost);
  REQUIRE(total_spend > 0);
}

TEST_CASE("filtered campaigns never trade") {
  World w = mixed_world();  // campaign 3 has fewer than 10 historical installs
  EventLog log;
  Simulation sim(w.pubs, w.camps, fast_sim(720), w.quant, w.actions, RandomField::kTestDomain, 19,
                 &log);
  HoldBidder hold;
  sim.run(hold);
  for (const auto& e : log) CHECK(e.campaign != 3);
  CHECK(sim.ledger().campaign_cost(3) == 0);
}

TEST_CASE("budget exhaustion clamps the charge and retires the campaign") {
  World w = degenerate_world();
  w.camps[0].budget = micros_from_units(3.0);  // a handful of clicks at cost 2.0
  EventLog log;
  Simulation sim(w.pubs, w.camps, fast_sim(180), w.quant, w.actions, RandomField::kTestDomain, 23,
                 &log);
  HoldBidder hold;
  sim.run(hold);
  CHECK(sim.ledger().campaign_cost(0) == w.camps[0].budget);  // cap hit exactly via clamp
  // once exhausted, the publisher stops serving entirely
  Micros cost_after = 0;
  std::int32_t exhaust_minute = -1;
  Micros acc = 0;
  for (const auto& e : log) {
    if (e.type != EventType::kClick) continue;
    acc += e.amount;
    if (acc == w.camps[0].budget && exhaust_minute < 0) exhaust_minute = e.minute;
    if (exhaust_minute >= 0 && e.minute > exhaust_minute) cost_after += e.amount;
  }
  CHECK(exhaust_minute >= 0);
  CHECK(cost_after == 0);
}

TEST_CASE("install notifications are delivered in notify-time order") {
  World w = mixed_world();
  EventLog log;
  Simulation sim(w.pubs, w.camps,
                 fast_sim(1440, {DelayModel::Kind::kExponential, 240.0, 10080.0}), w.quant,
                 w.actions, RandomField::kTestDomain, 29, &log);
  HoldBidder hold;
  sim.run(hold);
  std::int32_t last = -1;
  std::int64_t installs = 0;
  for (const auto& e : log) {
    if (e.type != EventType::kInstall) continue;
    ++installs;
    CHECK(e.minute >= last);
    CHECK(e.minute >= e.aux);  // never before its click
    last = e.minute;
  }
  REQUIRE(installs > 0);
}

TEST_CASE("identical seed and policy reproduce the event log bit for bit") {
  World w = mixed_world();
  EventLog log_a, log_b;
  {
    Simulation sim(w.pubs, w.camps, fast_sim(720), w.quant, w.actions, RandomField::kTestDomain,
                   31, &log_a);
    HoldBidder hold;
    sim.run(hold);
  }
  {
    Simulation sim(w.pubs, w.camps, fast_sim(720), w.quant, w.actions, RandomField::kTestDomain,
                   31, &log_b);
    HoldBidder hold;
    sim.run(hold);
  }
  REQUIRE(log_a.size() == log_b.size());
  CHECK(log_a == log_b);
}

namespace {

// Raises every active pair's bid from base each epoch; environment draws must
// stay aligned with any other policy under the shared random field.
class RaiseBidder : public Bidder {
 public:
  void on_epoch(Simulation& sim) override {
    for (std::size_t j = 0; j < sim.n_publishers(); ++j) {
      for (std::size_t i = 0; i < sim.n_campaigns(); ++i) {
        if (!sim.pair_active(j, i)) continue;
        PriceQuote q = sim.base_quote_of(j, i);
        q.bid *= 1.2;
        sim.set_quote(j, i, q);
      }
    }
  }
};

}  // namespace

TEST_CASE("policies share one environment random stream") {
  World w = mixed_world();
  for (auto& c : w.camps) c.budget = micros_from_units(1e7);  // keep eligibility static
  EventLog log_hold, log_raise;
  {
    Simulation sim(w.pubs, w.camps, fast_sim(720), w.quant, w.actions, RandomField::kTestDomain,
                   37, &log_hold);
    HoldBidder hold;
    sim.run(hold);
  }
  {
    Simulation sim(w.pubs, w.camps, fast_sim(720), w.quant, w.actions, RandomField::kTestDomain,
                   37, &log_raise);
    RaiseBidder raise;
    sim.run(raise);
  }
  auto auctions_per_pub_minute = [](const EventLog& log) {
    std::map<std::pair<std::int32_t, std::int32_t>, int> count;
    for (const auto& e : log) {
      if (e.type == EventType::kAuction) ++count[{e.publisher, e.minute}];
    }
    return count;
  };
  // same opportunity volume at every (publisher, minute)
  CHECK(auctions_per_pub_minute(log_hold) == auctions_per_pub_minute(log_raise));
}

TEST_CASE("pairs without wins keep their prices across epochs") {
  World w = mixed_world();
  Simulation sim(w.pubs, w.camps, fast_sim(240), w.quant, w.actions, RandomField::kTestDomain,
                 41);
  RaiseBidder raise;
  sim.run(raise);
  // campaign 3 is filtered, so its quotes never moved off base
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(sim.quote_of(j, 3).bid == sim.base_quote_of(j, 3).bid);
    CHECK(sim.quote_of(j, 3).cost == sim.base_quote_of(j, 3).cost);
  }
}

TEST_CASE("epoch rows accumulate and margins match the ledger identity") {
  World w = mixed_world();
  Simulation sim(w.pubs, w.camps, fast_sim(720), w.quant, w.actions, RandomField::kTestDomain,
                 43);
  HoldBidder hold;
  sim.run(hold);
  REQUIRE(sim.epoch_rows().size() == 12);
  Micros prev_spend = -1;
  for (const auto& row : sim.epoch_rows()) {
    CHECK(row.total_spend >= prev_spend);
    prev_spend = row.total_spend;
    if (row.total_spend > 0) {
      const double expect = static_cast<double>(row.total_cost - row.total_spend) /
                            static_cast<double>(row.total_spend);
      CHECK(row.margin_total == expect);
    }
  }
  // per-publisher margins sum to the reported total
  double sum = 0.0;
  for (std::size_t j = 0; j < 3; ++j) sum += sim.margin_now(j);
  CHECK(sum == Catch::Approx(sim.epoch_rows().back().margin_total).epsilon(1e-9));
}

TEST_CASE("sim config is validated") {
  SimConfig bad;
  bad.horizon_minutes = 90;  // not a multiple of the epoch
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SimConfig{};
  bad.clearing_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SimConfig{};
  bad.landscape_bid_scale = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
