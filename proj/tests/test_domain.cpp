#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rtbq/domain.hpp"

using namespace rtbq;

namespace {

LedgerState make_ledger(std::size_t n_pubs, std::vector<Micros> budgets, int horizon = 10080) {
  return LedgerState(n_pubs, std::move(budgets), horizon);
}

void click(LedgerState& ledger, int pub, int camp, Micros amount, int minute = 0) {
  ledger.apply(Event{minute, EventType::kClick, pub, camp, amount, 0});
}
void impression(LedgerState& ledger, int pub, int camp, Micros amount, int minute = 0) {
  ledger.apply(Event{minute, EventType::kImpression, pub, camp, amount, 0});
}
void install(LedgerState& ledger, int camp, int minute = 0) {
  ledger.apply(Event{minute, EventType::kInstall, -1, camp, 0, 0});
}

}  // namespace

TEST_CASE("margin matches direct evaluation") {
  auto ledger = make_ledger(2, {micros_from_units(1000), micros_from_units(1000)});
  // publisher 0: cost 12, spend 10; publisher 1: spend 10, cost 10
  impression(ledger, 0, 0, micros_from_units(10));
  impression(ledger, 1, 1, micros_from_units(10));
  click(ledger, 0, 0, micros_from_units(12));
  click(ledger, 1, 1, micros_from_units(10));

  REQUIRE(margin(ledger, 0).has_value());
  CHECK(*margin(ledger, 0) == Catch::Approx(0.1).epsilon(1e-12));
  CHECK(*margin(ledger, 1) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("margin is zero when every publisher breaks even") {
  auto ledger = make_ledger(3, {micros_from_units(100)});
  for (int j = 0; j < 3; ++j) {
    impression(ledger, j, 0, 5'000'000);
    click(ledger, j, 0, 5'000'000);
  }
  for (int j = 0; j < 3; ++j) CHECK(*margin(ledger, j) == 0.0);
}

TEST_CASE("margin of a pure-spend publisher is -spend share") {
  auto ledger = make_ledger(1, {micros_from_units(100)});
  impression(ledger, 0, 0, micros_from_units(5));
  CHECK(*margin(ledger, 0) == -1.0);
}

TEST_CASE("margin is undefined with zero total spend") {
  auto ledger = make_ledger(2, {micros_from_units(100)});
  CHECK(!margin(ledger, 0).has_value());
  click(ledger, 0, 0, micros_from_units(1));  // cost without spend still leaves it defined-less
  CHECK(!margin(ledger, 1).has_value());
}

TEST_CASE("per-publisher margins share one denominator") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Micros> amount(1, 50'000'000);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 6);
    auto ledger = make_ledger(m, {Micros{1} << 40});
    for (int j = 0; j < m; ++j) {
      impression(ledger, j, 0, amount(rng));
      click(ledger, 0, 0, amount(rng));
      click(ledger, j, 0, amount(rng));
    }
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += *margin(ledger, j);
    const double direct = static_cast<double>(ledger.total_cost() - ledger.total_spend()) /
                          static_cast<double>(ledger.total_spend());
    CHECK(sum == Catch::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("margin is invariant under uniform scaling of all money") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Micros> amount(1, 1'000'000);
  for (int trial = 0; trial < 30; ++trial) {
    const Micros a = amount(rng), b = amount(rng), c = amount(rng);
    const Micros k = 1 + static_cast<Micros>(rng() % 1000);
    auto one = make_ledger(2, {Micros{1} << 40});
    auto scaled = make_ledger(2, {Micros{1} << 40});
    impression(one, 0, 0, a);
    impression(one, 1, 0, b);
    click(one, 0, 0, c);
    impression(scaled, 0, 0, k * a);
    impression(scaled, 1, 0, k * b);
    click(scaled, 0, 0, k * c);
    CHECK(*margin(one, 0) == *margin(scaled, 0));  // same real quotient, same double
    CHECK(*margin(one, 1) == *margin(scaled, 1));
  }
}

TEST_CASE("efficiency matches direct evaluation") {
  Campaign camp{0, micros_from_units(5), micros_from_units(1000), 0.1, 50};
  auto ledger = make_ledger(1, {camp.budget});

  SECTION("actual CPI 10 over target 5") {
    click(ledger, 0, 0, micros_from_units(30));
    for (int k = 0; k < 3; ++k) install(ledger, 0);
    REQUIRE(efficiency(ledger, camp, 0).has_value());
    CHECK(*efficiency(ledger, camp, 0) == Catch::Approx(2.0).epsilon(1e-12));
  }
  SECTION("undefined with no installs") {
    CHECK(!efficiency(ledger, camp, 0).has_value());
  }
  SECTION("exactly on target") {
    click(ledger, 0, 0, micros_from_units(10));
    install(ledger, 0);
    install(ledger, 0);
    CHECK(*efficiency(ledger, camp, 0) == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("efficiency is invariant when cost and target scale together") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Micros cost = 1 + static_cast<Micros>(rng() % 100'000'000);
    const Micros target = 1 + static_cast<Micros>(rng() % 10'000'000);
    const Micros k = 1 + static_cast<Micros>(rng() % 100);
    const std::int64_t installs = 1 + static_cast<std::int64_t>(rng() % 50);

    Campaign camp{0, target, Micros{1} << 40, 0.1, 50};
    Campaign camp_scaled{0, k * target, Micros{1} << 40, 0.1, 50};
    auto one = make_ledger(1, {camp.budget});
    auto scaled = make_ledger(1, {camp_scaled.budget});
    click(one, 0, 0, cost);
    click(scaled, 0, 0, k * cost);
    for (std::int64_t n = 0; n < installs; ++n) {
      install(one, 0);
      install(scaled, 0);
    }
    CHECK(*efficiency(one, camp, 0) == *efficiency(scaled, camp_scaled, 0));
  }
}

TEST_CASE("happiness threshold is strict") {
  CHECK(is_happy(1.19, 0.2));
  CHECK(!is_happy(1.2, 0.2));
  CHECK(is_happy(0.5, 0.2));
  CHECK_THROWS_AS(is_happy(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("undefined efficiency resolves by whether money was spent") {
  Campaign camp{0, micros_from_units(5), micros_from_units(1000), 0.1, 50};
  auto ledger = make_ledger(1, {camp.budget});
  // untouched campaign: neutral, counts happy
  CHECK(effective_eta(ledger, camp, 0, 5.0) == 0.0);
  CHECK(campaign_happy(ledger, camp, 0, 0.2, 5.0));
  // spent without converting: worst efficiency, counts unhappy
  click(ledger, 0, 0, micros_from_units(1));
  CHECK(effective_eta(ledger, camp, 0, 5.0) == 5.0);
  CHECK(!campaign_happy(ledger, camp, 0, 0.2, 5.0));
}

TEST_CASE("ledger replay is a pure fold") {
  std::mt19937_64 rng(17);
  EventLog log;
  const int n_pubs = 3, n_camps = 4;
  std::vector<Micros> budgets(n_camps, Micros{1} << 40);
  for (int k = 0; k < 500; ++k) {
    Event e;
    e.minute = k / 10;
    e.publisher = static_cast<std::int32_t>(rng() % n_pubs);
    e.campaign = static_cast<std::int32_t>(rng() % n_camps);
    switch (rng() % 3) {
      case 0: e.type = EventType::kImpression; e.amount = 1 + static_cast<Micros>(rng() % 1000000); break;
      case 1: e.type = EventType::kClick; e.amount = 1 + static_cast<Micros>(rng() % 1000000); break;
      default: e.type = EventType::kInstall; break;
    }
    log.push_back(e);
  }
  auto a = make_ledger(n_pubs, budgets);
  auto b = make_ledger(n_pubs, budgets);
  for (const auto& e : log) a.apply(e);
  for (const auto& e : log) b.apply(e);
  for (int j = 0; j < n_pubs; ++j) {
    CHECK(a.spend(j) == b.spend(j));
    CHECK(a.publisher_cost(j) == b.publisher_cost(j));
  }
  for (int i = 0; i < n_camps; ++i) {
    CHECK(a.campaign_cost(i) == b.campaign_cost(i));
    CHECK(a.installs(i) == b.installs(i));
    CHECK(a.clicks(i) == b.clicks(i));
  }
  CHECK(a.total_spend() == b.total_spend());
  CHECK(a.total_cost() == b.total_cost());
}

TEST_CASE("ledger rejects charges beyond the budget") {
  auto ledger = make_ledger(1, {micros_from_units(1)});
  click(ledger, 0, 0, micros_from_units(1));
  CHECK_THROWS_AS(click(ledger, 0, 0, 1), std::logic_error);
  CHECK(ledger.remaining_budget(0) == 0);
}

TEST_CASE("ledger clock is monotone and bounded by the horizon") {
  auto ledger = make_ledger(1, {micros_from_units(1)}, 100);
  ledger.advance_clock(50);
  CHECK_THROWS_AS(ledger.advance_clock(49), std::logic_error);
  CHECK_THROWS_AS(ledger.advance_clock(101), std::logic_error);
  ledger.advance_clock(100);
  CHECK(ledger.clock() == 100);
}

TEST_CASE("entity invariants are validated") {
  Campaign bad_cpi{0, 0, 1, 0.1, 0};
  CHECK_THROWS_AS(bad_cpi.validate(), std::invalid_argument);
  Campaign bad_pcvr{0, 1, 1, 1.5, 0};
  CHECK_THROWS_AS(bad_pcvr.validate(), std::invalid_argument);
  Publisher bad_a;
  bad_a.landscape_a = 0.0;
  CHECK_THROWS_AS(bad_a.validate(), std::invalid_argument);
  Publisher bad_pctr;
  bad_pctr.pctr[0] = 1.5;
  CHECK_THROWS_AS(bad_pctr.validate(), std::invalid_argument);
}
