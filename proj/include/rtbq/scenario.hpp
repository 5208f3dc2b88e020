#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtbq/baseline_pi.hpp"
#include "rtbq/qlearning.hpp"
#include "rtbq/simulator.hpp"

namespace rtbq {

struct QLearningConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double alpha_visit_decay = 0.0;
  ExplorationSchedule exploration;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("qlearning: alpha outside [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("qlearning: gamma outside [0,1]");
    if (alpha_visit_decay < 0.0) throw std::invalid_argument("qlearning: negative visit decay");
    exploration.validate();
  }
};

// Sampling ranges for synthetic worlds. Equal bounds are allowed (zero
// heterogeneity controls); inverted bounds are an error.
struct GeneratorParams {
  int n_publishers = 12;
  int n_campaigns = 20;
  int horizon_minutes = 10080;
  int warmup_minutes = 10080;  // base-priced pre-run that sets campaign budgets
  double floor_cpm_lo = 0.4, floor_cpm_hi = 2.5;        // currency per 1000 impressions
  double landscape_a_lo = 0.8, landscape_a_hi = 4.0;
  double request_rate_lo = 2.0, request_rate_hi = 12.0;  // per minute, log-uniform
  double target_cpi_lo = 1.0, target_cpi_hi = 5.0;       // currency per install
  double pcvr_lo = 0.15, pcvr_hi = 0.35;
  double pctr_lo = 0.002, pctr_hi = 0.02;               // per pair, log-uniform
  double quality_lo = 0.6, quality_hi = 1.5;            // publisher multiplier on pctr
  // realized conversions = pcvr * bias; estimates are good, not perfect
  double cvr_bias_lo = 0.7, cvr_bias_hi = 1.35;
  int baseline_installs_lo = 5, baseline_installs_hi = 400;  // log-uniform
  // warm-up runs under per-campaign caps (in installs' worth of budget) so
  // high bidders exhaust and the auction rotates through the portfolio
  double warmup_budget_installs = 120.0;
  double min_budget_installs = 10.0;
  // live budgets exceed the historical-cost estimate by a sampled headroom
  double budget_headroom_lo = 1.05, budget_headroom_hi = 1.6;

  static GeneratorParams desk() { return GeneratorParams{}; }

  static GeneratorParams paper_scale() {
    GeneratorParams p;
    p.n_publishers = 183;
    p.n_campaigns = 400;
    return p;
  }

  void validate() const {
    if (n_publishers < 1 || n_campaigns < 1)
      throw std::invalid_argument("generator: counts must be >= 1");
    if (horizon_minutes <= 0 || warmup_minutes <= 0)
      throw std::invalid_argument("generator: horizons must be > 0");
    auto range_ok = [](double lo, double hi, const char* what) {
      if (!(lo <= hi)) throw std::invalid_argument(std::string("generator: inverted range for ") + what);
    };
    range_ok(floor_cpm_lo, floor_cpm_hi, "floor_cpm");
    range_ok(landscape_a_lo, landscape_a_hi, "landscape_a");
    range_ok(request_rate_lo, request_rate_hi, "request_rate");
    range_ok(target_cpi_lo, target_cpi_hi, "target_cpi");
    range_ok(pcvr_lo, pcvr_hi, "pcvr");
    range_ok(pctr_lo, pctr_hi, "pctr");
    range_ok(quality_lo, quality_hi, "quality");
    range_ok(cvr_bias_lo, cvr_bias_hi, "cvr_bias");
    if (!(cvr_bias_lo >= 0.0)) throw std::invalid_argument("generator: negative cvr bias");
    if (!(warmup_budget_installs > 0.0) || !(min_budget_installs > 0.0))
      throw std::invalid_argument("generator: budget install multiples must be > 0");
    range_ok(budget_headroom_lo, budget_headroom_hi, "budget_headroom");
    if (!(budget_headroom_lo > 0.0))
      throw std::invalid_argument("generator: budget headroom must be > 0");
    if (baseline_installs_lo > baseline_installs_hi || baseline_installs_lo < 0)
      throw std::invalid_argument("generator: bad baseline_installs range");
    if (!(floor_cpm_lo >= 0.0) || !(landscape_a_lo > 0.0) || !(request_rate_lo >= 0.0) ||
        !(target_cpi_lo > 0.0) || !(pcvr_lo >= 0.0) || pcvr_hi > 1.0 || !(pctr_lo >= 0.0) ||
        !(quality_lo > 0.0))
      throw std::invalid_argument("generator: degenerate range bounds");
  }
};

struct Scenario {
  int version = 1;
  std::uint64_t seed = 1;
  std::vector<Publisher> publishers;
  std::vector<Campaign> campaigns;
  QuantizerConfig quantizer;
  ActionSpace action_space;
  SimConfig sim;
  QLearningConfig qlearning;
  PiConfig pi;
  GeneratorParams generator;

  void validate() const {
    if (version != 1) throw std::invalid_argument("scenario: unsupported version");
    if (publishers.empty() || campaigns.empty())
      throw std::invalid_argument("scenario: needs publishers and campaigns");
    quantizer.validate();
    action_space.validate();
    sim.validate();
    qlearning.validate();
    pi.validate();
    for (const auto& c : campaigns) c.validate();
    for (const auto& p : publishers) {
      p.validate();
      for (const auto& c : campaigns) {
        if (!p.pctr.count(c.id))
          throw std::invalid_argument("scenario: publisher " + std::to_string(p.id) +
                                      " missing pctr for campaign " + std::to_string(c.id));
      }
    }
  }

  Simulation make_simulation(std::uint64_t domain, std::uint64_t seed_override,
                             EventLog* log = nullptr) const {
    return Simulation(publishers, campaigns, sim, quantizer, action_space, domain, seed_override,
                      log);
  }
  Simulation make_simulation(std::uint64_t domain, EventLog* log = nullptr) const {
    return make_simulation(domain, sim.seed, log);
  }
};

// Samples a synthetic world. Every field draw is keyed by entity and index,
// so the output is a pure function of (params, seed). Budgets come from a
// base-priced warm-up run: the advertiser cost each campaign generated under
// plain eCPM pricing, scaled to the horizon.
inline Scenario generate_scenario(const GeneratorParams& params, std::uint64_t seed) {
  params.validate();
  const RandomField rnd(seed, RandomField::kWarmupDomain);
  using S = RandomField::Stream;
  enum Field : std::uint64_t {
    kFloor = 1, kLandscapeA, kRate, kQuality, kCpi, kPcvr, kInstalls, kPctr, kCvrBias,
    kBudgetHeadroom
  };

  Scenario sc;
  sc.seed = seed;
  sc.generator = params;
  sc.sim.horizon_minutes = params.horizon_minutes;
  sc.sim.seed = seed;
  sc.action_space = ActionSpace::production_default();
  // Actuator strengths chosen so the margin and efficiency reward terms
  // compete on comparable scales across the middle of the lambda range.
  sc.action_space.kappa_bid = 0.35;
  sc.action_space.kappa_eta = 0.22;
  // Tight efficiency ceiling: keeps the worst bin a meaningful band and
  // bounds the reward swing when a campaign's first installs land.
  sc.quantizer.eta_upper = 2.0;
  sc.pi.margin_target = sc.quantizer.delta_m;
  // Baseline bid authority matches the policy's own bid range, so margin
  // comparisons measure decisions rather than actuation limits.
  sc.pi.multiplier_lo = 1.0 - sc.action_space.kappa_bid;
  sc.pi.multiplier_hi = 1.0 + sc.action_space.kappa_bid;
  // Desk-scale learning: visit-decayed rates average the noisy install
  // bursts; temperatures sized to the reward scale of these worlds.
  sc.qlearning.alpha_visit_decay = 0.005;
  sc.qlearning.exploration.theta_initial = 0.1;
  sc.qlearning.exploration.decay = 0.9998;
  sc.qlearning.exploration.theta_min = 0.001;

  auto log_uniform = [&](double lo, double hi, S s, std::uint64_t a, std::uint64_t b) {
    if (lo == hi) return lo;
    return std::exp(rnd.uniform_range(std::log(lo), std::log(hi), s, a, b));
  };

  std::vector<double> quality(params.n_publishers);
  for (int j = 0; j < params.n_publishers; ++j) {
    Publisher p;
    p.id = j;
    const double floor_cpm =
        rnd.uniform_range(params.floor_cpm_lo, params.floor_cpm_hi, S::kScenario, kFloor, j);
    p.floor_price = static_cast<Micros>(std::llround(floor_cpm * 1000.0));  // per impression
    p.landscape_a = rnd.uniform_range(params.landscape_a_lo, params.landscape_a_hi, S::kScenario,
                                      kLandscapeA, j);
    p.request_rate =
        log_uniform(params.request_rate_lo, params.request_rate_hi, S::kScenario, kRate, j);
    quality[j] =
        rnd.uniform_range(params.quality_lo, params.quality_hi, S::kScenario, kQuality, j);
    sc.publishers.push_back(std::move(p));
  }

  for (int i = 0; i < params.n_campaigns; ++i) {
    Campaign c;
    c.id = i;
    c.target_cpi = micros_from_units(
        rnd.uniform_range(params.target_cpi_lo, params.target_cpi_hi, S::kScenario, kCpi, i));
    c.pcvr = rnd.uniform_range(params.pcvr_lo, params.pcvr_hi, S::kScenario, kPcvr, i);
    c.conversion_rate = std::clamp(
        c.pcvr * rnd.uniform_range(params.cvr_bias_lo, params.cvr_bias_hi, S::kScenario,
                                   kCvrBias, i),
        0.0, 1.0);
    c.baseline_installs = static_cast<std::int64_t>(std::llround(log_uniform(
        std::max(1, params.baseline_installs_lo), std::max(1, params.baseline_installs_hi),
        S::kScenario, kInstalls, i)));
    c.budget = 1;  // placeholder until the warm-up run
    sc.campaigns.push_back(std::move(c));
  }

  for (int j = 0; j < params.n_publishers; ++j) {
    for (int i = 0; i < params.n_campaigns; ++i) {
      // log-uniform pair affinity: different publishers favor different
      // campaigns, so auction wins spread across the portfolio
      double raw = params.pctr_lo;
      if (params.pctr_lo != params.pctr_hi) {
        raw = std::exp(rnd.uniform_range(std::log(params.pctr_lo), std::log(params.pctr_hi),
                                         S::kScenario, kPctr, j, i));
      }
      sc.publishers[j].pctr[sc.campaigns[i].id] = std::clamp(quality[j] * raw, 0.0, 1.0);
    }
  }

  // Warm-up: base prices under rotation-forcing caps, separate randomness
  // domain. Each campaign's budget becomes the advertiser cost it actually
  // generated, scaled to the horizon.
  {
    std::vector<Campaign> warm = sc.campaigns;
    for (auto& c : warm) {
      c.budget = static_cast<Micros>(
          std::llround(params.warmup_budget_installs * static_cast<double>(c.target_cpi)));
    }
    SimConfig warm_sim = sc.sim;
    warm_sim.horizon_minutes = params.warmup_minutes;
    if (warm_sim.horizon_minutes % warm_sim.action_epoch_minutes != 0)
      throw std::invalid_argument("generator: warmup must be a multiple of the action epoch");
    Simulation sim(sc.publishers, warm, warm_sim, sc.quantizer, sc.action_space,
                   RandomField::kWarmupDomain, seed);
    HoldBidder hold;
    sim.run(hold);
    for (int i = 0; i < params.n_campaigns; ++i) {
      const Micros warm_cost = sim.ledger().campaign_cost(i);
      const double headroom = rnd.uniform_range(params.budget_headroom_lo,
                                                params.budget_headroom_hi, S::kScenario,
                                                kBudgetHeadroom, i);
      const double scaled = static_cast<double>(warm_cost) * headroom *
                            params.horizon_minutes / params.warmup_minutes;
      const Micros floor = static_cast<Micros>(std::llround(
          params.min_budget_installs * static_cast<double>(sc.campaigns[i].target_cpi)));
      sc.campaigns[i].budget = std::max<Micros>(static_cast<Micros>(std::llround(scaled)), floor);
    }
  }

  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// JSON serialization. Scenario files are versioned, human-readable and byte
// deterministic for a fixed (params, seed).

inline void to_json(nlohmann::json& j, const QuantizerConfig& c) {
  j = {{"delta_m", c.delta_m}, {"l_m", c.l_m},         {"epsilon", c.epsilon},
       {"eta_upper", c.eta_upper}, {"l_eta", c.l_eta}, {"l_b", c.l_b}};
}
inline void from_json(const nlohmann::json& j, QuantizerConfig& c) {
  j.at("delta_m").get_to(c.delta_m);
  j.at("l_m").get_to(c.l_m);
  j.at("epsilon").get_to(c.epsilon);
  j.at("eta_upper").get_to(c.eta_upper);
  j.at("l_eta").get_to(c.l_eta);
  j.at("l_b").get_to(c.l_b);
}

inline void to_json(nlohmann::json& j, const ActionSpace& a) {
  j = {{"f_m_values", a.f_m_values},
       {"f_eta_values", a.f_eta_values},
       {"kappa_bid", a.kappa_bid},
       {"kappa_beta", a.kappa_beta},
       {"kappa_eta", a.kappa_eta}};
}
inline void from_json(const nlohmann::json& j, ActionSpace& a) {
  j.at("f_m_values").get_to(a.f_m_values);
  j.at("f_eta_values").get_to(a.f_eta_values);
  j.at("kappa_bid").get_to(a.kappa_bid);
  j.at("kappa_beta").get_to(a.kappa_beta);
  j.at("kappa_eta").get_to(a.kappa_eta);
}

inline void to_json(nlohmann::json& j, const DelayModel& d) {
  j = {{"kind", d.kind == DelayModel::Kind::kFixed ? "fixed" : "exponential"},
       {"value_minutes", d.value_minutes},
       {"max_lag_minutes", d.max_lag_minutes}};
}
inline void from_json(const nlohmann::json& j, DelayModel& d) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") {
    d.kind = DelayModel::Kind::kFixed;
  } else if (kind == "exponential") {
    d.kind = DelayModel::Kind::kExponential;
  } else {
    throw std::invalid_argument("delay model: unknown kind " + kind);
  }
  j.at("value_minutes").get_to(d.value_minutes);
  j.at("max_lag_minutes").get_to(d.max_lag_minutes);
}

inline void to_json(nlohmann::json& j, const SimConfig& s) {
  j = {{"horizon_minutes", s.horizon_minutes},
       {"action_epoch_minutes", s.action_epoch_minutes},
       {"clearing_fraction", s.clearing_fraction},
       {"landscape_bid_scale", s.landscape_bid_scale},
       {"delay", s.delay},
       {"seed", s.seed}};
}
inline void from_json(const nlohmann::json& j, SimConfig& s) {
  j.at("horizon_minutes").get_to(s.horizon_minutes);
  j.at("action_epoch_minutes").get_to(s.action_epoch_minutes);
  j.at("clearing_fraction").get_to(s.clearing_fraction);
  j.at("landscape_bid_scale").get_to(s.landscape_bid_scale);
  j.at("delay").get_to(s.delay);
  j.at("seed").get_to(s.seed);
}

inline void to_json(nlohmann::json& j, const ExplorationSchedule& e) {
  j = {{"theta_initial", e.theta_initial}, {"decay", e.decay}, {"theta_min", e.theta_min}};
}
inline void from_json(const nlohmann::json& j, ExplorationSchedule& e) {
  j.at("theta_initial").get_to(e.theta_initial);
  j.at("decay").get_to(e.decay);
  j.at("theta_min").get_to(e.theta_min);
}

inline void to_json(nlohmann::json& j, const QLearningConfig& q) {
  j = {{"alpha", q.alpha},
       {"gamma", q.gamma},
       {"alpha_visit_decay", q.alpha_visit_decay},
       {"exploration", q.exploration}};
}
inline void from_json(const nlohmann::json& j, QLearningConfig& q) {
  j.at("alpha").get_to(q.alpha);
  j.at("gamma").get_to(q.gamma);
  j.at("alpha_visit_decay").get_to(q.alpha_visit_decay);
  j.at("exploration").get_to(q.exploration);
}

inline void to_json(nlohmann::json& j, const PiConfig& p) {
  j = {{"kp", p.kp},
       {"ki", p.ki},
       {"margin_target", p.margin_target},
       {"integral_clamp", p.integral_clamp},
       {"multiplier_lo", p.multiplier_lo},
       {"multiplier_hi", p.multiplier_hi},
       {"update_epoch_minutes", p.update_epoch_minutes}};
}
inline void from_json(const nlohmann::json& j, PiConfig& p) {
  j.at("kp").get_to(p.kp);
  j.at("ki").get_to(p.ki);
  j.at("margin_target").get_to(p.margin_target);
  j.at("integral_clamp").get_to(p.integral_clamp);
  j.at("multiplier_lo").get_to(p.multiplier_lo);
  j.at("multiplier_hi").get_to(p.multiplier_hi);
  j.at("update_epoch_minutes").get_to(p.update_epoch_minutes);
}

inline void to_json(nlohmann::json& j, const GeneratorParams& g) {
  j = {{"n_publishers", g.n_publishers},
       {"n_campaigns", g.n_campaigns},
       {"horizon_minutes", g.horizon_minutes},
       {"warmup_minutes", g.warmup_minutes},
       {"floor_cpm", {g.floor_cpm_lo, g.floor_cpm_hi}},
       {"landscape_a", {g.landscape_a_lo, g.landscape_a_hi}},
       {"request_rate_log_uniform", {g.request_rate_lo, g.request_rate_hi}},
       {"target_cpi", {g.target_cpi_lo, g.target_cpi_hi}},
       {"pcvr", {g.pcvr_lo, g.pcvr_hi}},
       {"pctr_log_uniform", {g.pctr_lo, g.pctr_hi}},
       {"publisher_quality", {g.quality_lo, g.quality_hi}},
       {"cvr_bias", {g.cvr_bias_lo, g.cvr_bias_hi}},
       {"baseline_installs_log_uniform", {g.baseline_installs_lo, g.baseline_installs_hi}},
       {"warmup_budget_installs", g.warmup_budget_installs},
       {"min_budget_installs", g.min_budget_installs},
       {"budget_headroom", {g.budget_headroom_lo, g.budget_headroom_hi}}};
}
inline void from_json(const nlohmann::json& j, GeneratorParams& g) {
  auto pair = [&](const char* key, auto& lo, auto& hi) {
    lo = j.at(key).at(0);
    hi = j.at(key).at(1);
  };
  j.at("n_publishers").get_to(g.n_publishers);
  j.at("n_campaigns").get_to(g.n_campaigns);
  j.at("horizon_minutes").get_to(g.horizon_minutes);
  j.at("warmup_minutes").get_to(g.warmup_minutes);
  pair("floor_cpm", g.floor_cpm_lo, g.floor_cpm_hi);
  pair("landscape_a", g.landscape_a_lo, g.landscape_a_hi);
  pair("request_rate_log_uniform", g.request_rate_lo, g.request_rate_hi);
  pair("target_cpi", g.target_cpi_lo, g.target_cpi_hi);
  pair("pcvr", g.pcvr_lo, g.pcvr_hi);
  pair("pctr_log_uniform", g.pctr_lo, g.pctr_hi);
  pair("publisher_quality", g.quality_lo, g.quality_hi);
  pair("cvr_bias", g.cvr_bias_lo, g.cvr_bias_hi);
  pair("baseline_installs_log_uniform", g.baseline_installs_lo, g.baseline_installs_hi);
  g.warmup_budget_installs = j.value("warmup_budget_installs", 120.0);
  g.min_budget_installs = j.value("min_budget_installs", 10.0);
  if (j.contains("budget_headroom")) pair("budget_headroom", g.budget_headroom_lo, g.budget_headroom_hi);
}

inline void to_json(nlohmann::json& j, const Campaign& c) {
  j = {{"id", c.id},
       {"target_cpi_micros", c.target_cpi},
       {"budget_micros", c.budget},
       {"pcvr", c.pcvr},
       {"conversion_rate", c.conversion_rate},
       {"baseline_installs", c.baseline_installs}};
}
inline void from_json(const nlohmann::json& j, Campaign& c) {
  j.at("id").get_to(c.id);
  j.at("target_cpi_micros").get_to(c.target_cpi);
  j.at("budget_micros").get_to(c.budget);
  j.at("pcvr").get_to(c.pcvr);
  c.conversion_rate = j.value("conversion_rate", -1.0);
  j.at("baseline_installs").get_to(c.baseline_installs);
}

inline void to_json(nlohmann::json& j, const Publisher& p) {
  nlohmann::json pctr = nlohmann::json::object();
  for (const auto& [cid, v] : p.pctr) pctr[std::to_string(cid)] = v;
  j = {{"id", p.id},
       {"floor_price_micros", p.floor_price},
       {"landscape_a", p.landscape_a},
       {"request_rate", p.request_rate},
       {"pctr", pctr}};
}
inline void from_json(const nlohmann::json& j, Publisher& p) {
  j.at("id").get_to(p.id);
  j.at("floor_price_micros").get_to(p.floor_price);
  j.at("landscape_a").get_to(p.landscape_a);
  j.at("request_rate").get_to(p.request_rate);
  p.pctr.clear();
  for (const auto& [key, value] : j.at("pctr").items()) {
    p.pctr[static_cast<CampaignId>(std::stol(key))] = value.get<double>();
  }
}

inline void to_json(nlohmann::json& j, const Scenario& s) {
  j = {{"kind", "rtbq.scenario"},
       {"version", s.version},
       {"seed", s.seed},
       {"quantizer", s.quantizer},
       {"action_space", s.action_space},
       {"sim", s.sim},
       {"qlearning", s.qlearning},
       {"pi", s.pi},
       {"generator", s.generator},
       {"publishers", s.publishers},
       {"campaigns", s.campaigns}};
}
inline void from_json(const nlohmann::json& j, Scenario& s) {
  if (j.value("kind", "") != std::string("rtbq.scenario"))
    throw std::invalid_argument("scenario: not a scenario file");
  j.at("version").get_to(s.version);
  j.at("seed").get_to(s.seed);
  j.at("quantizer").get_to(s.quantizer);
  j.at("action_space").get_to(s.action_space);
  j.at("sim").get_to(s.sim);
  j.at("qlearning").get_to(s.qlearning);
  j.at("pi").get_to(s.pi);
  j.at("generator").get_to(s.generator);
  j.at("publishers").get_to(s.publishers);
  j.at("campaigns").get_to(s.campaigns);
}

inline std::string scenario_to_string(const Scenario& s) {
  nlohmann::json j = s;
  return j.dump(2) + "\n";
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << scenario_to_string(s);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scenario file: " + path);
  nlohmann::json j;
  in >> j;
  Scenario s = j.get<Scenario>();
  s.validate();
  return s;
}

}  // namespace rtbq
