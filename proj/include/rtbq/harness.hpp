#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rtbq/scenario.hpp"

namespace rtbq {

// ---------------------------------------------------------------------------
// Policies and bidders

// Deterministic state -> action map, the read-out of a trained table.
struct PolicyTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<int> action_of;  // flat action per flat state

  static PolicyTable from_qtable(const QTable& table) {
    PolicyTable p;
    p.n_states = table.n_states();
    p.n_actions = table.n_actions();
    p.action_of = extract_policy(table);
    return p;
  }

  void check_dims(const QuantizerConfig& quant, const ActionSpace& actions) const {
    if (n_states != quant.n_states() || n_actions != actions.n_actions() ||
        static_cast<int>(action_of.size()) != n_states)
      throw std::invalid_argument("policy: dimensions do not match the scenario");
  }
};

using PolicyFn = std::function<ActionIndex(const StateIndex&)>;

inline PolicyFn policy_fn_of(const PolicyTable& table, const QuantizerConfig& quant,
                             const ActionSpace& actions) {
  table.check_dims(quant, actions);
  return [table, quant, actions](const StateIndex& s) {
    return ActionIndex::from_flat(table.action_of.at(s.flat(quant)), actions);
  };
}

inline PolicyFn noop_policy(const ActionSpace& actions) {
  const ActionIndex a{actions.zero_m_index(), actions.zero_eta_index()};
  return [a](const StateIndex&) { return a; };
}

inline PolicyFn intuitive_policy(const ActionSpace& actions, const QuantizerConfig& quant) {
  return [&actions, quant](const StateIndex& s) { return intuitive_action(s, actions, quant); };
}

// Frozen-policy bidder: each epoch, every pair that won during the last hour
// is repriced from its base quote by the policy's action for its current
// state. Pairs without wins keep their prices.
class PolicyBidder : public Bidder {
 public:
  explicit PolicyBidder(PolicyFn policy) : policy_(std::move(policy)) {}

  void on_epoch(Simulation& sim) override {
    const std::size_t n = sim.n_campaigns();
    for (std::size_t j = 0; j < sim.n_publishers(); ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!sim.pair_active(j, i)) continue;
        const StateIndex s = sim.pair_state(j, i);
        const ActionIndex a = policy_(s);
        const double beta_hat = budget_bin_midpoint(s.budget_bin, sim.quantizer());
        sim.set_quote(j, i, apply_action(sim.base_quote_of(j, i), a, sim.actions(), beta_hat,
                                         &stats_));
      }
    }
  }

  const ApplyActionStats& stats() const { return stats_; }

 private:
  PolicyFn policy_;
  ApplyActionStats stats_;
};

struct TrainStep {
  int episode = 0;
  int epoch = 0;
  std::int32_t publisher = 0;
  std::int32_t campaign = 0;
  int state = 0;
  int action = 0;
  double reward_value = 0.0;
};
using TrainTrace = std::vector<TrainStep>;

// Learning bidder: rewards the previous action of every active pair from the
// ledger delta, updates the shared table, then samples the next action by
// Boltzmann exploration. Temperature decays across all epochs of a training
// run, spanning episodes.
class QTrainBidder : public Bidder {
 public:
  QTrainBidder(QTable& table, const Scenario& scenario, RewardConfig reward_cfg,
               TrainTrace* trace = nullptr)
      : table_(table),
        quant_(scenario.quantizer),
        actions_(scenario.action_space),
        reward_cfg_(reward_cfg),
        schedule_(scenario.qlearning.exploration),
        trace_(trace) {
    reward_cfg_.validate();
    schedule_.validate();
  }

  void begin_episode(int episode) {
    episode_ = episode;
    pending_.clear();
  }

  void on_epoch(Simulation& sim) override {
    const std::size_t n = sim.n_campaigns();
    if (pending_.size() != sim.n_publishers() * n)
      pending_.assign(sim.n_publishers() * n, Pending{});
    const double theta = schedule_.theta_at(global_epoch_);
    for (std::size_t j = 0; j < sim.n_publishers(); ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!sim.pair_active(j, i)) continue;
        const StateIndex state = sim.pair_state(j, i);
        const int s_now = state.flat(quant_);
        Pending& p = pending_[j * n + i];
        if (p.valid) {
          const RewardSnapshot snap = sim.snapshot_for(j, i, p.m_prev, p.eta_prev);
          const double r = reward(snap, reward_cfg_);
          q_update(table_, p.state, p.action, r, s_now);
          if (trace_)
            trace_->push_back(TrainStep{episode_, sim.epochs_completed(),
                                        static_cast<std::int32_t>(j),
                                        static_cast<std::int32_t>(i), p.state, p.action, r});
        }
        const std::uint64_t pair_key = j * n + i;
        const int a_flat = boltzmann_sample(table_, s_now, theta, [&] {
          return sim.random().uniform(RandomField::Stream::kExploration,
                                      static_cast<std::uint64_t>(episode_),
                                      static_cast<std::uint64_t>(sim.epochs_completed()),
                                      pair_key);
        });
        const ActionIndex a = ActionIndex::from_flat(a_flat, actions_);
        const double beta_hat = budget_bin_midpoint(state.budget_bin, quant_);
        sim.set_quote(j, i, apply_action(sim.base_quote_of(j, i), a, actions_, beta_hat,
                                         &stats_));
        p.state = s_now;
        p.action = a_flat;
        p.m_prev = sim.margin_now(j);
        p.eta_prev = sim.reward_eta_now(i);
        p.valid = true;
      }
    }
    ++global_epoch_;
  }

  std::int64_t epochs_seen() const { return global_epoch_; }
  const ApplyActionStats& stats() const { return stats_; }

 private:
  struct Pending {
    int state = 0;
    int action = 0;
    double m_prev = 0.0;
    double eta_prev = 0.0;
    bool valid = false;
  };

  QTable& table_;
  QuantizerConfig quant_;
  ActionSpace actions_;
  RewardConfig reward_cfg_;
  ExplorationSchedule schedule_;
  TrainTrace* trace_;
  std::vector<Pending> pending_;
  int episode_ = 0;
  std::int64_t global_epoch_ = 0;
  ApplyActionStats stats_;
};

// ---------------------------------------------------------------------------
// Train / evaluate / sweep

// Runs `episodes` training passes over the training-period randomness. Every
// episode replays the same environment draws; only exploration varies, so two
// trainings with one seed produce identical tables.
inline QTable train(const Scenario& scenario, double lambda, int episodes,
                    TrainTrace* trace = nullptr) {
  scenario.validate();
  QTable table(scenario.quantizer.n_states(), scenario.action_space.n_actions(),
               scenario.qlearning.alpha, scenario.qlearning.gamma,
               scenario.qlearning.alpha_visit_decay);
  QTrainBidder bidder(table, scenario, RewardConfig{lambda}, trace);
  for (int e = 0; e < episodes; ++e) {
    Simulation sim = scenario.make_simulation(RandomField::kTrainDomain);
    bidder.begin_episode(e);
    sim.run(bidder);
  }
  return table;
}

struct ArmResult {
  std::vector<Simulation::EpochRow> rows;
  const Simulation::EpochRow& final_row() const {
    if (rows.empty()) throw std::logic_error("arm: no epochs ran");
    return rows.back();
  }
};

// One evaluation-period run of an arbitrary bidder under the shared
// environment randomness for (seed, domain).
inline ArmResult run_arm(const Scenario& scenario, Bidder& bidder, std::uint64_t seed,
                         EventLog* log = nullptr,
                         std::function<void(const Simulation&)> epoch_hook = {},
                         std::uint64_t domain = RandomField::kTestDomain) {
  Simulation sim = scenario.make_simulation(domain, seed, log);
  if (epoch_hook) sim.set_epoch_end_hook(std::move(epoch_hook));
  sim.run(bidder);
  ArmResult r;
  r.rows = sim.epoch_rows();
  return r;
}

// Percent lift against the baseline magnitude. A zero baseline with a moved
// metric has no finite lift; it is reported as +/-inf.
inline double delta_pct(double policy_value, double baseline_value) {
  if (baseline_value == 0.0) {
    if (policy_value == 0.0) return 0.0;
    return policy_value > 0.0 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
  }
  return 100.0 * (policy_value - baseline_value) / std::abs(baseline_value);
}

struct Deltas {
  double spend_pct = 0.0;
  double margin_pct = 0.0;
  double budget_util_pct = 0.0;
  double happy_pct = 0.0;
};

inline Deltas deltas_between(const Simulation::EpochRow& policy,
                             const Simulation::EpochRow& baseline) {
  Deltas d;
  d.spend_pct = delta_pct(static_cast<double>(policy.total_spend),
                          static_cast<double>(baseline.total_spend));
  d.margin_pct = delta_pct(policy.margin_total, baseline.margin_total);
  d.budget_util_pct = delta_pct(policy.budget_util, baseline.budget_util);
  d.happy_pct = delta_pct(static_cast<double>(policy.happy), static_cast<double>(baseline.happy));
  return d;
}

struct RunReport {
  std::vector<Simulation::EpochRow> policy_rows;
  std::vector<Simulation::EpochRow> baseline_rows;
  Deltas deltas;

  const Simulation::EpochRow& policy_final() const { return policy_rows.back(); }
  const Simulation::EpochRow& baseline_final() const { return baseline_rows.back(); }
};

// One test-period week of the frozen policy against the margin-only
// controller on the same scenario, seed and environment randomness.
inline RunReport evaluate(const Scenario& scenario, const PolicyTable& policy,
                          std::uint64_t seed) {
  scenario.validate();
  policy.check_dims(scenario.quantizer, scenario.action_space);
  PolicyBidder pb(policy_fn_of(policy, scenario.quantizer, scenario.action_space));
  PiBidder base(scenario.pi);
  RunReport report;
  report.policy_rows = run_arm(scenario, pb, seed).rows;
  report.baseline_rows = run_arm(scenario, base, seed).rows;
  report.deltas = deltas_between(report.policy_rows.back(), report.baseline_rows.back());
  return report;
}

struct SweepRow {
  double lambda = 0.0;
  Deltas deltas;
  Simulation::EpochRow policy_final;
  Simulation::EpochRow baseline_final;
};

// Trains and evaluates one policy per lambda, in parallel across lambdas.
// Results are merged in input order, so the output is independent of thread
// scheduling.
inline std::vector<SweepRow> sweep_lambda(const Scenario& scenario,
                                          const std::vector<double>& lambdas, int episodes,
                                          int max_threads = 0) {
  if (lambdas.empty()) throw std::invalid_argument("sweep: no lambda values");
  scenario.validate();
  auto one = [&](double lambda) {
    const QTable table = train(scenario, lambda, episodes);
    const RunReport rep = evaluate(scenario, PolicyTable::from_qtable(table), scenario.sim.seed);
    SweepRow row;
    row.lambda = lambda;
    row.deltas = rep.deltas;
    row.policy_final = rep.policy_final();
    row.baseline_final = rep.baseline_final();
    return row;
  };

  std::vector<SweepRow> rows(lambdas.size());
  const int hw = max_threads > 0 ? max_threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 1 || lambdas.size() == 1) {
    for (std::size_t k = 0; k < lambdas.size(); ++k) rows[k] = one(lambdas[k]);
    return rows;
  }
  std::vector<std::future<SweepRow>> futs(lambdas.size());
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    futs[k] = std::async(std::launch::async, one, lambdas[k]);
  for (std::size_t k = 0; k < lambdas.size(); ++k) rows[k] = futs[k].get();
  return rows;
}

// ---------------------------------------------------------------------------
// File formats: all CSV numbers are printed with 17 significant digits so a
// parse reproduces the in-memory value exactly.

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

inline void write_epoch_rows_csv(std::ostream& out, const std::string& arm,
                                 const std::vector<Simulation::EpochRow>& rows) {
  for (const auto& r : rows) {
    out << arm << ',' << r.epoch << ',' << r.clock_minutes << ',' << r.total_spend << ','
        << r.total_cost << ',' << fmt_double(r.margin_total) << ',' << fmt_double(r.budget_util)
        << ',' << r.happy << ',' << r.clicks << ',' << r.installs << '\n';
  }
}

inline const char* kEpochRowsHeader =
    "arm,epoch,clock_minutes,spend_micros,cost_micros,margin,budget_util,happy,clicks,installs";

inline void save_run_report(const RunReport& rep, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    auto out = open_out((fs::path(dir) / "epochs.csv").string());
    out << kEpochRowsHeader << '\n';
    write_epoch_rows_csv(out, "policy", rep.policy_rows);
    write_epoch_rows_csv(out, "baseline", rep.baseline_rows);
  }
  {
    auto out = open_out((fs::path(dir) / "deltas.csv").string());
    out << "delta_spend_pct,delta_margin_pct,delta_budget_util_pct,delta_happy_pct\n";
    out << fmt_double(rep.deltas.spend_pct) << ',' << fmt_double(rep.deltas.margin_pct) << ','
        << fmt_double(rep.deltas.budget_util_pct) << ',' << fmt_double(rep.deltas.happy_pct)
        << '\n';
  }
}

inline const char* kSweepHeader =
    "lambda,delta_spend_pct,delta_margin_pct,delta_budget_util_pct,delta_happy_pct,"
    "policy_spend_micros,policy_margin,policy_budget_util,policy_happy,"
    "baseline_spend_micros,baseline_margin,baseline_budget_util,baseline_happy";

inline void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << fmt_double(r.lambda) << ',' << fmt_double(r.deltas.spend_pct) << ','
        << fmt_double(r.deltas.margin_pct) << ',' << fmt_double(r.deltas.budget_util_pct) << ','
        << fmt_double(r.deltas.happy_pct) << ',' << r.policy_final.total_spend << ','
        << fmt_double(r.policy_final.margin_total) << ','
        << fmt_double(r.policy_final.budget_util) << ',' << r.policy_final.happy << ','
        << r.baseline_final.total_spend << ',' << fmt_double(r.baseline_final.margin_total)
        << ',' << fmt_double(r.baseline_final.budget_util) << ',' << r.baseline_final.happy
        << '\n';
  }
}

// The (happy lift, margin lift) tradeoff curve, one point per lambda.
inline void save_curve_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "lambda,delta_happy_pct,delta_margin_pct\n";
  for (const auto& r : rows) {
    out << fmt_double(r.lambda) << ',' << fmt_double(r.deltas.happy_pct) << ','
        << fmt_double(r.deltas.margin_pct) << '\n';
  }
}

struct SweepCsvRow {
  double lambda = 0.0;
  Deltas deltas;
};

inline std::vector<SweepCsvRow> load_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read sweep file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader)
    throw std::runtime_error("sweep file: unexpected header");
  std::vector<SweepCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 5) throw std::runtime_error("sweep file: short row");
    SweepCsvRow r;
    r.lambda = std::strtod(f[0].c_str(), nullptr);
    r.deltas.spend_pct = std::strtod(f[1].c_str(), nullptr);
    r.deltas.margin_pct = std::strtod(f[2].c_str(), nullptr);
    r.deltas.budget_util_pct = std::strtod(f[3].c_str(), nullptr);
    r.deltas.happy_pct = std::strtod(f[4].c_str(), nullptr);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Trained-table persistence: versioned CSV, exact round trip.

inline void save_qtable(const QTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "rtbq_qtable,1\n";
  out << "n_states," << table.n_states() << ",n_actions," << table.n_actions() << ",alpha,"
      << fmt_double(table.alpha()) << ",gamma," << fmt_double(table.gamma())
      << ",alpha_visit_decay," << fmt_double(table.alpha_visit_decay()) << '\n';
  out << "state,action,q,visits\n";
  for (int s = 0; s < table.n_states(); ++s) {
    for (int a = 0; a < table.n_actions(); ++a) {
      out << s << ',' << a << ',' << fmt_double(table.q(s, a)) << ',' << table.visits(s, a)
          << '\n';
    }
  }
}

inline QTable load_qtable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read table file: " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"rtbq_qtable", "1"})
    throw std::runtime_error("table file: bad magic/version");
  if (!std::getline(in, line)) throw std::runtime_error("table file: missing dimensions");
  const auto dims = split_csv_line(line);
  if (dims.size() != 10 || dims[0] != "n_states" || dims[2] != "n_actions" || dims[4] != "alpha" ||
      dims[6] != "gamma" || dims[8] != "alpha_visit_decay")
    throw std::runtime_error("table file: bad dimension row");
  QTable table(std::stoi(dims[1]), std::stoi(dims[3]), std::strtod(dims[5].c_str(), nullptr),
               std::strtod(dims[7].c_str(), nullptr), std::strtod(dims[9].c_str(), nullptr));
  if (!std::getline(in, line) || line != "state,action,q,visits")
    throw std::runtime_error("table file: bad column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw std::runtime_error("table file: short row");
    const int s = std::stoi(f[0]);
    const int a = std::stoi(f[1]);
    table.q(s, a) = std::strtod(f[2].c_str(), nullptr);
    table.set_visit_count(s, a, std::stoll(f[3]));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Event-log and per-epoch entity exports.

inline void save_event_log(const EventLog& log, const std::string& path) {
  auto out = open_out(path);
  out << R"({"schema":"rtbq.events","version":1})" << '\n';
  for (const auto& e : log) {
    const char* type = nullptr;
    switch (e.type) {
      case EventType::kAuction: type = "auction"; break;
      case EventType::kImpression: type = "impression"; break;
      case EventType::kClick: type = "click"; break;
      case EventType::kInstall: type = "install"; break;
    }
    out << "{\"t\":" << e.minute << ",\"type\":\"" << type << "\",\"pub\":" << e.publisher
        << ",\"camp\":" << e.campaign << ",\"amount\":" << e.amount << ",\"aux\":" << e.aux
        << "}\n";
  }
}

inline const char* kSnapshotsHeader =
    "epoch,kind,id,spend_micros,cost_micros,installs,clicks,margin,eta";

// Epoch hook that appends one row per publisher and campaign after every
// completed epoch.
inline std::function<void(const Simulation&)> make_snapshot_writer(std::shared_ptr<std::ofstream> out) {
  return [out](const Simulation& sim) {
    const int epoch = sim.epochs_completed() - 1;
    const auto& ledger = sim.ledger();
    for (std::size_t j = 0; j < sim.n_publishers(); ++j) {
      *out << epoch << ",publisher," << sim.publishers()[j].id << ',' << ledger.spend(j) << ','
           << ledger.publisher_cost(j) << ",,," << fmt_double(sim.margin_now(j)) << ",\n";
    }
    for (std::size_t i = 0; i < sim.n_campaigns(); ++i) {
      *out << epoch << ",campaign," << sim.campaigns()[i].id << ",,"
           << ledger.campaign_cost(i) << ',' << ledger.installs(i) << ',' << ledger.clicks(i)
           << ",," << fmt_double(sim.eta_now(i)) << '\n';
    }
  };
}

}  // namespace rtbq
