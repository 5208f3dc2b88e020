// Command-line front end: generate scenarios, train tables, evaluate policies
// against the PI baseline, and sweep the margin/efficiency tradeoff.

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtbq/harness.hpp"

namespace fs = std::filesystem;
using namespace rtbq;

namespace {

std::vector<double> parse_lambdas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

GeneratorParams params_for_scale(const std::string& scale) {
  if (scale == "desk") return GeneratorParams::desk();
  if (scale == "paper") return GeneratorParams::paper_scale();
  throw CLI::ValidationError("--scale must be desk or paper");
}

void print_deltas(std::ostream& out, const Deltas& d) {
  out << "  delta spend        " << fmt_double(d.spend_pct) << " %\n"
      << "  delta margin       " << fmt_double(d.margin_pct) << " %\n"
      << "  delta budget util. " << fmt_double(d.budget_util_pct) << " %\n"
      << "  delta happy        " << fmt_double(d.happy_pct) << " %\n";
}

struct ExportFlags {
  std::string events_path;
  bool snapshots = false;
};

// Runs one arm with optional event/snapshot exports into out_dir.
ArmResult run_exported_arm(const Scenario& sc, Bidder& bidder, std::uint64_t seed,
                           const std::string& out_dir, const std::string& arm,
                           const ExportFlags& flags) {
  EventLog log;
  EventLog* log_ptr = flags.events_path.empty() ? nullptr : &log;
  std::function<void(const Simulation&)> hook;
  std::shared_ptr<std::ofstream> snap_stream;
  if (flags.snapshots) {
    fs::create_directories(out_dir);
    snap_stream = std::make_shared<std::ofstream>(
        (fs::path(out_dir) / (arm + "_snapshots.csv")).string(), std::ios::binary);
    *snap_stream << kSnapshotsHeader << '\n';
    hook = make_snapshot_writer(snap_stream);
  }
  ArmResult result = run_arm(sc, bidder, seed, log_ptr, hook);
  if (log_ptr) {
    fs::create_directories(out_dir);
    save_event_log(log, (fs::path(out_dir) / (arm + "_" + flags.events_path)).string());
  }
  return result;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rtbq: RTB auction simulator with a tabular Q-learning bid/cost policy"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a scenario file");
  std::string gen_scale = "desk";
  std::uint64_t gen_seed = 1;
  std::string gen_out = "scenario.json";
  int gen_pubs = 0, gen_camps = 0, gen_horizon_days = 0, gen_warmup_days = 0;
  gen->add_option("--scale", gen_scale, "desk or paper");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output scenario path");
  gen->add_option("--publishers", gen_pubs, "override publisher count");
  gen->add_option("--campaigns", gen_camps, "override campaign count");
  gen->add_option("--horizon-days", gen_horizon_days, "override horizon length");
  gen->add_option("--warmup-days", gen_warmup_days, "override warm-up length");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a Q-table on a scenario");
  std::string train_scenario;
  double train_lambda = 0.5;
  int train_episodes = 40;
  std::string train_out = "qtable.csv";
  train_cmd->add_option("--scenario", train_scenario, "scenario file")->required();
  train_cmd->add_option("--lambda", train_lambda, "margin/efficiency tradeoff in [0,1]");
  train_cmd->add_option("--episodes", train_episodes, "training passes over the week");
  train_cmd->add_option("--out", train_out, "output table path");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy against the PI baseline");
  std::string eval_scenario, eval_qtable, eval_policy, eval_out_dir = "eval_out";
  std::uint64_t eval_seed = 0;
  bool eval_snapshots = false;
  std::string eval_events;
  eval_cmd->add_option("--scenario", eval_scenario, "scenario file")->required();
  eval_cmd->add_option("--qtable", eval_qtable, "trained table file");
  eval_cmd->add_option("--policy", eval_policy, "fixed policy instead of a table: noop|intuitive");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed (default: scenario seed)");
  eval_cmd->add_option("--out-dir", eval_out_dir, "report directory");
  eval_cmd->add_flag("--snapshots", eval_snapshots, "export per-epoch entity snapshots");
  eval_cmd->add_option("--events", eval_events, "export event logs to this file name");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "train/evaluate across lambda values");
  std::string sweep_scenario, sweep_out_dir = "sweep_out";
  std::string sweep_lambdas = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  int sweep_episodes = 40, sweep_threads = 0;
  sweep_cmd->add_option("--scenario", sweep_scenario, "scenario file")->required();
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "comma-separated lambda list");
  sweep_cmd->add_option("--episodes", sweep_episodes, "training passes per lambda");
  sweep_cmd->add_option("--out-dir", sweep_out_dir, "report directory");
  sweep_cmd->add_option("--threads", sweep_threads, "parallel workers (0 = hardware)");

  // ---- baseline ----
  auto* base_cmd = app.add_subcommand("baseline", "run the PI controller alone");
  std::string base_scenario, base_out_dir = "baseline_out", base_events;
  std::uint64_t base_seed = 0;
  bool base_snapshots = false;
  base_cmd->add_option("--scenario", base_scenario, "scenario file")->required();
  base_cmd->add_option("--seed", base_seed, "run seed (default: scenario seed)");
  base_cmd->add_option("--out-dir", base_out_dir, "report directory");
  base_cmd->add_flag("--snapshots", base_snapshots, "export per-epoch entity snapshots");
  base_cmd->add_option("--events", base_events, "export event log to this file name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GeneratorParams params = params_for_scale(gen_scale);
      if (gen_pubs > 0) params.n_publishers = gen_pubs;
      if (gen_camps > 0) params.n_campaigns = gen_camps;
      if (gen_horizon_days > 0) params.horizon_minutes = gen_horizon_days * 1440;
      if (gen_warmup_days > 0) params.warmup_minutes = gen_warmup_days * 1440;
      const Scenario sc = generate_scenario(params, gen_seed);
      save_scenario(sc, gen_out);
      std::cout << "wrote " << gen_out << " (" << sc.publishers.size() << " publishers, "
                << sc.campaigns.size() << " campaigns, " << sc.sim.horizon_minutes / 1440
                << " days)\n";
    } else if (*train_cmd) {
      const Scenario sc = load_scenario(train_scenario);
      const QTable table = train(sc, train_lambda, train_episodes);
      save_qtable(table, train_out);
      std::int64_t visited = 0;
      for (auto v : table.visit_counts()) visited += v;
      std::cout << "wrote " << train_out << " (lambda " << train_lambda << ", "
                << train_episodes << " episodes, " << visited << " updates)\n";
    } else if (*eval_cmd) {
      const Scenario sc = load_scenario(eval_scenario);
      const std::uint64_t seed = eval_seed == 0 ? sc.sim.seed : eval_seed;
      PolicyFn fn;
      if (!eval_qtable.empty()) {
        const QTable table = load_qtable(eval_qtable);
        const PolicyTable policy = PolicyTable::from_qtable(table);
        policy.check_dims(sc.quantizer, sc.action_space);
        fn = policy_fn_of(policy, sc.quantizer, sc.action_space);
      } else if (eval_policy == "noop") {
        fn = noop_policy(sc.action_space);
      } else if (eval_policy == "intuitive") {
        fn = intuitive_policy(sc.action_space, sc.quantizer);
      } else {
        throw CLI::ValidationError("eval needs --qtable or --policy noop|intuitive");
      }
      const ExportFlags flags{eval_events, eval_snapshots};
      PolicyBidder policy_bidder(fn);
      PiBidder baseline_bidder(sc.pi);
      RunReport rep;
      rep.policy_rows = run_exported_arm(sc, policy_bidder, seed, eval_out_dir, "policy", flags).rows;
      rep.baseline_rows =
          run_exported_arm(sc, baseline_bidder, seed, eval_out_dir, "baseline", flags).rows;
      rep.deltas = deltas_between(rep.policy_final(), rep.baseline_final());
      save_run_report(rep, eval_out_dir);
      std::cout << "evaluation vs PI baseline (seed " << seed << "):\n";
      print_deltas(std::cout, rep.deltas);
      std::cout << "reports in " << eval_out_dir << "\n";
    } else if (*sweep_cmd) {
      const Scenario sc = load_scenario(sweep_scenario);
      const std::vector<double> lambdas = parse_lambdas(sweep_lambdas);
      const auto rows = sweep_lambda(sc, lambdas, sweep_episodes, sweep_threads);
      fs::create_directories(sweep_out_dir);
      save_sweep_csv(rows, (fs::path(sweep_out_dir) / "sweep.csv").string());
      save_curve_csv(rows, (fs::path(sweep_out_dir) / "curve.csv").string());
      std::cout << "lambda  d_spend%  d_margin%  d_butil%  d_happy%\n";
      for (const auto& r : rows) {
        std::printf("%6.2f  %8.2f  %9.2f  %8.2f  %8.2f\n", r.lambda, r.deltas.spend_pct,
                    r.deltas.margin_pct, r.deltas.budget_util_pct, r.deltas.happy_pct);
      }
      std::cout << "reports in " << sweep_out_dir << "\n";
    } else if (*base_cmd) {
      const Scenario sc = load_scenario(base_scenario);
      const std::uint64_t seed = base_seed == 0 ? sc.sim.seed : base_seed;
      const ExportFlags flags{base_events, base_snapshots};
      PiBidder bidder(sc.pi);
      const ArmResult res = run_exported_arm(sc, bidder, seed, base_out_dir, "baseline", flags);
      fs::create_directories(base_out_dir);
      auto out = open_out((fs::path(base_out_dir) / "epochs.csv").string());
      out << kEpochRowsHeader << '\n';
      write_epoch_rows_csv(out, "baseline", res.rows);
      const auto& fin = res.final_row();
      std::cout << "baseline run: spend " << to_units(fin.total_spend) << ", margin "
                << fin.margin_total << ", budget util. " << fin.budget_util << ", happy "
                << fin.happy << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
