// cflsim command line: single runs, multi-strategy comparison campaigns and
// the convergence-bound harness.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "cflsim/bound.hpp"
#include "cflsim/config.hpp"
#include "cflsim/orchestrator.hpp"
#include "cflsim/report.hpp"
#include "cflsim/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int log_verbosity() {
  const char* env = std::getenv("CFLSIM_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_verbosity() >= 1) std::cerr << "[cflsim] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_verbosity() >= 2) std::cerr << "[cflsim:debug] " << msg << "\n";
}

struct RunOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<int> eval_every;
};

json load_config_doc(const RunOptions& opt) {
  json doc = json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) {
      throw std::invalid_argument("cannot open config file '" +
                                  opt.config_path + "'");
    }
    doc = json::parse(in);
  }
  for (const auto& kv : opt.overrides) cflsim::apply_override(doc, kv);
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.strategy) doc["strategy"] = *opt.strategy;
  if (opt.eval_every) doc["eval_every"] = *opt.eval_every;
  return doc;
}

// Executes one run, streaming events.jsonl as rounds complete so partial
// logs survive an abort. Returns the summary document.
json execute_run(const cflsim::ExperimentConfig& cfg, const fs::path& dir,
                 const json& config_doc, const std::vector<std::string>& overrides) {
  fs::create_directories(dir);
  std::ofstream events(dir / "events.jsonl");
  if (!events) {
    throw std::runtime_error("cannot write to output directory " +
                             dir.string());
  }
  const auto started = std::chrono::steady_clock::now();

  cflsim::RunResult result =
      cflsim::run(cfg, [&](const cflsim::RoundRecord& rec) {
        events << cflsim::round_record_to_json(rec).dump() << "\n";
        events.flush();
        log_debug("round " + std::to_string(rec.round) + " done, deadline " +
                  std::to_string(rec.deadline_s) + "s");
      });

  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();

  json summary = cflsim::summary_to_json(result);
  summary["overrides"] = overrides;
  {
    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "metrics.csv");
    out << cflsim::metrics_csv(result);
  }
  {
    json manifest;
    manifest["config"] = cfg.to_json();
    manifest["config_input"] = config_doc;
    manifest["overrides"] = overrides;
    manifest["seed"] = cfg.seed;
    manifest["version"] = std::string("cflsim ") + cflsim::kVersion;
    manifest["wall_clock_s"] = wall_s;
    manifest["artifacts"] = {{"events", "events.jsonl"},
                             {"summary", "summary.json"},
                             {"metrics", "metrics.csv"}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
  return summary;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const RunOptions& opt) {
  json doc;
  cflsim::ExperimentConfig cfg;
  try {
    doc = load_config_doc(opt);
    cfg = cflsim::ExperimentConfig::from_json(doc);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const json summary = execute_run(cfg, opt.out_dir, doc, opt.overrides);
    log_info("run finished: " +
             std::to_string(summary["rounds_executed"].get<int>()) +
             " rounds, gap " +
             std::to_string(summary["accuracy"]["gap"].get<double>()));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    return 1;
  }
}

int cmd_compare(const RunOptions& opt, const std::string& strategies_csv,
                const std::string& seeds_csv) {
  std::vector<std::string> strategies = split_csv(strategies_csv);
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_csv(seeds_csv)) {
    seeds.push_back(std::stoull(s));
  }
  if (strategies.empty() || seeds.empty()) {
    std::cerr << "config error: --strategies and --seeds must be non-empty\n";
    return 2;
  }

  json base_doc;
  try {
    base_doc = load_config_doc(opt);
    for (const auto& s : strategies) {
      (void)cflsim::strategy_from_string(s);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "comparison.csv");
  csv << "strategy,seed,first_split_round,final_gap,rounds_to_all_stopped,"
         "total_sim_time_s,ari\n";

  struct Agg {
    std::vector<double> split_rounds;
    std::vector<double> gaps;
  };
  std::map<std::string, Agg> agg;

  try {
    for (const auto& strategy : strategies) {
      for (std::uint64_t seed : seeds) {
        json doc = base_doc;
        doc["strategy"] = strategy;
        doc["seed"] = seed;
        cflsim::ExperimentConfig cfg = cflsim::ExperimentConfig::from_json(doc);
        const fs::path cell =
            out_dir / (strategy + "_s" + std::to_string(seed));
        log_info("compare cell " + strategy + " seed " + std::to_string(seed));
        const json summary = execute_run(cfg, cell, doc, opt.overrides);

        const double gap = summary["accuracy"]["gap"].get<double>();
        const json fsr = summary["first_split_round"];
        const double split_round =
            fsr.is_null() ? static_cast<double>(cfg.rounds_max + 1)
                          : fsr.get<double>();
        csv << strategy << ',' << seed << ','
            << (fsr.is_null() ? std::string("") : std::to_string(fsr.get<int>()))
            << ',' << gap << ',' << summary["rounds_to_all_stopped"].get<int>()
            << ',' << summary["total_sim_time_s"].get<double>() << ','
            << summary["leaf_partition_ari"].get<double>() << "\n";
        agg[strategy].split_rounds.push_back(split_round);
        agg[strategy].gaps.push_back(gap);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    return 1;
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto stddev = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
  };

  json summary = json::array();
  for (const auto& [strategy, a] : agg) {
    summary.push_back({{"strategy", strategy},
                       {"mean_first_split_round", mean(a.split_rounds)},
                       {"stddev_first_split_round", stddev(a.split_rounds)},
                       {"mean_final_gap", mean(a.gaps)},
                       {"stddev_final_gap", stddev(a.gaps)}});
  }
  std::ofstream out(out_dir / "comparison_summary.json");
  out << summary.dump(2) << "\n";
  return 0;
}

int cmd_bound(const std::string& out_dir_s, double alpha, double beta,
              int dim, int clients, double center_spread, double noise_std,
              const std::string& steps_csv, int rounds, int seeds,
              double slack, std::uint64_t seed) {
  std::vector<int> steps;
  for (const auto& s : split_csv(steps_csv)) steps.push_back(std::stoi(s));
  if (steps.empty()) {
    std::cerr << "config error: --local-steps must be non-empty\n";
    return 2;
  }
  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);

  try {
    const cflsim::QuadraticProblem problem = cflsim::make_quadratic_problem(
        dim, clients, alpha, beta, center_spread, seed);
    json violations = json::array();
    for (int t : steps) {
      const cflsim::EmpiricalCheckReport rep = cflsim::empirical_check(
          problem, t, rounds, seeds, noise_std, slack, seed);
      std::ofstream csv(out_dir / ("bound_T" + std::to_string(t) + ".csv"));
      csv << "round,empirical,bound,loss_gap,corollary_bound\n";
      csv.precision(15);
      for (int r = 0; r <= rounds; ++r) {
        csv << r << ',' << rep.empirical_mean[static_cast<std::size_t>(r)]
            << ',' << rep.bound[static_cast<std::size_t>(r)] << ','
            << rep.loss_gap_mean[static_cast<std::size_t>(r)] << ','
            << 0.5 * beta * rep.bound[static_cast<std::size_t>(r)] << "\n";
      }
      violations.push_back({{"local_steps", t},
                            {"eta", rep.eta},
                            {"rho_sq_measured", rep.rho_sq_measured},
                            {"het_measured", rep.het_measured},
                            {"slack", rep.slack},
                            {"violations", rep.violations},
                            {"corollary_violations", rep.corollary_violations}});
      log_info("T=" + std::to_string(t) + ": " +
               std::to_string(rep.violations) + " violations over " +
               std::to_string(rounds) + " rounds");
    }
    std::ofstream out(out_dir / "violations.json");
    out << violations.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "bound harness failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered federated learning simulator over a wireless edge"};
  app.require_subcommand(1);

  RunOptions run_opt;
  std::uint64_t seed_arg = 0;
  std::string strategy_arg;
  int eval_every_arg = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", run_opt.config_path,
                    "JSON experiment config (defaults apply when omitted)");
    cmd->add_option("--out", run_opt.out_dir, "Output directory");
    cmd->add_option("--set", run_opt.overrides,
                    "Override a config key, e.g. --set wireless.subchannels=4")
        ->take_all();
    cmd->add_option("--seed", seed_arg, "Master seed override");
    cmd->add_option("--eval-every", eval_every_arg,
                    "Evaluate metrics every n rounds");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Execute a single experiment");
  add_common(run_cmd);
  run_cmd->add_option("--strategy", strategy_arg,
                      "Scheduling strategy (proposed_two_phase, random, "
                      "best_channel, best_l2norm, max_samples)");

  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "Run a strategies x seeds campaign and summarize it");
  add_common(cmp_cmd);
  std::string strategies_csv = "proposed_two_phase,random";
  std::string seeds_csv = "1,2,3";
  cmp_cmd->add_option("--strategies", strategies_csv,
                      "Comma-separated strategy list");
  cmp_cmd->add_option("--seeds", seeds_csv, "Comma-separated seed list");

  CLI::App* bound_cmd = app.add_subcommand(
      "bound", "Evaluate the convergence bound on a quadratic problem");
  std::string bound_out = "out";
  double alpha = 1.0;
  double beta = 1.5;
  int dim = 10;
  int clients = 10;
  double center_spread = 1.0;
  double noise_std = 0.1;
  std::string steps_csv = "1,5,10";
  int rounds = 100;
  int bound_seeds = 50;
  double slack = 1.05;
  std::uint64_t bound_seed = 1;
  bound_cmd->add_option("--out", bound_out, "Output directory");
  bound_cmd->add_option("--alpha", alpha, "Strong convexity constant");
  bound_cmd->add_option("--beta", beta, "Smoothness constant");
  bound_cmd->add_option("--dim", dim, "Problem dimension");
  bound_cmd->add_option("--clients", clients, "Number of quadratic clients");
  bound_cmd->add_option("--center-spread", center_spread,
                        "Stddev of client optima (0 = identical clients)");
  bound_cmd->add_option("--noise-std", noise_std,
                        "Gradient noise stddev per component");
  bound_cmd->add_option("--local-steps", steps_csv,
                        "Comma-separated list of T values");
  bound_cmd->add_option("--rounds", rounds, "Rounds to simulate");
  bound_cmd->add_option("--seeds", bound_seeds, "Number of seeds");
  bound_cmd->add_option("--slack", slack, "Multiplicative tolerance");
  bound_cmd->add_option("--seed", bound_seed, "Master seed");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->count("--seed") || cmp_cmd->count("--seed")) {
    run_opt.seed = seed_arg;
  }
  if (run_cmd->count("--strategy")) run_opt.strategy = strategy_arg;
  if (run_cmd->count("--eval-every") || cmp_cmd->count("--eval-every")) {
    run_opt.eval_every = eval_every_arg;
  }

  if (app.got_subcommand(run_cmd)) return cmd_run(run_opt);
  if (app.got_subcommand(cmp_cmd)) {
    return cmd_compare(run_opt, strategies_csv, seeds_csv);
  }
  return cmd_bound(bound_out, alpha, beta, dim, clients, center_spread,
                   noise_std, steps_csv, rounds, bound_seeds, slack,
                   bound_seed);
}
