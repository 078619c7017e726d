// The full training loop: per round, schedule -> broadcast -> local train ->
// pipelined collection -> weighted averaging -> cluster maintenance, with
// metrics capture and time-budget accounting.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "cflsim/clustering.hpp"
#include "cflsim/config.hpp"
#include "cflsim/datagen.hpp"
#include "cflsim/scheduling.hpp"
#include "cflsim/wireless.hpp"

namespace cflsim {

struct SplitEvent {
  int parent = -1;
  int child_first = -1;
  int child_second = -1;
  double sim_cross_max = 0.0;
  double max_gamma = 0.0;
  double gamma_threshold = 0.0;
  std::optional<double> separation_gap;
};

struct StopEvent {
  int cluster = -1;
};

struct ClusterMetric {
  int cluster_id = -1;
  int participants = 0;
  double train_loss = 0.0;     // weighted by train shard size
  double test_accuracy = 0.0;  // weighted by test shard size
  std::vector<int> clients;
  std::vector<double> client_test_accuracy;  // aligned with `clients`
};

struct TreeSnapshotNode {
  int id = -1;
  int parent = -1;
  int child_first = -1;
  int child_second = -1;
  bool stopped = false;
  std::vector<int> members;
};

struct RoundRecord {
  int round = 0;
  ScheduleDecision schedule;
  int aggregation_sets = 0;
  double deadline_s = 0.0;
  double cumulative_s = 0.0;
  double mean_update_norm = 0.0;
  double max_update_norm = 0.0;
  std::vector<SplitEvent> splits;
  std::vector<StopEvent> stops;
  bool thresholds_frozen_now = false;
  double eps1 = 0.0;  // values in force this round (0 before freezing)
  double eps2 = 0.0;
  std::vector<ClusterMetric> cluster_metrics;  // empty off eval rounds
  std::vector<TreeSnapshotNode> tree;
};

struct RunResult {
  ExperimentConfig config;
  FederatedDataset dataset;
  std::vector<ClientProfile> profiles;
  ClusterTree tree{1, {}};
  std::vector<RoundRecord> records;
  int rounds_executed = 0;
  double total_sim_time_s = 0.0;
  bool all_stopped = false;
  bool halted_by_budget = false;
  int thresholds_frozen_round = -1;  // -1 = never froze (relative mode)
  double eps1 = 0.0;
  double eps2 = 0.0;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

// Executes the loop until every cluster reaches its stopping point, rounds_max
// is exhausted, or the next round would overrun the time budget (that round is
// discarded). Deterministic for a given config, in both serial and parallel
// client-training modes.
RunResult run(const ExperimentConfig& cfg, const RoundCallback& on_round = {});

// Smallest round index whose record contains a split event.
std::optional<int> first_split_round(const std::vector<RoundRecord>& records);

struct AccuracyReport {
  std::vector<int> model_nodes;  // root first, then every leaf
  std::vector<std::vector<double>> matrix;  // model x client test accuracy
  std::vector<double> per_client_best;
  double gap = 0.0;  // max per-client best minus min per-client best
};

// Evaluates the conventional (root) model and every leaf model on every
// client's test shard.
AccuracyReport accuracy_report(const ClusterTree& tree,
                               const FederatedDataset& dataset,
                               const ModelSpec& spec);

// Per-client leaf assignment, as dense labels usable for partition scoring.
std::vector<int> leaf_partition_labels(const ClusterTree& tree);

double adjusted_rand_index(const std::vector<int>& labels_a,
                           const std::vector<int>& labels_b);

}  // namespace cflsim
