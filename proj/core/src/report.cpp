#include "cflsim/report.hpp"

#include <sstream>

#include "nlohmann/json.hpp"

namespace cflsim {

nlohmann::json round_record_to_json(const RoundRecord& rec) {
  nlohmann::json j;
  j["round"] = rec.round;
  j["strategy"] = to_string(rec.schedule.strategy);
  j["selected"] = rec.schedule.selected;
  j["aggregation_sets"] = rec.schedule.aggregation_sets;
  j["aggregations"] = rec.aggregation_sets;
  j["deadline_s"] = rec.deadline_s;
  j["cumulative_s"] = rec.cumulative_s;
  j["mean_update_norm"] = rec.mean_update_norm;
  j["max_update_norm"] = rec.max_update_norm;
  j["eps1"] = rec.eps1;
  j["eps2"] = rec.eps2;
  j["thresholds_frozen_now"] = rec.thresholds_frozen_now;

  j["timeline"] = nlohmann::json::array();
  for (const auto& t : rec.schedule.timeline) {
    j["timeline"].push_back({{"client", t.client},
                             {"set", t.aggregation_set},
                             {"subchannel", t.subchannel},
                             {"compute_s", t.compute_s},
                             {"upload_s", t.upload_s},
                             {"compute_start", t.compute_start},
                             {"compute_end", t.compute_end},
                             {"upload_start", t.upload_start},
                             {"upload_end", t.upload_end}});
  }

  j["splits"] = nlohmann::json::array();
  for (const auto& s : rec.splits) {
    nlohmann::json e = {{"parent", s.parent},
                        {"child_first", s.child_first},
                        {"child_second", s.child_second},
                        {"sim_cross_max", s.sim_cross_max},
                        {"max_gamma", s.max_gamma},
                        {"gamma_threshold", s.gamma_threshold}};
    if (s.separation_gap) {
      e["separation_gap"] = *s.separation_gap;
    } else {
      e["separation_gap"] = nullptr;
    }
    j["splits"].push_back(std::move(e));
  }
  j["stops"] = nlohmann::json::array();
  for (const auto& s : rec.stops) j["stops"].push_back(s.cluster);

  j["clusters"] = nlohmann::json::array();
  for (const auto& n : rec.tree) {
    j["clusters"].push_back({{"id", n.id},
                             {"parent", n.parent},
                             {"child_first", n.child_first},
                             {"child_second", n.child_second},
                             {"status", n.stopped ? "stopped" : "active"},
                             {"members", n.members}});
  }

  j["metrics"] = nlohmann::json::array();
  for (const auto& m : rec.cluster_metrics) {
    j["metrics"].push_back({{"cluster", m.cluster_id},
                            {"participants", m.participants},
                            {"train_loss", m.train_loss},
                            {"test_accuracy", m.test_accuracy},
                            {"clients", m.clients},
                            {"client_test_accuracy", m.client_test_accuracy}});
  }
  return j;
}

nlohmann::json summary_to_json(const RunResult& res) {
  nlohmann::json j;
  j["config"] = res.config.to_json();
  j["rounds_executed"] = res.rounds_executed;
  j["total_sim_time_s"] = res.total_sim_time_s;
  j["all_stopped"] = res.all_stopped;
  j["halted_by_budget"] = res.halted_by_budget;
  j["eps1"] = res.eps1;
  j["eps2"] = res.eps2;
  j["thresholds_frozen_round"] = res.thresholds_frozen_round;

  const auto split_round = first_split_round(res.records);
  if (split_round) {
    j["first_split_round"] = *split_round;
  } else {
    j["first_split_round"] = nullptr;
  }

  int rounds_to_all_stopped = -1;
  if (res.all_stopped) {
    for (const auto& rec : res.records) {
      if (!rec.stops.empty()) rounds_to_all_stopped = rec.round;
    }
  }
  j["rounds_to_all_stopped"] = rounds_to_all_stopped;

  j["tree"] = nlohmann::json::array();
  for (int id = 0; id < res.tree.num_nodes(); ++id) {
    const ClusterNode& n = res.tree.node(id);
    j["tree"].push_back(
        {{"id", n.id},
         {"parent", n.parent},
         {"child_first", n.child_left},
         {"child_second", n.child_right},
         {"status",
          n.status == ClusterNode::Status::kStopped ? "stopped" : "active"},
         {"members", n.members},
         {"created_round", n.created_round},
         {"stopped_round", n.stopped_round}});
  }

  j["ground_truth_groups"] = res.dataset.ground_truth_groups;
  const std::vector<int> truth = res.dataset.group_of;
  j["leaf_partition_ari"] =
      adjusted_rand_index(leaf_partition_labels(res.tree), truth);

  const AccuracyReport rep =
      accuracy_report(res.tree, res.dataset, res.config.model);
  j["accuracy"] = {{"model_nodes", rep.model_nodes},
                   {"matrix", rep.matrix},
                   {"per_client_best", rep.per_client_best},
                   {"gap", rep.gap}};
  return j;
}

std::string metrics_csv(const RunResult& res) {
  std::ostringstream out;
  out << "round,metric,value\n";
  out.precision(12);
  auto row = [&](int round, const std::string& metric, double value) {
    out << round << ',' << metric << ',' << value << '\n';
  };
  for (const auto& rec : res.records) {
    row(rec.round, "deadline_s", rec.deadline_s);
    row(rec.round, "cumulative_s", rec.cumulative_s);
    row(rec.round, "selected", static_cast<double>(rec.schedule.selected.size()));
    row(rec.round, "aggregations", rec.aggregation_sets);
    row(rec.round, "mean_update_norm", rec.mean_update_norm);
    row(rec.round, "max_update_norm", rec.max_update_norm);
    int leaves = 0;
    int stopped = 0;
    for (const auto& n : rec.tree) {
      if (n.child_first >= 0) continue;
      ++leaves;
      stopped += n.stopped ? 1 : 0;
    }
    row(rec.round, "leaves", leaves);
    row(rec.round, "stopped_leaves", stopped);
    if (!rec.cluster_metrics.empty()) {
      double wloss = 0.0;
      double wacc = 0.0;
      double nloss = 0.0;
      double nacc = 0.0;
      for (const auto& m : rec.cluster_metrics) {
        const double w = static_cast<double>(m.clients.size());
        wloss += m.train_loss * w;
        wacc += m.test_accuracy * w;
        nloss += w;
        nacc += w;
        row(rec.round, "cluster." + std::to_string(m.cluster_id) + ".train_loss",
            m.train_loss);
        row(rec.round,
            "cluster." + std::to_string(m.cluster_id) + ".test_accuracy",
            m.test_accuracy);
      }
      row(rec.round, "mean_train_loss", wloss / nloss);
      row(rec.round, "mean_test_accuracy", wacc / nacc);
    }
  }
  return out.str();
}

}  // namespace cflsim
