// Serialization of run artifacts: per-round JSONL events, the final summary
// document and the plot-ready metrics CSV.
#pragma once

#include <string>

#include "nlohmann/json_fwd.hpp"

#include "cflsim/orchestrator.hpp"

namespace cflsim {

// One JSON object per round; dumping these line by line yields events.jsonl.
nlohmann::json round_record_to_json(const RoundRecord& rec);

// Final summary: config, outcome flags, cluster tree, accuracy matrix,
// per-client best accuracies and the fairness gap.
nlohmann::json summary_to_json(const RunResult& res);

// (round, metric, value) triples.
std::string metrics_csv(const RunResult& res);

}  // namespace cflsim
