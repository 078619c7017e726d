// Client selection and upload scheduling: the two-phase fairness+greedy
// strategy with bandwidth-reuse aggregation sets, plus the four baseline
// strategies used for comparison.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cflsim {

enum class Strategy {
  kProposedTwoPhase,
  kRandom,
  kBestChannel,
  kBestL2Norm,
  kMaxSamples,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
const std::vector<Strategy>& all_strategies();

struct ClientTimeline {
  int client = -1;
  int aggregation_set = -1;  // j: which batch of concurrent uploads
  int subchannel = -1;       // position within the set
  double compute_s = 0.0;
  double upload_s = 0.0;
  double compute_start = 0.0;
  double compute_end = 0.0;
  double upload_start = 0.0;
  double upload_end = 0.0;
};

struct ScheduleDecision {
  int round = 0;
  Strategy strategy = Strategy::kProposedTwoPhase;
  std::vector<int> selected;  // Omega_r, ascending estimated total latency
  std::vector<std::vector<int>> aggregation_sets;
  std::vector<ClientTimeline> timeline;  // parallel to `selected`
  double deadline_s = 0.0;               // T_r = max upload_end
};

// Number of server aggregations per round: ceil(|Omega_r| / N).
int aggregation_count(int selected_count, int subchannels);

// Chunks the latency-sorted selection into consecutive sets of N (the last
// one may be smaller).
std::vector<std::vector<int>> build_aggregation_sets(
    const std::vector<int>& omega_sorted_by_latency, int subchannels);

// Computes per-client timestamps under bandwidth reuse: the client at
// position p of set j uploads on sub-channel p, starting when both its own
// computation and the position-p upload of set j-1 have finished. All
// computations start at time zero (downlink broadcast is instantaneous).
ScheduleDecision pipeline_timeline(
    const std::vector<int>& omega_sorted_by_latency,
    const std::vector<double>& compute_s_by_position,
    const std::vector<double>& upload_s_by_position, int subchannels);

struct SelectionInputs {
  int round = 1;
  int clients = 0;  // K
  // Members of non-stopped / stopped leaf clusters.
  std::vector<std::vector<int>> active_clusters;
  std::vector<std::vector<int>> stopped_clusters;
  std::vector<double> total_latency_s;   // per client, this round's estimate
  std::vector<double> channel_gain;      // per client
  std::vector<double> prev_update_norm;  // per client; < 0 means unobserved
  std::vector<int> samples;              // D_k
};

// Returns Omega_r sorted ascending by client id; the caller orders it by
// latency before building aggregation sets.
std::vector<int> select(Strategy strategy, const SelectionInputs& in,
                        int subchannels, std::uint64_t seed);

}  // namespace cflsim
