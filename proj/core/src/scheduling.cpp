#include "cflsim/scheduling.hpp"

#include <algorithm>
#include <stdexcept>

#include "cflsim/rng.hpp"

namespace cflsim {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kProposedTwoPhase: return "proposed_two_phase";
    case Strategy::kRandom: return "random";
    case Strategy::kBestChannel: return "best_channel";
    case Strategy::kBestL2Norm: return "best_l2norm";
    case Strategy::kMaxSamples: return "max_samples";
  }
  throw std::logic_error("unreachable strategy value");
}

Strategy strategy_from_string(const std::string& s) {
  for (Strategy k : all_strategies()) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> kAll = {
      Strategy::kProposedTwoPhase, Strategy::kRandom, Strategy::kBestChannel,
      Strategy::kBestL2Norm, Strategy::kMaxSamples};
  return kAll;
}

int aggregation_count(int selected_count, int subchannels) {
  if (selected_count < 1 || subchannels < 1) {
    throw std::invalid_argument(
        "aggregation_count needs positive selection and sub-channel counts");
  }
  return (selected_count + subchannels - 1) / subchannels;
}

std::vector<std::vector<int>> build_aggregation_sets(
    const std::vector<int>& omega_sorted_by_latency, int subchannels) {
  if (omega_sorted_by_latency.empty()) {
    throw std::invalid_argument("selection must be non-empty");
  }
  if (subchannels < 1) throw std::invalid_argument("subchannels must be >= 1");
  std::vector<std::vector<int>> sets;
  for (std::size_t begin = 0; begin < omega_sorted_by_latency.size();
       begin += static_cast<std::size_t>(subchannels)) {
    const std::size_t end =
        std::min(begin + static_cast<std::size_t>(subchannels),
                 omega_sorted_by_latency.size());
    sets.emplace_back(omega_sorted_by_latency.begin() + static_cast<std::ptrdiff_t>(begin),
                      omega_sorted_by_latency.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return sets;
}

ScheduleDecision pipeline_timeline(
    const std::vector<int>& omega_sorted_by_latency,
    const std::vector<double>& compute_s_by_position,
    const std::vector<double>& upload_s_by_position, int subchannels) {
  const std::size_t n = omega_sorted_by_latency.size();
  if (n == 0 || compute_s_by_position.size() != n ||
      upload_s_by_position.size() != n) {
    throw std::invalid_argument("timeline inputs must be non-empty and aligned");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (compute_s_by_position[i] <= 0.0 || upload_s_by_position[i] <= 0.0) {
      throw std::invalid_argument("durations must be positive");
    }
  }

  ScheduleDecision out;
  out.selected = omega_sorted_by_latency;
  out.aggregation_sets =
      build_aggregation_sets(omega_sorted_by_latency, subchannels);
  out.timeline.resize(n);

  // Per sub-channel, the time its previous upload finishes.
  std::vector<double> channel_free(static_cast<std::size_t>(subchannels), 0.0);
  std::size_t pos = 0;
  for (std::size_t j = 0; j < out.aggregation_sets.size(); ++j) {
    for (std::size_t p = 0; p < out.aggregation_sets[j].size(); ++p, ++pos) {
      ClientTimeline& t = out.timeline[pos];
      t.client = out.aggregation_sets[j][p];
      t.aggregation_set = static_cast<int>(j);
      t.subchannel = static_cast<int>(p);
      t.compute_s = compute_s_by_position[pos];
      t.upload_s = upload_s_by_position[pos];
      t.compute_start = 0.0;
      t.compute_end = t.compute_s;
      t.upload_start = std::max(t.compute_end, channel_free[p]);
      t.upload_end = t.upload_start + t.upload_s;
      channel_free[p] = t.upload_end;
      out.deadline_s = std::max(out.deadline_s, t.upload_end);
    }
  }
  return out;
}

std::vector<int> select(Strategy strategy, const SelectionInputs& in,
                        int subchannels, std::uint64_t seed) {
  if (in.clients < 1) throw std::invalid_argument("no clients to select from");
  const int take = std::min(subchannels, in.clients);

  auto top_by = [&](auto score) {
    std::vector<int> ids(static_cast<std::size_t>(in.clients));
    for (int k = 0; k < in.clients; ++k) ids[static_cast<std::size_t>(k)] = k;
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      const double sa = score(a);
      const double sb = score(b);
      return sa != sb ? sa > sb : a < b;
    });
    ids.resize(static_cast<std::size_t>(take));
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  switch (strategy) {
    case Strategy::kProposedTwoPhase: {
      // Phase 1 (fairness): every member of every non-stopped cluster.
      // Phase 2 (greedy): from each stopped cluster, only the member with
      // the lowest total latency; ties go to the lowest client id.
      std::vector<int> omega;
      for (const auto& cluster : in.active_clusters) {
        omega.insert(omega.end(), cluster.begin(), cluster.end());
      }
      for (const auto& cluster : in.stopped_clusters) {
        if (cluster.empty()) continue;
        int best = cluster.front();
        for (int k : cluster) {
          if (in.total_latency_s[static_cast<std::size_t>(k)] <
                  in.total_latency_s[static_cast<std::size_t>(best)] ||
              (in.total_latency_s[static_cast<std::size_t>(k)] ==
                   in.total_latency_s[static_cast<std::size_t>(best)] &&
               k < best)) {
            best = k;
          }
        }
        omega.push_back(best);
      }
      std::sort(omega.begin(), omega.end());
      return omega;
    }
    case Strategy::kRandom: {
      RngStream rng(derive_seed(seed, "select.random",
                                static_cast<std::uint64_t>(in.round)));
      return rng.sample_without_replacement(in.clients, take);
    }
    case Strategy::kBestChannel:
      return top_by([&](int k) {
        return in.channel_gain[static_cast<std::size_t>(k)];
      });
    case Strategy::kBestL2Norm: {
      bool any_observed = false;
      for (double v : in.prev_update_norm) any_observed |= v >= 0.0;
      if (in.round <= 1 || !any_observed) {
        RngStream rng(derive_seed(seed, "select.l2norm_init",
                                  static_cast<std::uint64_t>(in.round)));
        return rng.sample_without_replacement(in.clients, take);
      }
      return top_by([&](int k) {
        return in.prev_update_norm[static_cast<std::size_t>(k)];
      });
    }
    case Strategy::kMaxSamples:
      return top_by([&](int k) {
        return static_cast<double>(in.samples[static_cast<std::size_t>(k)]);
      });
  }
  throw std::logic_error("unreachable strategy value");
}

}  // namespace cflsim
