// Clustered federated learning engine: weighted averaging, cosine similarity
// over client updates, split condition tests, exhaustive optimal
// bipartitioning, the parameter tree, stopping and separation-gap metrics.
#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cflsim/param_vector.hpp"

namespace cflsim {

// Weighted average sum_k (w_k / sum w) * params_k; entries must be supplied
// in ascending client id order so the floating-point sum is reproducible.
ParamVector federated_average(const std::vector<ParamVector>& params,
                              const std::vector<double>& weights);

// <a,b> / (|a||b|), clamped into [-1, 1]. Throws on a zero vector.
double cosine_similarity(const ParamVector& a, const ParamVector& b);

struct SimilarityMatrix {
  std::vector<int> members;    // sorted ascending
  std::vector<double> values;  // row-major, size n*n

  int size() const { return static_cast<int>(members.size()); }
  double at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * members.size() +
                  static_cast<std::size_t>(j)];
  }

  static SimilarityMatrix from_updates(
      const std::vector<int>& members,
      const std::map<int, ParamVector>& updates);
};

// True iff |mean update| < eps1 and max member update norm > eps2: the
// cluster model sits near a stationary point while members still disagree.
bool split_conditions(double cluster_mean_update_norm,
                      const std::vector<double>& member_update_norms,
                      double eps1, double eps2);

struct BipartitionResult {
  std::vector<int> first;   // contains the smallest member id, sorted
  std::vector<int> second;  // sorted
  double sim_cross_max = 0.0;
};

// Exhaustive argmin-of-max-cross-similarity bipartition. Ties resolve to the
// lexicographically smallest first side. Throws above 16 members.
BipartitionResult bipartition(const SimilarityMatrix& sim);

inline constexpr int kMaxBipartitionMembers = 16;

struct GammaCheckResult {
  bool split_allowed = false;
  double max_gamma = 0.0;
  double threshold = 0.0;
};

// gamma_k = |mean_side(k) - dw_k| / |mean_side(k)|, where the side mean of
// the candidate sub-cluster containing k stands in for the (unobservable)
// population gradient of k's distribution. The split is allowed iff
// max gamma_k < sqrt((1 - sim_cross_max) / 2). Degenerate (zero) side means
// reject the split.
GammaCheckResult gamma_check(const BipartitionResult& parts,
                             const std::map<int, ParamVector>& updates,
                             double sim_cross_max);

// True iff max member update norm < eps2 (all members congruent; the cluster
// has reached its stopping point).
bool stopping_check(const std::vector<double>& member_update_norms,
                    double eps2);

// min within-part similarity minus max cross-part similarity. Not applicable
// (nullopt) when the partition yields no cross pairs or no within pairs.
std::optional<double> separation_gap(
    const SimilarityMatrix& sim,
    const std::vector<std::vector<int>>& partition);

struct ClusterNode {
  int id = -1;
  std::vector<int> members;  // sorted ascending
  ParamVector model;
  int parent = -1;
  int child_left = -1;
  int child_right = -1;
  enum class Status { kActive, kStopped } status = Status::kActive;
  int created_round = 0;
  int stopped_round = -1;

  bool is_leaf() const { return child_left < 0; }
};

// The CFL parameter tree. The root holds the conventional FL model; leaves
// partition the client population at all times.
class ClusterTree {
 public:
  ClusterTree(int num_clients, ParamVector root_model);

  const ClusterNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_clients() const { return static_cast<int>(leaf_of_.size()); }

  std::vector<int> leaf_ids() const;  // ascending node id
  int leaf_of(int client) const { return leaf_of_.at(static_cast<std::size_t>(client)); }

  bool all_leaves_stopped() const;

  // Splits a leaf into two children (which inherit the parent model) and
  // returns their node ids. Throws if the pieces do not partition the leaf
  // or the leaf is stopped.
  std::pair<int, int> split(int node_id, const std::vector<int>& first,
                            const std::vector<int>& second, int round);

  void mark_stopped(int node_id, int round);
  void set_model(int node_id, ParamVector model);

  // Verifies that leaves partition the client set; throws std::logic_error.
  void check_partition_invariant() const;

 private:
  std::vector<ClusterNode> nodes_;
  std::vector<int> leaf_of_;  // client id -> leaf node id
};

}  // namespace cflsim
