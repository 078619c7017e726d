// Synthetic non-i.i.d., unbalanced federated datasets with a known
// ground-truth partition of clients into congruent distribution groups.
//
// All groups sample features from one shared Gaussian mixture (one component
// per class slot). Incongruence between groups is induced by group-specific
// label permutations, composed from transpositions arranged on a binary
// conflict tree over the groups: the pair swapped at the tree root separates
// the two top-level coalitions, deeper pairs separate sub-coalitions, and the
// sample mass assigned to a pair decays with its depth. This makes the
// conflict structure hierarchical, which is the regime recursive
// bipartitioning is built for.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "cflsim/model.hpp"

namespace cflsim {

struct SyntheticTaskSpec {
  int input_dim = 8;
  int num_classes = 4;
  double center_spread = 1.0;   // stddev of mixture component means
  double noise_stddev = 1.0;    // per-feature noise around the component mean
  double pair_mass_decay = 0.5; // mass factor per conflict-tree level
  double pair_mass_tilt = 0.6;  // share of a pair's mass on its first class
};

enum class SizeLaw { kPowerLaw, kUniform };

std::string to_string(SizeLaw law);
SizeLaw size_law_from_string(const std::string& s);

struct DataGenConfig {
  int clients = 15;            // K
  int true_groups = 3;         // M
  int classes_per_client = 4;
  SizeLaw size_law = SizeLaw::kPowerLaw;
  double power_law_exponent = 1.5;
  int min_shard = 64;
  int max_shard = 2048;
  double train_fraction = 0.8;
  SyntheticTaskSpec task;

  void validate() const;  // throws std::invalid_argument
};

struct ClientData {
  DataShard train;
  DataShard test;
};

struct GroupDistribution {
  std::vector<int> label_permutation;  // component c carries label perm[c]
  std::vector<int> support;            // component ids this group samples
  std::vector<double> masses;          // sampling mass per support entry
};

struct FederatedDataset {
  int input_dim = 0;
  int num_classes = 0;
  std::vector<ClientData> shards;                    // indexed by client id
  std::vector<int> group_of;                         // client id -> group id
  std::vector<std::vector<int>> ground_truth_groups; // partition of clients
  std::vector<GroupDistribution> group_distributions;

  int total_train_samples() const;
};

// Generates K client shards over M congruent-distribution groups.
// Deterministic for a given (config, seed).
FederatedDataset generate(const DataGenConfig& config, std::uint64_t seed);

// Disjoint stratified-by-label split; both sides are guaranteed non-empty.
std::pair<DataShard, DataShard> split(const DataShard& shard,
                                      double train_fraction,
                                      std::uint64_t seed);

// Portable JSON round-trip of a generated dataset (plain numeric arrays).
nlohmann::json dataset_to_json(const FederatedDataset& ds);
FederatedDataset dataset_from_json(const nlohmann::json& j);

}  // namespace cflsim
