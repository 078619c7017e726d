#include "cflsim/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "cflsim/rng.hpp"

namespace cflsim {
namespace {

struct ConflictNode {
  int pair_first = -1;   // class swapped against pair_second
  int pair_second = -1;
  int depth = 0;
  std::vector<int> left_groups;
  std::vector<int> right_groups;
};

// Recursively halves the group list; each internal node owns one class pair.
void build_conflict_tree(const std::vector<int>& groups, int depth,
                         int& next_class, std::vector<ConflictNode>& nodes) {
  if (groups.size() < 2) return;
  const std::size_t half = groups.size() / 2;
  ConflictNode node;
  node.depth = depth;
  node.pair_first = next_class++;
  node.pair_second = next_class++;
  node.left_groups.assign(groups.begin(), groups.begin() + half);
  node.right_groups.assign(groups.begin() + half, groups.end());
  nodes.push_back(node);
  build_conflict_tree(node.left_groups, depth + 1, next_class, nodes);
  build_conflict_tree(node.right_groups, depth + 1, next_class, nodes);
}

int draw_shard_size(const DataGenConfig& cfg, RngStream& rng) {
  if (cfg.size_law == SizeLaw::kUniform) {
    return cfg.min_shard +
           static_cast<int>(rng.uniform_int(
               static_cast<std::uint64_t>(cfg.max_shard - cfg.min_shard + 1)));
  }
  // Pareto with x_min = min_shard and tail index (exponent - 1).
  const double u = rng.uniform01();
  const double raw =
      cfg.min_shard * std::pow(1.0 - u, -1.0 / (cfg.power_law_exponent - 1.0));
  const double clamped = std::min(static_cast<double>(cfg.max_shard),
                                  std::max(static_cast<double>(cfg.min_shard),
                                           std::floor(raw)));
  return static_cast<int>(clamped);
}

}  // namespace

std::string to_string(SizeLaw law) {
  return law == SizeLaw::kPowerLaw ? "power_law" : "uniform";
}

SizeLaw size_law_from_string(const std::string& s) {
  if (s == "power_law") return SizeLaw::kPowerLaw;
  if (s == "uniform") return SizeLaw::kUniform;
  throw std::invalid_argument("unknown size_law '" + s + "'");
}

void DataGenConfig::validate() const {
  if (clients < 1) throw std::invalid_argument("clients must be >= 1");
  if (true_groups < 1 || true_groups > clients) {
    throw std::invalid_argument("true_groups must lie in [1, clients]");
  }
  if (task.input_dim < 1 || task.num_classes < 2) {
    throw std::invalid_argument("task needs input_dim >= 1, num_classes >= 2");
  }
  if (classes_per_client < 1 || classes_per_client > task.num_classes) {
    throw std::invalid_argument(
        "classes_per_client must lie in [1, num_classes]");
  }
  if (2 * (true_groups - 1) > task.num_classes) {
    throw std::invalid_argument(
        "num_classes too small: need >= 2*(true_groups-1) classes to give "
        "every group pair a conflicting class pair");
  }
  if (min_shard < 2 || max_shard < min_shard) {
    throw std::invalid_argument("need 2 <= min_shard <= max_shard");
  }
  if (size_law == SizeLaw::kPowerLaw && power_law_exponent <= 1.0) {
    throw std::invalid_argument("power_law_exponent must be > 1");
  }
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  if (task.pair_mass_decay <= 0.0 || task.pair_mass_decay > 1.0) {
    throw std::invalid_argument("pair_mass_decay must lie in (0, 1]");
  }
  if (task.pair_mass_tilt <= 0.5 || task.pair_mass_tilt >= 1.0) {
    throw std::invalid_argument(
        "pair_mass_tilt must lie in (0.5, 1) so swapped label histograms "
        "stay distinguishable");
  }
  if (task.noise_stddev <= 0.0 || task.center_spread <= 0.0) {
    throw std::invalid_argument("noise_stddev and center_spread must be > 0");
  }
}

int FederatedDataset::total_train_samples() const {
  int total = 0;
  for (const auto& s : shards) total += s.train.num_samples;
  return total;
}

FederatedDataset generate(const DataGenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int K = cfg.clients;
  const int M = cfg.true_groups;
  const int C = cfg.task.num_classes;
  const int d = cfg.task.input_dim;

  FederatedDataset ds;
  ds.input_dim = d;
  ds.num_classes = C;
  ds.group_of.resize(static_cast<std::size_t>(K));
  ds.ground_truth_groups.assign(static_cast<std::size_t>(M), {});
  for (int k = 0; k < K; ++k) {
    const int g = k % M;  // near-equal groups, remainder spread round-robin
    ds.group_of[static_cast<std::size_t>(k)] = g;
    ds.ground_truth_groups[static_cast<std::size_t>(g)].push_back(k);
  }

  // Shared mixture component means.
  std::vector<ParamVector> centers(static_cast<std::size_t>(C));
  {
    RngStream rng(derive_seed(seed, "datagen.centers"));
    for (int c = 0; c < C; ++c) {
      centers[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) {
        centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
            cfg.task.center_spread * rng.normal();
      }
    }
  }

  // Conflict tree and class masses.
  std::vector<ConflictNode> nodes;
  {
    std::vector<int> all_groups(static_cast<std::size_t>(M));
    std::iota(all_groups.begin(), all_groups.end(), 0);
    int next_class = 0;
    build_conflict_tree(all_groups, 0, next_class, nodes);
  }
  int max_depth = 0;
  for (const auto& n : nodes) max_depth = std::max(max_depth, n.depth);

  std::vector<double> class_mass(static_cast<std::size_t>(C), 0.0);
  std::vector<int> class_depth(static_cast<std::size_t>(C), -1);
  for (const auto& n : nodes) {
    const double share = 2.0 * std::pow(cfg.task.pair_mass_decay, n.depth);
    class_mass[static_cast<std::size_t>(n.pair_first)] =
        share * cfg.task.pair_mass_tilt;
    class_mass[static_cast<std::size_t>(n.pair_second)] =
        share * (1.0 - cfg.task.pair_mass_tilt);
    class_depth[static_cast<std::size_t>(n.pair_first)] = n.depth;
    class_depth[static_cast<std::size_t>(n.pair_second)] = n.depth;
  }
  {
    int unpaired_idx = 0;
    const double base = std::pow(cfg.task.pair_mass_decay, max_depth + 1);
    for (int c = 0; c < C; ++c) {
      if (class_mass[static_cast<std::size_t>(c)] == 0.0) {
        class_mass[static_cast<std::size_t>(c)] =
            base * (1.0 + 0.1 * unpaired_idx++);
      }
    }
  }
  {
    const double sum =
        std::accumulate(class_mass.begin(), class_mass.end(), 0.0);
    for (double& m : class_mass) m /= sum;
  }

  // Per-group label permutations and sampling supports.
  ds.group_distributions.resize(static_cast<std::size_t>(M));
  for (int g = 0; g < M; ++g) {
    auto& dist = ds.group_distributions[static_cast<std::size_t>(g)];
    dist.label_permutation.resize(static_cast<std::size_t>(C));
    std::iota(dist.label_permutation.begin(), dist.label_permutation.end(), 0);

    std::vector<const ConflictNode*> path;  // root-to-leaf, for this group
    for (const auto& n : nodes) {
      const bool in_left = std::find(n.left_groups.begin(),
                                     n.left_groups.end(),
                                     g) != n.left_groups.end();
      const bool in_right = std::find(n.right_groups.begin(),
                                      n.right_groups.end(),
                                      g) != n.right_groups.end();
      if (!in_left && !in_right) continue;
      path.push_back(&n);
      if (in_right) {
        std::swap(dist.label_permutation[static_cast<std::size_t>(
                      n.pair_first)],
                  dist.label_permutation[static_cast<std::size_t>(
                      n.pair_second)]);
      }
    }

    // Support priority: the group's own conflict pairs deepest-first, then
    // filler classes by descending mass.
    std::vector<int> priority;
    std::sort(path.begin(), path.end(),
              [](const ConflictNode* a, const ConflictNode* b) {
                return a->depth > b->depth;
              });
    for (const ConflictNode* n : path) {
      priority.push_back(n->pair_first);
      priority.push_back(n->pair_second);
    }
    std::vector<int> filler;
    for (int c = 0; c < C; ++c) {
      if (std::find(priority.begin(), priority.end(), c) == priority.end()) {
        filler.push_back(c);
      }
    }
    std::sort(filler.begin(), filler.end(), [&](int a, int b) {
      const double ma = class_mass[static_cast<std::size_t>(a)];
      const double mb = class_mass[static_cast<std::size_t>(b)];
      return ma != mb ? ma > mb : a < b;
    });
    priority.insert(priority.end(), filler.begin(), filler.end());
    priority.resize(static_cast<std::size_t>(cfg.classes_per_client));
    dist.support = priority;
    std::sort(dist.support.begin(), dist.support.end());

    double sum = 0.0;
    for (int c : dist.support) sum += class_mass[static_cast<std::size_t>(c)];
    for (int c : dist.support) {
      dist.masses.push_back(class_mass[static_cast<std::size_t>(c)] / sum);
    }
  }

  // No two groups may end up with indistinguishable distributions.
  for (int g = 0; g < M; ++g) {
    for (int h = g + 1; h < M; ++h) {
      const auto& a = ds.group_distributions[static_cast<std::size_t>(g)];
      const auto& b = ds.group_distributions[static_cast<std::size_t>(h)];
      bool same = a.support == b.support && a.masses == b.masses;
      if (same) {
        for (std::size_t i = 0; i < a.support.size(); ++i) {
          const int c = a.support[i];
          if (a.label_permutation[static_cast<std::size_t>(c)] !=
              b.label_permutation[static_cast<std::size_t>(c)]) {
            same = false;
            break;
          }
        }
      }
      if (same) {
        throw std::invalid_argument(
            "groups " + std::to_string(g) + " and " + std::to_string(h) +
            " are indistinguishable under this configuration; increase "
            "classes_per_client or num_classes");
      }
    }
  }

  // Client shards.
  ds.shards.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const int g = ds.group_of[static_cast<std::size_t>(k)];
    const auto& dist = ds.group_distributions[static_cast<std::size_t>(g)];

    RngStream size_rng(derive_seed(seed, "datagen.size",
                                   static_cast<std::uint64_t>(k)));
    const int dk = draw_shard_size(cfg, size_rng);

    DataShard shard;
    shard.num_samples = dk;
    shard.feature_dim = d;
    shard.distribution_id = g;
    shard.features.resize(static_cast<std::size_t>(dk) * d);
    shard.labels.resize(static_cast<std::size_t>(dk));

    RngStream rng(derive_seed(seed, "datagen.samples",
                              static_cast<std::uint64_t>(k)));
    std::vector<double> cumulative(dist.masses.size());
    std::partial_sum(dist.masses.begin(), dist.masses.end(),
                     cumulative.begin());
    for (int i = 0; i < dk; ++i) {
      const double u = rng.uniform01();
      std::size_t slot = 0;
      while (slot + 1 < cumulative.size() && u > cumulative[slot]) ++slot;
      const int component = dist.support[slot];
      shard.labels[static_cast<std::size_t>(i)] =
          dist.label_permutation[static_cast<std::size_t>(component)];
      double* row =
          shard.features.data() + static_cast<std::size_t>(i) * d;
      const auto& mu = centers[static_cast<std::size_t>(component)];
      for (int j = 0; j < d; ++j) {
        row[j] = mu[static_cast<std::size_t>(j)] +
                 cfg.task.noise_stddev * rng.normal();
      }
    }

    auto [train, test] =
        split(shard, cfg.train_fraction,
              derive_seed(seed, "datagen.split", static_cast<std::uint64_t>(k)));
    ds.shards[static_cast<std::size_t>(k)] = {std::move(train),
                                              std::move(test)};
  }
  return ds;
}

std::pair<DataShard, DataShard> split(const DataShard& shard,
                                      double train_fraction,
                                      std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  const int n = shard.num_samples;
  if (n < 2) {
    throw std::invalid_argument("shard too small to split");
  }

  int total_train = static_cast<int>(std::floor(n * train_fraction + 0.5));
  total_train = std::max(1, std::min(n - 1, total_train));

  std::map<int, std::vector<int>> by_label;
  for (int i = 0; i < n; ++i) {
    by_label[shard.labels[static_cast<std::size_t>(i)]].push_back(i);
  }

  // Largest-remainder allocation of train counts per label.
  struct Alloc {
    int label;
    int count;
    int take;
    double remainder;
  };
  std::vector<Alloc> allocs;
  int assigned = 0;
  for (const auto& [label, idx] : by_label) {
    const double ideal =
        static_cast<double>(idx.size()) * total_train / n;
    Alloc a;
    a.label = label;
    a.count = static_cast<int>(idx.size());
    a.take = static_cast<int>(std::floor(ideal));
    a.remainder = ideal - a.take;
    assigned += a.take;
    allocs.push_back(a);
  }
  std::vector<std::size_t> order(allocs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (allocs[a].remainder != allocs[b].remainder) {
      return allocs[a].remainder > allocs[b].remainder;
    }
    return allocs[a].label < allocs[b].label;
  });
  int rest = total_train - assigned;
  for (std::size_t pass = 0; rest > 0; pass = (pass + 1) % order.size()) {
    Alloc& a = allocs[order[pass]];
    if (a.take < a.count) {
      ++a.take;
      --rest;
    }
  }

  RngStream rng(seed);
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  for (const Alloc& a : allocs) {
    auto idx = by_label.at(a.label);
    rng.shuffle(idx);
    for (int i = 0; i < a.count; ++i) {
      (i < a.take ? train_idx : test_idx).push_back(idx[static_cast<std::size_t>(i)]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto build = [&](const std::vector<int>& idx) {
    DataShard out;
    out.num_samples = static_cast<int>(idx.size());
    out.feature_dim = shard.feature_dim;
    out.distribution_id = shard.distribution_id;
    out.labels.reserve(idx.size());
    out.features.reserve(idx.size() * static_cast<std::size_t>(shard.feature_dim));
    for (int i : idx) {
      out.labels.push_back(shard.labels[static_cast<std::size_t>(i)]);
      const double* row = shard.row(i);
      out.features.insert(out.features.end(), row, row + shard.feature_dim);
    }
    return out;
  };
  return {build(train_idx), build(test_idx)};
}

nlohmann::json dataset_to_json(const FederatedDataset& ds) {
  nlohmann::json j;
  j["format"] = "cflsim-dataset-v1";
  j["input_dim"] = ds.input_dim;
  j["num_classes"] = ds.num_classes;
  j["group_of"] = ds.group_of;
  j["ground_truth_groups"] = ds.ground_truth_groups;
  j["group_distributions"] = nlohmann::json::array();
  for (const auto& g : ds.group_distributions) {
    j["group_distributions"].push_back(
        {{"label_permutation", g.label_permutation},
         {"support", g.support},
         {"masses", g.masses}});
  }
  auto shard_json = [](const DataShard& s) {
    return nlohmann::json{{"num_samples", s.num_samples},
                          {"feature_dim", s.feature_dim},
                          {"distribution_id", s.distribution_id},
                          {"labels", s.labels},
                          {"features", s.features}};
  };
  j["shards"] = nlohmann::json::array();
  for (const auto& s : ds.shards) {
    j["shards"].push_back(
        {{"train", shard_json(s.train)}, {"test", shard_json(s.test)}});
  }
  return j;
}

FederatedDataset dataset_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "cflsim-dataset-v1") {
    throw std::invalid_argument("unrecognized dataset format");
  }
  FederatedDataset ds;
  ds.input_dim = j.at("input_dim").get<int>();
  ds.num_classes = j.at("num_classes").get<int>();
  ds.group_of = j.at("group_of").get<std::vector<int>>();
  ds.ground_truth_groups =
      j.at("ground_truth_groups").get<std::vector<std::vector<int>>>();
  for (const auto& g : j.at("group_distributions")) {
    GroupDistribution dist;
    dist.label_permutation =
        g.at("label_permutation").get<std::vector<int>>();
    dist.support = g.at("support").get<std::vector<int>>();
    dist.masses = g.at("masses").get<std::vector<double>>();
    ds.group_distributions.push_back(std::move(dist));
  }
  auto shard_from = [](const nlohmann::json& s) {
    DataShard out;
    out.num_samples = s.at("num_samples").get<int>();
    out.feature_dim = s.at("feature_dim").get<int>();
    out.distribution_id = s.at("distribution_id").get<int>();
    out.labels = s.at("labels").get<std::vector<int>>();
    out.features = s.at("features").get<std::vector<double>>();
    return out;
  };
  for (const auto& s : j.at("shards")) {
    ds.shards.push_back({shard_from(s.at("train")), shard_from(s.at("test"))});
  }
  return ds;
}

}  // namespace cflsim
