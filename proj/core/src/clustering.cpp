#include "cflsim/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cflsim {

ParamVector federated_average(const std::vector<ParamVector>& params,
                              const std::vector<double>& weights) {
  if (params.empty() || params.size() != weights.size()) {
    throw std::invalid_argument("federated_average needs matching non-empty inputs");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w <= 0.0) throw std::invalid_argument("weights must be positive");
    total += w;
  }
  ParamVector out(params.front().size(), 0.0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    check_same_dim(out, params[k]);
    add_scaled(out, params[k], weights[k] / total);
  }
  return out;
}

double cosine_similarity(const ParamVector& a, const ParamVector& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("degenerate update: zero-norm vector");
  }
  const double s = dot(a, b) / (na * nb);
  return std::clamp(s, -1.0, 1.0);
}

SimilarityMatrix SimilarityMatrix::from_updates(
    const std::vector<int>& members,
    const std::map<int, ParamVector>& updates) {
  SimilarityMatrix sim;
  sim.members = members;
  std::sort(sim.members.begin(), sim.members.end());
  const std::size_t n = sim.members.size();
  sim.values.assign(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = cosine_similarity(updates.at(sim.members[i]),
                                         updates.at(sim.members[j]));
      sim.values[i * n + j] = s;
      sim.values[j * n + i] = s;
    }
  }
  return sim;
}

bool split_conditions(double cluster_mean_update_norm,
                      const std::vector<double>& member_update_norms,
                      double eps1, double eps2) {
  if (eps1 < 0.0 || eps2 <= 0.0) {
    throw std::invalid_argument("need eps1 >= 0 and eps2 > 0");
  }
  if (cluster_mean_update_norm >= eps1) return false;
  double max_norm = 0.0;
  for (double n : member_update_norms) max_norm = std::max(max_norm, n);
  return max_norm > eps2;
}

BipartitionResult bipartition(const SimilarityMatrix& sim) {
  const int n = sim.size();
  if (n < 2) {
    throw std::invalid_argument("bipartition needs at least two members");
  }
  if (n > kMaxBipartitionMembers) {
    throw std::invalid_argument(
        "cluster too large for exhaustive bipartition (" + std::to_string(n) +
        " members, limit " + std::to_string(kMaxBipartitionMembers) + ")");
  }

  // Member 0 is pinned to the first side, so each non-zero mask over members
  // 1..n-1 (bit set = second side) enumerates every bipartition exactly once.
  auto first_of = [&](unsigned mask) {
    std::vector<int> f;
    for (int i = 0; i < n; ++i) {
      if (i == 0 || !((mask >> (i - 1)) & 1u)) {
        f.push_back(sim.members[static_cast<std::size_t>(i)]);
      }
    }
    return f;
  };

  const unsigned total = 1u << (n - 1);
  double best = 2.0;
  unsigned best_mask = 0;
  bool found = false;
  for (unsigned mask = 1; mask < total; ++mask) {
    double cross_max = -2.0;
    for (int i = 0; i < n; ++i) {
      const bool i_first = i == 0 || !((mask >> (i - 1)) & 1u);
      if (!i_first) continue;
      for (int j = 1; j < n; ++j) {
        if (!((mask >> (j - 1)) & 1u)) continue;
        cross_max = std::max(cross_max, sim.at(i, j));
      }
    }
    if (!found || cross_max < best) {
      best = cross_max;
      best_mask = mask;
      found = true;
    } else if (cross_max == best && first_of(mask) < first_of(best_mask)) {
      best_mask = mask;
    }
  }

  BipartitionResult out;
  out.sim_cross_max = best;
  for (int i = 0; i < n; ++i) {
    const bool i_first = i == 0 || !((best_mask >> (i - 1)) & 1u);
    (i_first ? out.first : out.second).push_back(sim.members[static_cast<std::size_t>(i)]);
  }
  return out;
}

GammaCheckResult gamma_check(const BipartitionResult& parts,
                             const std::map<int, ParamVector>& updates,
                             double sim_cross_max) {
  GammaCheckResult out;
  out.threshold =
      sim_cross_max >= 1.0 ? 0.0 : std::sqrt((1.0 - sim_cross_max) / 2.0);

  auto side_mean = [&](const std::vector<int>& side) {
    ParamVector mean(updates.begin()->second.size(), 0.0);
    for (int k : side) add_scaled(mean, updates.at(k), 1.0 / side.size());
    return mean;
  };

  for (const auto* side : {&parts.first, &parts.second}) {
    if (side->empty()) {
      throw std::invalid_argument("gamma_check needs two non-empty sides");
    }
    const ParamVector mean = side_mean(*side);
    const double mean_norm = l2_norm(mean);
    if (mean_norm == 0.0) {
      out.split_allowed = false;  // degenerate estimate, reject
      out.max_gamma = std::numeric_limits<double>::infinity();
      return out;
    }
    for (int k : *side) {
      const double gamma = l2_norm(subtract(mean, updates.at(k))) / mean_norm;
      out.max_gamma = std::max(out.max_gamma, gamma);
    }
  }
  out.split_allowed = out.max_gamma < out.threshold;
  return out;
}

bool stopping_check(const std::vector<double>& member_update_norms,
                    double eps2) {
  if (eps2 <= 0.0) throw std::invalid_argument("eps2 must be > 0");
  if (member_update_norms.empty()) return false;
  double max_norm = 0.0;
  for (double n : member_update_norms) max_norm = std::max(max_norm, n);
  return max_norm < eps2;
}

std::optional<double> separation_gap(
    const SimilarityMatrix& sim,
    const std::vector<std::vector<int>>& partition) {
  std::map<int, int> part_of;
  for (std::size_t p = 0; p < partition.size(); ++p) {
    for (int k : partition[p]) part_of[k] = static_cast<int>(p);
  }
  double within_min = 2.0;
  double cross_max = -2.0;
  bool have_within = false;
  bool have_cross = false;
  const int n = sim.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int pi = part_of.at(sim.members[static_cast<std::size_t>(i)]);
      const int pj = part_of.at(sim.members[static_cast<std::size_t>(j)]);
      if (pi == pj) {
        within_min = std::min(within_min, sim.at(i, j));
        have_within = true;
      } else {
        cross_max = std::max(cross_max, sim.at(i, j));
        have_cross = true;
      }
    }
  }
  if (!have_within || !have_cross) return std::nullopt;
  return within_min - cross_max;
}

ClusterTree::ClusterTree(int num_clients, ParamVector root_model) {
  if (num_clients < 1) {
    throw std::invalid_argument("tree needs at least one client");
  }
  ClusterNode root;
  root.id = 0;
  root.members.resize(static_cast<std::size_t>(num_clients));
  std::iota(root.members.begin(), root.members.end(), 0);
  root.model = std::move(root_model);
  nodes_.push_back(std::move(root));
  leaf_of_.assign(static_cast<std::size_t>(num_clients), 0);
}

std::vector<int> ClusterTree::leaf_ids() const {
  std::vector<int> out;
  for (const auto& n : nodes_) {
    if (n.is_leaf()) out.push_back(n.id);
  }
  return out;
}

bool ClusterTree::all_leaves_stopped() const {
  for (const auto& n : nodes_) {
    if (n.is_leaf() && n.status == ClusterNode::Status::kActive) return false;
  }
  return true;
}

std::pair<int, int> ClusterTree::split(int node_id,
                                       const std::vector<int>& first,
                                       const std::vector<int>& second,
                                       int round) {
  ClusterNode& parent = nodes_.at(static_cast<std::size_t>(node_id));
  if (!parent.is_leaf()) throw std::logic_error("split target is not a leaf");
  if (parent.status == ClusterNode::Status::kStopped) {
    throw std::logic_error("cannot split a stopped cluster");
  }
  std::vector<int> merged;
  merged.reserve(first.size() + second.size());
  merged.insert(merged.end(), first.begin(), first.end());
  merged.insert(merged.end(), second.begin(), second.end());
  std::sort(merged.begin(), merged.end());
  if (merged != parent.members || first.empty() || second.empty()) {
    throw std::logic_error("split pieces must partition the leaf members");
  }

  auto make_child = [&](const std::vector<int>& members) {
    ClusterNode child;
    child.id = static_cast<int>(nodes_.size());
    child.members = members;
    std::sort(child.members.begin(), child.members.end());
    child.model = parent.model;  // children start from the parent model
    child.parent = parent.id;
    child.created_round = round;
    for (int k : child.members) {
      leaf_of_[static_cast<std::size_t>(k)] = child.id;
    }
    const int id = child.id;
    nodes_.push_back(std::move(child));
    return id;
  };
  const int left = make_child(first);
  const int right = make_child(second);
  nodes_[static_cast<std::size_t>(node_id)].child_left = left;
  nodes_[static_cast<std::size_t>(node_id)].child_right = right;
  return {left, right};
}

void ClusterTree::mark_stopped(int node_id, int round) {
  ClusterNode& n = nodes_.at(static_cast<std::size_t>(node_id));
  if (!n.is_leaf()) throw std::logic_error("only leaves can stop");
  n.status = ClusterNode::Status::kStopped;
  n.stopped_round = round;
}

void ClusterTree::set_model(int node_id, ParamVector model) {
  nodes_.at(static_cast<std::size_t>(node_id)).model = std::move(model);
}

void ClusterTree::check_partition_invariant() const {
  std::vector<int> covered(leaf_of_.size(), 0);
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) continue;
    for (int k : n.members) {
      if (k < 0 || k >= static_cast<int>(covered.size())) {
        throw std::logic_error("leaf member out of range");
      }
      ++covered[static_cast<std::size_t>(k)];
      if (leaf_of_[static_cast<std::size_t>(k)] != n.id) {
        throw std::logic_error("leaf index out of sync");
      }
    }
  }
  for (int c : covered) {
    if (c != 1) throw std::logic_error("leaves do not partition the clients");
  }
}

}  // namespace cflsim
