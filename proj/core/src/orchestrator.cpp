#include "cflsim/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "cflsim/model.hpp"
#include "cflsim/rng.hpp"

namespace cflsim {
namespace {

ParamVector initial_model(const ExperimentConfig& cfg) {
  const int n = cfg.model.param_count();
  if (cfg.model.hidden_dim == 0) {
    return zeros(static_cast<std::size_t>(n));
  }
  // ReLU layers need symmetry breaking.
  RngStream rng(derive_seed(cfg.seed, "init"));
  ParamVector w(static_cast<std::size_t>(n));
  for (double& x : w) x = rng.uniform(-0.05, 0.05);
  return w;
}

std::vector<int> intersect_sorted(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

std::vector<TreeSnapshotNode> snapshot_tree(const ClusterTree& tree) {
  std::vector<TreeSnapshotNode> out;
  for (int id = 0; id < tree.num_nodes(); ++id) {
    const ClusterNode& n = tree.node(id);
    TreeSnapshotNode s;
    s.id = n.id;
    s.parent = n.parent;
    s.child_first = n.child_left;
    s.child_second = n.child_right;
    s.stopped = n.status == ClusterNode::Status::kStopped;
    s.members = n.members;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const RoundCallback& on_round) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  res.dataset = generate(cfg.datagen_config(), cfg.seed);

  const int K = cfg.clients;
  std::vector<int> train_sizes(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    train_sizes[static_cast<std::size_t>(k)] =
        res.dataset.shards[static_cast<std::size_t>(k)].train.num_samples;
  }
  res.profiles = make_profiles(cfg.wireless, train_sizes, cfg.seed);

  ClusterTree tree(K, initial_model(cfg));

  std::map<int, ParamVector> last_update;  // freshest delta per client
  std::vector<double> prev_norm(static_cast<std::size_t>(K), -1.0);

  bool frozen = cfg.clustering.mode == ThresholdMode::kAbsolute;
  double eps1 = frozen ? cfg.clustering.epsilon1 : 0.0;
  double eps2 = frozen ? cfg.clustering.epsilon2 : 0.0;
  if (frozen) res.thresholds_frozen_round = 0;

  double cumulative = 0.0;

  for (int r = 1; r <= cfg.rounds_max; ++r) {
    if (tree.all_leaves_stopped()) break;

    // Per-round channel realization and latency forecast for every client.
    std::vector<double> gains(static_cast<std::size_t>(K));
    std::vector<double> compute_s(static_cast<std::size_t>(K));
    std::vector<double> upload_s(static_cast<std::size_t>(K));
    std::vector<double> total_est(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      const auto& p = res.profiles[static_cast<std::size_t>(k)];
      gains[static_cast<std::size_t>(k)] =
          channel_gain(cfg.wireless, p, r, cfg.seed);
      compute_s[static_cast<std::size_t>(k)] = compute_latency(
          cfg.epochs, p.cycles_per_sample, p.samples, p.cpu_freq_hz);
      const double rate =
          data_rate(cfg.wireless.subchannel_bandwidth_hz(), p.tx_power_watts,
                    gains[static_cast<std::size_t>(k)], cfg.wireless.noise_watts);
      upload_s[static_cast<std::size_t>(k)] =
          upload_latency(p.model_size_bits, rate);
      double est = compute_s[static_cast<std::size_t>(k)] +
                   upload_s[static_cast<std::size_t>(k)];
      if (cfg.wireless.latency_noise_std > 0.0) {
        RngStream noise(derive_seed(cfg.seed, "latency_noise",
                                    static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(r)));
        est *= std::max(0.05,
                        1.0 + cfg.wireless.latency_noise_std * noise.normal());
      }
      total_est[static_cast<std::size_t>(k)] = est;
    }

    SelectionInputs si;
    si.round = r;
    si.clients = K;
    for (int leaf : tree.leaf_ids()) {
      const ClusterNode& n = tree.node(leaf);
      (n.status == ClusterNode::Status::kActive ? si.active_clusters
                                                : si.stopped_clusters)
          .push_back(n.members);
    }
    si.total_latency_s = total_est;
    si.channel_gain = gains;
    si.prev_update_norm = prev_norm;
    si.samples = train_sizes;

    std::vector<int> omega_ids =
        select(cfg.strategy, si, cfg.wireless.subchannels, cfg.seed);

    // Server collects updates in ascending estimated-latency order.
    std::vector<int> omega_sched = omega_ids;
    std::sort(omega_sched.begin(), omega_sched.end(), [&](int a, int b) {
      const double ea = total_est[static_cast<std::size_t>(a)];
      const double eb = total_est[static_cast<std::size_t>(b)];
      return ea != eb ? ea < eb : a < b;
    });
    std::vector<double> comp_pos(omega_sched.size());
    std::vector<double> up_pos(omega_sched.size());
    for (std::size_t i = 0; i < omega_sched.size(); ++i) {
      comp_pos[i] = compute_s[static_cast<std::size_t>(omega_sched[i])];
      up_pos[i] = upload_s[static_cast<std::size_t>(omega_sched[i])];
    }
    ScheduleDecision sched = pipeline_timeline(omega_sched, comp_pos, up_pos,
                                               cfg.wireless.subchannels);
    sched.round = r;
    sched.strategy = cfg.strategy;

    // P1.1: a round that would overrun the budget is discarded entirely.
    if (cumulative + sched.deadline_s > cfg.time_budget_s) {
      res.halted_by_budget = true;
      break;
    }
    cumulative += sched.deadline_s;

    // Local training. Each participant has its own RNG stream, so parallel
    // and serial execution produce identical results.
    std::vector<LocalTrainResult> results(omega_ids.size());
    auto train_one = [&](std::size_t i) {
      const int k = omega_ids[i];
      const ClusterNode& leaf = tree.node(tree.leaf_of(k));
      results[i] = local_train(
          leaf.model, res.dataset.shards[static_cast<std::size_t>(k)].train,
          cfg.model, cfg.epochs, cfg.batch_size, cfg.learning_rate,
          derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(k),
                      static_cast<std::uint64_t>(r)));
    };
    if (cfg.parallel_clients && omega_ids.size() > 1) {
      const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
      const std::size_t nthreads =
          std::min<std::size_t>(hw, omega_ids.size());
      std::atomic<std::size_t> next{0};
      std::exception_ptr error;
      std::mutex error_mutex;
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < nthreads; ++t) {
        workers.emplace_back([&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= omega_ids.size()) return;
            try {
              train_one(i);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!error) error = std::current_exception();
              return;
            }
          }
        });
      }
      for (auto& w : workers) w.join();
      if (error) std::rethrow_exception(error);
    } else {
      for (std::size_t i = 0; i < omega_ids.size(); ++i) train_one(i);
    }

    std::map<int, const LocalTrainResult*> by_client;
    for (std::size_t i = 0; i < omega_ids.size(); ++i) {
      by_client[omega_ids[i]] = &results[i];
    }

    RoundRecord rec;
    rec.round = r;
    rec.schedule = std::move(sched);
    rec.aggregation_sets =
        aggregation_count(static_cast<int>(omega_ids.size()),
                          cfg.wireless.subchannels);
    rec.deadline_s = rec.schedule.deadline_s;
    rec.cumulative_s = cumulative;
    double norm_sum = 0.0;
    for (const auto& [k, out] : by_client) {
      const double n = l2_norm(out->delta);
      norm_sum += n;
      rec.max_update_norm = std::max(rec.max_update_norm, n);
    }
    rec.mean_update_norm =
        by_client.empty() ? 0.0 : norm_sum / static_cast<double>(by_client.size());

    // Aggregate each leaf over its participants and refresh update caches.
    const std::vector<int> leaves = tree.leaf_ids();
    struct LeafStats {
      std::vector<int> participants;
      std::vector<double> fresh_norms;
      double mean_update_norm = 0.0;
    };
    std::map<int, LeafStats> stats;
    for (int leaf : leaves) {
      const ClusterNode& node = tree.node(leaf);
      std::vector<int> participants =
          intersect_sorted(node.members, omega_ids);
      if (participants.empty()) continue;

      std::vector<ParamVector> params;
      std::vector<double> weights;
      ParamVector mean_update(node.model.size(), 0.0);
      LeafStats st;
      st.participants = participants;
      for (int k : participants) {
        const LocalTrainResult& out = *by_client.at(k);
        params.push_back(out.params);
        weights.push_back(static_cast<double>(
            train_sizes[static_cast<std::size_t>(k)]));
        add_scaled(mean_update, out.delta,
                   1.0 / static_cast<double>(participants.size()));
        st.fresh_norms.push_back(l2_norm(out.delta));
        last_update[k] = out.delta;
        prev_norm[static_cast<std::size_t>(k)] = l2_norm(out.delta);
      }
      tree.set_model(leaf, federated_average(params, weights));
      st.mean_update_norm = l2_norm(mean_update);
      stats.emplace(leaf, std::move(st));
    }

    // Relative thresholds freeze at the first round the scale-free analogue
    // of the stationarity condition fires for any cluster.
    if (!frozen && cfg.clustering.mode == ThresholdMode::kRelative) {
      for (int leaf : leaves) {
        auto it = stats.find(leaf);
        if (it == stats.end() || it->second.participants.size() < 2) continue;
        const auto& st = it->second;
        const double scale =
            std::accumulate(st.fresh_norms.begin(), st.fresh_norms.end(), 0.0) /
            static_cast<double>(st.fresh_norms.size());
        if (scale > 0.0 &&
            st.mean_update_norm < cfg.clustering.relative_scale * scale) {
          eps1 = cfg.clustering.relative_scale * scale;
          eps2 = cfg.clustering.relative_ratio * eps1;
          frozen = true;
          rec.thresholds_frozen_now = true;
          res.thresholds_frozen_round = r;
          break;
        }
      }
    }
    rec.eps1 = eps1;
    rec.eps2 = eps2;

    if (frozen) {
      for (int leaf : leaves) {
        const ClusterNode& node = tree.node(leaf);
        if (node.status == ClusterNode::Status::kStopped) continue;
        auto it = stats.find(leaf);
        if (it == stats.end()) continue;
        const LeafStats& st = it->second;

        bool did_split = false;
        if (node.members.size() >= 2 &&
            split_conditions(st.mean_update_norm, st.fresh_norms, eps1,
                             eps2)) {
          // The server can only test a bipartition once it has one update
          // from every member (cached updates may be stale under partial
          // participation).
          bool all_cached = true;
          for (int k : node.members) all_cached &= last_update.contains(k);
          bool degenerate = false;
          if (all_cached) {
            for (int k : node.members) {
              degenerate |= l2_norm(last_update.at(k)) == 0.0;
            }
          }
          if (all_cached && !degenerate) {
            const SimilarityMatrix sim =
                SimilarityMatrix::from_updates(node.members, last_update);
            const BipartitionResult bp = bipartition(sim);
            const GammaCheckResult gc =
                gamma_check(bp, last_update, bp.sim_cross_max);
            if (gc.split_allowed) {
              const auto [c1, c2] = tree.split(leaf, bp.first, bp.second, r);
              SplitEvent ev;
              ev.parent = leaf;
              ev.child_first = c1;
              ev.child_second = c2;
              ev.sim_cross_max = bp.sim_cross_max;
              ev.max_gamma = gc.max_gamma;
              ev.gamma_threshold = gc.threshold;
              ev.separation_gap = separation_gap(sim, {bp.first, bp.second});
              rec.splits.push_back(std::move(ev));
              did_split = true;
            }
          }
        }
        if (!did_split && stopping_check(st.fresh_norms, eps2)) {
          tree.mark_stopped(leaf, r);
          rec.stops.push_back({leaf});
        }
      }
    }
    tree.check_partition_invariant();

    if (r % cfg.eval_every == 0) {
      for (int leaf : tree.leaf_ids()) {
        const ClusterNode& node = tree.node(leaf);
        ClusterMetric m;
        m.cluster_id = leaf;
        auto it = stats.find(leaf);
        if (it != stats.end()) {
          m.participants = static_cast<int>(it->second.participants.size());
        } else if (node.parent >= 0) {
          auto pit = stats.find(node.parent);
          if (pit != stats.end()) {
            m.participants = static_cast<int>(pit->second.participants.size());
          }
        }
        double train_weight = 0.0;
        double test_weight = 0.0;
        double acc_weighted = 0.0;
        double loss_weighted = 0.0;
        for (int k : node.members) {
          const auto& shard = res.dataset.shards[static_cast<std::size_t>(k)];
          const double lk = loss(node.model, shard.train, cfg.model);
          const double ak = accuracy(node.model, shard.test, cfg.model);
          loss_weighted += lk * shard.train.num_samples;
          train_weight += shard.train.num_samples;
          acc_weighted += ak * shard.test.num_samples;
          test_weight += shard.test.num_samples;
          m.clients.push_back(k);
          m.client_test_accuracy.push_back(ak);
        }
        m.train_loss = loss_weighted / train_weight;
        m.test_accuracy = acc_weighted / test_weight;
        rec.cluster_metrics.push_back(std::move(m));
      }
    }

    rec.tree = snapshot_tree(tree);
    res.records.push_back(std::move(rec));
    res.rounds_executed = r;
    if (on_round) on_round(res.records.back());
  }

  res.all_stopped = tree.all_leaves_stopped();
  res.tree = std::move(tree);
  res.total_sim_time_s = cumulative;
  res.eps1 = eps1;
  res.eps2 = eps2;
  return res;
}

std::optional<int> first_split_round(const std::vector<RoundRecord>& records) {
  for (const auto& r : records) {
    if (!r.splits.empty()) return r.round;
  }
  return std::nullopt;
}

AccuracyReport accuracy_report(const ClusterTree& tree,
                               const FederatedDataset& dataset,
                               const ModelSpec& spec) {
  AccuracyReport rep;
  rep.model_nodes.push_back(0);  // conventional FL model at the root
  for (int leaf : tree.leaf_ids()) {
    if (leaf != 0) rep.model_nodes.push_back(leaf);
  }
  const std::size_t K = dataset.shards.size();
  for (int node_id : rep.model_nodes) {
    std::vector<double> row;
    row.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      row.push_back(
          accuracy(tree.node(node_id).model, dataset.shards[k].test, spec));
    }
    rep.matrix.push_back(std::move(row));
  }
  rep.per_client_best.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double best = 0.0;
    for (const auto& row : rep.matrix) best = std::max(best, row[k]);
    rep.per_client_best[k] = best;
  }
  const auto [mn, mx] = std::minmax_element(rep.per_client_best.begin(),
                                            rep.per_client_best.end());
  rep.gap = *mx - *mn;
  return rep;
}

std::vector<int> leaf_partition_labels(const ClusterTree& tree) {
  std::vector<int> leaves = tree.leaf_ids();
  std::vector<int> labels(static_cast<std::size_t>(tree.num_clients()));
  for (int k = 0; k < tree.num_clients(); ++k) {
    const int leaf = tree.leaf_of(k);
    labels[static_cast<std::size_t>(k)] = static_cast<int>(
        std::find(leaves.begin(), leaves.end(), leaf) - leaves.begin());
  }
  return labels;
}

double adjusted_rand_index(const std::vector<int>& labels_a,
                           const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size() || labels_a.empty()) {
    throw std::invalid_argument("partitions must be non-empty and aligned");
  }
  const double n = static_cast<double>(labels_a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> count_a;
  std::map<int, double> count_b;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    joint[{labels_a[i], labels_b[i]}] += 1.0;
    count_a[labels_a[i]] += 1.0;
    count_b[labels_b[i]] += 1.0;
  }
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [key, c] : joint) index += comb2(c);
  double sum_a = 0.0;
  for (const auto& [key, c] : count_a) sum_a += comb2(c);
  double sum_b = 0.0;
  for (const auto& [key, c] : count_b) sum_b += comb2(c);
  const double expected = sum_a * sum_b / comb2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions degenerate
  return (index - expected) / (max_index - expected);
}

}  // namespace cflsim
