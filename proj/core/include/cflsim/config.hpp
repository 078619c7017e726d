// Experiment configuration: one JSON document drives a whole run. Parsing is
// strict (unknown keys are errors) and round-trippable.
#pragma once

#include <cstdint>
#include <string>

#include "nlohmann/json_fwd.hpp"

#include "cflsim/datagen.hpp"
#include "cflsim/model.hpp"
#include "cflsim/scheduling.hpp"
#include "cflsim/wireless.hpp"

namespace cflsim {

enum class ThresholdMode { kRelative, kAbsolute };

std::string to_string(ThresholdMode m);
ThresholdMode threshold_mode_from_string(const std::string& s);

struct ClusteringConfig {
  ThresholdMode mode = ThresholdMode::kRelative;
  // Absolute mode: both thresholds are fixed up front.
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  // Relative mode: eps1 = relative_scale * (mean member update norm at the
  // round the split first comes under consideration), eps2 = ratio * eps1.
  double relative_scale = 0.4;
  double relative_ratio = 1.6;

  void validate() const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int clients = 15;        // K
  int true_groups = 3;     // ground-truth distribution groups
  int rounds_max = 200;    // R
  double time_budget_s = 1e15;  // T_tot
  int epochs = 5;          // E
  int batch_size = 32;     // b
  double learning_rate = 0.1;
  int eval_every = 1;
  Strategy strategy = Strategy::kProposedTwoPhase;
  bool parallel_clients = false;

  ModelSpec model{8, 0, 4};
  struct DataSection {
    int classes_per_client = 4;
    SizeLaw size_law = SizeLaw::kPowerLaw;
    double power_law_exponent = 1.5;
    int min_shard = 64;
    int max_shard = 2048;
    double train_fraction = 0.8;
    double center_spread = 1.0;
    double noise_stddev = 1.0;
    double pair_mass_decay = 0.5;
    double pair_mass_tilt = 0.6;
  } data;
  ClusteringConfig clustering;
  WirelessConfig wireless;

  DataGenConfig datagen_config() const;
  void validate() const;  // throws std::invalid_argument

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Parses a config file from disk (strict); error messages name the offending
// key or the parse position.
ExperimentConfig load_config_file(const std::string& path);

// Applies a dotted-path override like "wireless.subchannels=4" to a JSON
// config document. Values parse as JSON when possible, else as strings.
void apply_override(nlohmann::json& doc, const std::string& key_eq_value);

}  // namespace cflsim
