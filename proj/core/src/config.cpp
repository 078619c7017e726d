#include "cflsim/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace cflsim {
namespace {

// Strict reader: every key must be consumed, leftovers are reported by path.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path)
      : obj_(j), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw std::invalid_argument("config section '" + path_ +
                                  "' must be a JSON object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.insert(key);
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("config key '" + join(key) +
                                  "' has the wrong type");
    }
  }

  void read_string(const char* key, std::string& out) { read(key, out); }

  bool has(const char* key) const { return obj_.contains(key); }

  const nlohmann::json* child(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string join(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void done() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        throw std::invalid_argument("unknown config key '" + join(it.key().c_str()) + "'");
      }
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

std::string to_string(ThresholdMode m) {
  return m == ThresholdMode::kRelative ? "relative" : "absolute";
}

ThresholdMode threshold_mode_from_string(const std::string& s) {
  if (s == "relative") return ThresholdMode::kRelative;
  if (s == "absolute") return ThresholdMode::kAbsolute;
  throw std::invalid_argument("unknown threshold_mode '" + s + "'");
}

void ClusteringConfig::validate() const {
  if (mode == ThresholdMode::kAbsolute) {
    if (epsilon1 < 0.0 || epsilon2 <= 0.0) {
      throw std::invalid_argument(
          "absolute thresholds need epsilon1 >= 0 and epsilon2 > 0");
    }
  } else {
    if (relative_scale <= 0.0 || relative_scale >= 1.0) {
      throw std::invalid_argument("relative_scale must lie in (0, 1)");
    }
    if (relative_ratio <= 0.0) {
      throw std::invalid_argument("relative_ratio must be > 0");
    }
  }
}

DataGenConfig ExperimentConfig::datagen_config() const {
  DataGenConfig cfg;
  cfg.clients = clients;
  cfg.true_groups = true_groups;
  cfg.classes_per_client = data.classes_per_client;
  cfg.size_law = data.size_law;
  cfg.power_law_exponent = data.power_law_exponent;
  cfg.min_shard = data.min_shard;
  cfg.max_shard = data.max_shard;
  cfg.train_fraction = data.train_fraction;
  cfg.task.input_dim = model.input_dim;
  cfg.task.num_classes = model.num_classes;
  cfg.task.center_spread = data.center_spread;
  cfg.task.noise_stddev = data.noise_stddev;
  cfg.task.pair_mass_decay = data.pair_mass_decay;
  cfg.task.pair_mass_tilt = data.pair_mass_tilt;
  return cfg;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (rounds_max < 0) throw std::invalid_argument("rounds_max must be >= 0");
  if (time_budget_s <= 0.0) {
    throw std::invalid_argument("time_budget_s must be > 0");
  }
  if (epochs < 1 || batch_size < 1) {
    throw std::invalid_argument("epochs and batch_size must be >= 1");
  }
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  clustering.validate();
  wireless.validate();
  datagen_config().validate();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  JsonReader r(j, "");
  r.read("seed", c.seed);
  r.read("clients", c.clients);
  r.read("true_groups", c.true_groups);
  r.read("rounds_max", c.rounds_max);
  r.read("time_budget_s", c.time_budget_s);
  r.read("epochs", c.epochs);
  r.read("batch_size", c.batch_size);
  r.read("learning_rate", c.learning_rate);
  r.read("eval_every", c.eval_every);
  if (r.has("strategy")) {
    std::string s;
    r.read("strategy", s);
    c.strategy = strategy_from_string(s);
  }
  r.read("parallel_clients", c.parallel_clients);

  if (const auto* m = r.child("model")) {
    JsonReader rm(*m, "model");
    rm.read("input_dim", c.model.input_dim);
    rm.read("hidden_dim", c.model.hidden_dim);
    rm.read("num_classes", c.model.num_classes);
    rm.done();
  }
  if (const auto* d = r.child("data")) {
    JsonReader rd(*d, "data");
    rd.read("classes_per_client", c.data.classes_per_client);
    if (rd.has("size_law")) {
      std::string s;
      rd.read("size_law", s);
      c.data.size_law = size_law_from_string(s);
    }
    rd.read("power_law_exponent", c.data.power_law_exponent);
    rd.read("min_shard", c.data.min_shard);
    rd.read("max_shard", c.data.max_shard);
    rd.read("train_fraction", c.data.train_fraction);
    rd.read("center_spread", c.data.center_spread);
    rd.read("noise_stddev", c.data.noise_stddev);
    rd.read("pair_mass_decay", c.data.pair_mass_decay);
    rd.read("pair_mass_tilt", c.data.pair_mass_tilt);
    rd.done();
  }
  if (const auto* cl = r.child("clustering")) {
    JsonReader rc(*cl, "clustering");
    if (rc.has("threshold_mode")) {
      std::string s;
      rc.read("threshold_mode", s);
      c.clustering.mode = threshold_mode_from_string(s);
    }
    rc.read("epsilon1", c.clustering.epsilon1);
    rc.read("epsilon2", c.clustering.epsilon2);
    rc.read("relative_scale", c.clustering.relative_scale);
    rc.read("relative_ratio", c.clustering.relative_ratio);
    rc.done();
  }
  if (const auto* w = r.child("wireless")) {
    JsonReader rw(*w, "wireless");
    rw.read("bandwidth_hz", c.wireless.bandwidth_hz);
    rw.read("subchannels", c.wireless.subchannels);
    rw.read("noise_watts", c.wireless.noise_watts);
    rw.read("pathloss_ref_db", c.wireless.pathloss_ref_db);
    rw.read("pathloss_ref_distance_m", c.wireless.pathloss_ref_distance_m);
    rw.read("pathloss_exponent", c.wireless.pathloss_exponent);
    rw.read("distance_min_m", c.wireless.distance_min_m);
    rw.read("distance_max_m", c.wireless.distance_max_m);
    rw.read("tx_power_min_dbm", c.wireless.tx_power_min_dbm);
    rw.read("tx_power_max_dbm", c.wireless.tx_power_max_dbm);
    rw.read("cpu_freq_min_hz", c.wireless.cpu_freq_min_hz);
    rw.read("cpu_freq_max_hz", c.wireless.cpu_freq_max_hz);
    rw.read("cycles_per_sample", c.wireless.cycles_per_sample);
    rw.read("model_size_bits", c.wireless.model_size_bits);
    rw.read("latency_noise_std", c.wireless.latency_noise_std);
    rw.done();
  }
  r.done();
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["clients"] = clients;
  j["true_groups"] = true_groups;
  j["rounds_max"] = rounds_max;
  j["time_budget_s"] = time_budget_s;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["eval_every"] = eval_every;
  j["strategy"] = to_string(strategy);
  j["parallel_clients"] = parallel_clients;
  j["model"] = {{"input_dim", model.input_dim},
                {"hidden_dim", model.hidden_dim},
                {"num_classes", model.num_classes}};
  j["data"] = {{"classes_per_client", data.classes_per_client},
               {"size_law", to_string(data.size_law)},
               {"power_law_exponent", data.power_law_exponent},
               {"min_shard", data.min_shard},
               {"max_shard", data.max_shard},
               {"train_fraction", data.train_fraction},
               {"center_spread", data.center_spread},
               {"noise_stddev", data.noise_stddev},
               {"pair_mass_decay", data.pair_mass_decay},
               {"pair_mass_tilt", data.pair_mass_tilt}};
  j["clustering"] = {{"threshold_mode", to_string(clustering.mode)},
                     {"epsilon1", clustering.epsilon1},
                     {"epsilon2", clustering.epsilon2},
                     {"relative_scale", clustering.relative_scale},
                     {"relative_ratio", clustering.relative_ratio}};
  j["wireless"] = {{"bandwidth_hz", wireless.bandwidth_hz},
                   {"subchannels", wireless.subchannels},
                   {"noise_watts", wireless.noise_watts},
                   {"pathloss_ref_db", wireless.pathloss_ref_db},
                   {"pathloss_ref_distance_m", wireless.pathloss_ref_distance_m},
                   {"pathloss_exponent", wireless.pathloss_exponent},
                   {"distance_min_m", wireless.distance_min_m},
                   {"distance_max_m", wireless.distance_max_m},
                   {"tx_power_min_dbm", wireless.tx_power_min_dbm},
                   {"tx_power_max_dbm", wireless.tx_power_max_dbm},
                   {"cpu_freq_min_hz", wireless.cpu_freq_min_hz},
                   {"cpu_freq_max_hz", wireless.cpu_freq_max_hz},
                   {"cycles_per_sample", wireless.cycles_per_sample},
                   {"model_size_bits", wireless.model_size_bits},
                   {"latency_noise_std", wireless.latency_noise_std}};
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + path + "'");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config parse error in '" + path +
                                "': " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void apply_override(nlohmann::json& doc, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like key=value, got '" +
                                key_eq_value + "'");
  }
  const std::string key = key_eq_value.substr(0, eq);
  const std::string value = key_eq_value.substr(eq + 1);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;  // plain string
  }

  nlohmann::json* node = &doc;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t dot = key.find('.', begin);
    const std::string part = key.substr(begin, dot - begin);
    if (part.empty()) {
      throw std::invalid_argument("override key '" + key + "' is malformed");
    }
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    begin = dot + 1;
  }
}

}  // namespace cflsim
