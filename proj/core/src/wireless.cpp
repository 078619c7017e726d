#include "cflsim/wireless.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cflsim/rng.hpp"

namespace cflsim {

void WirelessConfig::validate() const {
  if (bandwidth_hz <= 0) throw std::invalid_argument("bandwidth_hz must be > 0");
  if (subchannels < 1) throw std::invalid_argument("subchannels must be >= 1");
  if (noise_watts <= 0) throw std::invalid_argument("noise_watts must be > 0");
  if (pathloss_ref_distance_m <= 0 || pathloss_exponent <= 0) {
    throw std::invalid_argument("path loss reference parameters must be > 0");
  }
  if (distance_min_m <= 0 || distance_max_m < distance_min_m) {
    throw std::invalid_argument("distance range invalid");
  }
  if (tx_power_max_dbm < tx_power_min_dbm) {
    throw std::invalid_argument("tx power range invalid");
  }
  if (cpu_freq_min_hz <= 0 || cpu_freq_max_hz < cpu_freq_min_hz) {
    throw std::invalid_argument("cpu frequency range invalid");
  }
  if (cycles_per_sample <= 0) {
    throw std::invalid_argument("cycles_per_sample must be > 0");
  }
  if (model_size_bits <= 0) {
    throw std::invalid_argument("model_size_bits must be > 0");
  }
  if (latency_noise_std < 0) {
    throw std::invalid_argument("latency_noise_std must be >= 0");
  }
  if (subchannels * model_size_bits > bandwidth_hz) {
    throw std::invalid_argument(
        "subchannels * model_size_bits exceeds bandwidth");
  }
}

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

int subchannels_from_model_size(double bandwidth_hz, double model_size_bits) {
  if (bandwidth_hz <= 0 || model_size_bits <= 0) {
    throw std::invalid_argument("bandwidth and model size must be > 0");
  }
  return std::max(1, static_cast<int>(bandwidth_hz / model_size_bits));
}

std::vector<ClientProfile> make_profiles(const WirelessConfig& cfg,
                                         const std::vector<int>& samples,
                                         std::uint64_t seed) {
  cfg.validate();
  std::vector<ClientProfile> out(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    RngStream rng(derive_seed(seed, "wireless.profile", k));
    ClientProfile& p = out[k];
    p.id = static_cast<int>(k);
    p.samples = samples[k];
    p.cpu_freq_hz = rng.uniform(cfg.cpu_freq_min_hz, cfg.cpu_freq_max_hz);
    p.cycles_per_sample = cfg.cycles_per_sample;
    p.tx_power_watts =
        dbm_to_watts(rng.uniform(cfg.tx_power_min_dbm, cfg.tx_power_max_dbm));
    p.distance_m = rng.uniform(cfg.distance_min_m, cfg.distance_max_m);
    p.model_size_bits = cfg.model_size_bits;
  }
  return out;
}

double pathloss_gain(const WirelessConfig& cfg, double distance_m) {
  if (distance_m <= 0) throw std::invalid_argument("distance must be > 0");
  return db_to_linear(cfg.pathloss_ref_db) *
         std::pow(cfg.pathloss_ref_distance_m / distance_m,
                  cfg.pathloss_exponent);
}

double channel_gain(const WirelessConfig& cfg, const ClientProfile& profile,
                    int round, std::uint64_t seed) {
  RngStream rng(derive_seed(seed, "wireless.fading",
                            static_cast<std::uint64_t>(profile.id),
                            static_cast<std::uint64_t>(round)));
  return pathloss_gain(cfg, profile.distance_m) * rng.exponential();
}

double data_rate(double bandwidth_hz, double tx_power_watts, double gain,
                 double noise_watts) {
  if (bandwidth_hz <= 0) {
    throw std::invalid_argument("allocated bandwidth must be > 0");
  }
  if (tx_power_watts < 0 || gain < 0 || noise_watts <= 0) {
    throw std::invalid_argument("invalid rate inputs");
  }
  return bandwidth_hz * std::log(1.0 + tx_power_watts * gain / noise_watts);
}

double upload_latency(double model_size_bits, double rate) {
  if (model_size_bits < 0) {
    throw std::invalid_argument("model size must be >= 0");
  }
  if (rate <= 0) {
    throw std::invalid_argument("client unreachable: data rate is zero");
  }
  return model_size_bits / rate;
}

double compute_latency(int epochs, double cycles_per_sample, int samples,
                       double cpu_freq_hz) {
  if (epochs < 1 || cycles_per_sample <= 0 || samples < 1 ||
      cpu_freq_hz <= 0) {
    throw std::invalid_argument("compute latency inputs must be positive");
  }
  return epochs * cycles_per_sample * samples / cpu_freq_hz;
}

double total_latency(const WirelessConfig& cfg, const ClientProfile& profile,
                     double gain, int epochs) {
  const double rate = data_rate(cfg.subchannel_bandwidth_hz(),
                                profile.tx_power_watts, gain,
                                cfg.noise_watts);
  return compute_latency(epochs, profile.cycles_per_sample, profile.samples,
                         profile.cpu_freq_hz) +
         upload_latency(profile.model_size_bits, rate);
}

double round_deadline(const std::vector<double>& selected_total_latencies) {
  if (selected_total_latencies.empty()) {
    throw std::invalid_argument("round deadline needs a non-empty selection");
  }
  return *std::max_element(selected_total_latencies.begin(),
                           selected_total_latencies.end());
}

}  // namespace cflsim
