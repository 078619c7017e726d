// Channel, rate and latency physics of the edge network: fourth-power path
// loss with exponential fast fading, OFDMA sub-channels, upload/compute/total
// delay and the per-round deadline.
#pragma once

#include <cstdint>
#include <vector>

namespace cflsim {

struct WirelessConfig {
  double bandwidth_hz = 10e6;   // B
  int subchannels = 10;         // N, each of width bandwidth_hz / subchannels
  double noise_watts = 1e-6;    // N0
  double pathloss_ref_db = -35.0;      // g0
  double pathloss_ref_distance_m = 2.0;  // d0
  double pathloss_exponent = 4.0;
  double distance_min_m = 20.0;
  double distance_max_m = 100.0;
  double tx_power_min_dbm = -10.0;
  double tx_power_max_dbm = 20.0;
  double cpu_freq_min_hz = 1e9;
  double cpu_freq_max_hz = 9e9;
  double cycles_per_sample = 20.0;  // phi, homogeneous across devices
  double model_size_bits = 5e5;     // xi
  double latency_noise_std = 0.0;   // relative noise on server-side estimates

  double subchannel_bandwidth_hz() const { return bandwidth_hz / subchannels; }
  void validate() const;  // throws std::invalid_argument
};

struct ClientProfile {
  int id = 0;
  int samples = 0;            // D_k (training samples)
  double cpu_freq_hz = 0;     // f_k
  double cycles_per_sample = 0;  // phi_k
  double tx_power_watts = 0;  // P_k
  double distance_m = 0;
  double model_size_bits = 0;  // xi
};

double dbm_to_watts(double dbm);
double db_to_linear(double db);

// Sub-channel count implied by the model size (N = B / xi, floored, >= 1).
int subchannels_from_model_size(double bandwidth_hz, double model_size_bits);

// Draws per-client static radio/compute parameters.
std::vector<ClientProfile> make_profiles(const WirelessConfig& cfg,
                                         const std::vector<int>& samples,
                                         std::uint64_t seed);

// Distance-dependent mean gain g0 * (d0 / d)^ple.
double pathloss_gain(const WirelessConfig& cfg, double distance_m);

// Per-round gain: path loss times an exponential(1) fast-fading draw from the
// (seed, client, round) stream.
double channel_gain(const WirelessConfig& cfg, const ClientProfile& profile,
                    int round, std::uint64_t seed);

// r = bandwidth * ln(1 + P * gain / N0), in nats per second.
double data_rate(double bandwidth_hz, double tx_power_watts, double gain,
                 double noise_watts);

double upload_latency(double model_size_bits, double rate);

double compute_latency(int epochs, double cycles_per_sample, int samples,
                       double cpu_freq_hz);

double total_latency(const WirelessConfig& cfg, const ClientProfile& profile,
                     double gain, int epochs);

// Latency of the slowest selected participant.
double round_deadline(const std::vector<double>& selected_total_latencies);

}  // namespace cflsim
