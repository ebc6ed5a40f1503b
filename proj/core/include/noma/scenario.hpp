#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace noma {

// Static system description for one downlink cell. Attenuation and noise are
// stored linear (watts for noise); dB only exists in files and flags.
struct SystemParams {
  int num_users = 10;              // K, must equal 2 * num_clusters
  int num_clusters = 5;            // C
  double frame_seconds = 10.0;     // T, shared across clusters
  double max_power_w = 10.0;       // transmit power budget over the frame
  double cell_radius_m = 50.0;
  double ref_distance_m = 1.0;     // d0, users closer than this are clamped to it
  double attenuation_at_ref = 1e-3;  // linear power gain at d0
  double pathloss_exponent = 2.0;
  double noise_variance_w = 1e-13;   // per-user receiver noise power

  // Throws ValidationError naming the violated bound.
  void validate() const;
};

// One draw of user positions and the resulting channel power gains,
// ordered by user index.
struct ChannelRealization {
  std::vector<double> gains;      // linear |h_k|^2
  std::vector<double> distances;  // meters, in [d0, radius]
  std::uint64_t seed = 0;

  void validate(const SystemParams& params) const;
};

struct Scenario {
  SystemParams params;
  ChannelRealization channels;

  void validate() const;
};

// dB/dBm conversions used at the file/flag boundary.
double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Draws num_users positions uniformly over the disc (d = max(d0, radius*sqrt(u)))
// and applies the power-law pathloss gain = beta / (d/d0)^kappa.
// The same seed always produces the same realization.
ChannelRealization generate_channels(const SystemParams& params, std::uint64_t seed);

Scenario generate_scenario(const SystemParams& params, std::uint64_t seed);

// JSON round trip. Numbers are written with shortest round-trip precision, so
// save(load(save(x))) produces byte-identical text. Throws ParseError on
// malformed input and ValidationError on out-of-bounds values.
Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& scenario);

Scenario parse_scenario_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);

}  // namespace noma
