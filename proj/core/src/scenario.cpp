#include "noma/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "noma/errors.hpp"

namespace noma {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

// Uniform double in [0, 1) with 53 random bits, fixed across platforms.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Finds a dB value that converts back to `linear` bit-exactly, so that
// save/load round trips. Values that never went through the dB form may land
// between representable preimages; the nearest candidate is used then.
double invertible_db(double linear, double (*to_linear)(double), double guess) {
  if (to_linear(guess) == linear) return guess;
  double up = guess, down = guess;
  for (int k = 0; k < 8; ++k) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    if (to_linear(up) == linear) return up;
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
    if (to_linear(down) == linear) return down;
  }
  return guess;
}

double get_number(const json& node, const char* key) {
  if (!node.contains(key)) throw ParseError(std::string("missing field: ") + key);
  if (!node[key].is_number()) throw ParseError(std::string("field is not a number: ") + key);
  return node[key].get<double>();
}

int get_int(const json& node, const char* key) {
  double v = get_number(node, key);
  if (v != std::floor(v)) throw ParseError(std::string("field is not an integer: ") + key);
  return static_cast<int>(v);
}

std::vector<double> get_array(const json& node, const char* key) {
  if (!node.contains(key)) throw ParseError(std::string("missing field: ") + key);
  if (!node[key].is_array()) throw ParseError(std::string("field is not an array: ") + key);
  std::vector<double> out;
  for (const auto& v : node[key]) {
    if (!v.is_number()) throw ParseError(std::string("non-numeric entry in: ") + key);
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts * 1e3); }

void SystemParams::validate() const {
  require(num_users > 0, "K must be positive");
  require(num_clusters > 0, "C must be positive");
  require(num_users == 2 * num_clusters, "K must equal 2*C (two users per cluster)");
  require(frame_seconds > 0.0, "T must be positive");
  require(max_power_w > 0.0, "Pmax must be positive");
  require(ref_distance_m > 0.0, "d0 must be positive");
  require(cell_radius_m >= ref_distance_m, "radius must be at least d0");
  require(attenuation_at_ref > 0.0, "attenuation at d0 must be positive");
  require(pathloss_exponent > 0.0, "pathloss exponent must be positive");
  require(noise_variance_w > 0.0, "noise variance must be positive");
}

void ChannelRealization::validate(const SystemParams& params) const {
  require(static_cast<int>(gains.size()) == params.num_users,
          "gains list must have one entry per user");
  require(static_cast<int>(distances.size()) == params.num_users,
          "distances list must have one entry per user");
  for (double g : gains) require(g > 0.0, "channel gains must be positive");
  for (double d : distances) {
    require(d >= params.ref_distance_m, "distances must be at least d0");
    require(d <= params.cell_radius_m, "distances must not exceed the cell radius");
  }
}

void Scenario::validate() const {
  params.validate();
  channels.validate(params);
}

ChannelRealization generate_channels(const SystemParams& params, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  ChannelRealization out;
  out.seed = seed;
  out.gains.reserve(params.num_users);
  out.distances.reserve(params.num_users);
  for (int k = 0; k < params.num_users; ++k) {
    // Uniform over the disc, clamped to the reference distance.
    double d = params.cell_radius_m * std::sqrt(next_uniform(rng));
    d = std::max(params.ref_distance_m, d);
    out.distances.push_back(d);
    out.gains.push_back(params.attenuation_at_ref /
                        std::pow(d / params.ref_distance_m, params.pathloss_exponent));
  }
  return out;
}

Scenario generate_scenario(const SystemParams& params, std::uint64_t seed) {
  return Scenario{params, generate_channels(params, seed)};
}

Scenario parse_scenario_json(const std::string& text) {
  json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) throw ParseError("invalid JSON");
  if (!root.contains("params")) throw ParseError("missing field: params");

  Scenario s;
  const json& p = root["params"];
  s.params.num_users = get_int(p, "K");
  s.params.num_clusters = get_int(p, "C");
  s.params.frame_seconds = get_number(p, "T");
  s.params.max_power_w = get_number(p, "Pmax");
  s.params.cell_radius_m = get_number(p, "radius");
  s.params.ref_distance_m = get_number(p, "d0");
  s.params.attenuation_at_ref = db_to_linear(get_number(p, "beta_db"));
  s.params.pathloss_exponent = get_number(p, "kappa");
  s.params.noise_variance_w = dbm_to_watts(get_number(p, "noise_dbm"));

  if (!root.contains("channels")) throw ParseError("missing field: channels");
  const json& c = root["channels"];
  s.channels.gains = get_array(c, "gains");
  s.channels.distances = get_array(c, "distances");
  if (!c.contains("seed")) throw ParseError("missing field: seed");
  const json& sd = c["seed"];
  if (sd.is_number_unsigned()) {
    s.channels.seed = sd.get<std::uint64_t>();
  } else if (sd.is_number_integer() && sd.get<std::int64_t>() >= 0) {
    s.channels.seed = static_cast<std::uint64_t>(sd.get<std::int64_t>());
  } else {
    throw ParseError("seed must be a nonnegative integer");
  }

  s.validate();
  return s;
}

std::string scenario_to_json(const Scenario& scenario) {
  const SystemParams& p = scenario.params;
  json root;
  root["params"] = {
      {"K", p.num_users},
      {"C", p.num_clusters},
      {"T", p.frame_seconds},
      {"Pmax", p.max_power_w},
      {"radius", p.cell_radius_m},
      {"d0", p.ref_distance_m},
      {"beta_db", invertible_db(p.attenuation_at_ref, &db_to_linear, linear_to_db(p.attenuation_at_ref))},
      {"kappa", p.pathloss_exponent},
      {"noise_dbm", invertible_db(p.noise_variance_w, &dbm_to_watts, watts_to_dbm(p.noise_variance_w))},
  };
  root["channels"] = {
      {"gains", scenario.channels.gains},
      {"distances", scenario.channels.distances},
      {"seed", scenario.channels.seed},
  };
  return root.dump(2) + "\n";
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_json(buffer.str());
}

void save_scenario(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file: " + path);
  out << scenario_to_json(scenario);
}

}  // namespace noma
