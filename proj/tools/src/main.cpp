#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "artifacts.hpp"
#include "noma/conic/socp_ipm.hpp"
#include "noma/errors.hpp"
#include "noma/grouping.hpp"
#include "noma/oracle.hpp"
#include "noma/rate_model.hpp"
#include "noma/sca.hpp"
#include "noma/scenario.hpp"

namespace {

using noma::tool::ArtifactSink;
using noma::tool::csv_field;
using noma::tool::fmt;
using ordered_json = nlohmann::ordered_json;

struct Args {
  std::uint64_t seed = 1;
  std::string config_path;
  std::string out_dir = ".";
  double epsilon = 1e-4;
  int max_iters = 50;
  bool no_warm_start = false;
  std::string dump_name;
  std::string scenario_path;
  std::string grouping = "paired";

  int users = 10;
  int clusters = 5;
  double frame = 10.0;
  double pmax = 10.0;
  double radius = 50.0;
  double d0 = 1.0;
  double beta_db = -30.0;
  double kappa = 2.0;
  double noise_dbm = -100.0;

  std::vector<double> pmax_list{1.0, 2.0, 5.0, 10.0, 20.0};
  int runs = 5;
  int grid_points = 64;
  int rounds = 3;
};

// Option handles for the scenario parameters, so a config file can supply
// defaults and only explicitly passed flags override it.
struct ParamFlags {
  CLI::Option* users;
  CLI::Option* clusters;
  CLI::Option* frame;
  CLI::Option* pmax;
  CLI::Option* radius;
  CLI::Option* d0;
  CLI::Option* beta_db;
  CLI::Option* kappa;
  CLI::Option* noise_dbm;
};

// Which of the coupled K/C pair a config file pinned explicitly.
struct ConfigShape {
  bool users = false;
  bool clusters = false;
};

noma::SystemParams params_from_config(const std::string& path, ConfigShape& shape) {
  std::ifstream in(path);
  if (!in) throw noma::ParseError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json root = nlohmann::json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) throw noma::ParseError("invalid JSON in " + path);
  if (!root.contains("params") || !root["params"].is_object())
    throw noma::ParseError("config file needs a top-level params object");
  const auto& p = root["params"];
  static const std::set<std::string> known = {"K",  "C",       "T",     "Pmax",     "radius",
                                              "d0", "beta_db", "kappa", "noise_dbm"};
  for (const auto& item : p.items()) {
    if (!known.count(item.key())) throw noma::ParseError("unknown params field: " + item.key());
  }
  noma::SystemParams out;
  auto num = [&](const char* key, double fallback) {
    if (!p.contains(key)) return fallback;
    if (!p[key].is_number()) throw noma::ParseError(std::string("field is not a number: ") + key);
    return p[key].get<double>();
  };
  auto integer = [&](const char* key, int fallback) {
    double v = num(key, fallback);
    if (v != static_cast<int>(v)) throw noma::ParseError(std::string("field is not an integer: ") + key);
    return static_cast<int>(v);
  };
  shape.users = p.contains("K");
  shape.clusters = p.contains("C");
  out.num_users = integer("K", out.num_users);
  out.num_clusters = integer("C", out.num_clusters);
  out.frame_seconds = num("T", out.frame_seconds);
  out.max_power_w = num("Pmax", out.max_power_w);
  out.cell_radius_m = num("radius", out.cell_radius_m);
  out.ref_distance_m = num("d0", out.ref_distance_m);
  if (p.contains("beta_db")) out.attenuation_at_ref = noma::db_to_linear(num("beta_db", 0.0));
  out.pathloss_exponent = num("kappa", out.pathloss_exponent);
  if (p.contains("noise_dbm")) out.noise_variance_w = noma::dbm_to_watts(num("noise_dbm", 0.0));
  return out;
}

noma::SystemParams effective_params(const Args& a, const ParamFlags& f) {
  noma::SystemParams p;
  ConfigShape shape;
  if (!a.config_path.empty()) p = params_from_config(a.config_path, shape);
  if (f.users->count()) p.num_users = a.users;
  if (f.clusters->count()) p.num_clusters = a.clusters;
  // Supplying only one of K and C, through either the config or a flag,
  // adjusts the other to keep two users per cluster; an odd K is left for
  // validation to reject.
  bool users_given = shape.users || f.users->count() > 0;
  bool clusters_given = shape.clusters || f.clusters->count() > 0;
  if (users_given && !clusters_given && p.num_users % 2 == 0) p.num_clusters = p.num_users / 2;
  if (clusters_given && !users_given) p.num_users = 2 * p.num_clusters;
  if (f.frame->count()) p.frame_seconds = a.frame;
  if (f.pmax->count()) p.max_power_w = a.pmax;
  if (f.radius->count()) p.cell_radius_m = a.radius;
  if (f.d0->count()) p.ref_distance_m = a.d0;
  if (f.beta_db->count()) p.attenuation_at_ref = noma::db_to_linear(a.beta_db);
  if (f.kappa->count()) p.pathloss_exponent = a.kappa;
  if (f.noise_dbm->count()) p.noise_variance_w = noma::dbm_to_watts(a.noise_dbm);
  return p;
}

struct ScenarioSource {
  noma::Scenario scenario;
  ordered_json inputs;  // manifest "inputs": scenario path, or generation seed
  bool generated = false;
};

ScenarioSource resolve_scenario(const Args& a, const ParamFlags& f) {
  ScenarioSource out;
  if (!a.scenario_path.empty()) {
    out.scenario = noma::load_scenario(a.scenario_path);
    out.inputs["scenario"] = a.scenario_path;
  } else {
    out.scenario = noma::generate_scenario(effective_params(a, f), a.seed);
    out.inputs["seed"] = a.seed;
    out.generated = true;
  }
  return out;
}

noma::ClusterAssignment make_clusters(const noma::Scenario& s, const std::string& mode) {
  return mode == "adjacent" ? noma::group_users_adjacent(s.channels)
                            : noma::group_users(s.channels);
}

void print_clusters(const noma::ClusterAssignment& a) {
  std::cout << "clusters (strong,weak):";
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    std::cout << ' ' << i + 1 << ":(" << a.pairs[i][0] << ',' << a.pairs[i][1] << ')';
  }
  std::cout << '\n';
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Written last; lists every artifact the run produced, with checksums.
void write_manifest(ArtifactSink& sink, const std::string& subcommand, ordered_json inputs,
                    ordered_json config) {
  ordered_json m;
  m["subcommand"] = subcommand;
  m["inputs"] = std::move(inputs);
  m["config"] = std::move(config);
  ordered_json files = ordered_json::array();
  for (const auto& [name, sum] : sink.entries()) {
    files.push_back(ordered_json{{"path", name}, {"fnv1a64", sum}});
  }
  m["artifacts"] = files;
  m["timestamp"] = utc_timestamp();
  sink.write("manifest.json", m.dump(2) + "\n");
}

ordered_json params_json(const noma::SystemParams& p) {
  return ordered_json{{"K", p.num_users},
                      {"C", p.num_clusters},
                      {"T", p.frame_seconds},
                      {"Pmax", p.max_power_w},
                      {"radius", p.cell_radius_m},
                      {"d0", p.ref_distance_m},
                      {"beta", p.attenuation_at_ref},
                      {"kappa", p.pathloss_exponent},
                      {"noise_w", p.noise_variance_w}};
}

ordered_json solver_config_json(const Args& a) {
  return ordered_json{{"epsilon", a.epsilon},
                      {"max_iterations", a.max_iters},
                      {"seed", a.seed},
                      {"grouping", a.grouping}};
}

noma::ScaConfig sca_config(const Args& a) {
  noma::ScaConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.max_iterations = a.max_iters;
  cfg.seed = a.seed;
  return cfg;
}

std::string trace_csv(const std::vector<double>& trace) {
  std::string out = "iter,gamma\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out += std::to_string(k + 1) + "," + fmt(trace[k]) + "\n";
  }
  return out;
}

std::string summary_csv(const noma::Scenario& scen, const noma::Allocation& alloc,
                        const noma::RateReport& rates) {
  const int C = static_cast<int>(alloc.times.size());
  const double T = scen.params.frame_seconds;
  std::string head, row;
  for (int i = 1; i <= C; ++i) head += "t_" + std::to_string(i) + ",";
  for (int i = 1; i <= C; ++i) {
    for (int j = 1; j <= 2; ++j) {
      head += "p_" + std::to_string(j) + "_" + std::to_string(i) + ",";
    }
  }
  head += "min_throughput_bits_per_s,sum_throughput_bits_per_s,min_throughput_bits,sum_throughput_bits";
  for (int i = 0; i < C; ++i) row += fmt(alloc.times[i]) + ",";
  for (int i = 0; i < C; ++i) {
    for (int j = 0; j < 2; ++j) row += fmt(alloc.amplitudes[i][j]) + ",";
  }
  row += fmt(rates.min_rate / T) + "," + fmt(rates.sum_rate / T) + "," + fmt(rates.min_rate) +
         "," + fmt(rates.sum_rate);
  return head + "\n" + row + "\n";
}

std::string rates_csv(const noma::RateReport& rates) {
  const int C = static_cast<int>(rates.rates.size());
  std::string head = "min_rate,sum_rate";
  std::string row = fmt(rates.min_rate) + "," + fmt(rates.sum_rate);
  for (int i = 1; i <= C; ++i) {
    for (int j = 1; j <= 2; ++j) {
      head += ",r_" + std::to_string(j) + "_" + std::to_string(i);
      row += "," + fmt(rates.rates[i - 1][j - 1]);
    }
  }
  return head + "\n" + row + "\n";
}

int cmd_generate(const Args& a, const ParamFlags& f) {
  if (!a.scenario_path.empty())
    throw noma::ValidationError("generate draws a new scenario; --scenario is not accepted");
  noma::SystemParams params = effective_params(a, f);
  noma::Scenario scen = noma::generate_scenario(params, a.seed);
  ArtifactSink sink(a.out_dir);
  std::string path = sink.write("scenario.json", noma::scenario_to_json(scen));
  write_manifest(sink, "generate", ordered_json{{"seed", a.seed}}, params_json(params));
  std::cout << "wrote " << path << " (K=" << params.num_users << ", C=" << params.num_clusters
            << ", Pmax=" << fmt(params.max_power_w) << " W, T=" << fmt(params.frame_seconds)
            << " s)\n";
  return 0;
}

int run_solver(const Args& a, const ParamFlags& f, bool equal_time) {
  const std::string prefix = equal_time ? "baseline" : "solve";
  ScenarioSource src = resolve_scenario(a, f);
  const noma::Scenario& scen = src.scenario;
  noma::ClusterAssignment clusters = make_clusters(scen, a.grouping);
  print_clusters(clusters);

  noma::ScaConfig cfg = sca_config(a);
  cfg.keep_program_dump = !a.dump_name.empty();
  noma::conic::SocpIpmBackend backend;
  noma::SolveReport rep = equal_time ? noma::solve_equal_time(scen, clusters, cfg, backend)
                                     : noma::solve_maxmin(scen, clusters, cfg, backend);

  ArtifactSink sink(a.out_dir);
  if (src.generated) sink.write("scenario.json", noma::scenario_to_json(scen));
  sink.write(prefix + "_trace.csv", trace_csv(rep.trace));
  if (!rep.allocation.times.empty()) {
    noma::RateReport rates = noma::evaluate(scen, clusters, rep.allocation);
    sink.write(prefix + "_summary.csv", summary_csv(scen, rep.allocation, rates));
    sink.write(prefix + "_rates.csv", rates_csv(rates));
  }
  if (!a.dump_name.empty()) sink.write(a.dump_name, rep.program_dump);
  write_manifest(sink, prefix, src.inputs, solver_config_json(a));

  const double T = scen.params.frame_seconds;
  std::cout << prefix << ": " << to_string(rep.outcome) << ", min throughput "
            << fmt(rep.gamma / T) << " bits/s (" << fmt(rep.gamma) << " bits per frame), "
            << rep.iterations << " iterations, " << fmt(rep.wall_seconds) << " s\n";
  if (rep.outcome == noma::SolveOutcome::Converged) return 0;
  std::cerr << prefix << " did not converge"
            << (rep.detail.empty() ? "" : ": " + rep.detail) << "\n";
  return 1;
}

int cmd_sweep(const Args& a, const ParamFlags& f) {
  ScenarioSource src = resolve_scenario(a, f);
  noma::ClusterAssignment clusters = make_clusters(src.scenario, a.grouping);
  noma::conic::SocpIpmBackend backend;
  std::vector<noma::SweepPoint> points = noma::sweep_pmax(
      src.scenario, clusters, sca_config(a), a.pmax_list, backend, !a.no_warm_start);

  std::string csv = "pmax,gamma_opportunistic,gamma_equal,status\n";
  bool all_ok = true;
  for (const noma::SweepPoint& pt : points) {
    csv += fmt(pt.pmax) + ",";
    csv += (pt.gamma_opportunistic ? fmt(*pt.gamma_opportunistic) : std::string()) + ",";
    csv += (pt.gamma_equal ? fmt(*pt.gamma_equal) : std::string()) + ",";
    csv += csv_field(pt.status) + "\n";
    all_ok = all_ok && pt.status == "ok";
  }
  ArtifactSink sink(a.out_dir);
  if (src.generated) sink.write("scenario.json", noma::scenario_to_json(src.scenario));
  sink.write("sweep.csv", csv);
  ordered_json config = solver_config_json(a);
  config["pmax_list"] = a.pmax_list;
  config["warm_start"] = !a.no_warm_start;
  write_manifest(sink, "sweep", src.inputs, std::move(config));

  for (const noma::SweepPoint& pt : points) {
    std::cout << "pmax " << fmt(pt.pmax) << ": opportunistic "
              << (pt.gamma_opportunistic ? fmt(*pt.gamma_opportunistic) : "-") << ", equal "
              << (pt.gamma_equal ? fmt(*pt.gamma_equal) : "-") << " bits per frame ["
              << pt.status << "]\n";
  }
  return all_ok ? 0 : 1;
}

int cmd_compare(const Args& a, const ParamFlags& f) {
  if (!a.scenario_path.empty())
    throw noma::ValidationError("compare draws its own channels; --scenario is not accepted");
  if (a.runs < 1) throw noma::ValidationError("--runs must be at least 1");
  noma::SystemParams params = effective_params(a, f);
  const int C = params.num_clusters;
  const double T = params.frame_seconds;
  noma::conic::SocpIpmBackend backend;

  std::string csv = "seed";
  for (int i = 1; i <= C; ++i) csv += ",t_" + std::to_string(i);
  csv += ",min_opportunistic_bits_per_s,min_equal_bits_per_s,relative_gain_percent,status\n";

  std::vector<double> sums(C + 3, 0.0);
  int counted = 0;
  bool all_converged = true;
  for (int r = 0; r < a.runs; ++r) {
    std::uint64_t seed = a.seed + static_cast<std::uint64_t>(r);
    noma::Scenario scen = noma::generate_scenario(params, seed);
    noma::ClusterAssignment clusters = make_clusters(scen, a.grouping);
    noma::ScaConfig cfg = sca_config(a);
    cfg.seed = seed;
    noma::SolveReport opp = noma::solve_maxmin(scen, clusters, cfg, backend);
    noma::SolveReport eq = noma::solve_equal_time(scen, clusters, cfg, backend);

    csv += std::to_string(seed);
    bool have = !opp.allocation.times.empty() && !eq.allocation.times.empty();
    bool converged = opp.outcome == noma::SolveOutcome::Converged &&
                     eq.outcome == noma::SolveOutcome::Converged;
    all_converged = all_converged && converged;
    if (have) {
      double gain = 100.0 * (opp.gamma - eq.gamma) / eq.gamma;
      for (int i = 0; i < C; ++i) {
        csv += "," + fmt(opp.allocation.times[i]);
        sums[i] += opp.allocation.times[i];
      }
      csv += "," + fmt(opp.gamma / T) + "," + fmt(eq.gamma / T) + "," + fmt(gain);
      sums[C] += opp.gamma / T;
      sums[C + 1] += eq.gamma / T;
      sums[C + 2] += gain;
      ++counted;
    } else {
      for (int i = 0; i < C + 3; ++i) csv += ",";
    }
    std::string status = converged ? "ok"
                                   : to_string(opp.outcome) + " / " + to_string(eq.outcome);
    csv += "," + csv_field(status) + "\n";
    std::cout << "seed " << seed << ": " << status << "\n";
  }
  csv += "mean";
  for (int i = 0; i < C + 3; ++i) {
    csv += counted > 0 ? "," + fmt(sums[i] / counted) : ",";
  }
  csv += ",\n";

  ArtifactSink sink(a.out_dir);
  sink.write("compare.csv", csv);
  ordered_json config = solver_config_json(a);
  config["runs"] = a.runs;
  config["params"] = params_json(params);
  write_manifest(sink, "compare", ordered_json{{"seed", a.seed}}, std::move(config));

  if (counted > 0) {
    std::cout << "mean relative gain " << fmt(sums[C + 2] / counted) << "% over " << counted
              << " runs\n";
  }
  return all_converged ? 0 : 1;
}

int cmd_oracle(const Args& a, const ParamFlags& f) {
  ScenarioSource src = resolve_scenario(a, f);
  noma::ClusterAssignment clusters = make_clusters(src.scenario, a.grouping);
  noma::GridSpec spec;
  spec.points_per_power_axis = a.grid_points;
  spec.points_per_time_axis = a.grid_points;
  spec.refinement_rounds = a.rounds;
  noma::OracleResult res = noma::grid_maxmin(src.scenario, clusters, spec);

  std::string csv = "round,incumbent_min_rate\n";
  for (std::size_t k = 0; k < res.incumbent_per_round.size(); ++k) {
    csv += std::to_string(k) + "," + fmt(res.incumbent_per_round[k]) + "\n";
    std::cout << "round " << k << ": " << fmt(res.incumbent_per_round[k]) << " bits per frame\n";
  }
  ArtifactSink sink(a.out_dir);
  if (src.generated) sink.write("scenario.json", noma::scenario_to_json(src.scenario));
  sink.write("oracle.csv", csv);
  write_manifest(sink, "oracle", src.inputs,
                 ordered_json{{"grid_points", a.grid_points},
                              {"rounds", a.rounds},
                              {"grouping", a.grouping}});
  std::cout << "oracle: min rate " << fmt(res.min_rate) << " bits per frame\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  CLI::App app{"Max-min time and power allocation for a downlink TDMA-NOMA cell"};
  app.require_subcommand(1);

  app.add_option("--seed", a.seed, "Channel draw and solver initialization seed")
      ->capture_default_str();
  app.add_option("--config", a.config_path,
                 "JSON file sharing the scenario schema; its params become the defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--out", a.out_dir, "Directory for artifacts")->capture_default_str();
  app.add_option("--epsilon", a.epsilon, "Convergence threshold on the min throughput (bits)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--max-iters", a.max_iters, "Iteration cap for the solver")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--no-warm-start", a.no_warm_start,
               "Restart every sweep point from a fresh random allocation");
  app.add_option("--dump-subproblem", a.dump_name,
                 "Write the first convex restriction's listing to this file under --out");
  app.add_option("--scenario", a.scenario_path, "Load this scenario instead of generating one")
      ->check(CLI::ExistingFile);
  app.add_option("--grouping", a.grouping, "Pairing rule: strongest-with-weakest or adjacent")
      ->check(CLI::IsMember({"paired", "adjacent"}))
      ->capture_default_str();

  ParamFlags f;
  f.users = app.add_option("--K,--users", a.users, "Number of users (2 per cluster)");
  f.clusters = app.add_option("--C,--clusters", a.clusters, "Number of clusters");
  f.frame = app.add_option("--T,--frame", a.frame, "Frame length in seconds");
  f.pmax = app.add_option("--Pmax,--pmax", a.pmax, "Total power budget in watts");
  f.radius = app.add_option("--radius", a.radius, "Cell radius in meters");
  f.d0 = app.add_option("--d0", a.d0, "Reference distance in meters");
  f.beta_db = app.add_option("--beta-db", a.beta_db, "Attenuation at the reference distance, dB");
  f.kappa = app.add_option("--kappa", a.kappa, "Path loss exponent");
  f.noise_dbm = app.add_option("--noise-dbm", a.noise_dbm, "Receiver noise power, dBm");

  CLI::App* generate = app.add_subcommand("generate", "Draw a channel realization and save it");
  CLI::App* solve = app.add_subcommand("solve", "Optimize slot times and powers jointly");
  CLI::App* baseline = app.add_subcommand("baseline", "Equal slot times, optimized powers");
  CLI::App* sweep = app.add_subcommand("sweep", "Solve both schemes over a power budget range");
  CLI::App* compare = app.add_subcommand("compare", "Both schemes over several channel draws");
  CLI::App* oracle = app.add_subcommand("oracle", "Grid-search ground truth (C <= 2)");
  for (CLI::App* sub : {generate, solve, baseline, sweep, compare, oracle}) sub->fallthrough();

  sweep->add_option("--pmax-list", a.pmax_list, "Power budgets in watts, strictly ascending")
      ->delimiter(',')
      ->capture_default_str();
  compare->add_option("--runs", a.runs, "Number of seeded channel draws")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle->add_option("--grid-points", a.grid_points, "Grid points per search axis")
      ->check(CLI::Range(2, 4096))
      ->capture_default_str();
  oracle->add_option("--rounds", a.rounds, "Zoom refinement rounds")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help and version exit cleanly
  }

  try {
    if (app.got_subcommand(generate)) return cmd_generate(a, f);
    if (app.got_subcommand(solve)) return run_solver(a, f, /*equal_time=*/false);
    if (app.got_subcommand(baseline)) return run_solver(a, f, /*equal_time=*/true);
    if (app.got_subcommand(sweep)) return cmd_sweep(a, f);
    if (app.got_subcommand(compare)) return cmd_compare(a, f);
    if (app.got_subcommand(oracle)) return cmd_oracle(a, f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;  // unreachable: require_subcommand(1)
}
