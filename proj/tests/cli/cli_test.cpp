// Drives the installed binary end to end through a shell, checking artifact
// layout, exit codes and byte-level reproducibility.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "noma/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "noma_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

RunResult run_cli(const std::string& args, const fs::path& capture_dir) {
  fs::path log = capture_dir / "run.log";
  std::string cmd = std::string(NOMA_CLI_PATH) + " " + args + " > " +
                    log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log, std::ios::binary);
  res.output.assign(std::istreambuf_iterator<char>(in), {});
  return res;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

TEST_CASE("generate writes a scenario and a checksummed manifest") {
  fs::path dir = fresh_dir("generate");
  RunResult res = run_cli("generate --seed 3 --K 4 --out " + dir.string(), dir);
  CHECK(res.exit_code == 0);

  noma::Scenario s = noma::load_scenario((dir / "scenario.json").string());
  CHECK(s.params.num_users == 4);
  CHECK(s.params.num_clusters == 2);
  CHECK(s.channels.seed == 3);

  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["subcommand"] == "generate");
  CHECK(manifest["inputs"]["seed"] == 3);
  REQUIRE(manifest["artifacts"].size() == 1);
  CHECK(manifest["artifacts"][0]["path"] == "scenario.json");

  // The recorded checksum matches an independent hash of the bytes.
  char expected[32];
  std::snprintf(expected, sizeof expected, "%016llx",
                static_cast<unsigned long long>(fnv1a64(slurp(dir / "scenario.json"))));
  CHECK(manifest["artifacts"][0]["fnv1a64"] == expected);

  // Same seed, fresh directory: the scenario bytes repeat exactly.
  fs::path dir2 = fresh_dir("generate_again");
  RunResult res2 = run_cli("generate --seed 3 --K 4 --out " + dir2.string(), dir2);
  CHECK(res2.exit_code == 0);
  CHECK(slurp(dir / "scenario.json") == slurp(dir2 / "scenario.json"));
}

TEST_CASE("generate rejects an input scenario") {
  fs::path dir = fresh_dir("generate_reject");
  RunResult res = run_cli("generate --scenario /dev/null --out " + dir.string(), dir);
  CHECK(res.exit_code == 2);
}

TEST_CASE("invalid parameters exit with a usage error") {
  fs::path dir = fresh_dir("bad_params");
  RunResult res = run_cli("generate --K 9 --out " + dir.string(), dir);
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("K must equal 2*C") != std::string::npos);

  RunResult res2 = run_cli("solve --frame -1 --out " + dir.string(), dir);
  CHECK(res2.exit_code == 2);

  RunResult res3 = run_cli("", dir);
  CHECK(res3.exit_code == 2);
}

TEST_CASE("solve emits the full artifact set") {
  fs::path dir = fresh_dir("solve");
  RunResult res = run_cli("solve --seed 5 --K 2 --out " + dir.string(), dir);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("solve: converged") != std::string::npos);
  CHECK(res.output.find("clusters (strong,weak):") != std::string::npos);

  auto summary = lines_of(slurp(dir / "solve_summary.csv"));
  REQUIRE(summary.size() == 2);
  CHECK(summary[0] ==
        "t_1,p_1_1,p_2_1,min_throughput_bits_per_s,sum_throughput_bits_per_s,"
        "min_throughput_bits,sum_throughput_bits");
  auto fields = split_csv(summary[1]);
  REQUIRE(fields.size() == 7);
  CHECK(std::stod(fields[0]) == doctest::Approx(10.0).epsilon(1e-6));  // frame saturated
  CHECK(std::stod(fields[5]) > 0.0);

  auto rates = lines_of(slurp(dir / "solve_rates.csv"));
  REQUIRE(rates.size() == 2);
  CHECK(rates[0] == "min_rate,sum_rate,r_1_1,r_2_1");
  // The summary's bits-per-frame column and the rates file agree because both
  // score the same allocation.
  CHECK(split_csv(rates[1])[0] == fields[5]);

  auto trace = lines_of(slurp(dir / "solve_trace.csv"));
  REQUIRE(trace.size() >= 2);
  CHECK(trace[0] == "iter,gamma");
  double prev = -1.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    auto cols = split_csv(trace[k]);
    REQUIRE(cols.size() == 2);
    CHECK(std::stoi(cols[0]) == static_cast<int>(k));
    double gamma = std::stod(cols[1]);
    CHECK(gamma >= prev - 1e-6);
    prev = gamma;
  }

  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["subcommand"] == "solve");
  CHECK(manifest["config"]["epsilon"] == 1e-4);
  std::vector<std::string> listed;
  for (const auto& a : manifest["artifacts"]) listed.push_back(a["path"]);
  CHECK(listed == std::vector<std::string>{"scenario.json", "solve_trace.csv",
                                           "solve_summary.csv", "solve_rates.csv"});
}

TEST_CASE("baseline pins slots and never beats the joint solve") {
  fs::path dir = fresh_dir("baseline_scenario");
  REQUIRE(run_cli("generate --seed 11 --K 4 --out " + dir.string(), dir).exit_code == 0);
  std::string scenario = (dir / "scenario.json").string();

  fs::path eq_dir = fresh_dir("baseline_run");
  RunResult eq = run_cli("baseline --scenario " + scenario + " --out " + eq_dir.string(), eq_dir);
  CHECK(eq.exit_code == 0);
  auto eq_summary = lines_of(slurp(eq_dir / "baseline_summary.csv"));
  REQUIRE(eq_summary.size() == 2);
  auto eq_fields = split_csv(eq_summary[1]);
  CHECK(eq_fields[0] == "5");  // frame 10 over 2 clusters
  CHECK(eq_fields[1] == "5");

  fs::path opp_dir = fresh_dir("opportunistic_run");
  RunResult opp = run_cli("solve --scenario " + scenario + " --out " + opp_dir.string(), opp_dir);
  CHECK(opp.exit_code == 0);
  auto opp_fields = split_csv(lines_of(slurp(opp_dir / "solve_summary.csv"))[1]);

  // Column 8 is min_throughput_bits in the two-cluster layout.
  double eq_min = std::stod(eq_fields[8]);
  double opp_min = std::stod(opp_fields[8]);
  CHECK(opp_min >= eq_min - 1e-6);

  // No scenario.json artifact when the instance came from a file.
  CHECK(!fs::exists(eq_dir / "scenario.json"));
}

TEST_CASE("solve runs are byte reproducible") {
  fs::path a = fresh_dir("repro_a");
  fs::path b = fresh_dir("repro_b");
  REQUIRE(run_cli("solve --seed 21 --K 4 --out " + a.string(), a).exit_code == 0);
  REQUIRE(run_cli("solve --seed 21 --K 4 --out " + b.string(), b).exit_code == 0);
  for (const char* name :
       {"scenario.json", "solve_trace.csv", "solve_summary.csv", "solve_rates.csv"}) {
    CHECK(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("subproblem dump is written on request") {
  fs::path dir = fresh_dir("dump");
  RunResult res = run_cli("solve --seed 2 --K 2 --dump-subproblem restriction.txt --out " +
                              dir.string(),
                          dir);
  CHECK(res.exit_code == 0);
  std::string text = slurp(dir / "restriction.txt");
  CHECK(text.find("maximize") != std::string::npos);
  CHECK(text.find("p_1_1") != std::string::npos);

  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  bool listed = false;
  for (const auto& a : manifest["artifacts"]) {
    if (a["path"] == "restriction.txt") listed = true;
  }
  CHECK(listed);
}

TEST_CASE("sweep matches the direct solve and grows with the budget") {
  fs::path dir = fresh_dir("sweep_scenario");
  REQUIRE(run_cli("generate --seed 13 --K 4 --out " + dir.string(), dir).exit_code == 0);
  std::string scenario = (dir / "scenario.json").string();

  fs::path solve_dir = fresh_dir("sweep_direct");
  REQUIRE(run_cli("solve --scenario " + scenario + " --out " + solve_dir.string(), solve_dir)
              .exit_code == 0);
  auto solve_fields = split_csv(lines_of(slurp(solve_dir / "solve_summary.csv"))[1]);

  fs::path one_dir = fresh_dir("sweep_single");
  RunResult one = run_cli("sweep --scenario " + scenario + " --pmax-list 10 --out " +
                              one_dir.string(),
                          one_dir);
  CHECK(one.exit_code == 0);
  auto one_rows = lines_of(slurp(one_dir / "sweep.csv"));
  REQUIRE(one_rows.size() == 2);
  CHECK(one_rows[0] == "pmax,gamma_opportunistic,gamma_equal,status");
  auto one_fields = split_csv(one_rows[1]);
  CHECK(one_fields[0] == "10");
  // Same scenario, same seed: the sweep's bits-per-frame column reproduces
  // the direct solve's (column 8 in the two-cluster summary).
  CHECK(one_fields[1] == solve_fields[8]);
  CHECK(one_fields[3] == "ok");

  fs::path multi_dir = fresh_dir("sweep_multi");
  RunResult multi = run_cli("sweep --scenario " + scenario + " --pmax-list 1,5,25 --out " +
                                multi_dir.string(),
                            multi_dir);
  CHECK(multi.exit_code == 0);
  auto rows = lines_of(slurp(multi_dir / "sweep.csv"));
  REQUIRE(rows.size() == 4);
  double prev_opp = 0.0, prev_eq = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    auto f = split_csv(rows[k]);
    REQUIRE(f.size() == 4);
    CHECK(f[3] == "ok");
    double opp = std::stod(f[1]);
    double eq = std::stod(f[2]);
    CHECK(opp >= eq - 1e-6);
    CHECK(opp >= prev_opp - 1e-9);
    CHECK(eq >= prev_eq - 1e-9);
    prev_opp = opp;
    prev_eq = eq;
  }

  fs::path bad_dir = fresh_dir("sweep_bad");
  RunResult bad = run_cli("sweep --scenario " + scenario + " --pmax-list 5,1 --out " +
                              bad_dir.string(),
                          bad_dir);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("compare tabulates per-seed gains and a mean row") {
  fs::path dir = fresh_dir("compare");
  RunResult res = run_cli("compare --runs 2 --seed 31 --K 4 --out " + dir.string(), dir);
  CHECK(res.exit_code == 0);

  auto rows = lines_of(slurp(dir / "compare.csv"));
  REQUIRE(rows.size() == 4);  // header, two seeds, mean
  CHECK(rows[0] ==
        "seed,t_1,t_2,min_opportunistic_bits_per_s,min_equal_bits_per_s,"
        "relative_gain_percent,status");
  for (std::size_t k = 1; k <= 2; ++k) {
    auto f = split_csv(rows[k]);
    REQUIRE(f.size() == 7);
    CHECK(f[0] == std::to_string(30 + k));
    CHECK(std::stod(f[5]) >= -1e-4);  // joint never loses to the pinned slots
    CHECK(f[6] == "ok");
  }
  auto mean = split_csv(rows[3]);
  CHECK(mean[0] == "mean");
  CHECK(std::stod(mean[3]) > 0.0);
  CHECK(mean[6] == "");
}

TEST_CASE("oracle subcommand prints its refinement trail") {
  fs::path dir = fresh_dir("oracle");
  RunResult res = run_cli("oracle --seed 7 --K 2 --grid-points 16 --rounds 3 --out " +
                              dir.string(),
                          dir);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("oracle: min rate") != std::string::npos);

  auto rows = lines_of(slurp(dir / "oracle.csv"));
  REQUIRE(rows.size() == 5);  // header, initial scan, three zooms
  CHECK(rows[0] == "round,incumbent_min_rate");
  double prev = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    double v = std::stod(split_csv(rows[k])[1]);
    CHECK(v >= prev);
    prev = v;
  }

  // The default cell has five clusters, which is beyond the search.
  fs::path big = fresh_dir("oracle_big");
  RunResult too_big = run_cli("oracle --out " + big.string(), big);
  CHECK(too_big.exit_code == 2);
}

TEST_CASE("config file seeds the parameters, flags still win") {
  fs::path dir = fresh_dir("config");
  fs::path cfg = dir / "experiment.json";
  std::ofstream(cfg) << R"({"params": {"K": 4, "Pmax": 5.0}})";

  RunResult res = run_cli("generate --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(res.exit_code == 0);
  noma::Scenario s = noma::load_scenario((dir / "scenario.json").string());
  CHECK(s.params.num_users == 4);
  CHECK(s.params.num_clusters == 2);
  CHECK(s.params.max_power_w == 5.0);

  fs::path dir2 = fresh_dir("config_override");
  RunResult res2 = run_cli("generate --config " + cfg.string() + " --Pmax 7 --out " +
                               dir2.string(),
                           dir2);
  CHECK(res2.exit_code == 0);
  noma::Scenario s2 = noma::load_scenario((dir2 / "scenario.json").string());
  CHECK(s2.params.max_power_w == 7.0);
  CHECK(s2.params.num_users == 4);

  fs::path dir3 = fresh_dir("config_bad");
  fs::path bad = dir3 / "bad.json";
  std::ofstream(bad) << R"({"params": {"bandwidth": 20}})";
  RunResult res3 = run_cli("generate --config " + bad.string() + " --out " + dir3.string(), dir3);
  CHECK(res3.exit_code == 2);
}

TEST_CASE("cluster count follows the user count") {
  fs::path dir = fresh_dir("derive_c");
  RunResult res = run_cli("generate --seed 1 --users 6 --out " + dir.string(), dir);
  CHECK(res.exit_code == 0);
  noma::Scenario s = noma::load_scenario((dir / "scenario.json").string());
  CHECK(s.params.num_users == 6);
  CHECK(s.params.num_clusters == 3);

  fs::path dir2 = fresh_dir("derive_k");
  RunResult res2 = run_cli("generate --seed 1 --clusters 4 --out " + dir2.string(), dir2);
  CHECK(res2.exit_code == 0);
  noma::Scenario s2 = noma::load_scenario((dir2 / "scenario.json").string());
  CHECK(s2.params.num_users == 8);
  CHECK(s2.params.num_clusters == 4);
}
