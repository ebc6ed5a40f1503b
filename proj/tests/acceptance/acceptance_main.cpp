// Acceptance suite: eight criteria, one verdict line each, exit code equal to
// the number of failures. The heavyweight default-scale solves (criteria 2-4
// and 7) share one batch of runs.
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "noma/conic/socp_ipm.hpp"
#include "noma/grouping.hpp"
#include "noma/oracle.hpp"
#include "noma/rate_model.hpp"
#include "noma/sca.hpp"
#include "noma/scenario.hpp"
#include "noma/subproblem.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const noma::conic::SocpIpmBackend backend;
int failures = 0;

void verdict(bool pass, int index, const std::string& text) {
  std::printf("[%s] %d. %s\n", pass ? "PASS" : "FAIL", index, text.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string pct(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", x);
  return buf;
}

noma::Scenario make_scenario(int clusters, std::uint64_t seed) {
  noma::SystemParams params;
  params.num_clusters = clusters;
  params.num_users = 2 * clusters;
  return noma::generate_scenario(params, seed);
}

noma::ScaConfig config_for(std::uint64_t seed) {
  noma::ScaConfig cfg;
  cfg.seed = seed;
  return cfg;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---- criterion 1: grid oracle agreement on small instances ----------------

void criterion_oracle_equivalence() {
  auto start = Clock::now();
  noma::GridSpec spec;  // 64 points per axis, 3 refinement rounds
  double worst_rel = 0.0;
  int solved = 0, total = 0;

  auto check_instance = [&](int clusters, std::uint64_t seed) {
    ++total;
    noma::Scenario s = make_scenario(clusters, seed);
    noma::ClusterAssignment groups = noma::group_users(s.channels);
    noma::SolveReport sca = noma::solve_maxmin(s, groups, config_for(seed), backend);
    if (sca.outcome == noma::SolveOutcome::SubproblemFailure) return;
    noma::OracleResult oracle = noma::grid_maxmin(s, groups, spec);
    ++solved;
    worst_rel = std::max(worst_rel,
                         std::abs(sca.gamma - oracle.min_rate) / oracle.min_rate);
  };

  for (std::uint64_t seed = 1; seed <= 20; ++seed) check_instance(1, seed);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) check_instance(2, seed);

  double elapsed = seconds_since(start);
  bool pass = solved == total && worst_rel <= 0.02 && elapsed < 300.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "grid oracle agreement: %d/%d instances solved, worst gap %s of optimum "
                "(2%% allowed), %.1f s (300 s budget)",
                solved, total, pct(100.0 * worst_rel).c_str(), elapsed);
  verdict(pass, 1, buf);
}

// ---- criteria 2-4 and 7 share the 50-seed default-scale batch --------------

struct BatchRun {
  noma::Scenario scenario;
  noma::ClusterAssignment groups;
  noma::SolveReport opportunistic;
  noma::SolveReport equal;
};

std::vector<BatchRun> default_scale_batch() {
  std::vector<BatchRun> runs;
  runs.reserve(50);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    BatchRun run;
    run.scenario = make_scenario(5, seed);
    run.groups = noma::group_users(run.scenario.channels);
    run.opportunistic = noma::solve_maxmin(run.scenario, run.groups, config_for(seed), backend);
    run.equal = noma::solve_equal_time(run.scenario, run.groups, config_for(seed), backend);
    runs.push_back(std::move(run));
  }
  return runs;
}

void criterion_dominance(const std::vector<BatchRun>& runs) {
  int dominated = 0;
  double gain_sum = 0.0;
  int counted = 0;
  for (const auto& run : runs) {
    if (run.opportunistic.gamma >= run.equal.gamma - 1e-6) ++dominated;
    if (run.equal.gamma > 0.0) {
      gain_sum += 100.0 * (run.opportunistic.gamma - run.equal.gamma) / run.equal.gamma;
      ++counted;
    }
  }
  double mean_gain = counted ? gain_sum / counted : 0.0;
  bool dominance_ok = dominated == static_cast<int>(runs.size());
  bool band_ok = mean_gain >= 5.0 && mean_gain <= 25.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "joint beats equal-time: dominance on %d/%zu seeds, mean gain %s "
                "(required inside [5%%, 25%%])",
                dominated, runs.size(), pct(mean_gain).c_str());
  verdict(dominance_ok && band_ok, 2, buf);
}

void criterion_convergence(const std::vector<BatchRun>& runs) {
  int converged_fast = 0;
  int monotone = 0;
  for (const auto& run : runs) {
    const noma::SolveReport& rep = run.opportunistic;
    if (rep.outcome == noma::SolveOutcome::Converged && rep.iterations <= 20) ++converged_fast;
    bool ok = true;
    for (std::size_t k = 1; k < rep.trace.size(); ++k) {
      if (rep.trace[k] < rep.trace[k - 1] - 1e-6) ok = false;
    }
    if (ok) ++monotone;
  }
  bool pass = converged_fast == static_cast<int>(runs.size()) &&
              monotone == static_cast<int>(runs.size());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "convergence: %d/%zu runs reach the 1e-4 stop inside 20 iterations, "
                "%d/%zu traces monotone within 1e-6",
                converged_fast, runs.size(), monotone, runs.size());
  verdict(pass, 3, buf);
}

void criterion_feasibility(const std::vector<BatchRun>& runs) {
  int feasible = 0, tight = 0, total = 0;
  for (const auto& run : runs) {
    for (const noma::SolveReport* rep : {&run.opportunistic, &run.equal}) {
      ++total;
      if (noma::check_feasibility(run.scenario, run.groups, rep->allocation).empty()) ++feasible;
      noma::RateReport rates = noma::evaluate(run.scenario, run.groups, rep->allocation);
      if (rates.min_rate >= rep->gamma - 1e-4) ++tight;
    }
  }
  bool pass = feasible == total && tight == total;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "feasibility and tightness: %d/%d allocations inside all constraint "
                "tolerances, %d/%d evaluated rates within 1e-4 of the reported objective",
                feasible, total, tight, total);
  verdict(pass, 4, buf);
}

void criterion_baseline_shape(const std::vector<BatchRun>& runs) {
  int exact = 0;
  for (const auto& run : runs) {
    bool all_two = true;
    for (double t : run.equal.allocation.times) {
      if (t != 2.0) all_two = false;
    }
    if (all_two && run.equal.allocation.times.size() == 5) ++exact;
  }
  bool pass = exact == static_cast<int>(runs.size());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "equal-time shape: %d/%zu baseline runs pin all five slots to exactly 2 s",
                exact, runs.size());
  verdict(pass, 7, buf);
}

// ---- criterion 5: cone encodings agree with the quadratic originals --------

void criterion_cone_algebra() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tol = 1e-9;
  const int samples = 10000;

  // Rotated cone: || (2g, t - theta) || <= t + theta  vs  t * theta >= g^2.
  int rotated_bad = 0;
  for (int k = 0; k < samples; ++k) {
    double t = 10.0 * unit(rng);
    double theta = 10.0 * unit(rng);
    double g = 20.0 * unit(rng) - 10.0;
    double cone = (t + theta) - std::hypot(2.0 * g, t - theta);
    double quad = t * theta - g * g;
    if (cone >= tol && quad < -tol) ++rotated_bad;
    if (quad >= tol && cone < -tol) ++rotated_bad;
  }

  // Interference cone: || (sqrt(h) p_1..p_n, sigma) || <= eta
  // vs  h * sum p^2 + sigma^2 <= eta^2 for eta >= 0.
  int soc_bad = 0;
  for (int k = 0; k < samples; ++k) {
    double h = std::pow(10.0, -8.0 * unit(rng));
    double sigma = std::pow(10.0, -7.0 * unit(rng));
    double eta = 3.0 * unit(rng);
    int n = 1 + static_cast<int>(rng() % 3);
    double sq = 0.0, norm_sq = sigma * sigma;
    for (int i = 0; i < n; ++i) {
      double p = 3.0 * unit(rng);
      sq += p * p;
      norm_sq += h * p * p;
    }
    double cone = eta - std::sqrt(norm_sq);
    double quad = eta * eta - (h * sq + sigma * sigma);
    if (cone >= tol && quad < -tol) ++soc_bad;
    if (quad >= tol && cone < -tol) ++soc_bad;
  }

  bool pass = rotated_bad == 0 && soc_bad == 0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "cone algebra: %d rotated-cone and %d norm-cone counterexamples over "
                "%d samples each at 1e-9 tolerance",
                rotated_bad, soc_bad, samples);
  verdict(pass, 5, buf);
}

// ---- criterion 6: budget sweep ---------------------------------------------

void criterion_sweep() {
  noma::Scenario s = make_scenario(5, 1);
  noma::ClusterAssignment groups = noma::group_users(s.channels);
  std::vector<double> budgets{1.0, 2.0, 5.0, 10.0, 20.0};
  auto rows = noma::sweep_pmax(s, groups, config_for(1), budgets, backend);

  bool all_ok = rows.size() == budgets.size();
  bool monotone = true, dominance = true;
  double prev_opp = 0.0, prev_eq = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].status != "ok" || !rows[k].gamma_opportunistic || !rows[k].gamma_equal) {
      all_ok = false;
      continue;
    }
    double opp = *rows[k].gamma_opportunistic;
    double eq = *rows[k].gamma_equal;
    if (opp < eq - 1e-6) dominance = false;
    if (k > 0 && (opp < prev_opp - 1e-9 || eq < prev_eq - 1e-9)) monotone = false;
    prev_opp = opp;
    prev_eq = eq;
  }
  bool pass = all_ok && monotone && dominance;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "power sweep over {1,2,5,10,20} W: %s, columns %s, joint >= equal %s",
                all_ok ? "all points solved" : "some points failed",
                monotone ? "nondecreasing" : "NOT monotone",
                dominance ? "pointwise" : "VIOLATED");
  verdict(pass, 6, buf);
}

// ---- criterion 8: byte-identical artifacts ---------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in.good()) return "<missing:" + p.string() + ">";
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void criterion_determinism() {
  fs::path root = fs::temp_directory_path() / "noma_acceptance";
  fs::remove_all(root);
  fs::path a = root / "a";
  fs::path b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);

  auto run = [](const fs::path& out) {
    std::string cmd = std::string(NOMA_CLI_PATH) + " solve --seed 42 --K 4 --out " +
                      out.string() + " > " + (out / "log.txt").string() + " 2>&1";
    int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  int code_a = run(a);
  int code_b = run(b);

  int identical = 0;
  const std::array<const char*, 4> names{"scenario.json", "solve_trace.csv",
                                         "solve_summary.csv", "solve_rates.csv"};
  for (const char* name : names) {
    if (slurp(a / name) == slurp(b / name)) ++identical;
  }
  bool pass = code_a == 0 && code_b == 0 && identical == static_cast<int>(names.size());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "determinism: repeated seeded runs exit (%d, %d) and %d/%zu artifacts "
                "compare byte-identical",
                code_a, code_b, identical, names.size());
  verdict(pass, 8, buf);
}

}  // namespace

int main() {
  auto start = Clock::now();
  criterion_oracle_equivalence();

  std::vector<BatchRun> runs = default_scale_batch();
  criterion_dominance(runs);
  criterion_convergence(runs);
  criterion_feasibility(runs);
  criterion_cone_algebra();
  criterion_sweep();
  criterion_baseline_shape(runs);
  criterion_determinism();

  std::printf("%d of 8 criteria passed in %.0f s\n", 8 - failures, seconds_since(start));
  return failures;
}
