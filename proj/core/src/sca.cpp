#include "noma/sca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "noma/errors.hpp"

namespace noma {
namespace {

// The expansion point must satisfy the restriction built around it; exact
// refitting makes this hold to machine precision.
constexpr double kPointFeasTol = 1e-7;

std::vector<double> feasible_completion(const Subproblem& sub, const ExpansionPoint& point,
                                        double frame_seconds) {
  const VariableLayout& L = sub.layout;
  Extracted v;
  v.amplitudes.resize(L.num_clusters);
  v.sinr_plus_one.resize(L.num_clusters);
  v.exponents.resize(L.num_clusters);
  v.interference_norms.resize(L.num_clusters);
  v.allocation.times.assign(L.num_clusters,
                            L.time_variable ? frame_seconds / L.num_clusters : 0.0);
  double min_tth = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.num_clusters; ++i) {
    double t = L.time_variable ? v.allocation.times[i] : L.fixed_times[i];
    v.amplitudes[i] = point.amplitudes[i];
    v.interference_norms[i] = point.interference_norms[i];
    for (int d = 0; d < 2; ++d) {
      v.sinr_plus_one[i][d] = point.sinr_plus_one[i][d];
      v.exponents[i][d] = std::log2(point.sinr_plus_one[i][d]);
      min_tth = std::min(min_tth, t * v.exponents[i][d]);
    }
  }
  v.gamma = std::max(min_tth, 0.0);
  return pack_solution(L, v);
}

ExpansionPoint inflate(const ExpansionPoint& point) {
  ExpansionPoint out = point;
  for (auto& etas : out.interference_norms) {
    for (double& e : etas) e *= 1.0 + 1e-6;
  }
  for (auto& alphas : out.sinr_plus_one) {
    for (double& a : alphas) a *= 1.0 + 1e-6;
  }
  return out;
}

SolveReport run_sca(const Scenario& scenario, const ClusterAssignment& clusters,
                    const ScaConfig& config, const conic::ConicBackend& backend,
                    const BuildOptions& options, const ExpansionPoint* warm_start) {
  const auto t_start = std::chrono::steady_clock::now();
  if (config.max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
  if (!(config.epsilon > 0.0)) throw ValidationError("epsilon must be positive");

  SolveReport report;
  ExpansionPoint point =
      warm_start ? *warm_start : initial_point(scenario, clusters, config.seed);
  point.validate();

  bool have_incumbent = false;
  double best_gamma = -std::numeric_limits<double>::infinity();
  Allocation best_allocation;
  std::string last_failure;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    Subproblem sub = build_subproblem(scenario, clusters, point, options);
    if (iter == 1 && config.keep_program_dump) report.program_dump = sub.program.dump();
    {
      std::vector<double> at_point =
          feasible_completion(sub, point, scenario.params.frame_seconds);
      double violation = sub.program.max_violation(at_point);
      if (violation > kPointFeasTol) {
        std::ostringstream os;
        os << "expansion point violates its own restriction by " << violation;
        throw ContractViolation(os.str());
      }
    }

    conic::BackendResult res = conic::solve_program(sub.program, backend, config.cuts);
    if (!usable(res.status)) {
      // One rescue attempt from a slightly loosened point.
      Subproblem retry = build_subproblem(scenario, clusters, inflate(point), options);
      res = conic::solve_program(retry.program, backend, config.cuts);
      if (!usable(res.status)) {
        last_failure = res.detail.empty() ? to_string(res.status) : res.detail;
        report.outcome = SolveOutcome::SubproblemFailure;
        std::ostringstream os;
        os << "iteration " << iter << ": " << last_failure;
        report.detail = os.str();
        break;
      }
      sub = std::move(retry);
    }

    Extracted ex = extract_allocation(sub.layout, res.x);
    RateReport realized = evaluate(scenario, clusters, ex.allocation);
    if (!have_incumbent || realized.min_rate > best_gamma) {
      best_gamma = realized.min_rate;
      best_allocation = ex.allocation;
      have_incumbent = true;
    }
    report.trace.push_back(best_gamma);
    report.iterations = iter;
    if (iter >= 2 &&
        std::abs(report.trace[iter - 1] - report.trace[iter - 2]) <= config.epsilon) {
      report.outcome = SolveOutcome::Converged;
      break;
    }
    if (iter == config.max_iterations) {
      report.outcome = SolveOutcome::IterationLimit;
      break;
    }
    point = refit_point(scenario, clusters, ex.amplitudes);
  }

  if (have_incumbent) {
    report.allocation = best_allocation;
    report.gamma = best_gamma;
  } else {
    // Shape-correct zero allocation so callers can still render a report.
    report.allocation.amplitudes.assign(clusters.num_clusters(), std::vector<double>(2, 0.0));
    report.allocation.times.assign(clusters.num_clusters(), 0.0);
    report.gamma = 0.0;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace

std::string to_string(SolveOutcome outcome) {
  switch (outcome) {
    case SolveOutcome::Converged: return "converged";
    case SolveOutcome::IterationLimit: return "iteration_limit";
    case SolveOutcome::SubproblemFailure: return "subproblem_failure";
  }
  return "unknown";
}

SolveReport solve_maxmin(const Scenario& scenario, const ClusterAssignment& clusters,
                         const ScaConfig& config, const conic::ConicBackend& backend,
                         const ExpansionPoint* warm_start) {
  return run_sca(scenario, clusters, config, backend, BuildOptions{}, warm_start);
}

SolveReport solve_equal_time(const Scenario& scenario, const ClusterAssignment& clusters,
                             const ScaConfig& config, const conic::ConicBackend& backend,
                             const ExpansionPoint* warm_start) {
  BuildOptions options;
  options.fixed_times.emplace(clusters.num_clusters(),
                              scenario.params.frame_seconds / clusters.num_clusters());
  return run_sca(scenario, clusters, config, backend, options, warm_start);
}

std::vector<SweepPoint> sweep_pmax(const Scenario& scenario, const ClusterAssignment& clusters,
                                   const ScaConfig& config, std::span<const double> pmax_values,
                                   const conic::ConicBackend& backend, bool warm_start) {
  if (pmax_values.empty()) throw ValidationError("sweep needs at least one power budget");
  for (std::size_t k = 0; k < pmax_values.size(); ++k) {
    if (!(pmax_values[k] > 0.0)) throw ValidationError("power budgets must be positive");
    if (k > 0 && pmax_values[k] <= pmax_values[k - 1])
      throw ValidationError("power budgets must be strictly ascending");
  }

  std::vector<SweepPoint> out;
  std::optional<std::vector<std::array<double, 2>>> prev_opp, prev_eq;
  for (double pmax : pmax_values) {
    Scenario scen = scenario;
    scen.params.max_power_w = pmax;
    SweepPoint row;
    row.pmax = pmax;

    ExpansionPoint warm;
    const ExpansionPoint* start = nullptr;
    if (warm_start && prev_opp) {
      warm = refit_point(scen, clusters, *prev_opp);
      start = &warm;
    }
    SolveReport opp = solve_maxmin(scen, clusters, config, backend, start);
    if (opp.outcome != SolveOutcome::SubproblemFailure) {
      row.gamma_opportunistic = opp.gamma;
      prev_opp = std::vector<std::array<double, 2>>(clusters.num_clusters());
      for (int i = 0; i < clusters.num_clusters(); ++i) {
        (*prev_opp)[i] = {opp.allocation.amplitudes[i][0], opp.allocation.amplitudes[i][1]};
      }
    }

    start = nullptr;
    if (warm_start && prev_eq) {
      warm = refit_point(scen, clusters, *prev_eq);
      start = &warm;
    }
    SolveReport eq = solve_equal_time(scen, clusters, config, backend, start);
    if (eq.outcome != SolveOutcome::SubproblemFailure) {
      row.gamma_equal = eq.gamma;
      prev_eq = std::vector<std::array<double, 2>>(clusters.num_clusters());
      for (int i = 0; i < clusters.num_clusters(); ++i) {
        (*prev_eq)[i] = {eq.allocation.amplitudes[i][0], eq.allocation.amplitudes[i][1]};
      }
    }

    if (opp.outcome == SolveOutcome::Converged && eq.outcome == SolveOutcome::Converged) {
      row.status = "ok";
    } else {
      std::ostringstream os;
      os << "opportunistic=" << to_string(opp.outcome) << ";equal=" << to_string(eq.outcome);
      row.status = os.str();
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace noma
