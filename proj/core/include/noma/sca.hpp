#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noma/conic/backend.hpp"
#include "noma/grouping.hpp"
#include "noma/rate_model.hpp"
#include "noma/scenario.hpp"
#include "noma/subproblem.hpp"

namespace noma {

struct ScaConfig {
  double epsilon = 1e-4;   // stop when the min-rate improvement drops below (bits)
  int max_iterations = 50;
  std::uint64_t seed = 0;  // initial amplitude draw
  conic::CutConfig cuts;
  bool keep_program_dump = false;  // record the first restriction's listing
};

enum class SolveOutcome { Converged, IterationLimit, SubproblemFailure };

std::string to_string(SolveOutcome outcome);

struct SolveReport {
  Allocation allocation;       // best allocation found
  double gamma = 0.0;          // its min user throughput (bits per frame)
  std::vector<double> trace;   // best-so-far min throughput per iteration
  int iterations = 0;
  SolveOutcome outcome = SolveOutcome::SubproblemFailure;
  double wall_seconds = 0.0;
  std::string detail;          // diagnostics for non-converged outcomes
  std::string program_dump;    // filled when ScaConfig::keep_program_dump
};

// Maximizes the worst per-user throughput over slot durations and transmit
// amplitudes by solving convex restrictions around a moving expansion point.
// Each new point is refit exactly from the latest amplitudes, so every
// restriction admits its own expansion point and the trace never decreases.
// A failed subproblem is retried once from a slightly inflated point; after
// at least one success the best iterate is still returned.
SolveReport solve_maxmin(const Scenario& scenario, const ClusterAssignment& clusters,
                         const ScaConfig& config, const conic::ConicBackend& backend,
                         const ExpansionPoint* warm_start = nullptr);

// Same loop with every slot pinned to frame_seconds / num_clusters; slot
// durations leave the decision space entirely.
SolveReport solve_equal_time(const Scenario& scenario, const ClusterAssignment& clusters,
                             const ScaConfig& config, const conic::ConicBackend& backend,
                             const ExpansionPoint* warm_start = nullptr);

struct SweepPoint {
  double pmax = 0.0;
  std::optional<double> gamma_opportunistic;
  std::optional<double> gamma_equal;
  std::string status;  // "ok" when both schemes converged
};

// Solves both schemes for each power budget (strictly ascending). With
// warm_start, each budget starts from the previous one's amplitudes, which
// stay feasible as the budget grows.
std::vector<SweepPoint> sweep_pmax(const Scenario& scenario, const ClusterAssignment& clusters,
                                   const ScaConfig& config, std::span<const double> pmax_values,
                                   const conic::ConicBackend& backend, bool warm_start = true);

}  // namespace noma
