#pragma once

#include <vector>

#include "noma/grouping.hpp"
#include "noma/rate_model.hpp"
#include "noma/scenario.hpp"

namespace noma {

// Brute-force grid search over power and time splits. Ground truth for tiny
// instances only; cost grows exponentially with the cluster count.
struct GridSpec {
  int points_per_power_axis = 64;
  int points_per_time_axis = 64;
  int refinement_rounds = 3;

  void validate() const;
};

struct OracleResult {
  Allocation allocation;
  double min_rate = 0.0;
  // Best objective after the initial scan and after each zoom pass.
  std::vector<double> incumbent_per_round;
};

// Exhaustive max-min search for one or two clusters. The strong slot's power
// share scans (0, 1/2] of the cluster budget on a log axis (the optimum can
// sit orders of magnitude below 1), which enforces the decode ordering by
// construction; total power and total time stay saturated. Each zoom pass
// shrinks every axis range five-fold around the incumbent.
OracleResult grid_maxmin(const Scenario& scenario, const ClusterAssignment& clusters,
                         const GridSpec& spec = {});

}  // namespace noma
