#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noma/conic/program.hpp"
#include "noma/grouping.hpp"
#include "noma/rate_model.hpp"
#include "noma/scenario.hpp"

namespace noma {

// Index of the (receiver, message) pair in per-cluster triplets, receiver <=
// message: (0,0) -> 0, (0,1) -> 1, (1,1) -> 2.
inline int receiver_message_slot(int receiver, int message) {
  return receiver + message;
}

// Point the nonconvex SINR constraints are linearized around. For each
// cluster: amplitudes, interference norms eta (one per receiver/message
// pair, eta^2 = gain_m * sum_{s<d} p_s^2 + noise_m), and alpha = 1 + SINR.
struct ExpansionPoint {
  std::vector<std::array<double, 2>> amplitudes;
  std::vector<std::array<double, 3>> interference_norms;
  std::vector<std::array<double, 2>> sinr_plus_one;

  // Positivity of amplitudes and norms, alpha >= 1, matching sizes.
  void validate() const;
};

// Variable packing of one convex restriction:
// p (2C), slot times t (C, only when not fixed), g with objective g^2,
// alpha (2C), theta (2C), eta (3C).
//
// The slack variables are solved in units of their expansion-point values so
// every column stays O(1); alpha alone would otherwise span 1..1e7 and drown
// the small rotated-cone rows in the solver's relative tolerances. The maps
// back to physical values are alpha = alpha_scale * x, theta = theta_shift +
// x, eta = eta_scale * x. Empty scale vectors mean identity.
struct VariableLayout {
  int num_clusters = 0;
  bool time_variable = true;
  std::vector<double> fixed_times;  // used when !time_variable
  std::vector<std::array<double, 2>> alpha_scale;
  std::vector<std::array<double, 2>> theta_shift;
  std::vector<std::array<double, 3>> eta_scale;

  int amplitude(int cluster, int slot) const { return 2 * cluster + slot; }
  int slot_time(int cluster) const;
  int objective_sqrt() const { return 2 * num_clusters + (time_variable ? num_clusters : 0); }
  int sinr_slack(int cluster, int slot) const {
    return objective_sqrt() + 1 + 2 * cluster + slot;
  }
  int exponent_slack(int cluster, int slot) const {
    return sinr_slack(0, 0) + 2 * num_clusters + 2 * cluster + slot;
  }
  int interference_slack(int cluster, int pair_slot) const {
    return exponent_slack(0, 0) + 2 * num_clusters + 3 * cluster + pair_slot;
  }
  int count() const { return interference_slack(0, 0) + 3 * num_clusters; }
};

struct Subproblem {
  conic::ConicProgram program;
  VariableLayout layout;
};

struct BuildOptions {
  // When set, slot durations become constants and leave the variable layout.
  std::optional<std::vector<double>> fixed_times;
};

// Convex restriction of the max-min rate problem around `point`:
//  (a) frame time budget, (b) one power cone over all amplitudes,
//  (c) per-cluster decode-order power constraint, linearized on its concave
//      side and kept exact on the quadratic side via a small cone,
//  (d) interference norm cones defining eta,
//  (e) linearized signal-vs-slack rows tying p, eta, alpha together,
//  (f) alpha >= 2^theta blocks, (g) rotated cones t * theta >= g^2,
//  (h) one-sided bounds on every variable.
Subproblem build_subproblem(const Scenario& scenario, const ClusterAssignment& clusters,
                            const ExpansionPoint& point, const BuildOptions& options = {});

// Random positive amplitudes rescaled so total power is 0.9 * Pmax, ordered
// within each cluster so the weak slot carries at least the strong slot's
// power; eta and alpha then satisfy their defining relations exactly.
ExpansionPoint initial_point(const Scenario& scenario, const ClusterAssignment& clusters,
                             std::uint64_t seed);

// Rebuilds eta and alpha exactly from the given amplitudes.
ExpansionPoint refit_point(const Scenario& scenario, const ClusterAssignment& clusters,
                           const std::vector<std::array<double, 2>>& amplitudes);

// Largest exponent any feasible theta can reach: log2(1 + Pmax * max gain /
// noise). Seeds the exponential-block tangent grids.
double exponent_upper_bound(const Scenario& scenario);

struct Extracted {
  Allocation allocation;
  double gamma = 0.0;  // objective_sqrt squared
  std::vector<std::array<double, 2>> amplitudes;
  std::vector<std::array<double, 2>> sinr_plus_one;
  std::vector<std::array<double, 2>> exponents;
  std::vector<std::array<double, 3>> interference_norms;
};

// Reads a solver vector back into an allocation plus slack values.
Extracted extract_allocation(const VariableLayout& layout, std::span<const double> x);

// Writes allocation and slacks into a solver vector (inverse of extraction).
std::vector<double> pack_solution(const VariableLayout& layout, const Extracted& values);

}  // namespace noma
