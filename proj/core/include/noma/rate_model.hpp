#pragma once

#include <span>
#include <string>
#include <vector>

#include "noma/grouping.hpp"
#include "noma/scenario.hpp"

namespace noma {

// Joint time and power allocation. Amplitudes are stored, not powers:
// transmit power of slot j in cluster i is amplitudes[i][j]^2.
// Slot 0 is the cluster's strong user, later slots are weaker users.
struct Allocation {
  std::vector<std::vector<double>> amplitudes;
  std::vector<double> times;  // seconds per cluster
};

// Per-user effective SINR and throughput over one frame (bits).
struct RateReport {
  std::vector<std::vector<double>> sinr;
  std::vector<std::vector<double>> rates;
  double min_rate = 0.0;
  double sum_rate = 0.0;
};

struct FeasibilityTolerances {
  double time = 1e-6;   // seconds, absolute
  double power = 1e-6;  // watts, absolute
  double sic = 1e-8;    // watts, absolute, on squared-amplitude differences
};

enum class ConstraintKind {
  TimeBudget,
  TimeNonnegative,
  PowerBudget,
  AmplitudeNonnegative,
  SicOrdering,
};

struct Violation {
  ConstraintKind kind;
  int cluster;   // -1 for budget constraints spanning clusters
  int slot;      // -1 when not slot specific
  double amount; // how far past the bound, in the constraint's units
  std::string note;
};

// SINR at receiver slot `receiver` when decoding the message of slot
// `message`, given cluster-local gains, noise variances and amplitudes
// (all ordered strong to weak). Messages of stronger slots (s < message)
// are still undecoded and interfere. Requires receiver <= message.
double decode_sinr(std::span<const double> gains, std::span<const double> noise_vars,
                   std::span<const double> amplitudes, int receiver, int message);

// Worst decode SINR for slot `user`'s message over receivers 0..user.
// Successive cancellation works only if every one of them can decode it.
double effective_sinr(std::span<const double> gains, std::span<const double> noise_vars,
                      std::span<const double> amplitudes, int user);

// Throughput in bits for a slot of `seconds` at the given SINR.
double rate_bits(double seconds, double sinr);

// Full per-user report for an allocation. Shapes must match the assignment.
RateReport evaluate(const Scenario& scenario, const ClusterAssignment& clusters,
                    const Allocation& allocation);

// Named constraint violations beyond the tolerances; empty means feasible.
std::vector<Violation> check_feasibility(const Scenario& scenario,
                                         const ClusterAssignment& clusters,
                                         const Allocation& allocation,
                                         const FeasibilityTolerances& tol = {});

}  // namespace noma
