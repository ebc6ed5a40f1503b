#include "noma/rate_model.hpp"

#include <cmath>
#include <limits>

#include "noma/errors.hpp"

namespace noma {
namespace {

void check_shapes(const Scenario& scenario, const ClusterAssignment& clusters,
                  const Allocation& allocation) {
  const int c = clusters.num_clusters();
  if (static_cast<int>(allocation.amplitudes.size()) != c)
    throw ContractViolation("allocation has wrong cluster count");
  if (static_cast<int>(allocation.times.size()) != c)
    throw ContractViolation("allocation has wrong time slot count");
  for (int i = 0; i < c; ++i) {
    if (allocation.amplitudes[i].size() != 2)
      throw ContractViolation("expected two amplitudes per cluster");
    for (int u : clusters.pairs[i]) {
      if (u < 0 || u >= static_cast<int>(scenario.channels.gains.size()))
        throw ContractViolation("cluster references an unknown user");
    }
  }
}

}  // namespace

double decode_sinr(std::span<const double> gains, std::span<const double> noise_vars,
                   std::span<const double> amplitudes, int receiver, int message) {
  const int n = static_cast<int>(amplitudes.size());
  if (gains.size() != amplitudes.size() || noise_vars.size() != amplitudes.size())
    throw ContractViolation("decode_sinr: mismatched cluster vector sizes");
  if (receiver < 0 || message < 0 || message >= n)
    throw ContractViolation("decode_sinr: slot index out of range");
  if (receiver > message)
    throw ContractViolation("decode_sinr: receiver cannot decode a stronger slot's message");
  double interference = 0.0;
  for (int s = 0; s < message; ++s) {
    interference += gains[receiver] * amplitudes[s] * amplitudes[s];
  }
  double signal = gains[receiver] * amplitudes[message] * amplitudes[message];
  return signal / (interference + noise_vars[receiver]);
}

double effective_sinr(std::span<const double> gains, std::span<const double> noise_vars,
                      std::span<const double> amplitudes, int user) {
  double worst = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= user; ++m) {
    worst = std::min(worst, decode_sinr(gains, noise_vars, amplitudes, m, user));
  }
  return worst;
}

double rate_bits(double seconds, double sinr) { return seconds * std::log2(1.0 + sinr); }

RateReport evaluate(const Scenario& scenario, const ClusterAssignment& clusters,
                    const Allocation& allocation) {
  check_shapes(scenario, clusters, allocation);
  const int c = clusters.num_clusters();
  RateReport report;
  report.sinr.resize(c);
  report.rates.resize(c);
  report.min_rate = std::numeric_limits<double>::infinity();
  report.sum_rate = 0.0;
  for (int i = 0; i < c; ++i) {
    const auto& pair = clusters.pairs[i];
    std::vector<double> gains{scenario.channels.gains[pair[0]], scenario.channels.gains[pair[1]]};
    std::vector<double> noise(2, scenario.params.noise_variance_w);
    for (int j = 0; j < 2; ++j) {
      double sinr = effective_sinr(gains, noise, allocation.amplitudes[i], j);
      double rate = rate_bits(allocation.times[i], sinr);
      report.sinr[i].push_back(sinr);
      report.rates[i].push_back(rate);
      report.min_rate = std::min(report.min_rate, rate);
      report.sum_rate += rate;
    }
  }
  return report;
}

std::vector<Violation> check_feasibility(const Scenario& scenario,
                                         const ClusterAssignment& clusters,
                                         const Allocation& allocation,
                                         const FeasibilityTolerances& tol) {
  check_shapes(scenario, clusters, allocation);
  std::vector<Violation> out;
  const int c = clusters.num_clusters();

  double time_total = 0.0;
  for (int i = 0; i < c; ++i) {
    time_total += allocation.times[i];
    if (allocation.times[i] < -tol.time) {
      out.push_back({ConstraintKind::TimeNonnegative, i, -1, -allocation.times[i],
                     "negative slot duration"});
    }
  }
  if (time_total > scenario.params.frame_seconds + tol.time) {
    out.push_back({ConstraintKind::TimeBudget, -1, -1,
                   time_total - scenario.params.frame_seconds, "frame time exceeded"});
  }

  double power_total = 0.0;
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < 2; ++j) {
      double a = allocation.amplitudes[i][j];
      power_total += a * a;
      if (a < -tol.power) {
        out.push_back({ConstraintKind::AmplitudeNonnegative, i, j, -a, "negative amplitude"});
      }
    }
    double strong_power = allocation.amplitudes[i][0] * allocation.amplitudes[i][0];
    double weak_power = allocation.amplitudes[i][1] * allocation.amplitudes[i][1];
    if (weak_power < strong_power - tol.sic) {
      out.push_back({ConstraintKind::SicOrdering, i, -1, strong_power - weak_power,
                     "weak slot must carry at least the strong slot's power"});
    }
  }
  if (power_total > scenario.params.max_power_w + tol.power) {
    out.push_back({ConstraintKind::PowerBudget, -1, -1,
                   power_total - scenario.params.max_power_w, "power budget exceeded"});
  }
  return out;
}

}  // namespace noma
