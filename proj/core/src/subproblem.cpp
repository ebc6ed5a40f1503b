#include "noma/subproblem.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <random>

#include "noma/errors.hpp"

namespace noma {
namespace {

using conic::Affine;

double uniform_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_cluster_shapes(const Scenario& scenario, const ClusterAssignment& clusters) {
  scenario.validate();
  if (clusters.num_clusters() == 0) throw ContractViolation("no clusters");
  for (const auto& pair : clusters.pairs) {
    for (int u : pair) {
      if (u < 0 || u >= static_cast<int>(scenario.channels.gains.size()))
        throw ContractViolation("cluster references an unknown user");
    }
  }
}

}  // namespace

void ExpansionPoint::validate() const {
  const std::size_t c = amplitudes.size();
  if (interference_norms.size() != c || sinr_plus_one.size() != c)
    throw ContractViolation("expansion point has mismatched cluster counts");
  for (std::size_t i = 0; i < c; ++i) {
    for (double p : amplitudes[i]) {
      if (!(p > 0.0)) throw ContractViolation("expansion amplitudes must be positive");
    }
    for (double eta : interference_norms[i]) {
      if (!(eta > 0.0)) throw ContractViolation("interference norms must be positive");
    }
    for (double a : sinr_plus_one[i]) {
      if (!(a >= 1.0)) throw ContractViolation("sinr slack must be at least one");
    }
  }
}

int VariableLayout::slot_time(int cluster) const {
  if (!time_variable) throw ContractViolation("slot times are fixed in this layout");
  return 2 * num_clusters + cluster;
}

double exponent_upper_bound(const Scenario& scenario) {
  double max_gain = 0.0;
  for (double g : scenario.channels.gains) max_gain = std::max(max_gain, g);
  return std::log2(1.0 + scenario.params.max_power_w * max_gain /
                             scenario.params.noise_variance_w);
}

Subproblem build_subproblem(const Scenario& scenario, const ClusterAssignment& clusters,
                            const ExpansionPoint& point, const BuildOptions& options) {
  check_cluster_shapes(scenario, clusters);
  point.validate();
  const int c = clusters.num_clusters();
  if (static_cast<int>(point.amplitudes.size()) != c)
    throw ContractViolation("expansion point does not match the cluster count");
  if (options.fixed_times) {
    if (static_cast<int>(options.fixed_times->size()) != c)
      throw ContractViolation("fixed times must have one entry per cluster");
    double total = 0.0;
    for (double t : *options.fixed_times) {
      if (!(t > 0.0)) throw ContractViolation("fixed slot times must be positive");
      total += t;
    }
    if (total > scenario.params.frame_seconds * (1.0 + 1e-12))
      throw ContractViolation("fixed slot times exceed the frame");
  }

  Subproblem out;
  out.layout.num_clusters = c;
  out.layout.time_variable = !options.fixed_times.has_value();
  if (options.fixed_times) out.layout.fixed_times = *options.fixed_times;
  out.layout.alpha_scale = point.sinr_plus_one;
  out.layout.eta_scale = point.interference_norms;
  out.layout.theta_shift.resize(c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.layout.theta_shift[i][j] = std::log2(point.sinr_plus_one[i][j]);
    }
  }
  const VariableLayout& L = out.layout;
  conic::ConicProgram& prog = out.program;

  for (int i = 0; i < c; ++i) {
    prog.add_variable("p_1_" + std::to_string(i + 1));
    prog.add_variable("p_2_" + std::to_string(i + 1));
  }
  if (L.time_variable) {
    for (int i = 0; i < c; ++i) prog.add_variable("t_" + std::to_string(i + 1));
  }
  prog.add_variable("g");
  for (int i = 0; i < c; ++i) {
    prog.add_variable("alpha_1_" + std::to_string(i + 1));
    prog.add_variable("alpha_2_" + std::to_string(i + 1));
  }
  for (int i = 0; i < c; ++i) {
    prog.add_variable("theta_1_" + std::to_string(i + 1));
    prog.add_variable("theta_2_" + std::to_string(i + 1));
  }
  for (int i = 0; i < c; ++i) {
    prog.add_variable("eta_1_1_" + std::to_string(i + 1));
    prog.add_variable("eta_1_2_" + std::to_string(i + 1));
    prog.add_variable("eta_2_2_" + std::to_string(i + 1));
  }
  prog.maximize(L.objective_sqrt());

  const double sigma2 = scenario.params.noise_variance_w;
  const double sigma = std::sqrt(sigma2);
  const double sqrt_pmax = std::sqrt(scenario.params.max_power_w);
  const double theta_ub = exponent_upper_bound(scenario);

  // (a) frame time budget
  if (L.time_variable) {
    Affine budget = Affine::of_constant(scenario.params.frame_seconds);
    for (int i = 0; i < c; ++i) budget.add_term(L.slot_time(i), -1.0);
    prog.add_linear(budget);
  }

  // (b) total power: ||p|| <= sqrt(Pmax)
  {
    std::vector<Affine> tail;
    for (int i = 0; i < c; ++i) {
      tail.push_back(Affine::of_var(L.amplitude(i, 0)));
      tail.push_back(Affine::of_var(L.amplitude(i, 1)));
    }
    prog.add_soc(Affine::of_constant(sqrt_pmax), std::move(tail));
  }

  for (int i = 0; i < c; ++i) {
    const double p_weak = point.amplitudes[i][1];
    const std::array<double, 2> gains{scenario.channels.gains[clusters.pairs[i][0]],
                                      scenario.channels.gains[clusters.pairs[i][1]]};

    // (c) decode-order power: p_strong^2 <= 2*pw*p_weak - pw^2. The right
    // side is the tangent of p_weak^2 at the expansion point (lies below it,
    // so the ordering survives); the quadratic left side stays exact via
    //   || ((l+1)/2 - 1; p_strong) || <= (l+1)/2   with l the tangent.
    {
      Affine tangent = Affine::of_var(L.amplitude(i, 1), 2.0 * p_weak, -p_weak * p_weak);
      Affine head = tangent;
      for (auto& [var, coef] : head.terms) coef *= 0.5;
      head.constant = head.constant * 0.5 + 0.5;
      Affine mid = head;
      mid.constant -= 1.0;
      prog.add_soc(head, {mid, Affine::of_var(L.amplitude(i, 0))});
    }

    for (int d = 0; d < 2; ++d) {
      for (int m = 0; m <= d; ++m) {
        const int eta = L.interference_slack(i, receiver_message_slot(m, d));
        const double eta0 = point.interference_norms[i][receiver_message_slot(m, d)];
        const double alpha0 = point.sinr_plus_one[i][d];
        const double p0 = point.amplitudes[i][d];
        const double gain = gains[m];

        // (d) interference norm: ||(sqrt(gain)*p_s (s<d); sigma)|| <= eta
        {
          std::vector<Affine> tail;
          for (int s = 0; s < d; ++s) {
            tail.push_back(Affine::of_var(L.amplitude(i, s), std::sqrt(gain)));
          }
          tail.push_back(Affine::of_constant(sigma));
          prog.add_soc(Affine::of_var(eta, eta0), std::move(tail));
        }

        // (e) linearized signal lower bound:
        // gain*(p0^2 + 2 p0 (p - p0)) >= eta0^2 (alpha0 - 1)
        //       + 2 (alpha0 - 1) eta0 (eta - eta0) + eta0^2 (alpha - alpha0)
        // with eta, alpha substituted by their scaled columns.
        {
          Affine row;
          row.add_term(L.amplitude(i, d), 2.0 * gain * p0);
          row.add_term(eta, -2.0 * (alpha0 - 1.0) * eta0 * eta0);
          row.add_term(L.sinr_slack(i, d), -eta0 * eta0 * alpha0);
          row.constant = eta0 * eta0 * (2.0 * alpha0 - 1.0) - gain * p0 * p0;
          prog.add_linear(row);
        }
      }

      const double alpha0 = point.sinr_plus_one[i][d];
      const double theta0 = L.theta_shift[i][d];
      const double p0 = point.amplitudes[i][d];

      // The signal rows with p_d <= sqrt(Pmax) and eta >= sigma already cap
      // how far alpha can rise above its expansion value. Making the cap
      // explicit keeps the tangent grid inside the block's reachable range;
      // the global SNR ceiling would force weights up to 2^36 into one
      // column and drown the solver's dual residual.
      double alpha_cap = std::numeric_limits<double>::infinity();
      for (int m = 0; m <= d; ++m) {
        const double eta0 = point.interference_norms[i][receiver_message_slot(m, d)];
        double cap = (2.0 * alpha0 - 1.0) - 2.0 * (alpha0 - 1.0) * sigma / eta0 +
                     gains[m] * (2.0 * p0 * sqrt_pmax - p0 * p0) / (eta0 * eta0);
        alpha_cap = std::min(alpha_cap, cap);
      }
      double theta_cap = std::min(std::log2(alpha_cap), theta_ub);
      theta_cap = std::max(theta_cap, theta0);
      const double theta_lo = std::max(0.0, theta0 - 8.0);

      // (f) alpha >= 2^theta
      prog.add_exp(Affine::of_var(L.sinr_slack(i, d), alpha0),
                   Affine::of_var(L.exponent_slack(i, d), 1.0, theta0), theta_cap, theta_lo);
      prog.add_linear(Affine::of_var(L.exponent_slack(i, d), -1.0, theta_cap - theta0));

      // (g) t * theta >= g^2
      Affine slot = L.time_variable ? Affine::of_var(L.slot_time(i))
                                    : Affine::of_constant(L.fixed_times[i]);
      prog.add_rotated_soc(slot, Affine::of_var(L.exponent_slack(i, d), 1.0, theta0),
                           {Affine::of_var(L.objective_sqrt())});
    }
  }

  // (h) one-sided bounds on every variable (alpha = 1 + SINR never drops
  // below one).
  for (int i = 0; i < c; ++i) {
    prog.add_linear(Affine::of_var(L.amplitude(i, 0)));
    prog.add_linear(Affine::of_var(L.amplitude(i, 1)));
  }
  if (L.time_variable) {
    for (int i = 0; i < c; ++i) prog.add_linear(Affine::of_var(L.slot_time(i)));
  }
  prog.add_linear(Affine::of_var(L.objective_sqrt()));
  for (int i = 0; i < c; ++i) {
    for (int d = 0; d < 2; ++d) {
      prog.add_linear(Affine::of_var(L.sinr_slack(i, d), L.alpha_scale[i][d], -1.0));
      prog.add_linear(Affine::of_var(L.exponent_slack(i, d), 1.0, L.theta_shift[i][d]));
    }
    for (int k = 0; k < 3; ++k) {
      prog.add_linear(Affine::of_var(L.interference_slack(i, k)));
    }
  }
  return out;
}

ExpansionPoint refit_point(const Scenario& scenario, const ClusterAssignment& clusters,
                           const std::vector<std::array<double, 2>>& amplitudes) {
  check_cluster_shapes(scenario, clusters);
  const int c = clusters.num_clusters();
  if (static_cast<int>(amplitudes.size()) != c)
    throw ContractViolation("amplitudes do not match the cluster count");
  const double sigma2 = scenario.params.noise_variance_w;
  // Keeps expansion points off the alpha = 1 boundary where the linearized
  // rows degenerate; a max-min optimum never parks an amplitude this low.
  const double floor = 1e-6 * std::sqrt(scenario.params.max_power_w);

  ExpansionPoint point;
  point.amplitudes.resize(c);
  point.interference_norms.resize(c);
  point.sinr_plus_one.resize(c);
  for (int i = 0; i < c; ++i) {
    const std::array<double, 2> gains{scenario.channels.gains[clusters.pairs[i][0]],
                                      scenario.channels.gains[clusters.pairs[i][1]]};
    for (int j = 0; j < 2; ++j) {
      point.amplitudes[i][j] = std::max(amplitudes[i][j], floor);
    }
    const double ps2 = point.amplitudes[i][0] * point.amplitudes[i][0];
    const double pw2 = point.amplitudes[i][1] * point.amplitudes[i][1];
    auto& eta = point.interference_norms[i];
    eta[receiver_message_slot(0, 0)] = std::sqrt(sigma2);
    eta[receiver_message_slot(0, 1)] = std::sqrt(gains[0] * ps2 + sigma2);
    eta[receiver_message_slot(1, 1)] = std::sqrt(gains[1] * ps2 + sigma2);
    point.sinr_plus_one[i][0] = 1.0 + gains[0] * ps2 / sigma2;
    double e01 = eta[receiver_message_slot(0, 1)];
    double e11 = eta[receiver_message_slot(1, 1)];
    point.sinr_plus_one[i][1] =
        1.0 + std::min(gains[0] * pw2 / (e01 * e01), gains[1] * pw2 / (e11 * e11));
  }
  return point;
}

ExpansionPoint initial_point(const Scenario& scenario, const ClusterAssignment& clusters,
                             std::uint64_t seed) {
  check_cluster_shapes(scenario, clusters);
  const int c = clusters.num_clusters();
  std::mt19937_64 rng(seed);
  std::vector<std::array<double, 2>> amps(c);
  double total = 0.0;
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < 2; ++j) {
      amps[i][j] = 0.1 + 0.9 * uniform_draw(rng);
      total += amps[i][j] * amps[i][j];
    }
  }
  const double scale = std::sqrt(0.9 * scenario.params.max_power_w / total);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < 2; ++j) amps[i][j] *= scale;
    // decode order: the weak slot carries at least the strong slot's power
    if (amps[i][0] > amps[i][1]) std::swap(amps[i][0], amps[i][1]);
  }
  return refit_point(scenario, clusters, amps);
}

Extracted extract_allocation(const VariableLayout& layout, std::span<const double> x) {
  if (static_cast<int>(x.size()) != layout.count())
    throw ContractViolation("solution vector does not match the layout");
  const int c = layout.num_clusters;
  Extracted out;
  out.allocation.amplitudes.resize(c);
  out.allocation.times.resize(c);
  out.amplitudes.resize(c);
  out.sinr_plus_one.resize(c);
  out.exponents.resize(c);
  out.interference_norms.resize(c);
  double g = x[layout.objective_sqrt()];
  out.gamma = g * g;
  const bool scaled = !layout.alpha_scale.empty();
  for (int i = 0; i < c; ++i) {
    out.allocation.times[i] = layout.time_variable ? x[layout.slot_time(i)]
                                                   : layout.fixed_times[i];
    for (int j = 0; j < 2; ++j) {
      double p = x[layout.amplitude(i, j)];
      out.amplitudes[i][j] = p;
      out.allocation.amplitudes[i].push_back(std::max(p, 0.0));
      out.sinr_plus_one[i][j] =
          x[layout.sinr_slack(i, j)] * (scaled ? layout.alpha_scale[i][j] : 1.0);
      out.exponents[i][j] =
          x[layout.exponent_slack(i, j)] + (scaled ? layout.theta_shift[i][j] : 0.0);
    }
    for (int k = 0; k < 3; ++k) {
      out.interference_norms[i][k] =
          x[layout.interference_slack(i, k)] * (scaled ? layout.eta_scale[i][k] : 1.0);
    }
  }
  return out;
}

std::vector<double> pack_solution(const VariableLayout& layout, const Extracted& values) {
  std::vector<double> x(layout.count(), 0.0);
  const int c = layout.num_clusters;
  const bool scaled = !layout.alpha_scale.empty();
  x[layout.objective_sqrt()] = std::sqrt(std::max(values.gamma, 0.0));
  for (int i = 0; i < c; ++i) {
    if (layout.time_variable) x[layout.slot_time(i)] = values.allocation.times[i];
    for (int j = 0; j < 2; ++j) {
      x[layout.amplitude(i, j)] = values.amplitudes[i][j];
      x[layout.sinr_slack(i, j)] =
          values.sinr_plus_one[i][j] / (scaled ? layout.alpha_scale[i][j] : 1.0);
      x[layout.exponent_slack(i, j)] =
          values.exponents[i][j] - (scaled ? layout.theta_shift[i][j] : 0.0);
    }
    for (int k = 0; k < 3; ++k) {
      x[layout.interference_slack(i, k)] =
          values.interference_norms[i][k] / (scaled ? layout.eta_scale[i][k] : 1.0);
    }
  }
  return x;
}

}  // namespace noma
