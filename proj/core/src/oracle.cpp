#include "noma/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "noma/errors.hpp"

namespace noma {
namespace {

struct Axis {
  double lo, hi;
  double orig_lo, orig_hi;
  int points;

  double at(int k) const { return lo + (hi - lo) * k / (points - 1); }

  // Shrink the range five-fold around `center`, never leaving the original bounds.
  void zoom(double center) {
    double half = (hi - lo) / 10.0;
    lo = std::max(orig_lo, center - half);
    hi = std::min(orig_hi, center + half);
  }
};

// Worst user rate in one cluster: budget `power`, strong slot power share
// `strong_share`, slot length `seconds`. Gains ordered strong then weak.
double cluster_min_rate(const std::array<double, 2>& gains, double noise_var, double power,
                        double strong_share, double seconds) {
  const std::array<double, 2> amplitudes = {std::sqrt(strong_share * power),
                                            std::sqrt((1.0 - strong_share) * power)};
  const std::array<double, 2> noises = {noise_var, noise_var};
  double strong = rate_bits(seconds, effective_sinr(gains, noises, amplitudes, 0));
  double weak = rate_bits(seconds, effective_sinr(gains, noises, amplitudes, 1));
  return std::min(strong, weak);
}

}  // namespace

void GridSpec::validate() const {
  if (points_per_power_axis < 2) throw ValidationError("power axis needs at least 2 points");
  if (points_per_time_axis < 2) throw ValidationError("time axis needs at least 2 points");
  if (refinement_rounds < 2) throw ValidationError("need at least 2 refinement rounds");
}

OracleResult grid_maxmin(const Scenario& scenario, const ClusterAssignment& clusters,
                         const GridSpec& spec) {
  spec.validate();
  scenario.validate();
  const int C = clusters.num_clusters();
  if (C > 2) throw UnsupportedConfiguration("grid search handles at most two clusters");

  const double T = scenario.params.frame_seconds;
  const double Pmax = scenario.params.max_power_w;
  const double noise = scenario.params.noise_variance_w;

  std::vector<std::array<double, 2>> gains(C);
  for (int i = 0; i < C; ++i) {
    gains[i] = {scenario.channels.gains[clusters.pairs[i][0]],
                scenario.channels.gains[clusters.pairs[i][1]]};
  }

  Axis power_share{0.0, 1.0, 0.0, 1.0, spec.points_per_power_axis};
  Axis time_share{0.0, 1.0, 0.0, 1.0, spec.points_per_time_axis};
  // The strong user's rate depends on its share only through a log, so the
  // optimum can park the share many orders of magnitude below 1. The share
  // axis therefore lives in log space: uniform steps there spread the rate
  // error evenly, where a uniform share grid cannot resolve shares near 1e-4.
  const double log_lo = std::log(1e-12);
  const double log_hi = std::log(0.5);
  std::vector<Axis> log_share(C, Axis{log_lo, log_hi, log_lo, log_hi, spec.points_per_power_axis});

  double best = -std::numeric_limits<double>::infinity();
  double best_share = 0.5;
  double best_tshare = 0.5;
  std::vector<double> best_log_share(C, std::log(0.25));
  std::vector<double> incumbents;

  auto scan = [&]() {
    if (C == 1) {
      for (int k = 0; k < log_share[0].points; ++k) {
        double u = log_share[0].at(k);
        double v = cluster_min_rate(gains[0], noise, Pmax, std::exp(u), T);
        if (v > best) {
          best = v;
          best_log_share[0] = u;
        }
      }
    } else {
      for (int a = 0; a < power_share.points; ++a) {
        const double phi = power_share.at(a);
        const std::array<double, 2> power = {phi * Pmax, (1.0 - phi) * Pmax};
        for (int b = 0; b < time_share.points; ++b) {
          const double tau = time_share.at(b);
          const std::array<double, 2> seconds = {tau * T, (1.0 - tau) * T};
          // With power and time fixed, each cluster's share only moves its
          // own rate, so the max-min splits into independent 1-D maxima.
          double worst = std::numeric_limits<double>::infinity();
          std::array<double, 2> pick{};
          for (int i = 0; i < 2; ++i) {
            double cluster_best = -std::numeric_limits<double>::infinity();
            double cluster_u = log_share[i].lo;
            for (int k = 0; k < log_share[i].points; ++k) {
              double u = log_share[i].at(k);
              double v = cluster_min_rate(gains[i], noise, power[i], std::exp(u), seconds[i]);
              if (v > cluster_best) {
                cluster_best = v;
                cluster_u = u;
              }
            }
            worst = std::min(worst, cluster_best);
            pick[i] = cluster_u;
          }
          if (worst > best) {
            best = worst;
            best_share = phi;
            best_tshare = tau;
            best_log_share[0] = pick[0];
            best_log_share[1] = pick[1];
          }
        }
      }
    }
    incumbents.push_back(best);
  };

  scan();
  for (int r = 0; r < spec.refinement_rounds; ++r) {
    if (C == 2) {
      power_share.zoom(best_share);
      time_share.zoom(best_tshare);
    }
    for (int i = 0; i < C; ++i) log_share[i].zoom(best_log_share[i]);
    scan();
  }

  OracleResult out;
  out.min_rate = best;
  out.incumbent_per_round = std::move(incumbents);
  out.allocation.times =
      C == 1 ? std::vector<double>{T}
             : std::vector<double>{best_tshare * T, (1.0 - best_tshare) * T};
  out.allocation.amplitudes.resize(C);
  for (int i = 0; i < C; ++i) {
    double power = C == 1 ? Pmax : (i == 0 ? best_share * Pmax : (1.0 - best_share) * Pmax);
    double s = std::exp(best_log_share[i]);
    out.allocation.amplitudes[i] = {std::sqrt(s * power), std::sqrt((1.0 - s) * power)};
  }
  return out;
}

}  // namespace noma
