#include "noma/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "noma/errors.hpp"
#include "noma/grouping.hpp"
#include "noma/scenario.hpp"

using namespace noma;

namespace {

// Two clusters with hand-picked gains; user k sits at the distance implied
// by its gain so the scenario passes validation.
Scenario tiny_scenario(std::vector<double> gains) {
  Scenario s;
  s.params.num_users = static_cast<int>(gains.size());
  s.params.num_clusters = s.params.num_users / 2;
  s.channels.gains = std::move(gains);
  for (double g : s.channels.gains) {
    double d = std::sqrt(s.params.attenuation_at_ref / g);
    s.channels.distances.push_back(d);
    s.params.cell_radius_m = std::max(s.params.cell_radius_m, d);
  }
  s.validate();
  return s;
}

}  // namespace

TEST_CASE("decode sinr matches the closed form") {
  std::vector<double> ones{1.0, 1.0};

  // Zero strong-slot power leaves the weak message interference free.
  CHECK(decode_sinr(ones, ones, std::vector<double>{0.0, 1.0}, 0, 1) == doctest::Approx(1.0));

  // Interference-free strong message: g * p^2 / noise.
  std::vector<double> g{4e-7, 4e-7};
  std::vector<double> noise{1e-13, 1e-13};
  std::vector<double> amps{0.5, 1.0};
  CHECK(decode_sinr(g, noise, amps, 0, 0) == doctest::Approx(1e6).epsilon(1e-12));

  // Equal powers make the weak message's SINR < 1 once interference
  // dominates the noise floor.
  CHECK(decode_sinr(g, noise, std::vector<double>{1.0, 1.0}, 1, 1) < 1.0);

  // General case, checked against the formula spelled out by hand.
  std::vector<double> g2{3e-7, 8e-8};
  std::vector<double> n2{2e-13, 5e-13};
  std::vector<double> a2{0.7, 2.1};
  double expected = g2[1] * a2[1] * a2[1] / (g2[1] * a2[0] * a2[0] + n2[1]);
  CHECK(decode_sinr(g2, n2, a2, 1, 1) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("decode sinr rejects bad slot indices") {
  std::vector<double> v{1.0, 1.0};
  CHECK_THROWS_AS(decode_sinr(v, v, v, 1, 0), ContractViolation);
  CHECK_THROWS_AS(decode_sinr(v, v, v, 0, 2), ContractViolation);
  CHECK_THROWS_AS(decode_sinr(v, v, std::vector<double>{1.0}, 0, 0), ContractViolation);
}

TEST_CASE("effective sinr is the worst decode over eligible receivers") {
  std::vector<double> g{5e-7, 1e-7};
  std::vector<double> noise{1e-13, 1e-13};
  std::vector<double> amps{0.4, 1.5};

  // Slot 0 decodes only at itself.
  CHECK(effective_sinr(g, noise, amps, 0) ==
        doctest::Approx(decode_sinr(g, noise, amps, 0, 0)));

  // Slot 1's message must clear both receivers; with equal noise the weak
  // receiver is the bottleneck.
  double at_strong = decode_sinr(g, noise, amps, 0, 1);
  double at_weak = decode_sinr(g, noise, amps, 1, 1);
  CHECK(at_weak <= at_strong);
  CHECK(effective_sinr(g, noise, amps, 1) == doctest::Approx(at_weak));

  // A noisier strong receiver can become the bottleneck instead.
  std::vector<double> skewed_noise{5e-7, 1e-13};
  double eff = effective_sinr(g, skewed_noise, amps, 1);
  CHECK(eff == doctest::Approx(std::min(decode_sinr(g, skewed_noise, amps, 0, 1),
                                        decode_sinr(g, skewed_noise, amps, 1, 1))));
  CHECK(eff == doctest::Approx(decode_sinr(g, skewed_noise, amps, 0, 1)));
}

TEST_CASE("throughput is slot time times log2(1 + sinr)") {
  CHECK(rate_bits(0.0, 7.5) == 0.0);
  CHECK(rate_bits(2.0, 1.0) == doctest::Approx(2.0));
  CHECK(rate_bits(2.0, 3.0) == doctest::Approx(4.0));
  CHECK(rate_bits(1.0, 0.0) == 0.0);
}

TEST_CASE("evaluate aggregates per-user rates") {
  Scenario s = tiny_scenario({4e-7, 4e-7, 1e-7, 1e-7});
  ClusterAssignment clusters = group_users(s.channels);
  REQUIRE(clusters.num_clusters() == 2);

  Allocation alloc;
  alloc.amplitudes = {{1.0, 2.0}, {1.0, 2.0}};
  alloc.times = {5.0, 5.0};
  RateReport report = evaluate(s, clusters, alloc);

  REQUIRE(report.rates.size() == 2);
  double min_seen = report.rates[0][0];
  double sum_seen = 0.0;
  for (const auto& cluster : report.rates) {
    for (double r : cluster) {
      min_seen = std::min(min_seen, r);
      sum_seen += r;
    }
  }
  CHECK(report.min_rate == doctest::Approx(min_seen));
  CHECK(report.sum_rate == doctest::Approx(sum_seen));
  CHECK(report.min_rate <= report.sum_rate / 4.0 + 1e-12);

  // Symmetric clusters with a symmetric allocation report identically.
  CHECK(report.rates[0][0] == doctest::Approx(report.rates[1][0]));
  CHECK(report.rates[0][1] == doctest::Approx(report.rates[1][1]));
  CHECK(report.sinr[0][0] == doctest::Approx(report.sinr[1][0]));
}

TEST_CASE("evaluate rejects mismatched shapes") {
  Scenario s = tiny_scenario({4e-7, 1e-7});
  ClusterAssignment clusters = group_users(s.channels);
  Allocation alloc;
  alloc.amplitudes = {{1.0, 1.0}, {1.0, 1.0}};
  alloc.times = {1.0};
  CHECK_THROWS_AS(evaluate(s, clusters, alloc), ContractViolation);
}

TEST_CASE("feasibility checker flags each constraint family") {
  Scenario s = tiny_scenario({4e-7, 4e-7, 1e-7, 1e-7});
  ClusterAssignment clusters = group_users(s.channels);

  Allocation zero;
  zero.amplitudes = {{0.0, 0.0}, {0.0, 0.0}};
  zero.times = {0.0, 0.0};
  CHECK(check_feasibility(s, clusters, zero).empty());

  SUBCASE("power budget") {
    Allocation a = zero;
    a.amplitudes[0][1] = std::sqrt(s.params.max_power_w + 1.0);
    auto violations = check_feasibility(s, clusters, a);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ConstraintKind::PowerBudget);
    CHECK(violations[0].amount == doctest::Approx(1.0));
  }
  SUBCASE("time budget") {
    Allocation a = zero;
    a.times = {6.0, 6.0};
    auto violations = check_feasibility(s, clusters, a);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ConstraintKind::TimeBudget);
    CHECK(violations[0].amount == doctest::Approx(2.0));
  }
  SUBCASE("negative slot duration") {
    Allocation a = zero;
    a.times[1] = -0.5;
    auto violations = check_feasibility(s, clusters, a);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ConstraintKind::TimeNonnegative);
    CHECK(violations[0].cluster == 1);
  }
  SUBCASE("decode order power inversion") {
    Allocation a = zero;
    a.amplitudes[0] = {1.0, 0.5};  // strong slot outweighs the weak slot
    auto violations = check_feasibility(s, clusters, a);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ConstraintKind::SicOrdering);
    CHECK(violations[0].cluster == 0);
    CHECK(violations[0].amount == doctest::Approx(0.75));
  }
  SUBCASE("negative amplitude") {
    Allocation a = zero;
    a.amplitudes[1][0] = -0.1;
    auto violations = check_feasibility(s, clusters, a);
    bool flagged = false;
    for (const auto& v : violations) {
      if (v.kind == ConstraintKind::AmplitudeNonnegative && v.cluster == 1) flagged = true;
    }
    CHECK(flagged);
  }
  SUBCASE("violations within tolerance pass") {
    Allocation a = zero;
    a.times = {5.0, 5.0 + 1e-8};
    a.amplitudes[0] = {1.0, 1.0 + 1e-9};
    CHECK(check_feasibility(s, clusters, a).empty());
  }
}
