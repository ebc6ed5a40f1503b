#include <cmath>
#include <limits>
#include <sstream>

#include "noma/conic/backend.hpp"
#include "noma/errors.hpp"

namespace noma::conic {
namespace {

constexpr double kLn2 = 0.6931471805599453;

// Supporting hyperplane of {value >= 2^exponent} at exponent = at:
// value - 2^at * (1 + ln2 * (exponent - at)) >= 0.
Affine tangent_cut(const ExpBlock& block, double at) {
  double weight = std::exp2(at);
  Affine row = block.value;
  for (const auto& [var, coef] : block.exponent.terms) {
    row.add_term(var, -weight * kLn2 * coef);
  }
  row.constant -= weight * kLn2 * block.exponent.constant;
  row.constant -= weight * (1.0 - kLn2 * at);
  return row;
}

ConicProgram without_exp_blocks(const ConicProgram& program) {
  ConicProgram out;
  for (int i = 0; i < program.num_variables(); ++i) out.add_variable(program.variable_name(i));
  out.maximize(program.objective_variable());
  for (const auto& b : program.linear_blocks()) out.add_linear(b.expr);
  for (const auto& b : program.soc_blocks()) out.add_soc(b.head, b.tail);
  for (const auto& b : program.rotated_soc_blocks()) out.add_rotated_soc(b.u, b.v, b.w);
  return out;
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::AlmostOptimal: return "almost optimal";
    case SolveStatus::PrimalInfeasible: return "primal infeasible";
    case SolveStatus::DualInfeasible: return "dual infeasible";
    case SolveStatus::IterationLimit: return "iteration limit";
    case SolveStatus::NumericalFailure: return "numerical failure";
  }
  return "unknown";
}

BackendResult solve_program(const ConicProgram& program, const ConicBackend& backend,
                            const CutConfig& cfg) {
  program.validate();
  if (program.exp_blocks().empty() || backend.capabilities().exponential_cone) {
    return backend.solve(program);
  }
  if (cfg.initial_tangents < 2) throw ContractViolation("need at least two initial tangents");

  ConicProgram work = without_exp_blocks(program);
  std::vector<std::vector<double>> tangency(program.exp_blocks().size());
  auto try_add = [&](std::size_t b, double at) {
    for (double t : tangency[b]) {
      if (std::abs(t - at) < cfg.min_tangent_spacing) return false;
    }
    work.add_linear(tangent_cut(program.exp_blocks()[b], at));
    tangency[b].push_back(at);
    return true;
  };
  for (std::size_t b = 0; b < program.exp_blocks().size(); ++b) {
    const auto& block = program.exp_blocks()[b];
    double lo = block.exponent_lower_bound;
    double span = block.exponent_upper_bound - lo;
    for (int k = 0; k < cfg.initial_tangents; ++k) {
      try_add(b, lo + span * k / (cfg.initial_tangents - 1));
    }
  }
  // Tangent at the iterate plus midpoints toward its bracketing tangency
  // points. The midpoints shrink the local interval a fixed factor per round
  // even when later iterates wander, so the envelope tightens geometrically
  // instead of chasing the incumbent.
  auto refine_at = [&](std::size_t b, double at) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (double t : tangency[b]) {
      if (t <= at) lo = std::max(lo, t);
      if (t >= at) hi = std::min(hi, t);
    }
    bool any = try_add(b, at);
    if (std::isfinite(lo)) any = try_add(b, 0.5 * (at + lo)) || any;
    if (std::isfinite(hi)) any = try_add(b, 0.5 * (at + hi)) || any;
    return any;
  };

  BackendResult res;
  double worst_gap = 0.0;
  for (int round = 0; round <= cfg.max_rounds; ++round) {
    res = backend.solve(work);
    if (!usable(res.status)) return res;
    worst_gap = 0.0;
    bool added = false;
    for (std::size_t b = 0; b < program.exp_blocks().size(); ++b) {
      const auto& block = program.exp_blocks()[b];
      double exponent = block.exponent.eval(res.x);
      double value = std::max(block.value.eval(res.x), 1e-300);
      double gap = exponent - std::log2(value);
      worst_gap = std::max(worst_gap, gap);
      // Deduplication doubles as the convergence test: once the spacing
      // around the iterate saturates, the envelope itself is tight and any
      // leftover gap is solver jitter, not missing cuts.
      if (gap > cfg.gap_tol && refine_at(b, exponent)) added = true;
    }
    if (!added) return res;
  }
  // Refinement budget exhausted: the answer is an outer bound with a known
  // remaining gap; degrade the status.
  if (res.status == SolveStatus::Optimal) res.status = SolveStatus::AlmostOptimal;
  std::ostringstream os;
  os << "tangent refinement exhausted with cut gap " << worst_gap;
  res.detail = os.str();
  return res;
}

}  // namespace noma::conic
