#pragma once

#include <string>
#include <vector>

#include "noma/conic/program.hpp"

namespace noma::conic {

enum class SolveStatus {
  Optimal,
  AlmostOptimal,      // accepted at reduced accuracy
  PrimalInfeasible,
  DualInfeasible,     // unbounded primal
  IterationLimit,
  NumericalFailure,
};

inline bool usable(SolveStatus s) {
  return s == SolveStatus::Optimal || s == SolveStatus::AlmostOptimal;
}

std::string to_string(SolveStatus s);

struct BackendCaps {
  bool exponential_cone = false;
};

struct BackendResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> x;      // primal values in program variable order
  double objective = 0.0;     // value of the maximized variable
  int iterations = 0;
  std::string detail;         // diagnostic text for non-optimal outcomes
};

// Stateless solver interface. solve() keeps all run state local, so one
// backend instance may serve concurrent solves.
class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual BackendCaps capabilities() const = 0;
  virtual BackendResult solve(const ConicProgram& program) const = 0;
};

struct CutConfig {
  int initial_tangents = 17;
  double gap_tol = 1e-6;  // on the exponent scale: exponent - log2(value)
  int max_rounds = 40;
  // Tangency points closer than this are not added again. At spacing h the
  // envelope's worst exponent-scale gap is about ln2/8 * h^2, so 1.5e-3
  // keeps it under gap_tol while stopping near-duplicate rows from piling
  // up when iterates jitter around the optimum.
  double min_tangent_spacing = 1.5e-3;
};

// Solves a program on any backend. Exponential-cone blocks are passed through
// when the backend supports them natively; otherwise they are replaced by
// tangent cuts of value >= 2^exponent (outer approximation), refined at the
// incumbent until every block's cut gap is below cfg.gap_tol.
BackendResult solve_program(const ConicProgram& program, const ConicBackend& backend,
                            const CutConfig& cfg = {});

}  // namespace noma::conic
