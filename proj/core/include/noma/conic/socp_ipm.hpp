#pragma once

#include <vector>

#include "noma/conic/backend.hpp"
#include "noma/conic/program.hpp"

namespace noma::conic {

// minimize c'x  subject to  Gx + s = h,  s in R+^n_linear x SOC(dim_1) x ...
// G is dense row-major (m x n).
struct StandardForm {
  int n = 0;
  int m = 0;
  int n_linear = 0;
  std::vector<int> soc_dims;
  std::vector<double> c;
  std::vector<double> G;
  std::vector<double> h;
};

// Rewrites a program without exponential blocks into standard form:
// linear rows first, then second-order cones in declaration order, with
// rotated cones mapped through (u,v,w) -> ||(2w; u-v)|| <= u+v.
// Throws UnsupportedConfiguration if exponential blocks are present.
StandardForm lower_program(const ConicProgram& program);

struct IpmSettings {
  int max_iterations = 100;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double feastol_inacc = 1e-4;
  double abstol_inacc = 5e-5;
  double reltol_inacc = 5e-5;
  int refine_steps = 6;
  double refine_error_factor = 6.0;
  double linsys_accuracy = 1e-14;
  double static_reg = 1e-10;
  int equilibrate_iters = 3;
  double sigma_min = 1e-4;
  double sigma_max = 1.0;
  double step_min = 1e-6;
  double step_max = 0.999;
  double step_scale = 0.99;   // back off from the cone boundary
  double safeguard = 500.0;   // divergence watchdog on primal residual growth
  int stall_iterations = 25;  // stop early when the best iterate stops improving
};

struct IpmResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> x;
  std::vector<double> s;
  std::vector<double> z;
  double primal_objective = 0.0;
  int iterations = 0;
};

// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
// and a Mehrotra predictor-corrector step. Deterministic.
IpmResult solve_standard_form(const StandardForm& form, const IpmSettings& settings = {});

class SocpIpmBackend final : public ConicBackend {
 public:
  explicit SocpIpmBackend(IpmSettings settings = {}) : settings_(settings) {}
  BackendCaps capabilities() const override { return BackendCaps{.exponential_cone = false}; }
  BackendResult solve(const ConicProgram& program) const override;

 private:
  IpmSettings settings_;
};

}  // namespace noma::conic
