#pragma once

#include <span>
#include <string>
#include <vector>

namespace noma::conic {

// Sparse affine expression: constant + sum(coef * x[var]).
struct Affine {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  static Affine of_constant(double c) { return Affine{{}, c}; }
  static Affine of_var(int var, double coef = 1.0, double constant = 0.0) {
    return Affine{{{var, coef}}, constant};
  }
  Affine& add_term(int var, double coef) {
    terms.emplace_back(var, coef);
    return *this;
  }
  double eval(std::span<const double> x) const;
};

// e(x) >= 0
struct LinearBlock {
  Affine expr;
};

// head(x) >= || tail(x) ||_2
struct SocBlock {
  Affine head;
  std::vector<Affine> tail;
};

// u(x) * v(x) >= || w(x) ||^2 with u, v >= 0
struct RotatedSocBlock {
  Affine u;
  Affine v;
  std::vector<Affine> w;
};

// value(x) >= 2 ^ exponent(x). The bounds delimit the exponent range any
// feasible solution can reach; outer-approximation backends seed their
// tangent grid over it. They are placement hints, not constraints: cuts
// outside the range are still generated when an iterate strays there.
struct ExpBlock {
  Affine value;
  Affine exponent;
  double exponent_upper_bound = 40.0;
  double exponent_lower_bound = 0.0;
};

// Conic feasible set plus a single-variable objective. Blocks keep their
// declaration order so that lowering, and therefore solver behavior, is
// reproducible run to run.
class ConicProgram {
 public:
  int add_variable(std::string name);
  int num_variables() const { return static_cast<int>(names_.size()); }
  const std::string& variable_name(int var) const;

  void maximize(int var);
  int objective_variable() const { return objective_; }

  void add_linear(Affine expr);
  void add_soc(Affine head, std::vector<Affine> tail);
  void add_rotated_soc(Affine u, Affine v, std::vector<Affine> w);
  void add_exp(Affine value, Affine exponent, double exponent_upper_bound,
               double exponent_lower_bound = 0.0);

  const std::vector<LinearBlock>& linear_blocks() const { return linear_; }
  const std::vector<SocBlock>& soc_blocks() const { return socs_; }
  const std::vector<RotatedSocBlock>& rotated_soc_blocks() const { return rsocs_; }
  const std::vector<ExpBlock>& exp_blocks() const { return exps_; }

  // Throws ContractViolation if any block references an undeclared variable
  // or the objective is unset.
  void validate() const;

  // Human-readable listing of variables, objective and constraints.
  std::string dump() const;

  // Worst relative constraint violation of a candidate point; zero when x is
  // feasible. Exponential blocks measure on the exponent scale.
  double max_violation(std::span<const double> x) const;

 private:
  void check_affine(const Affine& a) const;

  std::vector<std::string> names_;
  int objective_ = -1;
  std::vector<LinearBlock> linear_;
  std::vector<SocBlock> socs_;
  std::vector<RotatedSocBlock> rsocs_;
  std::vector<ExpBlock> exps_;
};

}  // namespace noma::conic
