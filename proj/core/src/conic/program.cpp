#include "noma/conic/program.hpp"

#include <cmath>
#include <sstream>

#include "noma/errors.hpp"

namespace noma::conic {
namespace {

void format_affine(std::ostream& os, const Affine& a, const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [var, coef] : a.terms) {
    if (!first) os << " + ";
    os << coef << "*" << names[var];
    first = false;
  }
  if (a.constant != 0.0 || first) {
    if (!first) os << " + ";
    os << a.constant;
  }
}

}  // namespace

double Affine::eval(std::span<const double> x) const {
  double v = constant;
  for (const auto& [var, coef] : terms) v += coef * x[var];
  return v;
}

double ConicProgram::max_violation(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != num_variables())
    throw ContractViolation("candidate point has wrong dimension");
  auto scale_of = [&](const Affine& a) {
    double s = std::abs(a.constant);
    for (const auto& [var, coef] : a.terms) s += std::abs(coef * x[var]);
    return s;
  };
  double worst = 0.0;
  for (const auto& b : linear_) {
    double v = b.expr.eval(x);
    worst = std::max(worst, -v / (1.0 + scale_of(b.expr)));
  }
  for (const auto& b : socs_) {
    double head = b.head.eval(x);
    double norm2 = 0.0, scale = scale_of(b.head);
    for (const auto& t : b.tail) {
      double v = t.eval(x);
      norm2 += v * v;
      scale += std::abs(v);
    }
    worst = std::max(worst, (std::sqrt(norm2) - head) / (1.0 + scale));
  }
  for (const auto& b : rsocs_) {
    double u = b.u.eval(x);
    double v = b.v.eval(x);
    double norm2 = 0.0;
    for (const auto& t : b.w) {
      double e = t.eval(x);
      norm2 += e * e;
    }
    double scale = std::abs(u * v) + norm2;
    worst = std::max(worst, (norm2 - u * v) / (1.0 + scale));
    worst = std::max(worst, -u / (1.0 + std::abs(u)));
    worst = std::max(worst, -v / (1.0 + std::abs(v)));
  }
  for (const auto& b : exps_) {
    double value = std::max(b.value.eval(x), 1e-300);
    double exponent = b.exponent.eval(x);
    worst = std::max(worst, exponent - std::log2(value));
  }
  return worst;
}

int ConicProgram::add_variable(std::string name) {
  names_.push_back(std::move(name));
  return static_cast<int>(names_.size()) - 1;
}

const std::string& ConicProgram::variable_name(int var) const {
  if (var < 0 || var >= num_variables()) throw ContractViolation("variable index out of range");
  return names_[var];
}

void ConicProgram::maximize(int var) {
  if (var < 0 || var >= num_variables()) throw ContractViolation("objective variable undeclared");
  objective_ = var;
}

void ConicProgram::check_affine(const Affine& a) const {
  for (const auto& [var, coef] : a.terms) {
    if (var < 0 || var >= num_variables())
      throw ContractViolation("affine expression references an undeclared variable");
    if (!std::isfinite(coef)) throw ContractViolation("non-finite coefficient");
  }
  if (!std::isfinite(a.constant)) throw ContractViolation("non-finite constant");
}

void ConicProgram::add_linear(Affine expr) {
  check_affine(expr);
  linear_.push_back({std::move(expr)});
}

void ConicProgram::add_soc(Affine head, std::vector<Affine> tail) {
  check_affine(head);
  for (const auto& a : tail) check_affine(a);
  if (tail.empty()) throw ContractViolation("second-order cone needs a nonempty tail");
  socs_.push_back({std::move(head), std::move(tail)});
}

void ConicProgram::add_rotated_soc(Affine u, Affine v, std::vector<Affine> w) {
  check_affine(u);
  check_affine(v);
  for (const auto& a : w) check_affine(a);
  if (w.empty()) throw ContractViolation("rotated cone needs a nonempty vector part");
  rsocs_.push_back({std::move(u), std::move(v), std::move(w)});
}

void ConicProgram::add_exp(Affine value, Affine exponent, double exponent_upper_bound,
                           double exponent_lower_bound) {
  check_affine(value);
  check_affine(exponent);
  if (!(exponent_upper_bound > 0.0) || !std::isfinite(exponent_upper_bound))
    throw ContractViolation("exponent upper bound must be positive and finite");
  if (!(exponent_lower_bound < exponent_upper_bound) || !std::isfinite(exponent_lower_bound))
    throw ContractViolation("exponent lower bound must be finite and below the upper bound");
  exps_.push_back(
      {std::move(value), std::move(exponent), exponent_upper_bound, exponent_lower_bound});
}

void ConicProgram::validate() const {
  if (objective_ < 0) throw ContractViolation("objective variable unset");
  // Blocks were checked on insertion; re-check in case of later variable
  // removal bugs (defensive, cheap relative to a solve).
  for (const auto& b : linear_) check_affine(b.expr);
  for (const auto& b : socs_) {
    check_affine(b.head);
    for (const auto& a : b.tail) check_affine(a);
  }
  for (const auto& b : rsocs_) {
    check_affine(b.u);
    check_affine(b.v);
    for (const auto& a : b.w) check_affine(a);
  }
  for (const auto& b : exps_) {
    check_affine(b.value);
    check_affine(b.exponent);
  }
}

std::string ConicProgram::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "variables " << num_variables() << "\n";
  for (int i = 0; i < num_variables(); ++i) os << "  x" << i << " " << names_[i] << "\n";
  os << "maximize " << (objective_ >= 0 ? names_[objective_] : std::string("<unset>")) << "\n";
  for (const auto& b : linear_) {
    os << "linear: ";
    format_affine(os, b.expr, names_);
    os << " >= 0\n";
  }
  for (const auto& b : socs_) {
    os << "soc: ||(";
    for (std::size_t k = 0; k < b.tail.size(); ++k) {
      if (k) os << "; ";
      format_affine(os, b.tail[k], names_);
    }
    os << ")|| <= ";
    format_affine(os, b.head, names_);
    os << "\n";
  }
  for (const auto& b : rsocs_) {
    os << "rsoc: ||(";
    for (std::size_t k = 0; k < b.w.size(); ++k) {
      if (k) os << "; ";
      format_affine(os, b.w[k], names_);
    }
    os << ")||^2 <= (";
    format_affine(os, b.u, names_);
    os << ") * (";
    format_affine(os, b.v, names_);
    os << ")\n";
  }
  for (const auto& b : exps_) {
    os << "exp: ";
    format_affine(os, b.value, names_);
    os << " >= 2^(";
    format_affine(os, b.exponent, names_);
    os << ")  [exponent <= " << b.exponent_upper_bound << "]\n";
  }
  return os.str();
}

}  // namespace noma::conic
