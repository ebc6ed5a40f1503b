#include "noma/conic/socp_ipm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "noma/errors.hpp"

namespace noma::conic {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Cone layout and Nesterov-Todd scalings.
//
// The cone K = R+^{n_linear} x SOC(d_1) x ... The scaling point W satisfies
// W z = W^{-1} s = lambda for strictly interior (s, z); second-order blocks
// use the standard hyperbolic Householder form W = eta * [[a, q'], [q, M]]
// with M = I + qq'/(1+a) and a^2 - ||q||^2 = 1.
// ---------------------------------------------------------------------------

struct SocScaling {
  double eta = 1.0;
  double a = 1.0;
  VectorXd q;  // dim-1 entries, zero at identity
};

struct Scalings {
  VectorXd lp_v;     // s_i / z_i on linear rows (W^2 diagonal)
  VectorXd lp_sqrt;  // sqrt(lp_v)
  std::vector<SocScaling> socs;
};

class ConeOps {
 public:
  ConeOps(int n_linear, std::vector<int> soc_dims) : n_linear_(n_linear) {
    int at = n_linear;
    for (int d : soc_dims) {
      socs_.emplace_back(at, d);
      at += d;
    }
    m_ = at;
    degree_ = n_linear_ + static_cast<int>(socs_.size());
  }

  int rows() const { return m_; }
  int degree() const { return degree_; }

  void identity_scalings(Scalings& w) const {
    w.lp_v = VectorXd::Ones(n_linear_);
    w.lp_sqrt = VectorXd::Ones(n_linear_);
    w.socs.assign(socs_.size(), SocScaling{});
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      w.socs[k].q = VectorXd::Zero(socs_[k].second - 1);
    }
  }

  // Computes W from (s, z) and lambda = W z. Returns false when either
  // vector left the cone interior, which ends the solve.
  bool update_scalings(const VectorXd& s, const VectorXd& z, Scalings& w,
                       VectorXd& lambda) const {
    for (int i = 0; i < n_linear_; ++i) {
      if (s[i] <= 0.0 || z[i] <= 0.0) return false;
      w.lp_v[i] = s[i] / z[i];
      w.lp_sqrt[i] = std::sqrt(w.lp_v[i]);
      lambda[i] = std::sqrt(s[i] * z[i]);
    }
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      auto [at, d] = socs_[k];
      auto sk = s.segment(at, d);
      auto zk = z.segment(at, d);
      double sres = sk[0] * sk[0] - sk.tail(d - 1).squaredNorm();
      double zres = zk[0] * zk[0] - zk.tail(d - 1).squaredNorm();
      if (sres <= 0.0 || zres <= 0.0 || sk[0] <= 0.0 || zk[0] <= 0.0) return false;
      double snorm = std::sqrt(sres);
      double znorm = std::sqrt(zres);
      VectorXd sbar = sk / snorm;
      VectorXd zbar = zk / znorm;
      double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
      SocScaling& sc = w.socs[k];
      sc.eta = std::sqrt(snorm / znorm);
      sc.a = (sbar[0] + zbar[0]) / (2.0 * gamma);
      sc.q = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
      apply_w_block(sc, zk, lambda.segment(at, d));
    }
    return true;
  }

  void apply_w(const Scalings& w, const VectorXd& in, VectorXd& out) const {
    out.head(n_linear_) = w.lp_sqrt.cwiseProduct(in.head(n_linear_));
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      auto [at, d] = socs_[k];
      apply_w_block(w.socs[k], in.segment(at, d), out.segment(at, d));
    }
  }

  void apply_w_inv(const Scalings& w, const VectorXd& in, VectorXd& out) const {
    out.head(n_linear_) = in.head(n_linear_).cwiseQuotient(w.lp_sqrt);
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      auto [at, d] = socs_[k];
      const SocScaling& sc = w.socs[k];
      auto u = in.segment(at, d);
      auto o = out.segment(at, d);
      double qdot = sc.q.dot(u.tail(d - 1));
      o[0] = (sc.a * u[0] - qdot) / sc.eta;
      o.tail(d - 1) = (u.tail(d - 1) + (qdot / (1.0 + sc.a) - u[0]) * sc.q) / sc.eta;
    }
  }

  // W^2 u in extended precision, for iterative refinement residuals. On a
  // second-order block W^2 = eta^2 (2vv' - J) with v = (a; q), J = diag(1, -I).
  void apply_w2_ext(const Scalings& w,
                    const Eigen::Matrix<long double, Eigen::Dynamic, 1>& in,
                    Eigen::Matrix<long double, Eigen::Dynamic, 1>& out) const {
    for (int i = 0; i < n_linear_; ++i) {
      out[i] = static_cast<long double>(w.lp_v[i]) * in[i];
    }
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      auto [at, d] = socs_[k];
      const SocScaling& sc = w.socs[k];
      const long double eta2 = static_cast<long double>(sc.eta) * sc.eta;
      long double dot = static_cast<long double>(sc.a) * in[at];
      for (int j = 1; j < d; ++j) dot += static_cast<long double>(sc.q[j - 1]) * in[at + j];
      out[at] = eta2 * (2.0L * dot * sc.a - in[at]);
      for (int j = 1; j < d; ++j) {
        out[at + j] = eta2 * (2.0L * dot * sc.q[j - 1] + in[at + j]);
      }
    }
  }

  // Jordan product u o v.
  void product(const VectorXd& u, const VectorXd& v, VectorXd& out) const {
    out.head(n_linear_) = u.head(n_linear_).cwiseProduct(v.head(n_linear_));
    for (auto [at, d] : socs_) {
      double dot = u.segment(at, d).dot(v.segment(at, d));
      out.segment(at + 1, d - 1) =
          u[at] * v.segment(at + 1, d - 1) + v[at] * u.segment(at + 1, d - 1);
      out[at] = dot;
    }
  }

  // Solves lambda o out = v (inverse of the arrow operator).
  void division(const VectorXd& lambda, const VectorXd& v, VectorXd& out) const {
    out.head(n_linear_) = v.head(n_linear_).cwiseQuotient(lambda.head(n_linear_));
    for (auto [at, d] : socs_) {
      auto l1 = lambda.segment(at + 1, d - 1);
      auto v1 = v.segment(at + 1, d - 1);
      double rho = lambda[at] * lambda[at] - l1.squaredNorm();
      double head = (lambda[at] * v[at] - l1.dot(v1)) / rho;
      out.segment(at + 1, d - 1) = (v1 - head * l1) / lambda[at];
      out[at] = head;
    }
  }

  // Subtracts sigma*mu from the cone-identity positions.
  void subtract_identity(VectorXd& v, double value) const {
    v.head(n_linear_).array() -= value;
    for (auto [at, d] : socs_) {
      (void)d;
      v[at] -= value;
    }
  }

  // Moves r into the cone interior: r + (1 + alpha) * e.
  void bring_to_cone(VectorXd& r, double gamma) const {
    double alpha = -gamma;
    for (int i = 0; i < n_linear_; ++i) {
      if (r[i] <= 0.0 && -r[i] > alpha) alpha = -r[i];
    }
    for (auto [at, d] : socs_) {
      double res = r[at] - r.segment(at + 1, d - 1).norm();
      if (res <= 0.0 && -res > alpha) alpha = -res;
    }
    double shift = 1.0 + alpha;
    r.head(n_linear_).array() += shift;
    for (auto [at, d] : socs_) {
      (void)d;
      r[at] += shift;
    }
  }

  // Largest step with lambda + t*ds and lambda + t*dz inside the cone,
  // and tau + t*dtau > 0, kap + t*dkap > 0. Directions are in scaled space.
  double line_search(const VectorXd& lambda, const VectorXd& ds, const VectorXd& dz,
                     double tau, double dtau, double kap, double dkap) const {
    double alpha = 10.0;
    for (int i = 0; i < n_linear_; ++i) {
      if (ds[i] < 0.0) alpha = std::min(alpha, -lambda[i] / ds[i]);
      if (dz[i] < 0.0) alpha = std::min(alpha, -lambda[i] / dz[i]);
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
    for (auto [at, d] : socs_) {
      auto lk = lambda.segment(at, d);
      double lknorm2 = lk[0] * lk[0] - lk.tail(d - 1).squaredNorm();
      if (lknorm2 <= 0.0) return 0.0;
      double lknorm = std::sqrt(lknorm2);
      VectorXd lkbar = lk / lknorm;
      double inv = 1.0 / lknorm;
      for (const auto* dir : {&ds, &dz}) {
        auto dk = dir->segment(at, d);
        double jdot = lkbar[0] * dk[0] - lkbar.tail(d - 1).dot(dk.tail(d - 1));
        double rho0 = inv * jdot;
        double factor = (jdot + dk[0]) / (lkbar[0] + 1.0);
        double rho_tail_norm =
            (inv * (dk.tail(d - 1) - factor * lkbar.tail(d - 1))).norm();
        double bound = rho_tail_norm - rho0;
        if (bound > 0.0) alpha = std::min(alpha, 1.0 / bound);
      }
    }
    return alpha;
  }

 private:
  static void apply_w_block(const SocScaling& sc, Eigen::Ref<const VectorXd> u,
                            Eigen::Ref<VectorXd> out) {
    const int d = static_cast<int>(u.size());
    double qdot = sc.q.dot(u.tail(d - 1));
    out[0] = sc.eta * (sc.a * u[0] + qdot);
    out.tail(d - 1) = sc.eta * (u.tail(d - 1) + (u[0] + qdot / (1.0 + sc.a)) * sc.q);
  }

  int n_linear_;
  std::vector<std::pair<int, int>> socs_;  // (start row, dim)
  int m_ = 0;
  int degree_ = 0;
};

// ---------------------------------------------------------------------------
// KKT solves via normal equations, M = delta*I + (W^{-1}G)'(W^{-1}G),
// refined against the unfactored system. Residuals and the accumulated
// solution are kept in extended precision: in plain double the residual
// computation noise (~||G|| ||x|| eps) becomes the duality-gap floor the
// interior-point loop cannot cross.
// ---------------------------------------------------------------------------

using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

class KktSolver {
 public:
  KktSolver(const MatrixXd& G, const IpmSettings& st, const ConeOps& cone)
      : G_(G), gl_(G.cast<long double>()), st_(st), cone_(cone), wig_(G.rows(), G.cols()) {}

  bool factor(const Scalings& w) {
    delta_ = st_.static_reg;
    VectorXd col(G_.rows());
    for (int j = 0; j < G_.cols(); ++j) {
      cone_.apply_w_inv(w, G_.col(j), col);
      wig_.col(j) = col;
    }
    MatrixXd base = wig_.transpose() * wig_;
    for (int attempt = 0; attempt < 5; ++attempt) {
      MatrixXd M = base;
      M.diagonal().array() += delta_;
      llt_.compute(M);
      if (llt_.info() == Eigen::Success) return true;
      delta_ *= 100.0;
    }
    return false;
  }

  // Solves [delta*I, G'; G, -W^2] [dx; dz] = [bx; bz].
  void solve(const Scalings& w, const VectorXd& bx, const VectorXd& bz, VectorXd& dx,
             VectorXd& dz) const {
    const int n = static_cast<int>(bx.size());
    const int m = static_cast<int>(bz.size());
    VectorXd t1(m), u(m);
    cone_.apply_w_inv(w, bz, t1);
    cone_.apply_w_inv(w, t1, u);  // u = W^-2 bz
    dx = llt_.solve(bx + G_.transpose() * u);
    VectorXd gdx = G_ * dx;
    cone_.apply_w_inv(w, gdx, t1);
    cone_.apply_w_inv(w, t1, dz);
    dz -= u;

    const double bnorm =
        1.0 + std::max(bx.lpNorm<Eigen::Infinity>(), bz.lpNorm<Eigen::Infinity>());
    double prev_err = std::numeric_limits<double>::infinity();
    VectorXld xl = dx.cast<long double>();
    VectorXld zl = dz.cast<long double>();
    const VectorXld bxl = bx.cast<long double>();
    const VectorXld bzl = bz.cast<long double>();
    VectorXld exl(n), ezl(m), w2zl(m);
    VectorXd ex(n), ez(m), ddx(n), ddz(m);
    for (int it = 0; it < st_.refine_steps; ++it) {
      // Residual of the unregularized system; the factorization's delta*I acts
      // as a preconditioner only, so refinement removes its bias.
      cone_.apply_w2_ext(w, zl, w2zl);
      exl = bxl - gl_.transpose() * zl;
      ezl = bzl - gl_ * xl + w2zl;
      ex = exl.cast<double>();
      ez = ezl.cast<double>();
      double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
      if (err <= bnorm * st_.linsys_accuracy) break;
      if (err > prev_err / st_.refine_error_factor) break;
      prev_err = err;
      cone_.apply_w_inv(w, ez, t1);
      cone_.apply_w_inv(w, t1, u);
      ddx = llt_.solve(ex + G_.transpose() * u);
      VectorXd gddx = G_ * ddx;
      cone_.apply_w_inv(w, gddx, t1);
      cone_.apply_w_inv(w, t1, ddz);
      ddz -= u;
      xl += ddx.cast<long double>();
      zl += ddz.cast<long double>();
    }
    dx = xl.cast<double>();
    dz = zl.cast<double>();
  }

 private:
  const MatrixXd& G_;
  MatrixXld gl_;
  const IpmSettings& st_;
  const ConeOps& cone_;
  MatrixXd wig_;
  Eigen::LLT<MatrixXd> llt_;
  double delta_ = 0.0;
};

// ---------------------------------------------------------------------------
// Ruiz-style equilibration. Rows of one second-order block share a scale so
// the cone geometry survives; everything is backscaled after the solve.
// ---------------------------------------------------------------------------

struct Equilibration {
  VectorXd row;  // per-row divisor applied to G and h
  VectorXd col;  // per-column divisor applied to G and x
};

Equilibration equilibrate(MatrixXd& G, VectorXd& c, VectorXd& h, int n_linear,
                          const std::vector<int>& soc_dims, int iters) {
  const int m = static_cast<int>(G.rows());
  const int n = static_cast<int>(G.cols());
  Equilibration eq{VectorXd::Ones(m), VectorXd::Ones(n)};
  for (int it = 0; it < iters; ++it) {
    VectorXd row_max = G.cwiseAbs().rowwise().maxCoeff();
    VectorXd col_max = G.cwiseAbs().colwise().maxCoeff();
    int at = n_linear;
    for (int d : soc_dims) {
      double total = row_max.segment(at, d).sum();
      row_max.segment(at, d).setConstant(total);
      at += d;
    }
    for (int i = 0; i < m; ++i) row_max[i] = (row_max[i] > 1e-300) ? std::sqrt(row_max[i]) : 1.0;
    for (int j = 0; j < n; ++j) col_max[j] = (col_max[j] > 1e-300) ? std::sqrt(col_max[j]) : 1.0;
    G.array().colwise() /= row_max.array();
    G.array().rowwise() /= col_max.transpose().array();
    eq.row.array() *= row_max.array();
    eq.col.array() *= col_max.array();
  }
  c.array() /= eq.col.array();
  h.array() /= eq.row.array();
  return eq;
}

struct Stats {
  double pres = kNan, dres = kNan, gap = kNan, relgap = kNan, mu = kNan;
  double cx = kNan, hz = kNan, pinfres = kNan, dinfres = kNan;
  double tau = kNan, kap = kNan;
};

enum class ExitKind { None, Optimal, PrimalInfeasible, DualInfeasible };

ExitKind check_exit(const Stats& st, double feastol, double abstol, double reltol) {
  bool objective_sane = (-st.cx > 0.0) || (-st.hz >= -abstol);
  if (objective_sane && st.pres < feastol && st.dres < feastol &&
      (st.gap < abstol || (std::isfinite(st.relgap) && st.relgap < reltol))) {
    return ExitKind::Optimal;
  }
  if (std::isfinite(st.pinfres) && st.pinfres < feastol && st.tau < st.kap) {
    return ExitKind::PrimalInfeasible;
  }
  if (std::isfinite(st.dinfres) && st.dinfres < feastol && st.tau < st.kap) {
    return ExitKind::DualInfeasible;
  }
  return ExitKind::None;
}

struct Iterate {
  VectorXd x, s, z;
  double tau = 1.0, kap = 1.0;
  Stats stats;
  double score = std::numeric_limits<double>::infinity();
};

double iterate_score(const Stats& st) {
  double gap_term = std::isfinite(st.relgap) ? st.relgap : 1.0;
  return std::max(st.pres, st.dres) + gap_term;
}

}  // namespace

StandardForm lower_program(const ConicProgram& program) {
  program.validate();
  if (!program.exp_blocks().empty()) {
    throw UnsupportedConfiguration(
        "standard-form lowering handles linear and second-order blocks only; "
        "rewrite exponential blocks first (see solve_program)");
  }
  StandardForm f;
  f.n = program.num_variables();
  f.n_linear = static_cast<int>(program.linear_blocks().size());
  int m = f.n_linear;
  for (const auto& b : program.soc_blocks()) {
    f.soc_dims.push_back(1 + static_cast<int>(b.tail.size()));
    m += f.soc_dims.back();
  }
  for (const auto& b : program.rotated_soc_blocks()) {
    f.soc_dims.push_back(2 + static_cast<int>(b.w.size()));
    m += f.soc_dims.back();
  }
  f.m = m;
  f.c.assign(f.n, 0.0);
  f.c[program.objective_variable()] = -1.0;  // maximize via minimize(-x)
  f.G.assign(static_cast<std::size_t>(m) * f.n, 0.0);
  f.h.assign(m, 0.0);

  // Row semantics: s_row = h_row - G_row.x must equal the cone entry, so an
  // affine entry e(x) lowers to G_row = -coeffs, h_row = constant.
  auto set_row = [&](int row, const Affine& a) {
    f.h[row] = a.constant;
    double* base = f.G.data() + static_cast<std::size_t>(row) * f.n;
    for (const auto& [var, coef] : a.terms) base[var] -= coef;
  };

  int row = 0;
  for (const auto& b : program.linear_blocks()) set_row(row++, b.expr);
  for (const auto& b : program.soc_blocks()) {
    set_row(row++, b.head);
    for (const auto& t : b.tail) set_row(row++, t);
  }
  for (const auto& b : program.rotated_soc_blocks()) {
    // u*v >= ||w||^2 with u,v >= 0 is ||(2w; u-v)|| <= u+v.
    Affine head = b.u;
    for (const auto& [var, coef] : b.v.terms) head.add_term(var, coef);
    head.constant += b.v.constant;
    Affine last = b.u;
    for (const auto& [var, coef] : b.v.terms) last.add_term(var, -coef);
    last.constant -= b.v.constant;
    set_row(row++, head);
    for (const auto& t : b.w) {
      Affine doubled = t;
      for (auto& [var, coef] : doubled.terms) coef *= 2.0;
      doubled.constant *= 2.0;
      set_row(row++, doubled);
    }
    set_row(row++, last);
  }
  return f;
}

IpmResult solve_standard_form(const StandardForm& form, const IpmSettings& st) {
  if (form.n <= 0) throw ContractViolation("standard form has no variables");
  const int n = form.n;
  const int m = form.m;
  ConeOps cone(form.n_linear, form.soc_dims);
  if (cone.rows() != m) throw ContractViolation("cone dimensions do not match row count");

  MatrixXd G = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(form.G.data(), m, n);
  VectorXd c = Eigen::Map<const VectorXd>(form.c.data(), n);
  VectorXd h = Eigen::Map<const VectorXd>(form.h.data(), m);
  Equilibration eq = equilibrate(G, c, h, form.n_linear, form.soc_dims, st.equilibrate_iters);

  const double resx0 = std::max(1.0, c.norm());
  const double resz0 = std::max(1.0, h.norm());

  IpmResult result;
  auto finish = [&](SolveStatus status, const Iterate& it, int iterations) {
    result.status = status;
    result.iterations = iterations;
    double tau = (it.tau > 0.0) ? it.tau : 1.0;
    bool scale_by_tau = status == SolveStatus::Optimal || status == SolveStatus::AlmostOptimal ||
                        status == SolveStatus::IterationLimit ||
                        status == SolveStatus::NumericalFailure;
    double xs = scale_by_tau ? tau : 1.0;  // certificates stay unnormalized rays
    result.x.resize(n);
    result.s.resize(m);
    result.z.resize(m);
    for (int j = 0; j < n; ++j) result.x[j] = it.x[j] / eq.col[j] / xs;
    for (int i = 0; i < m; ++i) {
      result.s[i] = it.s[i] * eq.row[i] / xs;
      result.z[i] = it.z[i] / eq.row[i] / xs;
    }
    double pobj = 0.0;
    for (int j = 0; j < n; ++j) pobj += form.c[j] * result.x[j];
    result.primal_objective = pobj;
    return result;
  };

  // Initial point: least-squares solves with identity scaling, shifted into
  // the cone.
  Scalings w;
  cone.identity_scalings(w);
  KktSolver kkt(G, st, cone);
  Iterate cur;
  cur.x = VectorXd::Zero(n);
  cur.s = VectorXd::Zero(m);
  cur.z = VectorXd::Zero(m);
  if (!kkt.factor(w)) return finish(SolveStatus::NumericalFailure, cur, 0);
  {
    VectorXd dx(n), dz(m);
    kkt.solve(w, VectorXd::Zero(n), h, dx, dz);
    cur.x = dx;
    cur.s = -dz;
    cone.bring_to_cone(cur.s, st.step_scale);
    kkt.solve(w, -c, VectorXd::Zero(m), dx, dz);
    cur.z = dz;
    cone.bring_to_cone(cur.z, st.step_scale);
  }
  cur.tau = 1.0;
  cur.kap = 1.0;

  VectorXd lambda(m);
  VectorXd rx(n), rz(m), dx1(n), dz1(m), dx2(n), dz2(m);
  VectorXd dzaff(m), w_dzaff(m), dsaff_w(m), ds_comb(m), u(m), wu(m);
  VectorXd dx(n), dz(m), w_dz(m), ds_w(m), ds(m);
  Iterate best = cur;
  best.score = std::numeric_limits<double>::infinity();
  double prev_pres = std::numeric_limits<double>::infinity();
  double best_progress = std::numeric_limits<double>::infinity();
  int last_progress_iter = 0;

  auto compute_stats = [&](Iterate& it) {
    it.stats.cx = c.dot(it.x);
    it.stats.hz = h.dot(it.z);
    double sz = it.s.dot(it.z);
    it.stats.tau = it.tau;
    it.stats.kap = it.kap;
    it.stats.mu = (sz + it.tau * it.kap) / (cone.degree() + 1);
    double pcost = it.stats.cx / it.tau;
    double dcost = -it.stats.hz / it.tau;
    it.stats.gap = sz / (it.tau * it.tau);
    if (pcost < 0.0) {
      it.stats.relgap = it.stats.gap / (-pcost);
    } else if (dcost > 0.0) {
      it.stats.relgap = it.stats.gap / dcost;
    } else {
      it.stats.relgap = kNan;
    }
    VectorXd hrx = -(G.transpose() * it.z);
    VectorXd hrz = it.s + G * it.x;
    rx = hrx - it.tau * c;
    rz = hrz - it.tau * h;
    it.stats.pres = rz.norm() / std::max(resz0 + it.x.norm() + it.s.norm(), 1.0) / it.tau;
    it.stats.dres = rx.norm() / std::max(resx0 + it.z.norm(), 1.0) / it.tau;
    it.stats.pinfres =
        (it.stats.hz < 0.0) ? hrx.norm() / resx0 / (-it.stats.hz) : kNan;
    it.stats.dinfres = (it.stats.cx < 0.0) ? hrz.norm() / resz0 / (-it.stats.cx) : kNan;
    it.score = iterate_score(it.stats);
  };

  const bool trace = std::getenv("NOMA_IPM_TRACE") != nullptr;
  auto soft_stop = [&](int iters, const char* why = "") {
    // No certified exit; report the best iterate at relaxed tolerances if it
    // qualifies, otherwise admit the stop reason.
    const Iterate& pick = (best.score < cur.score) ? best : cur;
    if (trace) {
      std::fprintf(stderr,
                   "[ipm] soft_stop(%s) it=%d pick{pres=%.3e dres=%.3e gap=%.3e relgap=%.3e "
                   "mu=%.3e tau=%.3e kap=%.3e}\n",
                   why, iters, pick.stats.pres, pick.stats.dres, pick.stats.gap,
                   pick.stats.relgap, pick.stats.mu, pick.tau, pick.kap);
    }
    ExitKind kind = check_exit(pick.stats, st.feastol_inacc, st.abstol_inacc, st.reltol_inacc);
    if (kind == ExitKind::Optimal) return finish(SolveStatus::AlmostOptimal, pick, iters);
    if (kind == ExitKind::PrimalInfeasible)
      return finish(SolveStatus::PrimalInfeasible, pick, iters);
    if (kind == ExitKind::DualInfeasible) return finish(SolveStatus::DualInfeasible, pick, iters);
    return finish(iters >= st.max_iterations ? SolveStatus::IterationLimit
                                             : SolveStatus::NumericalFailure,
                  pick, iters);
  };

  int iter = 0;
  for (;; ++iter) {
    compute_stats(cur);
    if (trace) {
      std::fprintf(stderr,
                   "[ipm] it=%3d pres=%.3e dres=%.3e gap=%.3e relgap=%.3e mu=%.3e tau=%.3e "
                   "kap=%.3e\n",
                   iter, cur.stats.pres, cur.stats.dres, cur.stats.gap, cur.stats.relgap,
                   cur.stats.mu, cur.tau, cur.kap);
    }
    if (!std::isfinite(cur.stats.mu) || !std::isfinite(cur.stats.pres) ||
        !std::isfinite(cur.stats.dres)) {
      return soft_stop(iter, "nonfinite");
    }
    ExitKind kind = check_exit(cur.stats, st.feastol, st.abstol, st.reltol);
    if (kind == ExitKind::Optimal) return finish(SolveStatus::Optimal, cur, iter);
    if (kind == ExitKind::PrimalInfeasible)
      return finish(SolveStatus::PrimalInfeasible, cur, iter);
    if (kind == ExitKind::DualInfeasible)
      return finish(SolveStatus::DualInfeasible, cur, iter);
    if (iter > 0 && cur.stats.pres > st.safeguard * prev_pres) return soft_stop(iter, "safeguard");
    prev_pres = cur.stats.pres;
    if (cur.score < best.score) best = cur;
    if (iter >= st.max_iterations) return soft_stop(iter, "iterlimit");
    // Residuals solved but the gap no longer shrinking: grinding further just
    // wanders along the numerical floor, so stop at the best iterate.
    double progress = std::isfinite(cur.stats.relgap) ? cur.stats.relgap : cur.stats.gap;
    bool feasible_now = std::max(cur.stats.pres, cur.stats.dres) < st.feastol_inacc;
    if (feasible_now && progress < 0.99 * best_progress) {
      best_progress = progress;
      last_progress_iter = iter;
    }
    if (feasible_now && best_progress < std::numeric_limits<double>::infinity() &&
        iter - last_progress_iter >= st.stall_iterations) {
      return soft_stop(iter);
    }

    if (!cone.update_scalings(cur.s, cur.z, w, lambda)) return soft_stop(iter);
    if (!kkt.factor(w)) return soft_stop(iter);

    kkt.solve(w, -c, h, dx1, dz1);
    double dtau_denom = cur.kap / cur.tau - c.dot(dx1) - h.dot(dz1);
    if (dtau_denom == 0.0 || !std::isfinite(dtau_denom)) return soft_stop(iter);

    // Predictor: pure Newton step on the residuals.
    double rt = cur.kap + cur.stats.cx + cur.stats.hz;
    kkt.solve(w, rx, cur.s - rz, dx2, dz2);
    double dtau_aff = (rt - cur.kap + c.dot(dx2) + h.dot(dz2)) / dtau_denom;
    dzaff = dz2 + dtau_aff * dz1;
    cone.apply_w(w, dzaff, w_dzaff);
    dsaff_w = -w_dzaff - lambda;
    double dkap_aff = -cur.kap - (cur.kap / cur.tau) * dtau_aff;
    double step_aff =
        cone.line_search(lambda, dsaff_w, w_dzaff, cur.tau, dtau_aff, cur.kap, dkap_aff);
    double sigma = std::pow(1.0 - std::min(step_aff, 1.0), 3);
    sigma = std::clamp(sigma, st.sigma_min, st.sigma_max);
    double mu = cur.stats.mu;

    // Corrector: recenter and apply the Mehrotra cross term.
    cone.product(lambda, lambda, ds_comb);
    VectorXd cross(m);
    cone.product(dsaff_w, w_dzaff, cross);
    ds_comb += cross;
    cone.subtract_identity(ds_comb, sigma * mu);
    cone.division(lambda, ds_comb, u);
    cone.apply_w(w, u, wu);
    kkt.solve(w, (1.0 - sigma) * rx, -(1.0 - sigma) * rz + wu, dx2, dz2);
    double bkap = cur.kap * cur.tau + dkap_aff * dtau_aff - sigma * mu;
    double dtau =
        ((1.0 - sigma) * rt - bkap / cur.tau + c.dot(dx2) + h.dot(dz2)) / dtau_denom;
    dx = dx2 + dtau * dx1;
    dz = dz2 + dtau * dz1;
    cone.apply_w(w, dz, w_dz);
    ds_w = -(u + w_dz);
    cone.apply_w(w, ds_w, ds);
    double dkap = -(bkap + cur.kap * dtau) / cur.tau;

    double step = cone.line_search(lambda, ds_w, w_dz, cur.tau, dtau, cur.kap, dkap) *
                  st.step_scale;
    step = std::min(step, st.step_max);
    if (step < st.step_min) return soft_stop(iter);

    cur.x += step * dx;
    cur.z += step * dz;
    cur.s += step * ds;
    cur.tau += step * dtau;
    cur.kap += step * dkap;
    if (cur.tau <= 0.0 || cur.kap <= 0.0) return soft_stop(iter + 1);
  }
}

BackendResult SocpIpmBackend::solve(const ConicProgram& program) const {
  StandardForm form = lower_program(program);
  IpmResult ipm = solve_standard_form(form, settings_);
  BackendResult out;
  out.status = ipm.status;
  out.iterations = ipm.iterations;
  out.x = std::move(ipm.x);
  if (!out.x.empty()) {
    out.objective = out.x[program.objective_variable()];
  }
  if (out.status != SolveStatus::Optimal) {
    std::ostringstream os;
    os << "interior point: " << to_string(out.status) << " after " << out.iterations
       << " iterations";
    out.detail = os.str();
  }
  return out;
}

}  // namespace noma::conic
