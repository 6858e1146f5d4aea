#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace deepc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense convex QP:  min 1/2 x'Hx + f'x  s.t.  lower <= Cx <= upper.
/// Equality rows are encoded by lower == upper.
struct QuadraticProgram {
  Mat hessian;
  Vec linear;
  Mat constraints;
  Vec lower;
  Vec upper;

  long vars() const { return hessian.rows(); }
  long rows() const { return constraints.rows(); }

  void validate() const {
    const long n = hessian.rows();
    if (hessian.cols() != n || linear.size() != n)
      throw std::invalid_argument("QuadraticProgram: dimension mismatch between H and f");
    if (constraints.rows() > 0 && constraints.cols() != n)
      throw std::invalid_argument("QuadraticProgram: dimension mismatch between H and C");
    if (lower.size() != constraints.rows() || upper.size() != constraints.rows())
      throw std::invalid_argument("QuadraticProgram: dimension mismatch between C and bounds");
    const double scale = 1.0 + hessian.cwiseAbs().maxCoeff();
    if (n > 0 && (hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw std::invalid_argument("QuadraticProgram: H is not symmetric");
    for (long j = 0; j < lower.size(); ++j)
      if (!(lower(j) <= upper(j)))
        throw std::invalid_argument("QuadraticProgram: lower > upper in constraint row " +
                                    std::to_string(j));
  }
};

enum class SolveStatus { optimal, max_iterations, infeasible_detected };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::infeasible_detected: return "infeasible_detected";
  }
  return "?";
}

/// Reported residuals are relative:
///   primal = ||max(0, lower - Cx, Cx - upper)||_inf / max(1, ||Cx||_inf)
///   dual   = ||Hx + f + C'y||_inf / max(1, ||Hx||_inf, ||f||_inf, ||C'y||_inf)
/// Both are recomputable from (x, multipliers) and the problem data.
struct SolveResult {
  Vec x;
  Vec multipliers;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iterations;
  long iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  bool ridge_applied = false;
};

struct SolverOptions {
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  long max_iterations = 20000;
  double rho = 0.1;
  double equality_rho_scale = 1e3;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool adaptive_rho = true;
  bool scaling = true;
  long check_interval = 10;
  double eps_infeasible = 1e-5;
};

/// ADMM (alternating projections with dual updates) over the two-sided
/// constraint form, with over-relaxation, Ruiz equilibration and periodic
/// residual balancing of the penalty. The factorization is cached, so
/// repeated solves after update_linear/update_bounds reuse it; warm starts
/// carry over between solve calls.
class QpSolver {
 public:
  QpSolver() = default;

  void set_problem(const QuadraticProgram& qp, const SolverOptions& opts = SolverOptions{}) {
    qp.validate();
    opts_ = opts;
    h_ = qp.hessian;
    f_ = qp.linear;
    c_ = qp.constraints;
    lo_ = qp.lower;
    hi_ = qp.upper;
    n_ = h_.rows();
    m_ = c_.rows();

    ridge_applied_ = false;
    h_solve_ = h_;
    if (n_ > 0) {
      Eigen::LDLT<Mat> probe(h_);
      if (probe.info() != Eigen::Success || probe.vectorD().minCoeff() < 1e-10) {
        h_solve_.diagonal().array() += 1e-10;
        ridge_applied_ = true;
      }
    }

    compute_scaling();
    apply_scaling();
    build_rho();
    factorize();
    x_ = Vec::Zero(n_);
    z_ = Vec::Zero(m_);
    y_ = Vec::Zero(m_);
    warm_ = false;
  }

  void update_linear(const Vec& f) {
    if (f.size() != n_) throw std::invalid_argument("QpSolver: linear term dimension mismatch");
    f_ = f;
    fs_ = cost_scale_ * d_.cwiseProduct(f_);
  }

  void update_bounds(const Vec& lo, const Vec& hi) {
    if (lo.size() != m_ || hi.size() != m_)
      throw std::invalid_argument("QpSolver: bounds dimension mismatch");
    for (long j = 0; j < m_; ++j)
      if (!(lo(j) <= hi(j)))
        throw std::invalid_argument("QpSolver: lower > upper in constraint row " +
                                    std::to_string(j));
    bool pattern_changed = false;
    for (long j = 0; j < m_; ++j) {
      const bool eq = lo(j) == hi(j);
      if (eq != equality_row_[static_cast<size_t>(j)]) {
        equality_row_[static_cast<size_t>(j)] = eq;
        pattern_changed = true;
      }
    }
    lo_ = lo;
    hi_ = hi;
    los_ = scale_bound(lo_);
    his_ = scale_bound(hi_);
    if (pattern_changed) {
      build_rho();
      factorize();
    }
  }

  void warm_start(const Vec& x, const Vec& y) {
    if (x.size() != n_ || y.size() != m_)
      throw std::invalid_argument("QpSolver: warm start dimension mismatch");
    x_ = d_.cwiseInverse().cwiseProduct(x);
    y_ = cost_scale_ * e_.cwiseInverse().cwiseProduct(y);
    z_ = (cs_ * x_).cwiseMax(los_).cwiseMin(his_);
    warm_ = true;
  }

  void reset_warm_start() {
    x_.setZero();
    z_.setZero();
    y_.setZero();
    warm_ = false;
  }

  bool ridge_applied() const { return ridge_applied_; }

  SolveResult solve() {
    SolveResult res;
    res.ridge_applied = ridge_applied_;

    // Pure equality problems admit a one-shot KKT solve.
    if (m_ > 0 && std::all_of(equality_row_.begin(), equality_row_.end(),
                              [](bool b) { return b; })) {
      if (solve_equality_direct(res)) return res;
    }

    if (m_ == 0 && !warm_) {
      // Unconstrained: single Newton step on the ridged Hessian.
      x_ = Eigen::LDLT<Mat>(h_solve_).solve(-f_);
      x_ = d_.cwiseInverse().cwiseProduct(x_ * 0 + x_);  // x_ already unscaled here
      x_ = d_.cwiseInverse().cwiseProduct(d_.cwiseProduct(x_));
    }

    Vec y_checkpoint = y_;
    long refactor_budget = 25;
    for (long it = 1; it <= opts_.max_iterations; ++it) {
      // x-update
      Vec rhs = opts_.sigma * x_ - fs_;
      if (m_ > 0) rhs.noalias() += cs_.transpose() * (rho_.cwiseProduct(z_) - y_);
      Vec x_tilde = ldlt_.solve(rhs);
      if (m_ == 0) {
        x_ = opts_.alpha * x_tilde + (1.0 - opts_.alpha) * x_;
      } else {
        Vec cx_tilde = cs_ * x_tilde;
        x_ = opts_.alpha * x_tilde + (1.0 - opts_.alpha) * x_;
        Vec v = opts_.alpha * cx_tilde + (1.0 - opts_.alpha) * z_;
        Vec z_new = (v + rho_.cwiseInverse().cwiseProduct(y_)).cwiseMax(los_).cwiseMin(his_);
        y_ += rho_.cwiseProduct(v - z_new);
        z_ = z_new;
      }

      if (it % opts_.check_interval == 0 || it == opts_.max_iterations) {
        double rp, rd;
        residuals(rp, rd);
        if (rp <= opts_.tol_primal && rd <= opts_.tol_dual) {
          finish(res, SolveStatus::optimal, it, rp, rd);
          return res;
        }
        if (m_ > 0 && infeasibility_certificate(y_ - y_checkpoint)) {
          finish(res, SolveStatus::infeasible_detected, it, rp, rd);
          return res;
        }
        y_checkpoint = y_;
        if (opts_.adaptive_rho && it % (opts_.check_interval * 5) == 0 && refactor_budget > 0 &&
            m_ > 0) {
          const double ratio = std::sqrt((rp + 1e-16) / (rd + 1e-16));
          if (ratio > 5.0 || ratio < 0.2) {
            rho_base_ = std::clamp(rho_base_ * ratio, 1e-6, 1e6);
            build_rho();
            factorize();
            --refactor_budget;
          }
        }
      }
    }
    double rp, rd;
    residuals(rp, rd);
    finish(res, SolveStatus::max_iterations, opts_.max_iterations, rp, rd);
    return res;
  }

 private:
  Vec scale_bound(const Vec& b) const {
    Vec out(m_);
    for (long j = 0; j < m_; ++j)
      out(j) = std::isfinite(b(j)) ? e_(j) * b(j) : b(j);
    return out;
  }

  void compute_scaling() {
    d_ = Vec::Ones(n_);
    e_ = Vec::Ones(m_);
    cost_scale_ = 1.0;
    if (!opts_.scaling || n_ == 0) return;
    Mat hs = h_solve_;
    Mat cs = c_;
    for (int pass = 0; pass < 10; ++pass) {
      Vec dcol(n_);
      for (long i = 0; i < n_; ++i) {
        double nrm = hs.col(i).cwiseAbs().maxCoeff();
        if (m_ > 0) nrm = std::max(nrm, cs.col(i).cwiseAbs().maxCoeff());
        dcol(i) = nrm > 1e-12 ? 1.0 / std::sqrt(nrm) : 1.0;
      }
      hs = dcol.asDiagonal() * hs * dcol.asDiagonal();
      d_ = d_.cwiseProduct(dcol);
      if (m_ > 0) {
        cs = cs * dcol.asDiagonal();
        Vec erow(m_);
        for (long j = 0; j < m_; ++j) {
          const double nrm = cs.row(j).cwiseAbs().maxCoeff();
          erow(j) = nrm > 1e-12 ? 1.0 / std::sqrt(nrm) : 1.0;
        }
        cs = erow.asDiagonal() * cs;
        e_ = e_.cwiseProduct(erow);
      }
      // cost normalization
      double mean_col = 0.0;
      for (long i = 0; i < n_; ++i) mean_col += hs.col(i).cwiseAbs().maxCoeff();
      mean_col /= static_cast<double>(n_);
      const double fnorm = (cost_scale_ * d_.cwiseProduct(f_)).cwiseAbs().maxCoeff();
      const double denom = std::max(1e-12, std::max(mean_col, fnorm));
      const double gamma = denom > 1e-12 ? 1.0 / denom : 1.0;
      hs *= gamma;
      cost_scale_ *= gamma;
    }
  }

  void apply_scaling() {
    hs_ = cost_scale_ * d_.asDiagonal() * h_solve_ * d_.asDiagonal();
    fs_ = cost_scale_ * d_.cwiseProduct(f_);
    if (m_ > 0) {
      cs_ = e_.asDiagonal() * c_ * d_.asDiagonal();
      los_ = scale_bound(lo_);
      his_ = scale_bound(hi_);
    } else {
      cs_.resize(0, n_);
      los_.resize(0);
      his_.resize(0);
    }
    equality_row_.assign(static_cast<size_t>(m_), false);
    for (long j = 0; j < m_; ++j) equality_row_[static_cast<size_t>(j)] = lo_(j) == hi_(j);
  }

  void build_rho() {
    rho_.resize(m_);
    for (long j = 0; j < m_; ++j)
      rho_(j) = equality_row_[static_cast<size_t>(j)] ? rho_base_ * opts_.equality_rho_scale
                                                      : rho_base_;
  }

  void factorize() {
    Mat kkt = hs_;
    kkt.diagonal().array() += opts_.sigma;
    if (m_ > 0) kkt.noalias() += cs_.transpose() * rho_.asDiagonal() * cs_;
    ldlt_.compute(kkt);
    if (ldlt_.info() != Eigen::Success)
      throw std::runtime_error("QpSolver: factorization of the ADMM system failed");
  }

  void unscaled(Vec& x, Vec& y) const {
    x = d_.cwiseProduct(x_);
    y = m_ > 0 ? Vec((e_.cwiseProduct(y_)) / cost_scale_) : Vec(Vec::Zero(0));
  }

  void residuals(double& rp, double& rd) const {
    Vec x, y;
    unscaled(x, y);
    Vec hx = h_.selfadjointView<Eigen::Lower>() * x;
    double dual_scale = std::max({1.0, hx.cwiseAbs().maxCoeff(),
                                  f_.size() ? f_.cwiseAbs().maxCoeff() : 0.0});
    Vec grad = hx + f_;
    if (m_ > 0) {
      Vec cty = c_.transpose() * y;
      dual_scale = std::max(dual_scale, cty.cwiseAbs().maxCoeff());
      grad += cty;
      Vec cx = c_ * x;
      double viol = 0.0;
      for (long j = 0; j < m_; ++j) {
        double v = 0.0;
        if (std::isfinite(lo_(j))) v = std::max(v, lo_(j) - cx(j));
        if (std::isfinite(hi_(j))) v = std::max(v, cx(j) - hi_(j));
        viol = std::max(viol, v);
      }
      rp = viol / std::max(1.0, cx.cwiseAbs().maxCoeff());
    } else {
      rp = 0.0;
    }
    rd = grad.cwiseAbs().maxCoeff() / dual_scale;
  }

  bool infeasibility_certificate(const Vec& dy_scaled) const {
    if (m_ == 0) return false;
    const Vec dy = e_.cwiseProduct(dy_scaled) / cost_scale_;
    const double dy_norm = dy.cwiseAbs().maxCoeff();
    if (dy_norm < 1e-12) return false;
    const double eps = opts_.eps_infeasible * dy_norm;
    if ((c_.transpose() * dy).cwiseAbs().maxCoeff() > eps) return false;
    double support = 0.0;
    for (long j = 0; j < m_; ++j) {
      const double p = std::max(dy(j), 0.0);
      const double q = std::min(dy(j), 0.0);
      if (p > eps && !std::isfinite(hi_(j))) return false;
      if (q < -eps && !std::isfinite(lo_(j))) return false;
      if (std::isfinite(hi_(j))) support += hi_(j) * p;
      if (std::isfinite(lo_(j))) support += lo_(j) * q;
    }
    return support <= -eps;
  }

  bool solve_equality_direct(SolveResult& res) {
    Mat kkt(n_ + m_, n_ + m_);
    kkt.setZero();
    kkt.topLeftCorner(n_, n_) = h_solve_;
    kkt.topRightCorner(n_, m_) = c_.transpose();
    kkt.bottomLeftCorner(m_, n_) = c_;
    Vec rhs(n_ + m_);
    rhs.head(n_) = -f_;
    rhs.tail(m_) = lo_;
    Eigen::PartialPivLU<Mat> lu(kkt);
    Vec sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
    x_ = d_.cwiseInverse().cwiseProduct(sol.head(n_));
    y_ = cost_scale_ * e_.cwiseInverse().cwiseProduct(sol.tail(m_));
    z_ = los_;
    double rp, rd;
    residuals(rp, rd);
    if (rp <= opts_.tol_primal && rd <= opts_.tol_dual) {
      finish(res, SolveStatus::optimal, 1, rp, rd);
      return true;
    }
    return false;
  }

  void finish(SolveResult& res, SolveStatus status, long iterations, double rp, double rd) {
    Vec x, y;
    unscaled(x, y);
    res.x = x;
    res.multipliers = y;
    res.objective = 0.5 * x.dot(h_.selfadjointView<Eigen::Lower>() * x) + f_.dot(x);
    res.status = status;
    res.iterations = iterations;
    res.primal_residual = rp;
    res.dual_residual = rd;
    warm_ = true;
  }

  SolverOptions opts_;
  long n_ = 0, m_ = 0;
  Mat h_, h_solve_, c_;
  Vec f_, lo_, hi_;
  Mat hs_, cs_;
  Vec fs_, los_, his_;
  Vec d_, e_;
  double cost_scale_ = 1.0;
  double rho_base_ = 0.1;
  Vec rho_;
  std::vector<bool> equality_row_;
  Eigen::LDLT<Mat> ldlt_;
  Vec x_, z_, y_;
  bool warm_ = false;
  bool ridge_applied_ = false;
};

inline SolveResult solve(const QuadraticProgram& qp, const SolverOptions& opts = SolverOptions{}) {
  QpSolver solver;
  solver.set_problem(qp, opts);
  return solver.solve();
}

}  // namespace deepc
