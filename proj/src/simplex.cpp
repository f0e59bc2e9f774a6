#include "opfsens/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opfsens/error.hpp"

namespace opfsens {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { Basic, AtLower, AtUpper, FreeZero };

class Simplex {
 public:
  Simplex(const BoundedLp& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    m_ = lp.a.rows();
    n_ = lp.a.cols();
    if (lp.b.size() != m_ || lp.c.size() != n_ || lp.lower.size() != n_ ||
        lp.upper.size() != n_) {
      throw Error(ErrorKind::DimensionMismatch, "LP data sizes are inconsistent");
    }
    total_ = n_ + m_;
    lo_.assign(total_, 0.0);
    up_.assign(total_, kInf);
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::AtLower);
    art_sign_.assign(m_, 1.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.lower[j];
      up_[j] = lp.upper[j];
      if (lo_[j] > up_[j]) throw Error(ErrorKind::InvalidLimits, "LP bound inverted");
    }
    max_iter_ = opt.max_iterations ? opt.max_iterations : 5000 + 200 * (m_ + n_);
  }

  LpResult run() {
    LpResult res;
    // Nonbasic structurals start at a finite bound (or zero when free).
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
        state_[j] = VarState::AtLower;
      } else if (std::isfinite(up_[j])) {
        x_[j] = up_[j];
        state_[j] = VarState::AtUpper;
      } else {
        x_[j] = 0.0;
        state_[j] = VarState::FreeZero;
      }
    }
    std::vector<double> r = lp_.b;
    for (std::size_t j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) r[i] -= lp_.a(i, j) * x_[j];
    }
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
      x_[n_ + i] = std::abs(r[i]);
      state_[n_ + i] = VarState::Basic;
      basis_[i] = n_ + i;
    }

    std::vector<double> phase1(total_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = 1.0;
    LpStatus st = iterate(phase1, res.iterations);
    if (st != LpStatus::Optimal) return finish(res, st);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeas += x_[n_ + i];
    if (infeas > opt_.feasibility_tol * (1.0 + norm_inf(lp_.b)) * static_cast<double>(m_ + 1)) {
      return finish(res, LpStatus::Infeasible);
    }

    drive_out_artificials();
    for (std::size_t i = 0; i < m_; ++i) {
      up_[n_ + i] = 0.0;
      if (state_[n_ + i] != VarState::Basic) {
        x_[n_ + i] = 0.0;
        state_[n_ + i] = VarState::AtLower;
      }
    }

    std::vector<double> phase2(total_, 0.0);
    std::copy(lp_.c.begin(), lp_.c.end(), phase2.begin());
    st = iterate(phase2, res.iterations);
    if (st != LpStatus::Optimal) return finish(res, st);

    // Final duals and diagnostics from the optimal basis.
    refactor_and_update_primal();
    std::vector<double> cb(m_);
    for (std::size_t i = 0; i < m_; ++i) cb[i] = phase2[basis_[i]];
    res.row_duals = lu_.solve_transpose(cb);
    res.reduced_costs.assign(n_, 0.0);
    res.basic.assign(n_, false);
    res.min_basic_bound_gap = kInf;
    res.min_nonbasic_reduced_cost = kInf;
    for (std::size_t j = 0; j < n_; ++j) {
      res.basic[j] = state_[j] == VarState::Basic;
      if (res.basic[j]) {
        const double gap = std::min(x_[j] - lo_[j], up_[j] - x_[j]);
        res.min_basic_bound_gap = std::min(res.min_basic_bound_gap, gap);
        continue;
      }
      res.reduced_costs[j] = reduced_cost(phase2, j, res.row_duals);
      if (lo_[j] != up_[j]) {
        res.min_nonbasic_reduced_cost =
            std::min(res.min_nonbasic_reduced_cost, std::abs(res.reduced_costs[j]));
      }
    }
    return finish(res, LpStatus::Optimal);
  }

 private:
  double column_entry(std::size_t j, std::size_t i) const {
    if (j < n_) return lp_.a(i, j);
    return j - n_ == i ? art_sign_[i] : 0.0;
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> col(m_, 0.0);
    if (j < n_) {
      for (std::size_t i = 0; i < m_; ++i) col[i] = lp_.a(i, j);
    } else {
      col[j - n_] = art_sign_[j - n_];
    }
    return col;
  }

  double reduced_cost(const std::vector<double>& cost, std::size_t j,
                      const std::vector<double>& pi) const {
    double d = cost[j];
    if (j < n_) {
      for (std::size_t i = 0; i < m_; ++i) d -= lp_.a(i, j) * pi[i];
    } else {
      d -= art_sign_[j - n_] * pi[j - n_];
    }
    return d;
  }

  bool refactor_and_update_primal() {
    basis_matrix_.assign(m_, m_);
    for (std::size_t k = 0; k < m_; ++k)
      for (std::size_t i = 0; i < m_; ++i) basis_matrix_(i, k) = column_entry(basis_[k], i);
    lu_.factor(basis_matrix_);
    if (m_ > 0 && !(lu_.min_abs_pivot() > 1e-13 * std::max(1.0, lu_.max_abs_pivot()))) {
      return false;
    }
    std::vector<double> rhs = lp_.b;
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) rhs[i] -= column_entry(j, i) * x_[j];
    }
    const auto xb = lu_.solve(rhs);
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    return true;
  }

  LpStatus iterate(const std::vector<double>& cost, std::size_t& iterations) {
    const double dual_tol =
        opt_.optimality_tol * std::max(1.0, norm_inf(std::span<const double>(cost)));
    while (true) {
      if (iterations >= max_iter_) return LpStatus::IterationLimit;
      if (!refactor_and_update_primal()) return LpStatus::SingularBasis;
      std::vector<double> cb(m_);
      for (std::size_t i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
      const auto pi = lu_.solve_transpose(cb);

      // Bland: first eligible index enters.
      std::size_t entering = total_;
      double direction = 0.0;
      for (std::size_t j = 0; j < total_; ++j) {
        const VarState s = state_[j];
        if (s == VarState::Basic || lo_[j] == up_[j]) continue;
        const double d = reduced_cost(cost, j, pi);
        if (s == VarState::AtLower && d < -dual_tol) {
          direction = 1.0;
        } else if (s == VarState::AtUpper && d > dual_tol) {
          direction = -1.0;
        } else if (s == VarState::FreeZero && std::abs(d) > dual_tol) {
          direction = d < 0.0 ? 1.0 : -1.0;
        } else {
          continue;
        }
        entering = j;
        break;
      }
      if (entering == total_) return LpStatus::Optimal;
      ++iterations;

      const auto alpha = lu_.solve(column(entering));
      double step = kInf;
      bool flip = false;
      std::size_t leave_pos = m_;
      bool leave_to_lower = true;
      if (std::isfinite(lo_[entering]) && std::isfinite(up_[entering])) {
        step = up_[entering] - lo_[entering];
        flip = true;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t var = basis_[i];
        const double a = alpha[i] * direction;
        double t;
        bool to_lower;
        if (a > opt_.pivot_tol && std::isfinite(lo_[var])) {
          t = std::max(0.0, (x_[var] - lo_[var]) / a);
          to_lower = true;
        } else if (a < -opt_.pivot_tol && std::isfinite(up_[var])) {
          t = std::max(0.0, (up_[var] - x_[var]) / -a);
          to_lower = false;
        } else {
          continue;
        }
        const bool better = t < step - 1e-12 ||
                            (!flip && leave_pos < m_ && t <= step + 1e-12 && var < basis_[leave_pos]);
        if (better || (step == kInf)) {
          step = t;
          flip = false;
          leave_pos = i;
          leave_to_lower = to_lower;
        }
      }
      if (step == kInf) return LpStatus::Unbounded;

      if (flip) {
        state_[entering] = direction > 0 ? VarState::AtUpper : VarState::AtLower;
        x_[entering] = direction > 0 ? up_[entering] : lo_[entering];
        continue;
      }
      const std::size_t leaving = basis_[leave_pos];
      state_[leaving] = leave_to_lower ? VarState::AtLower : VarState::AtUpper;
      x_[leaving] = leave_to_lower ? lo_[leaving] : up_[leaving];
      basis_[leave_pos] = entering;
      state_[entering] = VarState::Basic;
    }
  }

  // Replace basic artificials (all at zero after a feasible phase 1) by
  // structural columns wherever the row admits one; rows that do not are
  // redundant and keep their artificial fixed at zero.
  void drive_out_artificials() {
    if (!refactor_and_update_primal()) return;
    for (std::size_t pos = 0; pos < m_; ++pos) {
      if (basis_[pos] < n_) continue;
      std::vector<double> unit(m_, 0.0);
      unit[pos] = 1.0;
      const auto rho = lu_.solve_transpose(unit);
      std::size_t best = total_;
      double best_mag = 1e-7;
      for (std::size_t j = 0; j < n_; ++j) {
        if (state_[j] == VarState::Basic) continue;
        double a = 0.0;
        for (std::size_t i = 0; i < m_; ++i) a += rho[i] * lp_.a(i, j);
        if (std::abs(a) > best_mag) {
          best_mag = std::abs(a);
          best = j;
        }
      }
      if (best == total_) continue;
      const std::size_t art = basis_[pos];
      state_[art] = VarState::AtLower;
      x_[art] = 0.0;
      basis_[pos] = best;
      state_[best] = VarState::Basic;
      if (!refactor_and_update_primal()) return;
    }
  }

  LpResult& finish(LpResult& res, LpStatus st) {
    res.status = st;
    res.x.assign(x_.begin(), x_.begin() + static_cast<long>(n_));
    res.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) res.objective += lp_.c[j] * res.x[j];
    return res;
  }

  const BoundedLp& lp_;
  SimplexOptions opt_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t total_ = 0;
  std::size_t max_iter_ = 0;
  std::vector<double> lo_, up_, x_, art_sign_;
  std::vector<VarState> state_;
  std::vector<std::size_t> basis_;
  DenseMatrix basis_matrix_;
  LuFactorization lu_;
};

}  // namespace

LpResult solve_bounded_lp(const BoundedLp& lp, const SimplexOptions& options) {
  Simplex simplex(lp, options);
  return simplex.run();
}

}  // namespace opfsens
