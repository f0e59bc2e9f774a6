#pragma once

#include <cstddef>
#include <vector>

#include "opfsens/linalg.hpp"

namespace opfsens {

/// min c^T x  s.t.  A x = b,  lower <= x <= upper  (bounds may be infinite).
struct BoundedLp {
  DenseMatrix a;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> lower;
  std::vector<double> upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, SingularBasis };

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::size_t max_iterations = 0;  // 0 selects a size-based limit
};

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  std::vector<double> x;
  /// Row multipliers pi with reduced costs d = c - A^T pi.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  std::vector<bool> basic;
  double objective = 0.0;
  std::size_t iterations = 0;
  /// Smallest distance of a basic, bounded structural variable to its nearest
  /// bound (infinity when none); zero signals a degenerate basis.
  double min_basic_bound_gap = 0.0;
  /// Smallest |d_j| over nonbasic structural variables with distinct bounds.
  double min_nonbasic_reduced_cost = 0.0;
};

/// Two-phase primal simplex with bounded variables and Bland's rule.
///
/// The basis is refactored from scratch every iteration, which keeps the
/// method deterministic and is affordable at the problem sizes targeted here.
LpResult solve_bounded_lp(const BoundedLp& lp, const SimplexOptions& options = {});

}  // namespace opfsens
