#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opfsens/binding_set.hpp"
#include "opfsens/linalg.hpp"
#include "opfsens/network.hpp"

namespace opfsens {

enum class RowKind {
  SlackUpper,
  SlackLower,
  BalanceUpper,
  BalanceLower,
  GenUpper,
  GenLower,
  FlowUpper,
  FlowLower,
};

struct RowTag {
  RowKind kind;
  std::size_t index;  // vertex, generator or edge; 0 for the slack rows
};

/// min c^T x s.t. A x <= b over x = [s^g; theta], with every equality written
/// as an opposite-sign pair of rows.
///
/// Row blocks: slack pair (+-e1), balance pairs ([-W L], [W -L]) against
/// y = [0; -s^l], generation bounds (I, -I) and flow bounds (BC^T, -BC^T).
struct StandardFormLp {
  DenseMatrix a;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<RowTag> row_tags;
};

/// Throws DimensionMismatch (including a network without loads).
StandardFormLp standard_form(const Network& net, const OpfParams& params,
                             const LoadVector& load);

struct SolveOptions {
  double binding_tol = 1e-7;
  double solver_tol = 1e-9;
};

struct OpfSolution {
  std::vector<double> gen;
  std::vector<double> theta;
  std::vector<double> flows;
  double objective = 0.0;
  /// tau: balance multipliers for vertices 1..N, then the slack multiplier.
  std::vector<double> dual_eq;
  std::vector<double> dual_gen_upper;
  std::vector<double> dual_gen_lower;
  std::vector<double> dual_flow_upper;
  std::vector<double> dual_flow_lower;
  double binding_tol = 1e-7;
  double min_basic_bound_gap = 0.0;
  double min_nonbasic_reduced_cost = 0.0;
  std::size_t iterations = 0;
};

/// Two-phase bounded simplex with Bland's rule; deterministic.
/// Throws Infeasible, Unbounded or NumericalFailure.
OpfSolution solve_opf(const Network& net, const OpfParams& params, const LoadVector& load,
                      const SolveOptions& options = {});

struct KktReport {
  double stationarity_theta = 0.0;  // ||M^T tau + CB(mu+ - mu-)||_inf
  double stationarity_gen = 0.0;    // ||f - tau_G + lambda+ - lambda-||_inf
  double primal_equality = 0.0;     // slack angle and nodal balance
  double primal_bounds = 0.0;       // worst bound violation
  double dual_sign = 0.0;           // most negative multiplier, as a magnitude
  double complementarity = 0.0;     // largest |multiplier * slack|

  double max() const;
};

KktReport kkt_residuals(const OpfSolution& sol, const Network& net, const OpfParams& params,
                        const LoadVector& load);

/// Generators and branches within `tol` of a limit. Throws DegeneratePoint
/// when the count differs from N_G - 1 and DependentBindings when the
/// constraint stack is singular.
BindingSet extract_binding_set(const OpfSolution& sol, const Network& net,
                               const OpfParams& params, std::optional<double> tol = {});

/// Binding set without the count or independence validation.
BindingSet active_limits(const OpfSolution& sol, const Network& net, const OpfParams& params,
                         double tol);

struct RegularityReport {
  std::size_t nonzero_inequality_duals = 0;
  std::size_t nonzero_equality_duals = 0;
  bool enough_duals = false;  // inequality count >= N_G - 1
  bool unique = false;
};

RegularityReport check_regularity(const OpfSolution& sol, double tol = 1e-9);

struct RegularizedSolve {
  OpfSolution solution;
  OpfParams params;  // the parameters actually solved (cost possibly perturbed)
  bool perturbed = false;
  std::optional<std::string> warning;
};

/// Solves, and when the optimum is not unique re-solves once with f perturbed
/// by uniform noise in [0, 1e-6 * max(||f||_inf, 1)].
RegularizedSolve solve_opf_regularized(const Network& net, const OpfParams& params,
                                       const LoadVector& load, const SolveOptions& options = {},
                                       std::uint64_t seed = 1);

}  // namespace opfsens
