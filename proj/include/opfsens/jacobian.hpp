#pragma once

#include <optional>

#include "opfsens/binding_set.hpp"
#include "opfsens/dcopf.hpp"
#include "opfsens/linalg.hpp"
#include "opfsens/network.hpp"

namespace opfsens {

struct JacobianResult {
  DenseMatrix j;        // N_G x N_L, d s^g_i / d s^l_j
  DenseMatrix z_stack;  // N x N
  DenseMatrix psi;      // N_G x N
};

/// Row stack [load rows of L; S_G rows of L; S_B rows of BC^T; e1^T].
/// Throws CardinalityViolation (size != N_G - 1 or repeated members) and
/// InvalidIndex.
DenseMatrix build_z_stack(const Network& net, const BindingSet& set);

/// psi = L_G * inv(Z) and J = -psi restricted to its first N_L columns.
/// Throws DependentBindings when Z is singular at `rank_tol` or its
/// reciprocal condition estimate is below 1e-12.
JacobianResult jacobian_from_binding(const Network& net, const BindingSet& set,
                                     double rank_tol = kDefaultRankTolerance);

/// Same as jacobian_from_binding but reports a dependent set as nullopt.
/// The set must already have the right size.
std::optional<JacobianResult> try_jacobian_from_binding(
    const Network& net, const BindingSet& set, double rank_tol = kDefaultRankTolerance);

/// Central differences of the OPF operator. Throws RegionBoundary when the
/// binding set is not constant over the stencil or a perturbed load turns
/// negative.
DenseMatrix jacobian_finite_diff(const Network& net, const OpfParams& params,
                                 const LoadVector& load, double step = 1e-4,
                                 const SolveOptions& options = {});

/// True iff the Z stack is invertible at `rank_tol`. The equality rows are
/// always part of the stack, so this matches the row-rank test on the
/// standard-form rows.
bool independence_check(const Network& net, const BindingSet& set,
                        double rank_tol = kDefaultRankTolerance);

}  // namespace opfsens
