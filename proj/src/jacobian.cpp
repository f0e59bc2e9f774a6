#include "opfsens/jacobian.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/core.h>

#include "opfsens/error.hpp"

namespace opfsens {

namespace {

constexpr double kMinReciprocalCondition = 1e-12;

void check_members(const Network& net, const BindingSet& set) {
  std::unordered_set<std::size_t> seen;
  for (auto g : set.gens) {
    if (g >= net.n_gen()) throw Error(ErrorKind::InvalidIndex, fmt::format("no generator {}", g));
    if (!seen.insert(g).second)
      throw Error(ErrorKind::CardinalityViolation, "generator listed twice in binding set");
  }
  seen.clear();
  for (auto e : set.branches) {
    if (e >= net.n_branch()) throw Error(ErrorKind::InvalidIndex, fmt::format("no branch {}", e));
    if (!seen.insert(e).second)
      throw Error(ErrorKind::CardinalityViolation, "branch listed twice in binding set");
  }
}

// Stack rows for any set size; square exactly when |set| = N_G - 1.
DenseMatrix stack_rows(const Network& net, const BindingSet& set) {
  const std::size_t n = net.n_bus();
  const std::size_t ng = net.n_gen();
  const DenseMatrix& lap = net.laplacian();
  const DenseMatrix& flow = net.flow_map();
  DenseMatrix z(net.n_load() + set.size() + 1, n);
  std::size_t r = 0;
  auto copy_row = [&](std::span<const double> src) {
    std::copy(src.begin(), src.end(), z.row(r++).begin());
  };
  for (std::size_t j = 0; j < net.n_load(); ++j) copy_row(lap.row(ng + j));
  for (auto g : set.gens) copy_row(lap.row(g));
  for (auto e : set.branches) copy_row(flow.row(e));
  z(r, 0) = 1.0;
  return z;
}

}  // namespace

DenseMatrix build_z_stack(const Network& net, const BindingSet& set) {
  check_members(net, set);
  if (set.size() + 1 != net.n_gen()) {
    throw Error(ErrorKind::CardinalityViolation,
                fmt::format("binding set has {} members, expected {}", set.size(),
                            net.n_gen() - 1));
  }
  return stack_rows(net, set);
}

std::optional<JacobianResult> try_jacobian_from_binding(const Network& net,
                                                       const BindingSet& set,
                                                       double rank_tol) {
  JacobianResult out;
  out.z_stack = build_z_stack(net, set);
  const LuFactorization lu(out.z_stack);
  if (!lu.full_rank(rank_tol)) return std::nullopt;
  const DenseMatrix zinv = lu.inverse();
  const double rcond = 1.0 / (out.z_stack.norm_one() * zinv.norm_one());
  if (!(rcond >= kMinReciprocalCondition)) return std::nullopt;
  const std::size_t ng = net.n_gen();
  std::vector<std::size_t> gen_rows(ng);
  for (std::size_t g = 0; g < ng; ++g) gen_rows[g] = g;
  out.psi = net.laplacian().select_rows(gen_rows) * zinv;
  out.j = -1.0 * out.psi.block(0, 0, ng, net.n_load());
  return out;
}

JacobianResult jacobian_from_binding(const Network& net, const BindingSet& set,
                                     double rank_tol) {
  auto out = try_jacobian_from_binding(net, set, rank_tol);
  if (!out) {
    throw Error(ErrorKind::DependentBindings,
                fmt::format("constraint stack for {} is singular", describe(set, net)));
  }
  return std::move(*out);
}

bool independence_check(const Network& net, const BindingSet& set, double rank_tol) {
  check_members(net, set);
  const DenseMatrix z = stack_rows(net, set);
  if (z.rows() > z.cols()) return false;
  if (z.rows() == z.cols()) return try_jacobian_from_binding(net, set, rank_tol).has_value();
  return numerical_rank(z, rank_tol) == z.rows();
}

DenseMatrix jacobian_finite_diff(const Network& net, const OpfParams& params,
                                 const LoadVector& load, double step,
                                 const SolveOptions& options) {
  const OpfSolution base = solve_opf(net, params, load, options);
  const BindingSet set = extract_binding_set(base, net, params);
  const std::size_t ng = net.n_gen();
  DenseMatrix jac(ng, net.n_load());

  auto solve_at = [&](std::size_t j, double delta) {
    LoadVector shifted = load;
    shifted.values[j] += delta;
    if (shifted.values[j] < 0.0) {
      throw Error(ErrorKind::RegionBoundary,
                  fmt::format("stencil drives load {} negative", net.label(net.load_vertex(j))));
    }
    OpfSolution sol;
    try {
      sol = solve_opf(net, params, shifted, options);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::Infeasible) throw;
      throw Error(ErrorKind::RegionBoundary,
                  fmt::format("stencil leaves the feasible load set at load {}",
                              net.label(net.load_vertex(j))));
    }
    if (active_limits(sol, net, params, options.binding_tol) != set) {
      throw Error(ErrorKind::RegionBoundary,
                  fmt::format("binding set changes when load {} moves by {:+g}",
                              net.label(net.load_vertex(j)), delta));
    }
    return sol.gen;
  };

  for (std::size_t j = 0; j < net.n_load(); ++j) {
    const auto up = solve_at(j, step);
    const auto down = solve_at(j, -step);
    for (std::size_t g = 0; g < ng; ++g) jac(g, j) = (up[g] - down[g]) / (2.0 * step);
  }
  return jac;
}

}  // namespace opfsens
