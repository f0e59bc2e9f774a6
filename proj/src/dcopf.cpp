#include "opfsens/dcopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/core.h>

#include "opfsens/error.hpp"
#include "opfsens/jacobian.hpp"
#include "opfsens/simplex.hpp"

namespace opfsens {

std::string describe(const BindingSet& set, const Network& net) {
  std::string out = "{";
  bool first = true;
  for (auto g : set.gens) {
    out += (first ? "" : ", ") + net.label(g);
    first = false;
  }
  for (auto e : set.branches) {
    out += (first ? "" : ", ") + net.branch_label(e);
    first = false;
  }
  return out + "}";
}

namespace {

void check_inputs(const Network& net, const OpfParams& params, const LoadVector& load) {
  if (net.n_load() == 0) throw Error(ErrorKind::DimensionMismatch, "network has no loads");
  params.validate(net);
  load.validate(net);
}

}  // namespace

StandardFormLp standard_form(const Network& net, const OpfParams& params,
                             const LoadVector& load) {
  check_inputs(net, params, load);
  const std::size_t ng = net.n_gen();
  const std::size_t n = net.n_bus();
  const std::size_t e = net.n_branch();
  const std::size_t rows = 2 + 2 * n + 2 * ng + 2 * e;
  const std::size_t cols = ng + n;
  const DenseMatrix& lap = net.laplacian();
  const DenseMatrix& flow = net.flow_map();

  StandardFormLp sf;
  sf.a.assign(rows, cols);
  sf.b.assign(rows, 0.0);
  sf.c.assign(cols, 0.0);
  std::copy(params.cost.begin(), params.cost.end(), sf.c.begin());
  sf.row_tags.reserve(rows);

  std::vector<double> y(n, 0.0);
  for (std::size_t j = 0; j < net.n_load(); ++j) y[ng + j] = -load.values[j];

  std::size_t r = 0;
  sf.a(r, ng) = 1.0;
  sf.row_tags.push_back({RowKind::SlackUpper, 0});
  ++r;
  sf.a(r, ng) = -1.0;
  sf.row_tags.push_back({RowKind::SlackLower, 0});
  ++r;
  for (int sign : {1, -1}) {
    for (std::size_t v = 0; v < n; ++v, ++r) {
      if (v < ng) sf.a(r, v) = -sign;
      for (std::size_t k = 0; k < n; ++k) sf.a(r, ng + k) = sign * lap(v, k);
      sf.b[r] = sign * y[v];
      sf.row_tags.push_back({sign > 0 ? RowKind::BalanceUpper : RowKind::BalanceLower, v});
    }
  }
  for (int sign : {1, -1}) {
    for (std::size_t g = 0; g < ng; ++g, ++r) {
      sf.a(r, g) = sign;
      sf.b[r] = sign > 0 ? params.gen_upper[g] : -params.gen_lower[g];
      sf.row_tags.push_back({sign > 0 ? RowKind::GenUpper : RowKind::GenLower, g});
    }
  }
  for (int sign : {1, -1}) {
    for (std::size_t k = 0; k < e; ++k, ++r) {
      for (std::size_t v = 0; v < n; ++v) sf.a(r, ng + v) = sign * flow(k, v);
      sf.b[r] = sign > 0 ? params.flow_upper[k] : -params.flow_lower[k];
      sf.row_tags.push_back({sign > 0 ? RowKind::FlowUpper : RowKind::FlowLower, k});
    }
  }
  return sf;
}

OpfSolution solve_opf(const Network& net, const OpfParams& params, const LoadVector& load,
                      const SolveOptions& options) {
  check_inputs(net, params, load);
  const std::size_t ng = net.n_gen();
  const std::size_t n = net.n_bus();
  const std::size_t e = net.n_branch();
  const DenseMatrix& lap = net.laplacian();
  const DenseMatrix& flow = net.flow_map();
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Variables [s^g, theta, r]; rows: theta_1 = 0, L theta - W s^g = y,
  // BC^T theta - r = 0 with r carrying the flow limits.
  BoundedLp lp;
  const std::size_t m = 1 + n + e;
  const std::size_t cols = ng + n + e;
  lp.a.assign(m, cols);
  lp.b.assign(m, 0.0);
  lp.c.assign(cols, 0.0);
  lp.lower.assign(cols, -inf);
  lp.upper.assign(cols, inf);
  lp.a(0, ng) = 1.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (v < ng) lp.a(1 + v, v) = -1.0;
    for (std::size_t k = 0; k < n; ++k) lp.a(1 + v, ng + k) = lap(v, k);
    if (v >= ng) lp.b[1 + v] = -load.values[v - ng];
  }
  for (std::size_t k = 0; k < e; ++k) {
    for (std::size_t v = 0; v < n; ++v) lp.a(1 + n + k, ng + v) = flow(k, v);
    lp.a(1 + n + k, ng + n + k) = -1.0;
    lp.lower[ng + n + k] = params.flow_lower[k];
    lp.upper[ng + n + k] = params.flow_upper[k];
  }
  for (std::size_t g = 0; g < ng; ++g) {
    lp.c[g] = params.cost[g];
    lp.lower[g] = params.gen_lower[g];
    lp.upper[g] = params.gen_upper[g];
  }

  SimplexOptions sopt;
  sopt.feasibility_tol = options.solver_tol;
  sopt.optimality_tol = options.solver_tol;
  const LpResult res = solve_bounded_lp(lp, sopt);
  switch (res.status) {
    case LpStatus::Optimal:
      break;
    case LpStatus::Infeasible:
      throw Error(ErrorKind::Infeasible, "no dispatch satisfies the demand and limits");
    case LpStatus::Unbounded:
      throw Error(ErrorKind::Unbounded, "objective is unbounded below");
    case LpStatus::IterationLimit:
      throw Error(ErrorKind::NumericalFailure, "simplex iteration limit reached");
    case LpStatus::SingularBasis:
      throw Error(ErrorKind::NumericalFailure, "simplex basis became singular");
  }

  OpfSolution sol;
  sol.binding_tol = options.binding_tol;
  sol.iterations = res.iterations;
  sol.min_basic_bound_gap = res.min_basic_bound_gap;
  sol.min_nonbasic_reduced_cost = res.min_nonbasic_reduced_cost;
  sol.gen.assign(res.x.begin(), res.x.begin() + static_cast<long>(ng));
  sol.theta.assign(res.x.begin() + static_cast<long>(ng),
                   res.x.begin() + static_cast<long>(ng + n));
  sol.flows = multiply(flow, sol.theta);
  sol.objective = 0.0;
  for (std::size_t g = 0; g < ng; ++g) sol.objective += params.cost[g] * sol.gen[g];

  sol.dual_eq.assign(n + 1, 0.0);
  for (std::size_t v = 0; v < n; ++v) sol.dual_eq[v] = -res.row_duals[1 + v];
  sol.dual_eq[n] = -res.row_duals[0];
  sol.dual_gen_upper.resize(ng);
  sol.dual_gen_lower.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    const double d = res.reduced_costs[g];
    sol.dual_gen_upper[g] = std::max(0.0, -d);
    sol.dual_gen_lower[g] = std::max(0.0, d);
  }
  sol.dual_flow_upper.resize(e);
  sol.dual_flow_lower.resize(e);
  for (std::size_t k = 0; k < e; ++k) {
    const double d = res.reduced_costs[ng + n + k];
    sol.dual_flow_upper[k] = std::max(0.0, -d);
    sol.dual_flow_lower[k] = std::max(0.0, d);
  }
  return sol;
}

double KktReport::max() const {
  return std::max({stationarity_theta, stationarity_gen, primal_equality, primal_bounds,
                   dual_sign, complementarity});
}

KktReport kkt_residuals(const OpfSolution& sol, const Network& net, const OpfParams& params,
                        const LoadVector& load) {
  const std::size_t ng = net.n_gen();
  const std::size_t n = net.n_bus();
  const std::size_t e = net.n_branch();
  const DenseMatrix& lap = net.laplacian();
  const DenseMatrix& inc = net.incidence();
  KktReport rep;

  std::vector<double> mu(e);
  for (std::size_t k = 0; k < e; ++k) mu[k] = sol.dual_flow_upper[k] - sol.dual_flow_lower[k];
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0.0;
    for (std::size_t w = 0; w < n; ++w) s += lap(w, v) * sol.dual_eq[w];
    if (v == 0) s += sol.dual_eq[n];
    for (std::size_t k = 0; k < e; ++k) s += inc(v, k) * net.edge(k).susceptance * mu[k];
    rep.stationarity_theta = std::max(rep.stationarity_theta, std::abs(s));
  }
  for (std::size_t g = 0; g < ng; ++g) {
    const double s =
        params.cost[g] - sol.dual_eq[g] + sol.dual_gen_upper[g] - sol.dual_gen_lower[g];
    rep.stationarity_gen = std::max(rep.stationarity_gen, std::abs(s));
  }

  rep.primal_equality = std::abs(sol.theta[0]);
  const auto injection = multiply(lap, sol.theta);
  for (std::size_t v = 0; v < n; ++v) {
    const double target = v < ng ? sol.gen[v] : -load.values[v - ng];
    rep.primal_equality = std::max(rep.primal_equality, std::abs(injection[v] - target));
  }

  auto bound = [&](double lo, double x, double hi) {
    rep.primal_bounds = std::max({rep.primal_bounds, lo - x, x - hi});
  };
  auto sign = [&](double m) { rep.dual_sign = std::max(rep.dual_sign, -m); };
  auto comp = [&](double m, double slack) {
    rep.complementarity = std::max(rep.complementarity, std::abs(m * slack));
  };
  for (std::size_t g = 0; g < ng; ++g) {
    bound(params.gen_lower[g], sol.gen[g], params.gen_upper[g]);
    sign(sol.dual_gen_upper[g]);
    sign(sol.dual_gen_lower[g]);
    comp(sol.dual_gen_upper[g], sol.gen[g] - params.gen_upper[g]);
    comp(sol.dual_gen_lower[g], params.gen_lower[g] - sol.gen[g]);
  }
  for (std::size_t k = 0; k < e; ++k) {
    bound(params.flow_lower[k], sol.flows[k], params.flow_upper[k]);
    sign(sol.dual_flow_upper[k]);
    sign(sol.dual_flow_lower[k]);
    comp(sol.dual_flow_upper[k], sol.flows[k] - params.flow_upper[k]);
    comp(sol.dual_flow_lower[k], params.flow_lower[k] - sol.flows[k]);
  }
  return rep;
}

BindingSet active_limits(const OpfSolution& sol, const Network& net, const OpfParams& params,
                         double tol) {
  BindingSet set;
  for (std::size_t g = 0; g < net.n_gen(); ++g) {
    if (params.gen_upper[g] - sol.gen[g] <= tol || sol.gen[g] - params.gen_lower[g] <= tol)
      set.gens.push_back(g);
  }
  for (std::size_t k = 0; k < net.n_branch(); ++k) {
    if (params.flow_upper[k] - sol.flows[k] <= tol ||
        sol.flows[k] - params.flow_lower[k] <= tol)
      set.branches.push_back(k);
  }
  return set;
}

BindingSet extract_binding_set(const OpfSolution& sol, const Network& net,
                               const OpfParams& params, std::optional<double> tol) {
  BindingSet set = active_limits(sol, net, params, tol.value_or(sol.binding_tol));
  const std::size_t want = net.n_gen() - 1;
  if (set.size() != want) {
    throw Error(ErrorKind::DegeneratePoint,
                fmt::format("{} binding limits {} where {} are required", set.size(),
                            describe(set, net), want));
  }
  if (!independence_check(net, set)) {
    throw Error(ErrorKind::DependentBindings,
                fmt::format("binding limits {} are linearly dependent", describe(set, net)));
  }
  return set;
}

RegularityReport check_regularity(const OpfSolution& sol, double tol) {
  RegularityReport rep;
  for (const auto* v : {&sol.dual_gen_upper, &sol.dual_gen_lower, &sol.dual_flow_upper,
                        &sol.dual_flow_lower}) {
    for (double d : *v)
      if (std::abs(d) > tol) ++rep.nonzero_inequality_duals;
  }
  for (double d : sol.dual_eq)
    if (std::abs(d) > tol) ++rep.nonzero_equality_duals;
  const std::size_t ng = sol.gen.size();
  rep.enough_duals = rep.nonzero_inequality_duals + 1 >= ng;
  rep.unique = sol.min_basic_bound_gap > tol && sol.min_nonbasic_reduced_cost > tol;
  return rep;
}

RegularizedSolve solve_opf_regularized(const Network& net, const OpfParams& params,
                                       const LoadVector& load, const SolveOptions& options,
                                       std::uint64_t seed) {
  RegularizedSolve out{solve_opf(net, params, load, options), params, false, std::nullopt};
  if (check_regularity(out.solution, options.solver_tol).unique) return out;

  const double scale = 1e-6 * std::max(norm_inf(params.cost), 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, scale);
  for (double& f : out.params.cost) f += noise(rng);
  out.solution = solve_opf(net, out.params, load, options);
  out.perturbed = true;
  out.warning = fmt::format(
      "optimum not unique; cost vector perturbed by uniform noise up to {:.3g} and re-solved",
      scale);
  return out;
}

}  // namespace opfsens
