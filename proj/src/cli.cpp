#include "opfsens/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "opfsens/chain.hpp"
#include "opfsens/dcopf.hpp"
#include "opfsens/decompose.hpp"
#include "opfsens/error.hpp"
#include "opfsens/jacobian.hpp"
#include "opfsens/matpower.hpp"
#include "opfsens/sensitivity.hpp"

namespace opfsens::cli {

namespace {

using nlohmann::json;

// Above this many candidate sets "auto" switches to the decomposition.
constexpr std::uint64_t kDirectLimit = 2'000'000;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string command;
  std::string case_path;
  std::string chain_path;
  std::vector<std::string> pair;
  std::vector<double> load_override;
  std::string format = "table";
  std::size_t threads = 1;
  double binding_tol = 1e-7;
  double rank_tol = kDefaultRankTolerance;
  double solver_tol = 1e-9;
  std::string method = "auto";
  std::string gens_filter;
  std::string loads_filter;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
  double box_low = 0.5;
  double box_high = 1.5;
};

struct Context {
  NetworkCase nc;
  bool chain = false;
  const Network& net() const { return nc.network; }
};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

// Accepts 7'' and 7" (and the Unicode prime characters) for copy suffixes.
std::string normalize_label(std::string s) {
  s = replace_all(std::move(s), "″", "''");
  s = replace_all(std::move(s), "′", "'");
  return replace_all(std::move(s), "\"", "''");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t find_vertex(const Network& net, const std::string& label) {
  const auto v = net.find_label(normalize_label(label));
  if (!v) throw Error(ErrorKind::InvalidIndex, fmt::format("no bus labelled {}", label));
  return *v;
}

std::size_t resolve_gen(const Network& net, const std::string& label) {
  const auto v = find_vertex(net, label);
  if (!net.is_generator(v))
    throw Error(ErrorKind::InvalidIndex, fmt::format("bus {} has no generator", label));
  return v;
}

std::size_t resolve_load(const Network& net, const std::string& label) {
  const auto v = find_vertex(net, label);
  if (net.is_generator(v))
    throw Error(ErrorKind::InvalidIndex, fmt::format("bus {} is a generator bus", label));
  return v - net.n_gen();
}

Context load_context(const Config& cfg) {
  Context ctx{build_network(load_matpower(cfg.case_path)), false};
  if (!cfg.chain_path.empty()) {
    ctx.nc = build_chain(ctx.nc, load_chain_config(cfg.chain_path));
    ctx.chain = true;
  }
  if (!cfg.load_override.empty()) {
    if (cfg.load_override.size() != ctx.net().n_load()) {
      throw Error(ErrorKind::DimensionMismatch,
                  fmt::format("--load has {} values, the network has {} loads",
                              cfg.load_override.size(), ctx.net().n_load()));
    }
    ctx.nc.load.values = cfg.load_override;
  }
  return ctx;
}

json bus_ref(const Network& net, std::size_t v, bool chain) {
  const BusInfo& b = net.bus(v);
  if (!chain && b.bus_id >= 0) return b.bus_id;
  return b.label;
}

json branch_ref(const Network& net, std::size_t e, bool chain) {
  const Branch& br = net.edge(e);
  return json::array({bus_ref(net, br.from, chain), bus_ref(net, br.to, chain)});
}

json binding_json(const Network& net, const std::vector<std::size_t>& gens,
                  const std::vector<std::size_t>& branches, bool chain) {
  json g = json::array(), b = json::array();
  for (auto x : gens) g.push_back(bus_ref(net, x, chain));
  for (auto e : branches) b.push_back(branch_ref(net, e, chain));
  return {{"generators", g}, {"branches", b}};
}

json binding_json(const Network& net, const BindingSet& set, bool chain) {
  return binding_json(net, set.gens, set.branches, chain);
}

json network_json(const Context& ctx) {
  const Network& net = ctx.net();
  json map = json::array();
  for (std::size_t v = 0; v < net.n_bus(); ++v) {
    map.push_back({{"index", v},
                   {"bus", bus_ref(net, v, ctx.chain)},
                   {"role", net.is_generator(v) ? "generator" : "load"}});
  }
  return {{"buses", net.n_bus()},     {"generators", net.n_gen()},
          {"loads", net.n_load()},    {"branches", net.n_branch()},
          {"bus_map", std::move(map)}};
}

json diagnostics_json(const Config& cfg, const Context& ctx) {
  return {{"threads", cfg.threads},
          {"tolerances",
           {{"binding", cfg.binding_tol}, {"rank", cfg.rank_tol}, {"solver", cfg.solver_tol}}},
          {"warnings", ctx.nc.warnings}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  return "\"" + replace_all(s, "\"", "\"\"") + "\"";
}

std::string label_list(const Network& net, const std::vector<std::size_t>& gens,
                       const std::vector<std::size_t>& branches) {
  std::vector<std::string> parts;
  for (auto g : gens) parts.push_back(net.label(g));
  for (auto e : branches) parts.push_back(net.branch_label(e));
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return "{" + out + "}";
}

SearchOptions search_options(const Config& cfg) {
  SearchOptions o;
  o.threads = cfg.threads;
  o.rank_tol = cfg.rank_tol;
  return o;
}

SolveOptions solve_options(const Config& cfg) {
  return {cfg.binding_tol, cfg.solver_tol};
}

bool use_direct(const Config& cfg, const Network& net) {
  if (cfg.method == "direct") return true;
  if (cfg.method == "decomposed") return false;
  return candidate_count(net) <= kDirectLimit;
}

struct PairValue {
  std::size_t gen;
  std::size_t load;
  double value;
  std::vector<std::size_t> gens;
  std::vector<std::size_t> branches;
};

json stage_json(const Network& parent, const DecomposedResult& res, bool chain) {
  json stages = json::array();
  for (std::size_t l = 0; l < res.stages.size(); ++l) {
    const Stage& st = res.decomposition.stages[l];
    const StageResult& sr = res.stages[l];
    const Network& sn = st.network;
    json local_b = json::array();
    for (auto e : sr.argmax.branches) {
      local_b.push_back(json::array({sn.label(sn.edge(e).from), sn.label(sn.edge(e).to)}));
    }
    json local_g = json::array();
    for (auto g : sr.argmax.gens) local_g.push_back(sn.label(g));
    stages.push_back(
        {{"stage", l},
         {"buses", sn.n_bus()},
         {"generators", sn.n_gen()},
         {"source", sn.label(st.source_gen)},
         {"target", sn.label(sn.load_vertex(st.target_load))},
         {"value", sr.value},
         {"candidates_total", sr.candidates_total},
         {"candidates_valid", sr.candidates_valid},
         {"binding_local", {{"generators", local_g}, {"branches", local_b}}},
         {"binding", binding_json(parent, sr.parent_gens, sr.parent_branches, chain)}});
  }
  return stages;
}

PairValue decomposed_pair(const Network& net, std::size_t g, std::size_t l,
                          const SearchOptions& opt) {
  const auto res = worst_case_decomposed(net, g, l, opt);
  std::set<std::size_t> gens, branches;
  for (const auto& s : res.stages) {
    gens.insert(s.parent_gens.begin(), s.parent_gens.end());
    branches.insert(s.parent_branches.begin(), s.parent_branches.end());
  }
  return {g, l, res.value, {gens.begin(), gens.end()}, {branches.begin(), branches.end()}};
}

void emit_pairs(const Config& cfg, const Context& ctx, const std::vector<std::size_t>& gens,
                const std::vector<std::size_t>& loads, const std::vector<PairValue>& values,
                json diagnostics, std::ostream& out) {
  const Network& net = ctx.net();
  if (cfg.format == "json") {
    json pairs = json::array();
    for (const auto& p : values) {
      pairs.push_back({{"gen", bus_ref(net, p.gen, ctx.chain)},
                       {"load", bus_ref(net, net.load_vertex(p.load), ctx.chain)},
                       {"cwc", p.value},
                       {"binding", binding_json(net, p.gens, p.branches, ctx.chain)}});
    }
    out << json{{"network", network_json(ctx)},
                {"pairs", std::move(pairs)},
                {"diagnostics", std::move(diagnostics)}}
               .dump(2)
        << "\n";
    return;
  }
  const std::size_t nl = loads.size();
  auto value_at = [&](std::size_t gi, std::size_t li) { return values[gi * nl + li].value; };
  if (cfg.format == "csv") {
    out << "gen";
    for (auto l : loads) out << "," << csv_field(net.label(net.load_vertex(l)));
    out << "\r\n";
    for (std::size_t gi = 0; gi < gens.size(); ++gi) {
      out << csv_field(net.label(gens[gi]));
      for (std::size_t li = 0; li < nl; ++li) out << fmt::format(",{:.4f}", value_at(gi, li));
      out << "\r\n";
    }
    return;
  }
  out << fmt::format("{:>8}", "gen\\load");
  for (auto l : loads) out << fmt::format("{:>10}", net.label(net.load_vertex(l)));
  out << "\n";
  for (std::size_t gi = 0; gi < gens.size(); ++gi) {
    out << fmt::format("{:>8}", net.label(gens[gi]));
    for (std::size_t li = 0; li < nl; ++li) out << fmt::format("{:>10.4f}", value_at(gi, li));
    out << "\n";
  }
}

int cmd_table(const Config& cfg, const Context& ctx, std::ostream& out) {
  const Network& net = ctx.net();
  std::vector<std::size_t> gens, loads;
  if (cfg.gens_filter.empty()) {
    for (std::size_t g = 0; g < net.n_gen(); ++g) gens.push_back(g);
  } else {
    for (const auto& s : split_list(cfg.gens_filter)) gens.push_back(resolve_gen(net, s));
  }
  if (cfg.loads_filter.empty()) {
    for (std::size_t l = 0; l < net.n_load(); ++l) loads.push_back(l);
  } else {
    for (const auto& s : split_list(cfg.loads_filter)) loads.push_back(resolve_load(net, s));
  }
  json diag = diagnostics_json(cfg, ctx);
  std::vector<PairValue> values;
  const auto opt = search_options(cfg);
  if (use_direct(cfg, net)) {
    const auto rep = worst_case_all(net, opt);
    for (auto g : gens) {
      for (auto l : loads) {
        const auto& set = rep.argmax_at(g, l);
        values.push_back({g, l, rep.cwc(g, l), set.gens, set.branches});
      }
    }
    diag["method"] = "direct";
    diag["candidates_total"] = rep.candidates_total;
    diag["candidates_valid"] = rep.candidates_valid;
  } else {
    for (auto g : gens)
      for (auto l : loads) values.push_back(decomposed_pair(net, g, l, opt));
    diag["method"] = "decomposed";
  }
  emit_pairs(cfg, ctx, gens, loads, values, std::move(diag), out);
  return 0;
}

int cmd_wcs(const Config& cfg, const Context& ctx, std::ostream& out) {
  if (cfg.pair.empty()) return cmd_table(cfg, ctx, out);
  const Network& net = ctx.net();
  const std::size_t g = resolve_gen(net, cfg.pair[0]);
  const std::size_t l = resolve_load(net, cfg.pair[1]);
  json diag = diagnostics_json(cfg, ctx);
  PairValue pv;
  if (use_direct(cfg, net)) {
    const auto r = worst_case_siso(net, g, l, search_options(cfg));
    pv = {g, l, r.value, r.argmax.gens, r.argmax.branches};
    diag["method"] = "direct";
    diag["candidates_total"] = r.candidates_total;
    diag["candidates_valid"] = r.candidates_valid;
  } else {
    pv = decomposed_pair(net, g, l, search_options(cfg));
    diag["method"] = "decomposed";
  }
  if (cfg.format != "table") {
    emit_pairs(cfg, ctx, {g}, {l}, {pv}, std::move(diag), out);
    return 0;
  }
  out << fmt::format("C_wc({} <- {}) = {:.4f}\n", net.label(g), net.label(net.load_vertex(l)),
                     pv.value);
  out << "binding: " << label_list(net, pv.gens, pv.branches) << "\n";
  return 0;
}

int cmd_miso(const Config& cfg, const Context& ctx, std::ostream& out) {
  const Network& net = ctx.net();
  const std::size_t g = resolve_gen(net, cfg.pair[0]);
  std::vector<std::size_t> loads;
  for (const auto& s : split_list(cfg.pair[1])) loads.push_back(resolve_load(net, s));
  const auto r = worst_case_miso(net, g, loads, search_options(cfg));
  if (cfg.format == "table") {
    std::string names;
    for (std::size_t i = 0; i < loads.size(); ++i)
      names += (i ? "," : "") + net.label(net.load_vertex(loads[i]));
    out << fmt::format("C_wc({} <- {{{}}}) = {:.4f}\n", net.label(g), names, r.value);
    out << "binding: " << label_list(net, r.argmax.gens, r.argmax.branches) << "\n";
    return 0;
  }
  json jl = json::array();
  for (auto l : loads) jl.push_back(bus_ref(net, net.load_vertex(l), ctx.chain));
  json diag = diagnostics_json(cfg, ctx);
  diag["candidates_total"] = r.candidates_total;
  diag["candidates_valid"] = r.candidates_valid;
  diag["norm"] = "euclidean";
  if (cfg.format == "csv") {
    out << "gen,loads,cwc\r\n"
        << csv_field(net.label(g)) << "," << csv_field(cfg.pair[1])
        << fmt::format(",{:.4f}\r\n", r.value);
    return 0;
  }
  out << json{{"network", network_json(ctx)},
              {"pairs",
               json::array({{{"gen", bus_ref(net, g, ctx.chain)},
                             {"loads", jl},
                             {"cwc", r.value},
                             {"binding", binding_json(net, r.argmax, ctx.chain)}}})},
              {"diagnostics", diag}}
             .dump(2)
      << "\n";
  return 0;
}

int cmd_local(const Config& cfg, const Context& ctx, std::ostream& out) {
  const Network& net = ctx.net();
  const std::size_t g = resolve_gen(net, cfg.pair[0]);
  const std::size_t l = resolve_load(net, cfg.pair[1]);
  const auto reg = solve_opf_regularized(net, ctx.nc.params, ctx.nc.load, solve_options(cfg));
  const BindingSet set = extract_binding_set(reg.solution, net, reg.params);
  const auto jr = jacobian_from_binding(net, set, cfg.rank_tol);
  const double value = std::abs(jr.j(g, l));
  json diag = diagnostics_json(cfg, ctx);
  if (reg.warning) diag["warnings"].push_back(*reg.warning);
  std::optional<SampledBound> sampled;
  if (cfg.samples > 0) {
    std::vector<double> lo, hi;
    for (double v : ctx.nc.load.values) {
      lo.push_back(v * cfg.box_low);
      hi.push_back(v * cfg.box_high);
    }
    sampled = sampled_sensitivity(net, reg.params, lo, hi, g, l, cfg.samples, cfg.seed,
                                  solve_options(cfg));
  }
  if (cfg.format == "table") {
    out << fmt::format("local |J({}, {})| = {:.6f}\n", net.label(g),
                       net.label(net.load_vertex(l)), value);
    out << "binding: " << describe(set, net) << "\n";
    if (sampled) {
      out << fmt::format("sampled lower bound = {:.6f} ({} of {} samples regular)\n",
                         sampled->value, sampled->regular, sampled->samples);
    }
    return 0;
  }
  if (cfg.format == "csv") {
    out << "gen,load,local\r\n"
        << csv_field(net.label(g)) << "," << csv_field(net.label(net.load_vertex(l)))
        << fmt::format(",{:.6f}\r\n", value);
    return 0;
  }
  json pair = {{"gen", bus_ref(net, g, ctx.chain)},
               {"load", bus_ref(net, net.load_vertex(l), ctx.chain)},
               {"local", value},
               {"binding", binding_json(net, set, ctx.chain)}};
  if (sampled) {
    pair["sampled_lower_bound"] = {{"value", sampled->value},
                                   {"samples", sampled->samples},
                                   {"regular", sampled->regular},
                                   {"seed", cfg.seed},
                                   {"box", {cfg.box_low, cfg.box_high}}};
  }
  diag["cost_perturbed"] = reg.perturbed;
  out << json{{"network", network_json(ctx)}, {"pairs", json::array({pair})}, {"diagnostics", diag}}
             .dump(2)
      << "\n";
  return 0;
}

int cmd_solve(const Config& cfg, const Context& ctx, std::ostream& out) {
  const Network& net = ctx.net();
  const auto reg = solve_opf_regularized(net, ctx.nc.params, ctx.nc.load, solve_options(cfg));
  const OpfSolution& sol = reg.solution;
  const auto kkt = kkt_residuals(sol, net, reg.params, ctx.nc.load);
  const auto regularity = check_regularity(sol, cfg.solver_tol);
  const BindingSet active = active_limits(sol, net, reg.params, cfg.binding_tol);
  std::string regular = "yes";
  try {
    extract_binding_set(sol, net, reg.params);
  } catch (const Error& e) {
    regular = std::string(e.name());
  }
  json diag = diagnostics_json(cfg, ctx);
  if (reg.warning) diag["warnings"].push_back(*reg.warning);

  if (cfg.format == "table") {
    out << fmt::format("objective  {:.6f}\n", sol.objective);
    out << "generation (p.u.)\n";
    for (std::size_t g = 0; g < net.n_gen(); ++g)
      out << fmt::format("  {:>8} {:>12.6f}\n", net.label(g), sol.gen[g]);
    out << "branch flows (p.u.)\n";
    for (std::size_t e = 0; e < net.n_branch(); ++e)
      out << fmt::format("  {:>12} {:>12.6f}\n", net.branch_label(e), sol.flows[e]);
    out << "binding: " << describe(active, net) << " (regular: " << regular << ")\n";
    out << fmt::format("kkt max residual {:.3e}; unique {}\n", kkt.max(),
                       regularity.unique ? "yes" : "no");
    return 0;
  }
  if (cfg.format == "csv") {
    out << "kind,id,value\r\n";
    for (std::size_t g = 0; g < net.n_gen(); ++g)
      out << "gen," << csv_field(net.label(g)) << fmt::format(",{:.9f}\r\n", sol.gen[g]);
    for (std::size_t e = 0; e < net.n_branch(); ++e)
      out << "flow," << csv_field(net.branch_label(e)) << fmt::format(",{:.9f}\r\n", sol.flows[e]);
    out << fmt::format("objective,,{:.9f}\r\n", sol.objective);
    return 0;
  }
  json gens = json::array();
  for (std::size_t g = 0; g < net.n_gen(); ++g) {
    gens.push_back({{"bus", bus_ref(net, g, ctx.chain)},
                    {"p", sol.gen[g]},
                    {"lambda_upper", sol.dual_gen_upper[g]},
                    {"lambda_lower", sol.dual_gen_lower[g]}});
  }
  json flows = json::array();
  for (std::size_t e = 0; e < net.n_branch(); ++e) {
    flows.push_back({{"branch", branch_ref(net, e, ctx.chain)},
                     {"p", sol.flows[e]},
                     {"mu_upper", sol.dual_flow_upper[e]},
                     {"mu_lower", sol.dual_flow_lower[e]}});
  }
  diag["kkt"] = {{"stationarity_theta", kkt.stationarity_theta},
                 {"stationarity_gen", kkt.stationarity_gen},
                 {"primal_equality", kkt.primal_equality},
                 {"primal_bounds", kkt.primal_bounds},
                 {"dual_sign", kkt.dual_sign},
                 {"complementarity", kkt.complementarity}};
  diag["regularity"] = {{"nonzero_inequality_duals", regularity.nonzero_inequality_duals},
                        {"nonzero_equality_duals", regularity.nonzero_equality_duals},
                        {"unique", regularity.unique},
                        {"regular_point", regular}};
  diag["cost_perturbed"] = reg.perturbed;
  diag["iterations"] = sol.iterations;
  out << json{{"network", network_json(ctx)},
              {"solution",
               {{"objective", sol.objective},
                {"generators", gens},
                {"branches", flows},
                {"theta", sol.theta},
                {"tau", sol.dual_eq},
                {"binding", binding_json(net, active, ctx.chain)}}},
              {"diagnostics", diag}}
             .dump(2)
      << "\n";
  return 0;
}

int cmd_decompose(const Config& cfg, const Context& ctx, std::ostream& out) {
  const Network& net = ctx.net();
  const std::size_t g = resolve_gen(net, cfg.pair[0]);
  const std::size_t l = resolve_load(net, cfg.pair[1]);
  const auto res = worst_case_decomposed(net, g, l, search_options(cfg));
  const Network& pn = res.pruned.network;
  auto parent_edge = [&](std::size_t pe) { return res.pruned.edge_map[pe]; };

  if (cfg.format == "table") {
    out << fmt::format("C_wc({} <- {}) = {:.4f} over {} stage(s)\n", net.label(g),
                       net.label(net.load_vertex(l)), res.value, res.stages.size());
    for (std::size_t s = 0; s < res.stages.size(); ++s) {
      const Stage& st = res.decomposition.stages[s];
      const StageResult& sr = res.stages[s];
      out << fmt::format("  stage {}: {} buses, {} <- {}: {:.4f}  binding {}\n", s,
                         st.network.n_bus(), st.network.label(st.source_gen),
                         st.network.label(st.network.load_vertex(st.target_load)), sr.value,
                         describe(sr.argmax, st.network));
    }
    for (const auto& c : res.pruned.collapsed) {
      out << fmt::format("  collapsed {} bus(es) beyond {} into a {}\n", c.vertices.size(),
                         net.branch_label(c.bridge), c.as_generator ? "generator" : "load");
    }
    return 0;
  }
  if (cfg.format == "csv") {
    out << "stage,buses,source,target,value\r\n";
    for (std::size_t s = 0; s < res.stages.size(); ++s) {
      const Stage& st = res.decomposition.stages[s];
      out << s << "," << st.network.n_bus() << "," << csv_field(st.network.label(st.source_gen))
          << "," << csv_field(st.network.label(st.network.load_vertex(st.target_load)))
          << fmt::format(",{:.6f}\r\n", res.stages[s].value);
    }
    out << fmt::format("product,,,,{:.6f}\r\n", res.value);
    return 0;
  }
  json bridges = json::array(), trivial = json::array(), collapsed = json::array();
  for (auto e : res.decomposition.bridges) bridges.push_back(branch_ref(net, parent_edge(e), ctx.chain));
  for (auto e : res.decomposition.trivial_bridges)
    trivial.push_back(branch_ref(net, parent_edge(e), ctx.chain));
  for (const auto& c : res.pruned.collapsed) {
    json vs = json::array();
    for (auto v : c.vertices) vs.push_back(bus_ref(net, v, ctx.chain));
    collapsed.push_back({{"bridge", branch_ref(net, c.bridge, ctx.chain)},
                         {"buses", vs},
                         {"as", c.as_generator ? "generator" : "load"}});
  }
  std::set<std::size_t> all_g, all_b;
  for (const auto& s : res.stages) {
    all_g.insert(s.parent_gens.begin(), s.parent_gens.end());
    all_b.insert(s.parent_branches.begin(), s.parent_branches.end());
  }
  json diag = diagnostics_json(cfg, ctx);
  diag["pruned_buses"] = pn.n_bus();
  out << json{{"network", network_json(ctx)},
              {"pairs",
               json::array({{{"gen", bus_ref(net, g, ctx.chain)},
                             {"load", bus_ref(net, net.load_vertex(l), ctx.chain)},
                             {"cwc", res.value},
                             {"binding",
                              binding_json(net, {all_g.begin(), all_g.end()},
                                           {all_b.begin(), all_b.end()}, ctx.chain)},
                             {"stages", stage_json(net, res, ctx.chain)},
                             {"bridges", bridges},
                             {"trivial_bridges", trivial},
                             {"collapsed", collapsed}}})},
              {"diagnostics", diag}}
             .dump(2)
      << "\n";
  return 0;
}

std::size_t default_threads() {
  const char* env = std::getenv("OPF_SENSE_THREADS");
  if (!env || !*env) return 1;
  try {
    const long v = std::stol(env);
    if (v >= 1) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw UsageError(fmt::format("OPF_SENSE_THREADS must be a positive integer, got '{}'", env));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Worst-case sensitivity of DC optimal power flow to load changes", "opf-sense"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  try {
    cfg.threads = default_threads();
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return 2;
  }

  struct Spec {
    const char* name;
    const char* help;
    bool pair;
  };
  const Spec specs[] = {
      {"solve", "Solve the DC-OPF and report primal/dual values", false},
      {"sens-local", "Local sensitivity |J_ij| at the solved operating point", true},
      {"sens-wcs", "Worst-case SISO sensitivity (one pair, or all pairs without --pair)", true},
      {"sens-miso", "Worst-case MISO sensitivity; LOAD may be a comma-separated list", true},
      {"decompose", "Worst-case SISO sensitivity through the bridge decomposition", true},
      {"report", "Worst-case sensitivity table for every generator/load pair", false},
  };
  for (const auto& spec : specs) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--case", cfg.case_path, "MATPOWER case file")->required();
    sub->add_option("--chain", cfg.chain_path, "Chain configuration (JSON) applied to the case");
    if (spec.pair) {
      sub->add_option("--pair", cfg.pair, "Generator bus and load bus labels, e.g. 1 \"7''\"")
          ->expected(2);
    }
    sub->add_option("--format", cfg.format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    sub->add_option("--threads", cfg.threads, "Worker threads (default from OPF_SENSE_THREADS)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--binding-tol", cfg.binding_tol, "Active-limit tolerance (p.u.)")
        ->capture_default_str();
    sub->add_option("--rank-tol", cfg.rank_tol, "Relative rank tolerance")->capture_default_str();
    sub->add_option("--solver-tol", cfg.solver_tol, "Simplex feasibility/optimality tolerance")
        ->capture_default_str();
    sub->add_option("--load", cfg.load_override,
                    "Load vector override in p.u., one value per load bus in network order")
        ->delimiter(',');
    if (std::string_view(spec.name) == "report" || std::string_view(spec.name) == "sens-wcs") {
      sub->add_option("--method", cfg.method, "Enumeration strategy")
          ->check(CLI::IsMember({"auto", "direct", "decomposed"}))
          ->capture_default_str();
      sub->add_option("--gens", cfg.gens_filter, "Comma-separated generator bus labels");
      sub->add_option("--loads", cfg.loads_filter, "Comma-separated load bus labels");
    }
    if (std::string_view(spec.name) == "sens-local") {
      sub->add_option("--samples", cfg.samples, "Monte-Carlo samples for a lower bound")
          ->capture_default_str();
      sub->add_option("--seed", cfg.seed, "Sampling seed")->capture_default_str();
      sub->add_option("--box-low", cfg.box_low, "Lower load factor of the sampling box")
          ->capture_default_str();
      sub->add_option("--box-high", cfg.box_high, "Upper load factor of the sampling box")
          ->capture_default_str();
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  const bool needs_pair =
      cfg.command == "sens-local" || cfg.command == "sens-miso" || cfg.command == "decompose";
  if (needs_pair && cfg.pair.empty()) {
    err << cfg.command << ": --pair GEN LOAD is required\n";
    return 2;
  }

  try {
    const Context ctx = load_context(cfg);
    if (cfg.command == "solve") return cmd_solve(cfg, ctx, out);
    if (cfg.command == "sens-local") return cmd_local(cfg, ctx, out);
    if (cfg.command == "sens-wcs") return cmd_wcs(cfg, ctx, out);
    if (cfg.command == "sens-miso") return cmd_miso(cfg, ctx, out);
    if (cfg.command == "decompose") return cmd_decompose(cfg, ctx, out);
    return cmd_table(cfg, ctx, out);
  } catch (const Error& e) {
    out << json{{"error", {{"kind", std::string(e.name())}, {"message", e.what()}}}}.dump(2)
        << "\n";
    err << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return 2;
  }
}

}  // namespace opfsens::cli
