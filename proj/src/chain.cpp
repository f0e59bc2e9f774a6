#include "opfsens/chain.hpp"

#include <fstream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "opfsens/error.hpp"

namespace opfsens {

namespace {

TieEnd parse_end(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("copy") || !j.contains("bus")) {
    throw Error(ErrorKind::InvalidConfig, "tie endpoint needs 'copy' and 'bus'");
  }
  const auto copy = j.at("copy").get<long long>();
  if (copy < 0) throw Error(ErrorKind::InvalidTie, "tie copy index must be >= 0");
  return {static_cast<std::size_t>(copy), j.at("bus").get<int>()};
}

}  // namespace

ChainConfig ChainConfig::from_json(const nlohmann::json& j) {
  try {
    ChainConfig cfg;
    const auto copies = j.at("copies").get<long long>();
    if (copies < 0) throw Error(ErrorKind::InvalidTie, "copies must be positive");
    cfg.copies = static_cast<std::size_t>(copies);
    for (const auto& t : j.value("ties", nlohmann::json::array())) {
      TieSpec tie;
      tie.from = parse_end(t.at("from"));
      tie.to = parse_end(t.at("to"));
      if (t.contains("susceptance")) tie.susceptance = t.at("susceptance").get<double>();
      if (t.contains("flow_limit")) tie.flow_limit = t.at("flow_limit").get<double>();
      cfg.ties.push_back(tie);
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("chain config: {}", e.what()));
  }
}

nlohmann::json ChainConfig::to_json() const {
  nlohmann::json ties = nlohmann::json::array();
  for (const auto& t : this->ties) {
    nlohmann::json jt = {{"from", {{"copy", t.from.copy}, {"bus", t.from.bus_id}}},
                         {"to", {{"copy", t.to.copy}, {"bus", t.to.bus_id}}}};
    if (t.susceptance) jt["susceptance"] = *t.susceptance;
    if (t.flow_limit) jt["flow_limit"] = *t.flow_limit;
    ties.push_back(std::move(jt));
  }
  return {{"copies", copies}, {"ties", std::move(ties)}};
}

ChainConfig load_chain_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  return ChainConfig::from_json(j);
}

std::string copy_label(const std::string& base_label, std::size_t copy) {
  return base_label + std::string(copy, '\'');
}

NetworkCase build_chain(const NetworkCase& base, const ChainConfig& config) {
  const Network& bn = base.network;
  if (config.copies < 2) {
    throw Error(ErrorKind::InvalidTie, "a chain needs at least two copies");
  }
  if (bn.n_branch() == 0) throw Error(ErrorKind::InvalidTie, "base network has no branches");
  const std::size_t k = config.copies;
  const std::size_t ng = bn.n_gen();
  const std::size_t nl = bn.n_load();

  auto vertex = [&](std::size_t copy, std::size_t v) {
    return v < ng ? copy * ng + v : k * ng + copy * nl + (v - ng);
  };

  std::vector<BusInfo> buses(k * (ng + nl));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t v = 0; v < bn.n_bus(); ++v)
      buses[vertex(c, v)] = {bn.bus(v).bus_id, copy_label(bn.label(v), c)};

  NetworkCase out{Network(1, 0, {}, {BusInfo{0, "0"}}), {}, {}, base.warnings};
  std::vector<Branch> edges;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t e = 0; e < bn.n_branch(); ++e) {
      const auto& br = bn.edge(e);
      edges.push_back({vertex(c, br.from), vertex(c, br.to), br.susceptance});
      out.params.flow_upper.push_back(base.params.flow_upper[e]);
      out.params.flow_lower.push_back(base.params.flow_lower[e]);
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t g = 0; g < ng; ++g) {
      out.params.cost.push_back(base.params.cost[g]);
      out.params.gen_upper.push_back(base.params.gen_upper[g]);
      out.params.gen_lower.push_back(base.params.gen_lower[g]);
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    out.load.values.insert(out.load.values.end(), base.load.values.begin(),
                           base.load.values.end());

  for (const auto& tie : config.ties) {
    auto resolve = [&](const TieEnd& end) {
      if (end.copy >= k) {
        throw Error(ErrorKind::InvalidTie, fmt::format("tie refers to copy {} of {}", end.copy, k));
      }
      const auto v = bn.find_bus_id(end.bus_id);
      if (!v) throw Error(ErrorKind::InvalidTie, fmt::format("tie refers to unknown bus {}", end.bus_id));
      return vertex(end.copy, *v);
    };
    const std::size_t u = resolve(tie.from);
    const std::size_t v = resolve(tie.to);
    if (u == v) throw Error(ErrorKind::InvalidTie, "tie endpoints coincide");
    const double b = tie.susceptance.value_or(bn.edge(0).susceptance);
    if (!(b > 0.0)) throw Error(ErrorKind::InvalidTie, "tie susceptance must be positive");
    const double limit = tie.flow_limit.value_or(base.params.flow_upper[0]);
    edges.push_back({u, v, b});
    out.params.flow_upper.push_back(limit);
    out.params.flow_lower.push_back(-limit);
  }

  out.network = Network(k * ng, k * nl, std::move(edges), std::move(buses));
  if (!out.network.is_connected()) {
    throw Error(ErrorKind::DisconnectedChain, "ties do not connect every copy");
  }
  out.params.validate(out.network);
  return out;
}

}  // namespace opfsens
