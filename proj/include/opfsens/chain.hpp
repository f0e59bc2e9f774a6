#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "opfsens/network.hpp"

namespace opfsens {

struct TieEnd {
  std::size_t copy = 0;  // 0 = unprimed, 1 = ', 2 = '' ...
  int bus_id = 0;        // original bus id in the base case
};

struct TieSpec {
  TieEnd from;
  TieEnd to;
  std::optional<double> susceptance;  // p.u.; defaults to the base's first branch
  std::optional<double> flow_limit;   // p.u.; defaults to the base's first branch
};

/// Declarative description of a chained network.
///
/// JSON form:
///   {"copies": 3,
///    "ties": [{"from": {"copy": 0, "bus": 7}, "to": {"copy": 1, "bus": 8},
///              "susceptance": 13.9, "flow_limit": 2.5}, ...]}
/// `susceptance` and `flow_limit` are optional per tie.
struct ChainConfig {
  std::size_t copies = 0;
  std::vector<TieSpec> ties;

  static ChainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ChainConfig load_chain_config(const std::filesystem::path& path);

/// Copy-suffixed label: label("7", 2) == "7''".
std::string copy_label(const std::string& base_label, std::size_t copy);

/// Builds `copies` replicas of the base network joined by tie branches.
///
/// Generators of every copy come first (copy-major), then loads. Edges are
/// the copies' branches in copy order followed by the ties. Limits, costs and
/// loads are replicated.
///
/// Throws InvalidTie (fewer than two copies, bad endpoint) or
/// DisconnectedChain.
NetworkCase build_chain(const NetworkCase& base, const ChainConfig& config);

}  // namespace opfsens
