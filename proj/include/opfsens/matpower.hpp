#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "opfsens/network.hpp"

namespace opfsens {

// Rows keep every parsed column in `raw`; the named fields are the columns
// the DC model reads.

struct MatpowerBus {
  int id = 0;
  int type = 0;
  double p_demand = 0.0;  // MW
  std::vector<double> raw;
};

struct MatpowerGen {
  int bus_id = 0;
  double p_max = 0.0;  // MW
  double p_min = 0.0;  // MW
  bool in_service = true;
  std::vector<double> raw;
};

struct MatpowerBranch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per-unit
  double rate_a = 0.0;     // MVA, 0 means unlimited
  bool in_service = true;
  std::vector<double> raw;
};

struct MatpowerCost {
  int model = 2;  // 1 piecewise linear, 2 polynomial
  std::vector<double> coefficients;  // polynomial: highest order first
  std::vector<double> raw;
};

struct MatpowerCase {
  double base_mva = 100.0;
  std::vector<MatpowerBus> buses;
  std::vector<MatpowerGen> generators;
  std::vector<MatpowerBranch> branches;
  std::vector<MatpowerCost> gen_costs;
};

/// Parses the baseMVA/bus/gen/branch/gencost subset of a MATPOWER case file.
/// Accepts both `mpc.bus = [...]` and legacy `bus = [...]` assignments.
///
/// Throws MalformedMatrix, MissingTable or DanglingReference.
MatpowerCase parse_matpower(std::string_view text);

MatpowerCase load_matpower(const std::filesystem::path& path);

/// Converts a parsed case into the per-unit DC network model.
///
/// Generators come first, then loads, each group sorted by bus id. Branch
/// susceptance is 1/x; flow limits are +/- rate_a/baseMVA with rate_a = 0
/// mapped to kUnlimitedFlowPu. The linear cost coefficient becomes f_i.
/// Out-of-service generators and branches are dropped with a warning.
///
/// Throws DisconnectedGraph, ZeroReactance, DuplicateGeneratorBus,
/// InvalidLimits.
NetworkCase build_network(const MatpowerCase& mp);

}  // namespace opfsens
