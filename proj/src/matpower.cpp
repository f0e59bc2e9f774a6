#include "opfsens/matpower.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "opfsens/error.hpp"

namespace opfsens {

namespace {

using Table = std::vector<std::vector<double>>;

struct ParsedAssignments {
  std::map<std::string, Table> tables;
  std::map<std::string, double> scalars;
};

// Drops `%` comments while leaving quoted strings intact.
std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  bool in_string = false;
  char prev = '\0';
  for (char c : text) {
    if (in_comment) {
      if (c == '\n') {
        in_comment = false;
        out.push_back(c);
      }
      continue;
    }
    if (c == '\'' && !in_string) {
      // A quote right after an identifier or bracket is a transpose.
      in_string = !(std::isalnum(static_cast<unsigned char>(prev)) || prev == ']' ||
                    prev == ')' || prev == '_' || prev == '.');
    } else if (c == '\'' && in_string) {
      in_string = false;
    } else if (c == '%' && !in_string) {
      in_comment = true;
      continue;
    } else if (c == '\n') {
      in_string = false;
    }
    out.push_back(c);
    prev = c;
  }
  return out;
}

double parse_cell(std::string_view cell, const std::string& table) {
  std::string s(cell);
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "inf" || lower == "+inf") return std::numeric_limits<double>::infinity();
  if (lower == "-inf") return -std::numeric_limits<double>::infinity();
  if (lower == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw Error(ErrorKind::MalformedMatrix,
                fmt::format("non-numeric cell '{}' in table {}", s, table));
  }
  return v;
}

Table parse_matrix_body(std::string_view body, const std::string& name) {
  Table rows;
  std::vector<double> current;
  std::string cell;
  auto flush_cell = [&] {
    if (!cell.empty()) {
      current.push_back(parse_cell(cell, name));
      cell.clear();
    }
  };
  auto flush_row = [&] {
    flush_cell();
    if (!current.empty()) {
      rows.push_back(std::move(current));
      current.clear();
    }
  };
  for (char c : body) {
    if (c == ';' || c == '\n' || c == '\r') {
      flush_row();
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      flush_cell();
    } else if (c == '[' || c == ']') {
      throw Error(ErrorKind::MalformedMatrix, fmt::format("nested bracket in table {}", name));
    } else {
      cell.push_back(c);
    }
  }
  flush_row();
  if (!rows.empty()) {
    const std::size_t width = rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != width) {
        throw Error(ErrorKind::MalformedMatrix,
                    fmt::format("table {} has rows of differing length", name));
      }
    }
  }
  return rows;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

ParsedAssignments scan_assignments(std::string_view raw) {
  const std::string text = strip_comments(raw);
  ParsedAssignments out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_ws = [&](bool newlines) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i])) &&
           (newlines || text[i] != '\n'))
      ++i;
  };
  while (i < n) {
    const char c = text[i];
    if (c == '[') {
      // e.g. a legacy `function [baseMVA, bus, ...] = caseN` header
      const std::size_t close = text.find(']', i + 1);
      if (close == std::string::npos) throw Error(ErrorKind::MalformedMatrix, "unbalanced '['");
      i = close + 1;
      continue;
    }
    if (c == ']') throw Error(ErrorKind::MalformedMatrix, "unbalanced ']'");
    if (!is_ident_start(c) || (i > 0 && is_ident_char(text[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < n && is_ident_char(text[i])) ++i;
    std::string ident = text.substr(start, i - start);
    skip_ws(false);
    if (i >= n || text[i] != '=' || (i + 1 < n && text[i + 1] == '=')) continue;
    ++i;
    skip_ws(false);
    const std::string name = ident.substr(ident.rfind('.') == std::string::npos
                                              ? 0
                                              : ident.rfind('.') + 1);
    if (i < n && text[i] == '[') {
      const std::size_t close = text.find(']', i + 1);
      const std::size_t next_open = text.find('[', i + 1);
      if (close == std::string::npos || (next_open != std::string::npos && next_open < close)) {
        throw Error(ErrorKind::MalformedMatrix, fmt::format("unbalanced brackets in {}", name));
      }
      out.tables[name] = parse_matrix_body(std::string_view(text).substr(i + 1, close - i - 1),
                                           name);
      i = close + 1;
    } else if (i < n && text[i] == '{') {
      const std::size_t close = text.find('}', i + 1);
      if (close == std::string::npos) {
        throw Error(ErrorKind::MalformedMatrix, fmt::format("unbalanced braces in {}", name));
      }
      i = close + 1;
    } else {
      std::size_t end = i;
      while (end < n && text[end] != ';' && text[end] != '\n') ++end;
      std::string value = text.substr(i, end - i);
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back())))
        value.pop_back();
      char* stop = nullptr;
      const double v = std::strtod(value.c_str(), &stop);
      if (!value.empty() && stop != value.c_str() && *stop == '\0') out.scalars[name] = v;
      i = end;
    }
  }
  return out;
}

const Table& require_table(const ParsedAssignments& pa, const std::string& name,
                           std::size_t min_cols) {
  auto it = pa.tables.find(name);
  if (it == pa.tables.end()) {
    throw Error(ErrorKind::MissingTable, fmt::format("case has no '{}' table", name));
  }
  for (const auto& row : it->second) {
    if (row.size() < min_cols) {
      throw Error(ErrorKind::MalformedMatrix,
                  fmt::format("table {} needs at least {} columns", name, min_cols));
    }
  }
  return it->second;
}

int as_int(double v, const char* what) {
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw Error(ErrorKind::MalformedMatrix, fmt::format("{} must be an integer", what));
  }
  return static_cast<int>(v);
}

}  // namespace

MatpowerCase parse_matpower(std::string_view text) {
  const ParsedAssignments pa = scan_assignments(text);
  MatpowerCase mp;

  auto base = pa.scalars.find("baseMVA");
  if (base == pa.scalars.end()) {
    throw Error(ErrorKind::MissingTable, "case has no 'baseMVA' assignment");
  }
  mp.base_mva = base->second;
  if (!(mp.base_mva > 0.0)) throw Error(ErrorKind::MalformedMatrix, "baseMVA must be positive");

  for (const auto& row : require_table(pa, "bus", 3)) {
    mp.buses.push_back({as_int(row[0], "bus id"), as_int(row[1], "bus type"), row[2], row});
  }
  for (const auto& row : require_table(pa, "gen", 10)) {
    mp.generators.push_back(
        {as_int(row[0], "generator bus"), row[8], row[9], row[7] > 0.0, row});
  }
  for (const auto& row : require_table(pa, "branch", 6)) {
    const bool in_service = row.size() <= 10 || row[10] > 0.0;
    mp.branches.push_back({as_int(row[0], "branch from"), as_int(row[1], "branch to"), row[3],
                           row[5], in_service, row});
  }
  for (const auto& row : require_table(pa, "gencost", 4)) {
    MatpowerCost cost;
    cost.model = as_int(row[0], "cost model");
    const int n = as_int(row[3], "cost term count");
    const std::size_t count = cost.model == 1 ? 2 * static_cast<std::size_t>(n)
                                              : static_cast<std::size_t>(n);
    if (n < 0 || row.size() < 4 + count) {
      throw Error(ErrorKind::MalformedMatrix, "gencost row shorter than its term count");
    }
    cost.coefficients.assign(row.begin() + 4, row.begin() + 4 + static_cast<long>(count));
    cost.raw = row;
    mp.gen_costs.push_back(std::move(cost));
  }

  std::set<int> ids;
  for (const auto& b : mp.buses) {
    if (!ids.insert(b.id).second) {
      throw Error(ErrorKind::MalformedMatrix, fmt::format("duplicate bus id {}", b.id));
    }
  }
  for (const auto& g : mp.generators) {
    if (!ids.count(g.bus_id)) {
      throw Error(ErrorKind::DanglingReference,
                  fmt::format("generator refers to unknown bus {}", g.bus_id));
    }
  }
  for (const auto& br : mp.branches) {
    if (!ids.count(br.from_bus) || !ids.count(br.to_bus)) {
      throw Error(ErrorKind::DanglingReference,
                  fmt::format("branch {}-{} refers to an unknown bus", br.from_bus, br.to_bus));
    }
  }
  return mp;
}

MatpowerCase load_matpower(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matpower(ss.str());
}

namespace {

double linear_cost(const MatpowerCost& cost, std::size_t gen,
                   std::vector<std::string>& warnings) {
  const auto& c = cost.coefficients;
  if (cost.model == 1) {
    warnings.push_back(fmt::format(
        "generator {}: piecewise-linear cost, using the first segment slope", gen + 1));
    if (c.size() < 4 || c[2] == c[0]) return 0.0;
    return (c[3] - c[1]) / (c[2] - c[0]);
  }
  if (c.size() >= 3 && c[c.size() - 3] != 0.0) {
    warnings.push_back(fmt::format(
        "generator {}: quadratic cost term ignored, linear coefficient used", gen + 1));
  }
  for (std::size_t k = 0; k + 3 < c.size(); ++k) {
    if (c[k] != 0.0) {
      warnings.push_back(
          fmt::format("generator {}: cubic or higher cost terms ignored", gen + 1));
      break;
    }
  }
  return c.size() >= 2 ? c[c.size() - 2] : 0.0;
}

}  // namespace

NetworkCase build_network(const MatpowerCase& mp) {
  std::vector<std::string> warnings;
  const double base = mp.base_mva;

  struct GenRow {
    int bus_id;
    std::size_t row;
  };
  std::vector<GenRow> gens;
  for (std::size_t k = 0; k < mp.generators.size(); ++k) {
    if (!mp.generators[k].in_service) {
      warnings.push_back(fmt::format("generator at bus {} is out of service and was dropped",
                                     mp.generators[k].bus_id));
      continue;
    }
    gens.push_back({mp.generators[k].bus_id, k});
  }
  std::stable_sort(gens.begin(), gens.end(),
                   [](const GenRow& a, const GenRow& b) { return a.bus_id < b.bus_id; });
  for (std::size_t k = 1; k < gens.size(); ++k) {
    if (gens[k].bus_id == gens[k - 1].bus_id) {
      throw Error(ErrorKind::DuplicateGeneratorBus,
                  fmt::format("bus {} hosts more than one generator", gens[k].bus_id));
    }
  }
  if (mp.gen_costs.size() < mp.generators.size()) {
    throw Error(ErrorKind::MissingTable, "gencost has fewer rows than gen");
  }

  std::set<int> gen_buses;
  for (const auto& g : gens) gen_buses.insert(g.bus_id);
  std::vector<int> load_ids;
  for (const auto& b : mp.buses)
    if (!gen_buses.count(b.id)) load_ids.push_back(b.id);
  std::sort(load_ids.begin(), load_ids.end());

  std::map<int, std::size_t> vertex_of;
  std::vector<BusInfo> buses;
  for (const auto& g : gens) {
    vertex_of[g.bus_id] = buses.size();
    buses.push_back({g.bus_id, std::to_string(g.bus_id)});
  }
  for (int id : load_ids) {
    vertex_of[id] = buses.size();
    buses.push_back({id, std::to_string(id)});
  }

  std::map<int, double> demand;
  for (const auto& b : mp.buses) demand[b.id] = b.p_demand;
  for (const auto& g : gens) {
    if (demand[g.bus_id] != 0.0) {
      warnings.push_back(
          fmt::format("demand at generator bus {} is ignored by the DC model", g.bus_id));
    }
  }

  std::vector<Branch> edges;
  OpfParams params;
  for (const auto& br : mp.branches) {
    if (!br.in_service) {
      warnings.push_back(fmt::format("branch {}-{} is out of service and was dropped",
                                     br.from_bus, br.to_bus));
      continue;
    }
    if (!(br.reactance > 0.0)) {
      throw Error(ErrorKind::ZeroReactance,
                  fmt::format("branch {}-{} has non-positive reactance", br.from_bus, br.to_bus));
    }
    edges.push_back({vertex_of.at(br.from_bus), vertex_of.at(br.to_bus), 1.0 / br.reactance});
    double limit = br.rate_a / base;
    if (br.rate_a == 0.0) {
      limit = kUnlimitedFlowPu;
      warnings.push_back(fmt::format("branch {}-{} has rate_a = 0, using +/-{} p.u.",
                                     br.from_bus, br.to_bus, kUnlimitedFlowPu));
    }
    params.flow_upper.push_back(limit);
    params.flow_lower.push_back(-limit);
  }

  for (std::size_t k = 0; k < gens.size(); ++k) {
    const auto& g = mp.generators[gens[k].row];
    params.cost.push_back(linear_cost(mp.gen_costs[gens[k].row], k, warnings));
    params.gen_upper.push_back(g.p_max / base);
    params.gen_lower.push_back(g.p_min / base);
  }

  LoadVector load;
  for (int id : load_ids) load.values.push_back(demand[id] / base);

  Network net(gens.size(), load_ids.size(), std::move(edges), std::move(buses));
  if (!net.is_connected()) throw Error(ErrorKind::DisconnectedGraph, "network is not connected");
  params.validate(net);
  load.validate(net);
  return NetworkCase{std::move(net), std::move(params), std::move(load), std::move(warnings)};
}

}  // namespace opfsens
