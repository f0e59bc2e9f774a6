#include "opfsens/network.hpp"

#include <cmath>
#include <unordered_set>

#include <fmt/core.h>

#include "opfsens/error.hpp"

namespace opfsens {

Network::Network(std::size_t n_gen, std::size_t n_load, std::vector<Branch> edges,
                 std::vector<BusInfo> buses)
    : n_gen_(n_gen), n_load_(n_load), edges_(std::move(edges)), buses_(std::move(buses)) {
  const std::size_t n = n_bus();
  if (n == 0) throw Error(ErrorKind::DimensionMismatch, "network has no buses");
  if (buses_.size() != n) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("expected {} bus records, got {}", n, buses_.size()));
  }
  std::unordered_set<std::string> seen;
  for (auto& b : buses_) {
    if (b.label.empty()) b.label = std::to_string(b.bus_id);
    if (!seen.insert(b.label).second) {
      throw Error(ErrorKind::DimensionMismatch, fmt::format("duplicate bus label {}", b.label));
    }
  }

  const std::size_t m = edges_.size();
  incidence_ = DenseMatrix(n, m);
  flow_map_ = DenseMatrix(m, n);
  laplacian_ = DenseMatrix(n, n);
  for (std::size_t e = 0; e < m; ++e) {
    const auto& br = edges_[e];
    if (br.from >= n || br.to >= n || br.from == br.to) {
      throw Error(ErrorKind::DanglingReference, fmt::format("branch {} has invalid endpoints", e));
    }
    if (!(br.susceptance > 0.0) || !std::isfinite(br.susceptance)) {
      throw Error(ErrorKind::ZeroReactance,
                  fmt::format("branch {} has non-positive susceptance", e));
    }
    incidence_(br.from, e) = 1.0;
    incidence_(br.to, e) = -1.0;
    flow_map_(e, br.from) = br.susceptance;
    flow_map_(e, br.to) = -br.susceptance;
    laplacian_(br.from, br.from) += br.susceptance;
    laplacian_(br.to, br.to) += br.susceptance;
    laplacian_(br.from, br.to) -= br.susceptance;
    laplacian_(br.to, br.from) -= br.susceptance;
  }
}

std::optional<std::size_t> Network::find_label(std::string_view label) const {
  for (std::size_t v = 0; v < buses_.size(); ++v)
    if (buses_[v].label == label) return v;
  return std::nullopt;
}

std::optional<std::size_t> Network::find_bus_id(int bus_id) const {
  for (std::size_t v = 0; v < buses_.size(); ++v)
    if (buses_[v].bus_id == bus_id) return v;
  return std::nullopt;
}

DenseMatrix Network::susceptance_diag() const {
  DenseMatrix b(edges_.size(), edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) b(e, e) = edges_[e].susceptance;
  return b;
}

std::vector<graph::EdgeEnds> Network::edge_ends() const {
  std::vector<graph::EdgeEnds> out;
  out.reserve(edges_.size());
  for (const auto& br : edges_) out.push_back({br.from, br.to});
  return out;
}

bool Network::is_connected() const { return graph::is_connected(n_bus(), edge_ends()); }

std::string Network::branch_label(std::size_t e) const {
  const auto& br = edges_.at(e);
  return fmt::format("({},{})", label(br.from), label(br.to));
}

void OpfParams::validate(const Network& net) const {
  if (cost.size() != net.n_gen() || gen_upper.size() != net.n_gen() ||
      gen_lower.size() != net.n_gen() || flow_upper.size() != net.n_branch() ||
      flow_lower.size() != net.n_branch()) {
    throw Error(ErrorKind::DimensionMismatch, "OPF parameters do not match network size");
  }
  for (std::size_t i = 0; i < net.n_gen(); ++i) {
    if (!(cost[i] >= 0.0) || !std::isfinite(cost[i])) {
      throw Error(ErrorKind::InvalidLimits, fmt::format("generator {} cost must be >= 0", i));
    }
    if (!(gen_lower[i] >= 0.0) || !(gen_lower[i] <= gen_upper[i]) ||
        !std::isfinite(gen_upper[i])) {
      throw Error(ErrorKind::InvalidLimits,
                  fmt::format("generator {} limits must satisfy 0 <= lower <= upper", i));
    }
  }
  for (std::size_t e = 0; e < net.n_branch(); ++e) {
    if (!(flow_lower[e] <= flow_upper[e]) || !std::isfinite(flow_lower[e]) ||
        !std::isfinite(flow_upper[e])) {
      throw Error(ErrorKind::InvalidLimits, fmt::format("branch {} flow limits inverted", e));
    }
  }
}

void LoadVector::validate(const Network& net) const {
  if (values.size() != net.n_load()) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("load vector has {} entries, network has {} loads", values.size(),
                            net.n_load()));
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidLimits, "loads must be finite and non-negative");
    }
  }
}

bool LoadVector::strictly_positive() const {
  for (double v : values)
    if (!(v > 0.0)) return false;
  return true;
}

OpfParams take_generator_offline(const OpfParams& params, std::size_t gen, double epsilon) {
  if (gen >= params.gen_upper.size()) {
    throw Error(ErrorKind::InvalidIndex, fmt::format("no generator {}", gen));
  }
  OpfParams out = params;
  out.gen_lower[gen] = 0.0;
  out.gen_upper[gen] = epsilon;
  return out;
}

}  // namespace opfsens
