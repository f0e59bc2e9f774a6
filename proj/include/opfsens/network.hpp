#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opfsens/graph.hpp"
#include "opfsens/linalg.hpp"

namespace opfsens {

struct Branch {
  std::size_t from;
  std::size_t to;
  double susceptance;  // per-unit, > 0
};

/// Identity of a vertex outside the internal numbering.
struct BusInfo {
  int bus_id = -1;     // original MATPOWER id, -1 for synthetic buses
  std::string label;   // unique display name, e.g. "7", "8'", "p1[4'']"
};

/// Power network graph with generators numbered first.
///
/// Vertices 0..n_gen-1 are generator buses and n_gen..n_bus-1 are load buses.
/// The incidence matrix C (N x E), the flow map B C^T (E x N) and the
/// Laplacian L = C B C^T (N x N) are assembled on construction.
class Network {
 public:
  Network(std::size_t n_gen, std::size_t n_load, std::vector<Branch> edges,
          std::vector<BusInfo> buses);

  std::size_t n_gen() const noexcept { return n_gen_; }
  std::size_t n_load() const noexcept { return n_load_; }
  std::size_t n_bus() const noexcept { return n_gen_ + n_load_; }
  std::size_t n_branch() const noexcept { return edges_.size(); }

  const std::vector<Branch>& edges() const noexcept { return edges_; }
  const Branch& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<BusInfo>& buses() const noexcept { return buses_; }
  const BusInfo& bus(std::size_t v) const { return buses_.at(v); }
  const std::string& label(std::size_t v) const { return buses_.at(v).label; }

  bool is_generator(std::size_t v) const noexcept { return v < n_gen_; }
  std::size_t load_vertex(std::size_t load_index) const noexcept { return n_gen_ + load_index; }

  std::optional<std::size_t> find_label(std::string_view label) const;
  std::optional<std::size_t> find_bus_id(int bus_id) const;

  const DenseMatrix& incidence() const noexcept { return incidence_; }
  const DenseMatrix& laplacian() const noexcept { return laplacian_; }
  /// B C^T: maps angles to branch flows.
  const DenseMatrix& flow_map() const noexcept { return flow_map_; }
  DenseMatrix susceptance_diag() const;

  std::vector<graph::EdgeEnds> edge_ends() const;
  bool is_connected() const;

  /// "(u,v)" using bus labels.
  std::string branch_label(std::size_t e) const;

 private:
  std::size_t n_gen_;
  std::size_t n_load_;
  std::vector<Branch> edges_;
  std::vector<BusInfo> buses_;
  DenseMatrix incidence_;
  DenseMatrix laplacian_;
  DenseMatrix flow_map_;
};

/// Cost vector and operating limits, all in per-unit.
struct OpfParams {
  std::vector<double> cost;
  std::vector<double> gen_upper;
  std::vector<double> gen_lower;
  std::vector<double> flow_upper;
  std::vector<double> flow_lower;

  /// Throws DimensionMismatch or InvalidLimits.
  void validate(const Network& net) const;
};

/// Load vector s^l indexed by load number (vertex n_gen + j).
struct LoadVector {
  std::vector<double> values;

  /// Throws DimensionMismatch on size mismatch and InvalidLimits on negative
  /// or non-finite entries. Zero demand is accepted.
  void validate(const Network& net) const;
  bool strictly_positive() const;
};

/// A network together with the data needed to solve the OPF on it.
struct NetworkCase {
  Network network;
  OpfParams params;
  LoadVector load;
  std::vector<std::string> warnings;
};

/// Generation and flow limits used when MATPOWER rate_a is 0 (unlimited).
inline constexpr double kUnlimitedFlowPu = 10.0;

/// Generator output cap used to model a unit going offline.
inline constexpr double kOfflineEpsilon = 1e-5;

/// Copy of `params` with generator `gen` capped at `epsilon`.
OpfParams take_generator_offline(const OpfParams& params, std::size_t gen,
                                 double epsilon = kOfflineEpsilon);

}  // namespace opfsens
