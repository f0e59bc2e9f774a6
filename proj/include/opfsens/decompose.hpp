#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "opfsens/binding_set.hpp"
#include "opfsens/network.hpp"
#include "opfsens/sensitivity.hpp"

namespace opfsens {

std::vector<std::size_t> find_bridges(const Network& net);

struct CollapsedSide {
  std::size_t bridge;                 // parent edge index
  std::vector<std::size_t> vertices;  // parent vertices replaced by one bus
  bool as_generator = false;
};

/// A network with off-path bridge sides collapsed to single buses.
struct PrunedNetwork {
  Network network;
  /// Pruned vertex -> parent vertex; nullopt for a collapsed bus.
  std::vector<std::optional<std::size_t>> vertex_map;
  /// Pruned edge -> parent edge.
  std::vector<std::size_t> edge_map;
  std::vector<CollapsedSide> collapsed;
  std::size_t gen_vertex = 0;
  std::size_t load_vertex = 0;
};

/// For every bridge with two non-generator endpoints whose deletion keeps the
/// generator and the load connected, the side away from them becomes one bus
/// (a generator if it holds any generator, else a load) hanging off the
/// bridge. Nested sides collapse into the outermost one.
PrunedNetwork prune_offpath(const Network& net, std::size_t gen, std::size_t load);

/// One subproblem of the chain: a component between two path bridges, with
/// an augmented generator where the previous bridge enters and an augmented
/// load where the next bridge leaves.
struct Stage {
  Network network;
  /// Stage vertex -> vertex of the partitioned network; nullopt if augmented.
  std::vector<std::optional<std::size_t>> vertex_map;
  /// Stage edge -> edge of the partitioned network (augmented stubs map to
  /// their bridge).
  std::vector<std::size_t> edge_map;
  std::optional<std::size_t> entry_bridge;  // bridge feeding the augmented generator
  std::optional<std::size_t> exit_bridge;   // bridge feeding the augmented load
  std::size_t source_gen = 0;               // generator index within the stage
  std::size_t target_load = 0;              // load index within the stage
};

struct ChainDecomposition {
  graph::Path path;
  /// Path bridges used as cut points, ordered from the generator side.
  std::vector<std::size_t> bridges;
  /// Path bridges ignored because they only split off the source generator or
  /// the target load (their factor is exactly 1).
  std::vector<std::size_t> trivial_bridges;
  std::vector<Stage> stages;
};

/// Stages along the lexicographically smallest shortest path from the
/// generator vertex to the load vertex. Throws NoPath.
ChainDecomposition chain_partition(const Network& net, std::size_t gen_vertex,
                                   std::size_t load_vertex);

struct StageResult {
  double value = 0.0;
  BindingSet argmax;  // in stage indices
  /// argmax members expressed in the original network; augmented buses and
  /// collapsed buses are omitted, stubs map to their bridge.
  std::vector<std::size_t> parent_gens;
  std::vector<std::size_t> parent_branches;
  std::uint64_t candidates_total = 0;
  std::uint64_t candidates_valid = 0;
};

struct DecomposedResult {
  double value = 1.0;
  std::vector<StageResult> stages;
  PrunedNetwork pruned;
  ChainDecomposition decomposition;
};

/// Product of the per-stage worst cases. Stages run concurrently within the
/// thread budget of `options`.
DecomposedResult worst_case_decomposed(const Network& net, std::size_t gen, std::size_t load,
                                       const SearchOptions& options = {});

}  // namespace opfsens
