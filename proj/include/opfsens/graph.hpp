#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace opfsens::graph {

struct EdgeEnds {
  std::size_t u;
  std::size_t v;
};

/// Component id per vertex, ids assigned in order of the smallest vertex in
/// each component. Edges whose index is flagged in `removed` are ignored.
std::vector<std::size_t> component_labels(std::size_t n_vertices,
                                          std::span<const EdgeEnds> edges,
                                          std::span<const bool> removed = {});

std::size_t component_count(std::span<const std::size_t> labels);

bool is_connected(std::size_t n_vertices, std::span<const EdgeEnds> edges);

/// Bridge edge indices in ascending order (single low-link DFS pass;
/// parallel edges are never bridges).
std::vector<std::size_t> bridges(std::size_t n_vertices, std::span<const EdgeEnds> edges);

struct Path {
  std::vector<std::size_t> vertices;
  std::vector<std::size_t> edges;
};

/// Shortest path by edge count. Among shortest paths the lexicographically
/// smallest vertex sequence is returned; parallel edges resolve to the
/// smallest edge index.
std::optional<Path> shortest_path(std::size_t n_vertices, std::span<const EdgeEnds> edges,
                                  std::size_t source, std::size_t target);

}  // namespace opfsens::graph
