#include "opfsens/graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <utility>

namespace opfsens::graph {

namespace {

struct Adjacent {
  std::size_t vertex;
  std::size_t edge;
};

std::vector<std::vector<Adjacent>> adjacency(std::size_t n, std::span<const EdgeEnds> edges,
                                             std::span<const bool> removed) {
  std::vector<std::vector<Adjacent>> adj(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!removed.empty() && removed[e]) continue;
    adj[edges[e].u].push_back({edges[e].v, e});
    adj[edges[e].v].push_back({edges[e].u, e});
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end(), [](const Adjacent& a, const Adjacent& b) {
      return a.vertex != b.vertex ? a.vertex < b.vertex : a.edge < b.edge;
    });
  }
  return adj;
}

constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();

}  // namespace

std::vector<std::size_t> component_labels(std::size_t n_vertices,
                                          std::span<const EdgeEnds> edges,
                                          std::span<const bool> removed) {
  const auto adj = adjacency(n_vertices, edges, removed);
  std::vector<std::size_t> label(n_vertices, kUnset);
  std::size_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n_vertices; ++s) {
    if (label[s] != kUnset) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (const auto& a : adj[v]) {
        if (label[a.vertex] == kUnset) {
          label[a.vertex] = next;
          stack.push_back(a.vertex);
        }
      }
    }
    ++next;
  }
  return label;
}

std::size_t component_count(std::span<const std::size_t> labels) {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

bool is_connected(std::size_t n_vertices, std::span<const EdgeEnds> edges) {
  return component_count(component_labels(n_vertices, edges)) <= 1;
}

std::vector<std::size_t> bridges(std::size_t n_vertices, std::span<const EdgeEnds> edges) {
  const auto adj = adjacency(n_vertices, edges, {});
  std::vector<std::size_t> disc(n_vertices, kUnset);
  std::vector<std::size_t> low(n_vertices, 0);
  std::vector<std::size_t> out;
  std::size_t timer = 0;

  // Iterative DFS; each frame remembers the edge used to enter the vertex so
  // that a parallel edge still counts as a back edge.
  struct Frame {
    std::size_t vertex;
    std::size_t parent_edge;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (std::size_t root = 0; root < n_vertices; ++root) {
    if (disc[root] != kUnset) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, kUnset, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.vertex].size()) {
        const Adjacent a = adj[f.vertex][f.next++];
        if (a.edge == f.parent_edge) continue;
        if (disc[a.vertex] == kUnset) {
          disc[a.vertex] = low[a.vertex] = timer++;
          stack.push_back({a.vertex, a.edge, 0});
        } else {
          low[f.vertex] = std::min(low[f.vertex], disc[a.vertex]);
        }
        continue;
      }
      const Frame done = f;
      stack.pop_back();
      if (!stack.empty()) {
        Frame& parent = stack.back();
        low[parent.vertex] = std::min(low[parent.vertex], low[done.vertex]);
        if (low[done.vertex] > disc[parent.vertex]) out.push_back(done.parent_edge);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Path> shortest_path(std::size_t n_vertices, std::span<const EdgeEnds> edges,
                                  std::size_t source, std::size_t target) {
  const auto adj = adjacency(n_vertices, edges, {});
  // Distances to the target let a greedy walk from the source pick the
  // smallest next vertex that stays on some shortest path.
  std::vector<std::size_t> dist(n_vertices, kUnset);
  std::queue<std::size_t> queue;
  dist[target] = 0;
  queue.push(target);
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop();
    for (const auto& a : adj[v]) {
      if (dist[a.vertex] == kUnset) {
        dist[a.vertex] = dist[v] + 1;
        queue.push(a.vertex);
      }
    }
  }
  if (dist[source] == kUnset) return std::nullopt;

  Path path;
  path.vertices.push_back(source);
  std::size_t v = source;
  while (v != target) {
    for (const auto& a : adj[v]) {
      if (dist[a.vertex] + 1 == dist[v]) {
        path.edges.push_back(a.edge);
        path.vertices.push_back(a.vertex);
        v = a.vertex;
        break;
      }
    }
  }
  return path;
}

}  // namespace opfsens::graph
