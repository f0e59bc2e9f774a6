#include "opfsens/decompose.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include <fmt/core.h>

#include "opfsens/error.hpp"
#include "opfsens/graph.hpp"

namespace opfsens {

namespace {

std::vector<std::size_t> labels_without(const Network& net,
                                        const std::vector<std::size_t>& cut) {
  const auto ends = net.edge_ends();
  auto removed = std::make_unique<bool[]>(ends.size());
  for (auto e : cut) removed[e] = true;
  return graph::component_labels(net.n_bus(), ends,
                                 std::span<const bool>(removed.get(), ends.size()));
}

// Assembles a network from parent vertices (generators first) plus extra
// buses, keeping Branch endpoints expressed through `local`.
struct Builder {
  std::vector<BusInfo> gen_buses, load_buses;
  std::vector<std::optional<std::size_t>> gen_src, load_src;

  // Returns a provisional id; generators are finalized to [0, n_gen), loads
  // to [n_gen, n).
  std::size_t add(BusInfo info, std::optional<std::size_t> src, bool is_gen) {
    if (is_gen) {
      gen_buses.push_back(std::move(info));
      gen_src.push_back(src);
      return gen_buses.size() - 1;
    }
    load_buses.push_back(std::move(info));
    load_src.push_back(src);
    return kLoadFlag | (load_buses.size() - 1);
  }

  std::size_t resolve(std::size_t id) const {
    return (id & kLoadFlag) ? gen_buses.size() + (id & ~kLoadFlag) : id;
  }

  static constexpr std::size_t kLoadFlag = std::size_t{1} << (sizeof(std::size_t) * 8 - 1);
};

Network finish(const Builder& b, const std::vector<std::pair<std::size_t, std::size_t>>& ends,
               const std::vector<double>& susceptance,
               std::vector<std::optional<std::size_t>>& vertex_map) {
  std::vector<BusInfo> buses = b.gen_buses;
  buses.insert(buses.end(), b.load_buses.begin(), b.load_buses.end());
  vertex_map = b.gen_src;
  vertex_map.insert(vertex_map.end(), b.load_src.begin(), b.load_src.end());
  std::vector<Branch> edges;
  for (std::size_t k = 0; k < ends.size(); ++k)
    edges.push_back({b.resolve(ends[k].first), b.resolve(ends[k].second), susceptance[k]});
  return Network(b.gen_buses.size(), b.load_buses.size(), std::move(edges), std::move(buses));
}

}  // namespace

std::vector<std::size_t> find_bridges(const Network& net) {
  const auto ends = net.edge_ends();
  return graph::bridges(net.n_bus(), ends);
}

PrunedNetwork prune_offpath(const Network& net, std::size_t gen, std::size_t load) {
  if (gen >= net.n_gen() || load >= net.n_load())
    throw Error(ErrorKind::InvalidIndex, "generator or load index out of range");
  const std::size_t gv = gen;
  const std::size_t lv = net.load_vertex(load);

  std::vector<CollapsedSide> sides;
  for (auto b : find_bridges(net)) {
    const Branch& br = net.edge(b);
    if (net.is_generator(br.from) || net.is_generator(br.to)) continue;
    const auto labels = labels_without(net, {b});
    if (labels[gv] != labels[lv]) continue;
    const std::size_t far = labels[br.from] == labels[gv] ? br.to : br.from;
    CollapsedSide side{b, {}, false};
    for (std::size_t v = 0; v < net.n_bus(); ++v) {
      if (labels[v] != labels[far]) continue;
      side.vertices.push_back(v);
      side.as_generator = side.as_generator || net.is_generator(v);
    }
    sides.push_back(std::move(side));
  }
  // Sides of different bridges are nested or disjoint; keep the outermost.
  std::stable_sort(sides.begin(), sides.end(), [](const auto& a, const auto& b) {
    return a.vertices.size() > b.vertices.size();
  });
  std::vector<std::optional<std::size_t>> owner(net.n_bus());
  PrunedNetwork out{Network(1, 0, {}, {BusInfo{-1, "0"}}), {}, {}, {}, 0, 0};
  for (auto& side : sides) {
    if (owner[side.vertices.front()]) continue;
    for (auto v : side.vertices) owner[v] = out.collapsed.size();
    out.collapsed.push_back(std::move(side));
  }
  std::sort(out.collapsed.begin(), out.collapsed.end(),
            [](const auto& a, const auto& b) { return a.bridge < b.bridge; });
  for (std::size_t c = 0; c < out.collapsed.size(); ++c)
    for (auto v : out.collapsed[c].vertices) owner[v] = c;

  Builder builder;
  std::vector<std::size_t> local(net.n_bus());
  std::vector<std::size_t> collapsed_local(out.collapsed.size());
  for (int pass = 0; pass < 2; ++pass) {
    const bool gens = pass == 0;
    for (std::size_t v = 0; v < net.n_bus(); ++v) {
      if (net.is_generator(v) != gens || owner[v]) continue;
      local[v] = builder.add(net.bus(v), v, gens);
    }
    for (std::size_t c = 0; c < out.collapsed.size(); ++c) {
      if (out.collapsed[c].as_generator != gens) continue;
      collapsed_local[c] = builder.add(
          BusInfo{-1, "side" + net.branch_label(out.collapsed[c].bridge)}, std::nullopt, gens);
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> ends;
  std::vector<double> sus;
  for (std::size_t e = 0; e < net.n_branch(); ++e) {
    const Branch& br = net.edge(e);
    const bool in_from = owner[br.from].has_value();
    const bool in_to = owner[br.to].has_value();
    if (in_from && in_to) continue;
    const std::size_t a = in_from ? collapsed_local[*owner[br.from]] : local[br.from];
    const std::size_t b = in_to ? collapsed_local[*owner[br.to]] : local[br.to];
    ends.emplace_back(a, b);
    sus.push_back(br.susceptance);
    out.edge_map.push_back(e);
  }
  out.network = finish(builder, ends, sus, out.vertex_map);
  out.gen_vertex = builder.resolve(local[gv]);
  out.load_vertex = builder.resolve(local[lv]);
  return out;
}

ChainDecomposition chain_partition(const Network& net, std::size_t gen_vertex,
                                   std::size_t load_vertex) {
  if (gen_vertex >= net.n_gen() || load_vertex < net.n_gen() || load_vertex >= net.n_bus())
    throw Error(ErrorKind::InvalidIndex, "partition endpoints must be a generator and a load");
  const auto ends = net.edge_ends();
  auto path = graph::shortest_path(net.n_bus(), ends, gen_vertex, load_vertex);
  if (!path) {
    throw Error(ErrorKind::NoPath, fmt::format("no path from {} to {}", net.label(gen_vertex),
                                               net.label(load_vertex)));
  }
  ChainDecomposition dec;
  dec.path = *path;

  const auto all_bridges = find_bridges(net);
  for (auto e : dec.path.edges) {
    if (!std::binary_search(all_bridges.begin(), all_bridges.end(), e)) continue;
    const auto labels = labels_without(net, {e});
    std::size_t src_side = 0, dst_side = 0;
    for (std::size_t v = 0; v < net.n_bus(); ++v) {
      src_side += labels[v] == labels[gen_vertex];
      dst_side += labels[v] == labels[load_vertex];
    }
    if (src_side == 1 || dst_side == 1)
      dec.trivial_bridges.push_back(e);
    else
      dec.bridges.push_back(e);
  }

  const auto labels = labels_without(net, dec.bridges);
  // Component of each stage, following the path from the generator.
  std::vector<std::size_t> comp{labels[gen_vertex]};
  for (auto e : dec.bridges) {
    const Branch& br = net.edge(e);
    const std::size_t next = labels[br.from] == comp.back() ? labels[br.to] : labels[br.from];
    comp.push_back(next);
  }

  const std::size_t m = comp.size();
  for (std::size_t l = 0; l < m; ++l) {
    Stage st{Network(1, 0, {}, {BusInfo{-1, "0"}}), {}, {}, std::nullopt, std::nullopt, 0, 0};
    Builder builder;
    std::vector<std::size_t> local(net.n_bus());
    std::optional<std::size_t> p_local, q_local, entry_vertex, exit_vertex;
    if (l > 0) {
      st.entry_bridge = dec.bridges[l - 1];
      const Branch& br = net.edge(*st.entry_bridge);
      entry_vertex = labels[br.from] == comp[l] ? br.from : br.to;
      p_local = builder.add(BusInfo{-1, fmt::format("p{}[{}]", l, net.label(*entry_vertex))},
                            std::nullopt, true);
    }
    if (l + 1 < m) {
      st.exit_bridge = dec.bridges[l];
      const Branch& br = net.edge(*st.exit_bridge);
      exit_vertex = labels[br.from] == comp[l] ? br.from : br.to;
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t v = 0; v < net.n_bus(); ++v) {
        if (labels[v] != comp[l] || net.is_generator(v) != (pass == 0)) continue;
        local[v] = builder.add(net.bus(v), v, pass == 0);
      }
    }
    if (exit_vertex) {
      q_local = builder.add(BusInfo{-1, fmt::format("q{}[{}]", l + 1, net.label(*exit_vertex))},
                            std::nullopt, false);
    }

    std::vector<std::pair<std::size_t, std::size_t>> stage_ends;
    std::vector<double> sus;
    for (std::size_t e = 0; e < net.n_branch(); ++e) {
      const Branch& br = net.edge(e);
      if (labels[br.from] != comp[l] || labels[br.to] != comp[l]) continue;
      stage_ends.emplace_back(local[br.from], local[br.to]);
      sus.push_back(br.susceptance);
      st.edge_map.push_back(e);
    }
    if (p_local) {
      stage_ends.emplace_back(*p_local, local[*entry_vertex]);
      sus.push_back(net.edge(*st.entry_bridge).susceptance);
      st.edge_map.push_back(*st.entry_bridge);
    }
    if (q_local) {
      stage_ends.emplace_back(local[*exit_vertex], *q_local);
      sus.push_back(net.edge(*st.exit_bridge).susceptance);
      st.edge_map.push_back(*st.exit_bridge);
    }
    st.network = finish(builder, stage_ends, sus, st.vertex_map);
    st.source_gen = p_local ? builder.resolve(*p_local) : builder.resolve(local[gen_vertex]);
    const std::size_t target = q_local ? builder.resolve(*q_local) : builder.resolve(local[load_vertex]);
    st.target_load = target - st.network.n_gen();
    dec.stages.push_back(std::move(st));
  }
  return dec;
}

DecomposedResult worst_case_decomposed(const Network& net, std::size_t gen, std::size_t load,
                                       const SearchOptions& options) {
  DecomposedResult out{1.0, {}, prune_offpath(net, gen, load), {}};
  out.decomposition = chain_partition(out.pruned.network, out.pruned.gen_vertex,
                                      out.pruned.load_vertex);
  const auto& stages = out.decomposition.stages;
  const std::size_t m = stages.size();
  out.stages.resize(m);

  const std::size_t budget = std::max<std::size_t>(1, options.threads);
  const std::size_t workers = std::min(budget, m);
  SearchOptions inner = options;
  inner.threads = std::max<std::size_t>(1, budget / workers);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (std::size_t l = next++; l < m; l = next++) {
        const Stage& st = stages[l];
        const SisoResult r = worst_case_siso(st.network, st.source_gen, st.target_load, inner);
        StageResult& sr = out.stages[l];
        sr.value = r.value;
        sr.argmax = r.argmax;
        sr.candidates_total = r.candidates_total;
        sr.candidates_valid = r.candidates_valid;
        for (auto g : r.argmax.gens) {
          const auto pv = st.vertex_map[g];
          if (!pv) continue;
          const auto parent = out.pruned.vertex_map[*pv];
          if (parent) sr.parent_gens.push_back(*parent);
        }
        for (auto e : r.argmax.branches)
          sr.parent_branches.push_back(out.pruned.edge_map[st.edge_map[e]]);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& s : out.stages) out.value *= s.value;
  return out;
}

}  // namespace opfsens
