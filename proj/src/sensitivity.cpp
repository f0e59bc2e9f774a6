#include "opfsens/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/core.h>

#include "opfsens/error.hpp"
#include "opfsens/graph.hpp"
#include "opfsens/jacobian.hpp"

namespace opfsens {

namespace {

constexpr std::uint64_t kNoRank = std::numeric_limits<std::uint64_t>::max();

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max() / 2) {
      throw Error(ErrorKind::InvalidIndex, "candidate space exceeds 2^63 sets");
    }
  }
  return static_cast<std::uint64_t>(r);
}

// Lexicographic unranking of k-subsets of {0..n-1}.
std::vector<std::size_t> unrank(std::size_t n, std::size_t k, std::uint64_t rank) {
  std::vector<std::size_t> c(k);
  std::size_t x = 0;
  for (std::size_t i = 0; i < k; ++i) {
    while (true) {
      const std::uint64_t block = binomial(n - x - 1, k - i - 1);
      if (rank < block) break;
      rank -= block;
      ++x;
    }
    c[i] = x++;
  }
  return c;
}

bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

BindingSet to_set(const std::vector<std::size_t>& c, std::size_t ng) {
  BindingSet s;
  for (auto x : c) {
    if (x < ng)
      s.gens.push_back(x);
    else
      s.branches.push_back(x - ng);
  }
  return s;
}

// Keeps, in rank order, every candidate that can still be the lowest-ranked
// member of the tie class of the final maximum. Values are strictly
// increasing along the list, so it stays short.
class TieTracker {
 public:
  void offer(std::uint64_t rank, double value, double rel_tol) {
    if (!kept_.empty() && value <= kept_.back().second) return;
    kept_.emplace_back(rank, value);
    const double floor = value * (1.0 - rel_tol);
    std::size_t drop = 0;
    while (kept_[drop].second < floor) ++drop;
    if (drop) kept_.erase(kept_.begin(), kept_.begin() + static_cast<long>(drop));
  }

  double max() const { return kept_.empty() ? -1.0 : kept_.back().second; }
  const std::vector<std::pair<std::uint64_t, double>>& kept() const { return kept_; }

 private:
  std::vector<std::pair<std::uint64_t, double>> kept_;
};

struct SlotResult {
  double value = -1.0;
  std::uint64_t rank = kNoRank;
};

struct SearchOutcome {
  std::vector<SlotResult> slots;
  std::uint64_t total = 0;
  std::uint64_t valid = 0;
};

using ScoreFn = std::function<void(const DenseMatrix& jac, std::vector<double>& out)>;

// Scores every independent candidate and reduces each slot to its maximum
// with the lowest-ranked tie. Chunks are contiguous rank ranges; the reduction
// does not depend on how they are split or scheduled.
SearchOutcome search(const Network& net, std::size_t slots, const ScoreFn& score,
                     const SearchOptions& options) {
  const std::size_t ng = net.n_gen();
  const std::size_t ground = ng + net.n_branch();
  const std::size_t k = ng - 1;
  const std::uint64_t total = binomial(ground, k);
  const std::size_t threads = std::max<std::size_t>(1, options.threads);
  const std::uint64_t chunks = std::max<std::uint64_t>(1, std::min<std::uint64_t>(total, threads * 8));

  std::vector<std::vector<TieTracker>> trackers(chunks, std::vector<TieTracker>(slots));
  std::vector<std::uint64_t> valid(chunks, 0);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      std::vector<double> values(slots);
      for (std::uint64_t ch = next++; ch < chunks; ch = next++) {
        const std::uint64_t begin = total * ch / chunks;
        const std::uint64_t end = total * (ch + 1) / chunks;
        auto comb = unrank(ground, k, begin);
        for (std::uint64_t rank = begin; rank < end; ++rank) {
          const BindingSet set = to_set(comb, ng);
          if (auto jr = try_jacobian_from_binding(net, set, options.rank_tol)) {
            ++valid[ch];
            score(jr->j, values);
            for (std::size_t s = 0; s < slots; ++s)
              trackers[ch][s].offer(rank, values[s], options.tie_rel_tol);
          }
          next_combination(comb, ground);
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  const std::size_t n_workers = static_cast<std::size_t>(std::min<std::uint64_t>(threads, chunks));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SearchOutcome out;
  out.total = total;
  for (auto v : valid) out.valid += v;
  if (out.valid == 0) {
    throw Error(ErrorKind::NoValidSet, "no independent binding set exists for this network");
  }
  out.slots.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    double best = -1.0;
    for (const auto& ch : trackers) best = std::max(best, ch[s].max());
    const double floor = best * (1.0 - options.tie_rel_tol);
    for (const auto& ch : trackers) {
      const auto& kept = ch[s].kept();
      auto it = std::find_if(kept.begin(), kept.end(),
                             [&](const auto& p) { return p.second >= floor; });
      if (it != kept.end()) {
        out.slots[s] = {best, it->first};
        break;
      }
    }
  }
  return out;
}

void check_gen(const Network& net, std::size_t gen) {
  if (gen >= net.n_gen())
    throw Error(ErrorKind::InvalidIndex, fmt::format("generator index {} out of range", gen));
}

void check_load(const Network& net, std::size_t load) {
  if (load >= net.n_load())
    throw Error(ErrorKind::InvalidIndex, fmt::format("load index {} out of range", load));
}

}  // namespace

std::uint64_t candidate_count(const Network& net) {
  return binomial(net.n_gen() + net.n_branch(), net.n_gen() - 1);
}

BindingSet candidate_at(const Network& net, std::uint64_t rank) {
  if (rank >= candidate_count(net))
    throw Error(ErrorKind::InvalidIndex, fmt::format("candidate rank {} out of range", rank));
  return to_set(unrank(net.n_gen() + net.n_branch(), net.n_gen() - 1, rank), net.n_gen());
}

void for_each_binding_set(const Network& net,
                          const std::function<void(std::uint64_t, const BindingSet&)>& fn,
                          double rank_tol) {
  const std::size_t ng = net.n_gen();
  const std::size_t ground = ng + net.n_branch();
  const std::uint64_t total = candidate_count(net);
  auto comb = unrank(ground, ng - 1, 0);
  for (std::uint64_t rank = 0; rank < total; ++rank) {
    const BindingSet set = to_set(comb, ng);
    if (independence_check(net, set, rank_tol)) fn(rank, set);
    next_combination(comb, ground);
  }
}

std::vector<BindingSet> enumerate_binding_sets(const Network& net, double rank_tol) {
  std::vector<BindingSet> out;
  for_each_binding_set(net, [&](std::uint64_t, const BindingSet& s) { out.push_back(s); },
                       rank_tol);
  return out;
}

SisoResult worst_case_siso(const Network& net, std::size_t gen, std::size_t load,
                           const SearchOptions& options) {
  check_gen(net, gen);
  check_load(net, load);
  const auto res = search(
      net, 1, [&](const DenseMatrix& j, std::vector<double>& out) { out[0] = std::abs(j(gen, load)); },
      options);
  return {res.slots[0].value, candidate_at(net, res.slots[0].rank), res.slots[0].rank, res.total,
          res.valid};
}

SensitivityReport worst_case_all(const Network& net, const SearchOptions& options) {
  const std::size_t ng = net.n_gen();
  const std::size_t nl = net.n_load();
  if (nl == 0) throw Error(ErrorKind::DimensionMismatch, "network has no loads");
  const auto res = search(
      net, ng * nl,
      [&](const DenseMatrix& j, std::vector<double>& out) {
        for (std::size_t g = 0; g < ng; ++g)
          for (std::size_t l = 0; l < nl; ++l) out[g * nl + l] = std::abs(j(g, l));
      },
      options);
  SensitivityReport rep;
  rep.cwc = DenseMatrix(ng, nl);
  rep.candidates_total = res.total;
  rep.candidates_valid = res.valid;
  for (std::size_t g = 0; g < ng; ++g) {
    for (std::size_t l = 0; l < nl; ++l) {
      const auto& slot = res.slots[g * nl + l];
      rep.cwc(g, l) = slot.value;
      rep.argmax.push_back(candidate_at(net, slot.rank));
      rep.argmax_rank.push_back(slot.rank);
    }
  }
  return rep;
}

SisoResult worst_case_miso(const Network& net, std::size_t gen,
                           const std::vector<std::size_t>& loads,
                           const SearchOptions& options) {
  check_gen(net, gen);
  if (loads.empty()) throw Error(ErrorKind::EmptyLoadSet, "load set is empty");
  for (auto l : loads) check_load(net, l);
  const auto res = search(
      net, 1,
      [&](const DenseMatrix& j, std::vector<double>& out) {
        double sq = 0.0;
        for (auto l : loads) sq += j(gen, l) * j(gen, l);
        out[0] = std::sqrt(sq);
      },
      options);
  return {res.slots[0].value, candidate_at(net, res.slots[0].rank), res.slots[0].rank, res.total,
          res.valid};
}

double local_sensitivity(const Network& net, const OpfParams& params, const LoadVector& load,
                         std::size_t gen, std::size_t load_idx, const SolveOptions& options) {
  check_gen(net, gen);
  check_load(net, load_idx);
  const OpfSolution sol = solve_opf(net, params, load, options);
  const BindingSet set = extract_binding_set(sol, net, params);
  return std::abs(jacobian_from_binding(net, set).j(gen, load_idx));
}

SampledBound sampled_sensitivity(const Network& net, const OpfParams& params,
                                 const std::vector<double>& low,
                                 const std::vector<double>& high, std::size_t gen,
                                 std::size_t load_idx, std::size_t samples,
                                 std::uint64_t seed, const SolveOptions& options) {
  check_gen(net, gen);
  check_load(net, load_idx);
  if (low.size() != net.n_load() || high.size() != net.n_load())
    throw Error(ErrorKind::DimensionMismatch, "load box size differs from the load count");
  std::mt19937_64 rng(seed);
  SampledBound out;
  LoadVector load{std::vector<double>(net.n_load())};
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t j = 0; j < net.n_load(); ++j)
      load.values[j] = std::uniform_real_distribution<double>(low[j], high[j])(rng);
    ++out.samples;
    try {
      const OpfSolution sol = solve_opf(net, params, load, options);
      const BindingSet set = extract_binding_set(sol, net, params);
      const double v = std::abs(jacobian_from_binding(net, set).j(gen, load_idx));
      ++out.regular;
      if (v > out.value) {
        out.value = v;
        out.argmax = set;
      }
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Infeasible:
        case ErrorKind::DegeneratePoint:
        case ErrorKind::DependentBindings:
          continue;
        default:
          throw;
      }
    }
  }
  return out;
}

StructuralCheck structural_check(const Network& net, const BindingSet& set) {
  const auto ends = net.edge_ends();
  auto removed = std::make_unique<bool[]>(ends.size());
  for (auto e : set.branches) {
    if (e >= ends.size()) throw Error(ErrorKind::InvalidIndex, "branch index out of range");
    removed[e] = true;
  }
  const auto labels =
      graph::component_labels(net.n_bus(), ends, std::span<const bool>(removed.get(), ends.size()));
  StructuralCheck out;
  out.components.resize(graph::component_count(labels));
  for (std::size_t v = 0; v < net.n_bus(); ++v) out.components[labels[v]].push_back(v);
  std::vector<bool> binding(net.n_gen(), false);
  for (auto g : set.gens) binding.at(g) = true;
  for (std::size_t c = 0; c < out.components.size(); ++c) {
    const bool has_free = std::any_of(out.components[c].begin(), out.components[c].end(),
                                      [&](std::size_t v) { return net.is_generator(v) && !binding[v]; });
    if (!has_free) out.failing.push_back(c);
  }
  out.passed = out.failing.empty();
  return out;
}

}  // namespace opfsens
