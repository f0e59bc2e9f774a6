#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "opfsens/binding_set.hpp"
#include "opfsens/dcopf.hpp"
#include "opfsens/linalg.hpp"
#include "opfsens/network.hpp"

namespace opfsens {

/// Candidate sets are the (N_G - 1)-subsets of the ground set formed by the
/// generators (0..N_G-1) followed by the branches (N_G..N_G+E-1), taken in
/// lexicographic order. The rank of a candidate is its position in that order.
std::uint64_t candidate_count(const Network& net);

/// Candidate with the given rank. Throws InvalidIndex when out of range.
BindingSet candidate_at(const Network& net, std::uint64_t rank);

/// Calls `fn(rank, set)` for every independent candidate, in rank order.
void for_each_binding_set(const Network& net,
                          const std::function<void(std::uint64_t, const BindingSet&)>& fn,
                          double rank_tol = kDefaultRankTolerance);

std::vector<BindingSet> enumerate_binding_sets(const Network& net,
                                               double rank_tol = kDefaultRankTolerance);

struct SearchOptions {
  std::size_t threads = 1;
  /// Values within this relative distance of the maximum count as ties; the
  /// lowest-ranked tied set is reported.
  double tie_rel_tol = 1e-9;
  double rank_tol = kDefaultRankTolerance;
};

struct SensitivityReport {
  DenseMatrix cwc;                    // N_G x N_L
  std::vector<BindingSet> argmax;     // row-major over (gen, load)
  std::vector<std::uint64_t> argmax_rank;
  std::uint64_t candidates_total = 0;
  std::uint64_t candidates_valid = 0;

  const BindingSet& argmax_at(std::size_t gen, std::size_t load) const {
    return argmax[gen * cwc.cols() + load];
  }
};

struct SisoResult {
  double value = 0.0;
  BindingSet argmax;
  std::uint64_t rank = 0;
  std::uint64_t candidates_total = 0;
  std::uint64_t candidates_valid = 0;
};

/// max |J_{gen,load}| over the independent candidates. Throws NoValidSet
/// and InvalidIndex.
SisoResult worst_case_siso(const Network& net, std::size_t gen, std::size_t load,
                           const SearchOptions& options = {});

/// Every generator/load pair from one shared enumeration.
SensitivityReport worst_case_all(const Network& net, const SearchOptions& options = {});

/// max over candidates of the Euclidean norm of J_{gen, loads}. Throws
/// EmptyLoadSet, NoValidSet and InvalidIndex.
SisoResult worst_case_miso(const Network& net, std::size_t gen,
                           const std::vector<std::size_t>& loads,
                           const SearchOptions& options = {});

/// |J_{gen,load}| at the binding set of the solved point. Throws
/// DegeneratePoint (or DependentBindings) when the point is not regular.
double local_sensitivity(const Network& net, const OpfParams& params, const LoadVector& load,
                         std::size_t gen, std::size_t load_idx,
                         const SolveOptions& options = {});

struct SampledBound {
  double value = 0.0;  // a lower bound on the supremum over the box
  std::size_t samples = 0;
  std::size_t regular = 0;  // samples that produced a usable binding set
  BindingSet argmax;
};

/// Uniform samples of the load inside [low, high]; irregular or infeasible
/// samples are skipped.
SampledBound sampled_sensitivity(const Network& net, const OpfParams& params,
                                 const std::vector<double>& low,
                                 const std::vector<double>& high, std::size_t gen,
                                 std::size_t load_idx, std::size_t samples,
                                 std::uint64_t seed, const SolveOptions& options = {});

struct StructuralCheck {
  bool passed = true;
  /// Vertex lists of the components left after deleting S_B.
  std::vector<std::vector<std::size_t>> components;
  /// Components whose generators are all in S_G (or that have none).
  std::vector<std::size_t> failing;
};

/// Each component left after removing S_B must keep a generator outside S_G.
StructuralCheck structural_check(const Network& net, const BindingSet& set);

}  // namespace opfsens
