#include <doctest.h>

#include <algorithm>
#include <random>

#include "opfsens/decompose.hpp"
#include "opfsens/error.hpp"
#include "opfsens/sensitivity.hpp"
#include "oracles.hpp"

using namespace opfsens;

namespace {

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Two random blocks with two generators and three loads each, joined by a
// single branch between load buses. Vertices: generators 0,1 | 2,3, loads
// 4,5,6 | 7,8,9.
Network two_blocks(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sus(2.0, 20.0);
  std::vector<Branch> edges;
  const auto block = [&](std::vector<std::size_t> verts) {
    std::shuffle(verts.begin(), verts.end(), rng);
    for (std::size_t k = 1; k < verts.size(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, k - 1);
      edges.push_back({verts[pick(rng)], verts[k], sus(rng)});
    }
    for (int extra = 0; extra < 2; ++extra) {
      std::uniform_int_distribution<std::size_t> any(0, verts.size() - 1);
      const auto a = verts[any(rng)], b = verts[any(rng)];
      if (a != b) edges.push_back({a, b, sus(rng)});
    }
  };
  block({0, 1, 4, 5, 6});
  block({2, 3, 7, 8, 9});
  std::uniform_int_distribution<std::size_t> la(4, 6), lb(7, 9);
  edges.push_back({la(rng), lb(rng), sus(rng)});
  return oracle::make_network(4, 6, std::move(edges));
}

}  // namespace

TEST_SUITE("decompose") {
  TEST_CASE("a cycle has no bridges") {
    const Network ring = oracle::make_network(
        2, 3, {{0, 2, 5.0}, {2, 3, 5.0}, {3, 1, 5.0}, {1, 4, 5.0}, {4, 0, 5.0}});
    CHECK(find_bridges(ring).empty());
    CHECK(oracle::brute_bridges(ring).empty());
  }

  TEST_CASE("every tree edge is a bridge") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const Network tree = oracle::random_network(rng, 2, 6, 0);
      CHECK(sorted(find_bridges(tree)).size() == tree.n_branch());
    }
  }

  TEST_CASE("bridges agree with edge deletion") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
      const Network net = oracle::random_network(rng, 3, 9, trial % 6);
      CHECK(sorted(find_bridges(net)) == oracle::brute_bridges(net));
    }
    const auto c27 = oracle::chain("chain27.json");
    CHECK(sorted(find_bridges(c27.network)) == oracle::brute_bridges(c27.network));
  }

  TEST_CASE("a pendant load subtree collapses to one bus") {
    const auto nc = oracle::case9();
    std::vector<Branch> edges = nc.network.edges();
    edges.push_back({4, 9, 8.0});   // 5 - 10
    edges.push_back({9, 10, 8.0});  // 10 - 11
    const Network net = oracle::make_network(3, 8, edges);
    const auto pruned = prune_offpath(net, 0, 5);  // generator 1, load 9
    REQUIRE(pruned.collapsed.size() == 1);
    CHECK(pruned.collapsed[0].bridge == 9);
    CHECK(sorted(pruned.collapsed[0].vertices) == std::vector<std::size_t>{9, 10});
    CHECK_FALSE(pruned.collapsed[0].as_generator);
    CHECK(pruned.network.n_bus() == 10);
    CHECK(pruned.network.n_branch() == 10);
    CHECK(std::count(pruned.vertex_map.begin(), pruned.vertex_map.end(), std::nullopt) == 1);

    const auto dec = worst_case_decomposed(net, 0, 5);
    const auto direct = worst_case_siso(net, 0, 5);
    CHECK(dec.value == doctest::Approx(direct.value).epsilon(1e-9));
  }

  TEST_CASE("stage counts along the chains") {
    const auto c27 = oracle::chain("chain27.json");
    const auto& net = c27.network;
    const std::size_t g1 = *net.find_label("1");
    const std::size_t l7 = *net.find_label("7''") - net.n_gen();
    const auto dec = worst_case_decomposed(net, g1, l7);
    REQUIRE(dec.decomposition.stages.size() == 3);
    CHECK(dec.decomposition.stages[0].network.n_bus() == 10);
    CHECK(dec.decomposition.stages[1].network.n_bus() == 11);
    CHECK(dec.decomposition.stages[2].network.n_bus() == 10);
    CHECK(dec.value == doctest::Approx(18.1045).epsilon(1e-5));
    CHECK(dec.stages[1].value > 1.0);

    const auto c18 = oracle::chain("chain18.json");
    const std::size_t near = *c18.network.find_label("9") - c18.network.n_gen();
    const std::size_t far = *c18.network.find_label("9'") - c18.network.n_gen();
    CHECK(worst_case_decomposed(c18.network, 0, near).decomposition.stages.size() == 1);
    CHECK(worst_case_decomposed(c18.network, 0, far).decomposition.stages.size() == 2);
  }

  TEST_CASE("without bridges the decomposition is the identity") {
    const Network ring = oracle::make_network(
        2, 4, {{0, 2, 5.0}, {2, 3, 7.0}, {3, 1, 4.0}, {1, 4, 9.0}, {4, 5, 3.0}, {5, 0, 6.0}});
    for (std::size_t g = 0; g < 2; ++g)
      for (std::size_t l = 0; l < 4; ++l) {
        const auto dec = worst_case_decomposed(ring, g, l);
        CHECK(dec.decomposition.stages.size() == 1);
        CHECK(dec.decomposition.stages[0].network.n_bus() == ring.n_bus());
        CHECK(dec.pruned.collapsed.empty());
        CHECK(dec.value == worst_case_siso(ring, g, l).value);
      }
  }

  TEST_CASE("2-copy chain: decomposed equals direct on sample pairs") {
    const auto c18 = oracle::chain("chain18.json");
    const auto& net = c18.network;
    for (const auto& [g, l] : {std::pair{"1", "9'"}, std::pair{"3", "5'"}}) {
      const std::size_t gv = *net.find_label(g);
      const std::size_t lv = *net.find_label(l) - net.n_gen();
      const auto dec = worst_case_decomposed(net, gv, lv, {.threads = 4});
      const auto direct = worst_case_siso(net, gv, lv, {.threads = 4});
      CHECK(dec.value == doctest::Approx(direct.value).epsilon(1e-9));
    }
  }

  TEST_CASE("random two-block networks: decomposed equals direct") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 6; ++trial) {
      const Network net = two_blocks(rng);
      for (std::size_t g = 0; g < 4; ++g)
        for (std::size_t l = 0; l < 6; ++l) {
          CAPTURE(trial);
          CAPTURE(g);
          CAPTURE(l);
          const auto dec = worst_case_decomposed(net, g, l);
          const auto direct = worst_case_siso(net, g, l);
          CHECK(std::abs(dec.value - direct.value) <= 1e-9 * std::max(1.0, direct.value));
        }
    }
  }

  TEST_CASE("out-of-range endpoints") {
    const auto nc = oracle::case9();
    CHECK_THROWS_AS(worst_case_decomposed(nc.network, 3, 0), Error);
    CHECK_THROWS_AS(worst_case_decomposed(nc.network, 0, 6), Error);
  }
}
