#include <doctest.h>

#include <random>

#include "opfsens/error.hpp"
#include "opfsens/jacobian.hpp"
#include "opfsens/sensitivity.hpp"
#include "oracles.hpp"

using namespace opfsens;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an opfsens::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("jacobian") {
  TEST_CASE("Z stack rows") {
    const auto nc = oracle::case9();
    const auto& net = nc.network;
    const BindingSet set{{0}, {5}};  // generator 1, branch (7,8)
    const DenseMatrix z = build_z_stack(net, set);
    REQUIRE(z.rows() == 9);
    REQUIRE(z.cols() == 9);
    const auto& l = net.laplacian();
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t c = 0; c < 9; ++c) CHECK(z(j, c) == l(3 + j, c));
    for (std::size_t c = 0; c < 9; ++c) {
      CHECK(z(6, c) == l(0, c));
      CHECK(z(7, c) == net.flow_map()(5, c));
      CHECK(z(8, c) == (c == 0 ? 1.0 : 0.0));
    }
  }

  TEST_CASE("one generator: the stack is the load rows and the slack row") {
    const auto nc = oracle::two_bus();
    const DenseMatrix z = build_z_stack(nc.network, {});
    CHECK(z == DenseMatrix{{-10.0, 10.0}, {1.0, 0.0}});
    const auto jr = jacobian_from_binding(nc.network, {});
    CHECK(jr.j.rows() == 1);
    CHECK(jr.j(0, 0) == doctest::Approx(1.0));
  }

  TEST_CASE("wrong cardinality, repeats and bad indices are rejected") {
    const auto nc = oracle::case9();
    CHECK(kind_of([&] { build_z_stack(nc.network, {{0}, {}}); }) == ErrorKind::CardinalityViolation);
    CHECK(kind_of([&] { build_z_stack(nc.network, {{0, 0}, {}}); }) ==
          ErrorKind::CardinalityViolation);
    CHECK(kind_of([&] { build_z_stack(nc.network, {{}, {3, 3}}); }) ==
          ErrorKind::CardinalityViolation);
    CHECK(kind_of([&] { build_z_stack(nc.network, {{7}, {1}}); }) == ErrorKind::InvalidIndex);
    CHECK(kind_of([&] { build_z_stack(nc.network, {{0}, {9}}); }) == ErrorKind::InvalidIndex);
  }

  TEST_CASE("a dependent set is reported") {
    // All three generators of case9 are pendant: (1,4), (8,2), (3,6). Binding
    // generator 1 and its only branch duplicates a row.
    const auto nc = oracle::case9();
    const BindingSet set{{0}, {0}};
    CHECK_FALSE(oracle::standard_form_independent(nc.network, set.gens, set.branches));
    CHECK_FALSE(independence_check(nc.network, set));
    CHECK_FALSE(try_jacobian_from_binding(nc.network, set).has_value());
    CHECK(kind_of([&] { jacobian_from_binding(nc.network, set); }) ==
          ErrorKind::DependentBindings);
  }

  TEST_CASE("columns sum to one and binding generators have zero rows") {
    const auto nc = oracle::case9();
    for (const auto& set : enumerate_binding_sets(nc.network)) {
      const auto jr = jacobian_from_binding(nc.network, set);
      for (std::size_t c = 0; c < jr.j.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < jr.j.rows(); ++r) s += jr.j(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
      }
      for (auto g : set.gens)
        for (double v : jr.j.row(g)) CHECK(std::abs(v) <= 1e-9);
    }
  }

  TEST_CASE("known worst-case entry of case9") {
    const auto nc = oracle::case9();
    double best = 0.0;
    for (const auto& set : enumerate_binding_sets(nc.network))
      best = std::max(best, std::abs(jacobian_from_binding(nc.network, set).j(2, 5)));
    CHECK(best == doctest::Approx(3.0081).epsilon(1e-4));
  }

  TEST_CASE("binding formula agrees with finite differences") {
    const auto nc = oracle::case9();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> cost(0.5, 10.0), scale(0.6, 1.4), lim(0.8, 2.5);
    int compared = 0;
    for (int trial = 0; trial < 200 && compared < 25; ++trial) {
      OpfParams p = nc.params;
      for (double& f : p.cost) f = cost(rng);
      for (std::size_t e = 0; e < p.flow_upper.size(); ++e) {
        p.flow_upper[e] = lim(rng);
        p.flow_lower[e] = -p.flow_upper[e];
      }
      // interior loads: every load bus strictly positive
      LoadVector load;
      for (std::size_t j = 0; j < 6; ++j) load.values.push_back(0.5 * scale(rng));
      OpfSolution sol;
      BindingSet set;
      try {
        sol = solve_opf(nc.network, p, load);
        if (!check_regularity(sol).unique) continue;
        set = extract_binding_set(sol, nc.network, p);
      } catch (const Error&) {
        continue;
      }
      DenseMatrix fd;
      try {
        fd = jacobian_finite_diff(nc.network, p, load, 1e-4);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RegionBoundary);
        continue;
      }
      const DenseMatrix jb = jacobian_from_binding(nc.network, set).j;
      CHECK((jb - fd).max_abs() <= 1e-5);
      ++compared;
    }
    CHECK(compared >= 20);
  }

  TEST_CASE("finite differences refuse to cross a zero load") {
    const auto nc = oracle::case9();  // bus 4 carries no load
    CHECK(kind_of([&] { jacobian_finite_diff(nc.network, nc.params, nc.load, 1e-4); }) ==
          ErrorKind::RegionBoundary);
  }

  TEST_CASE("independence check agrees with the standard-form rank oracle") {
    const auto nc = oracle::case9();
    std::size_t valid = 0;
    const auto total = candidate_count(nc.network);
    CHECK(total == 66);
    for (std::uint64_t r = 0; r < total; ++r) {
      const auto set = candidate_at(nc.network, r);
      const bool ours = independence_check(nc.network, set);
      CHECK(ours == oracle::standard_form_independent(nc.network, set.gens, set.branches));
      valid += ours;
    }
    CHECK(valid == enumerate_binding_sets(nc.network).size());
  }

  TEST_CASE("independence check on other sizes") {
    const auto nc = oracle::case9();
    CHECK(independence_check(nc.network, {{0}, {}}));
    CHECK(independence_check(nc.network, {{}, {}}));
    CHECK_FALSE(independence_check(nc.network, {{0, 1, 2}, {}}));
    // a whole cycle binding: more rows than unknowns
    CHECK_FALSE(
        oracle::standard_form_independent(nc.network, {}, {1, 2, 4, 5, 7, 8}));
    CHECK_FALSE(independence_check(nc.network, {{}, {1, 2, 4, 5, 7, 8}}));
  }

  TEST_CASE("scaling every susceptance leaves J unchanged") {
    const auto nc = oracle::case9();
    std::vector<Branch> edges = nc.network.edges();
    for (auto& e : edges) e.susceptance *= 3.7;
    const Network scaled(3, 6, edges, nc.network.buses());
    for (const auto& set : enumerate_binding_sets(nc.network)) {
      const auto a = jacobian_from_binding(nc.network, set).j;
      const auto b = jacobian_from_binding(scaled, set).j;
      CHECK((a - b).max_abs() <= 1e-10);
    }
  }
}
