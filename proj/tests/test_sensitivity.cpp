#include <doctest.h>

#include <cmath>
#include <random>

#include "opfsens/error.hpp"
#include "opfsens/jacobian.hpp"
#include "opfsens/sensitivity.hpp"
#include "oracles.hpp"

using namespace opfsens;

namespace {

const double kTableI[3][6] = {
    {1.0000, 1.3935, 2.0650, 2.4748, 1.9389, 1.3244},
    {2.4236, 2.9560, 1.7024, 1.4748, 1.0000, 2.0081},
    {2.5162, 1.9838, 1.0000, 1.3847, 1.6595, 3.0081},
};

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an opfsens::Error");
  return ErrorKind::Io;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_SUITE("sensitivity") {
  TEST_CASE("candidate enumeration of case9") {
    const auto nc = oracle::case9();
    CHECK(candidate_count(nc.network) == 66);
    CHECK(candidate_at(nc.network, 0) == BindingSet{{0, 1}, {}});
    CHECK(candidate_at(nc.network, 65) == BindingSet{{}, {7, 8}});
    CHECK(kind_of([&] { candidate_at(nc.network, 66); }) == ErrorKind::InvalidIndex);
    std::size_t expected = 0;
    for (std::uint64_t r = 0; r < 66; ++r) {
      const auto s = candidate_at(nc.network, r);
      expected += oracle::standard_form_independent(nc.network, s.gens, s.branches);
    }
    const auto sets = enumerate_binding_sets(nc.network);
    CHECK(sets.size() == expected);
    std::vector<std::uint64_t> ranks;
    for_each_binding_set(nc.network, [&](std::uint64_t r, const BindingSet&) { ranks.push_back(r); });
    CHECK(std::is_sorted(ranks.begin(), ranks.end()));
    CHECK(ranks.size() == expected);
  }

  TEST_CASE("candidate count is a binomial coefficient") {
    const auto c18 = oracle::chain("chain18.json");
    CHECK(candidate_count(c18.network) == binomial(6 + 19, 5));
  }

  TEST_CASE("a single generator has one empty candidate") {
    const auto nc = oracle::two_bus();
    CHECK(candidate_count(nc.network) == 1);
    const auto r = worst_case_siso(nc.network, 0, 0);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.argmax.empty());
    CHECK(r.candidates_valid == 1);
  }

  TEST_CASE("with one generator every worst case is one") {
    // star: generator in the middle of five loads
    const Network star = oracle::make_network(
        1, 5, {{0, 1, 3.0}, {0, 2, 4.0}, {0, 3, 5.0}, {0, 4, 6.0}, {0, 5, 7.0}});
    const auto rep = worst_case_all(star);
    for (std::size_t l = 0; l < 5; ++l) CHECK(rep.cwc(0, l) == doctest::Approx(1.0));
  }

  TEST_CASE("two generators on a tree never amplify") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      const Network tree = oracle::random_network(rng, 2, 5, 0);
      const auto rep = worst_case_all(tree);
      for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t l = 0; l < 5; ++l) CHECK(rep.cwc(g, l) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("case9 worst-case table") {
    const auto nc = oracle::case9();
    const auto rep = worst_case_all(nc.network);
    CHECK(rep.candidates_total == 66);
    for (std::size_t g = 0; g < 3; ++g)
      for (std::size_t l = 0; l < 6; ++l) {
        CAPTURE(g);
        CAPTURE(l);
        CHECK(std::abs(rep.cwc(g, l) - kTableI[g][l]) <= 1e-3);
        const auto siso = worst_case_siso(nc.network, g, l);
        CHECK(siso.value == rep.cwc(g, l));
        CHECK(siso.argmax == rep.argmax_at(g, l));
        // the reported set attains the value
        const auto jr = jacobian_from_binding(nc.network, rep.argmax_at(g, l));
        CHECK(std::abs(jr.j(g, l)) == doctest::Approx(rep.cwc(g, l)).epsilon(1e-12));
      }
  }

  TEST_CASE("the search result does not depend on the thread count") {
    const auto nc = oracle::case9();
    const auto a = worst_case_all(nc.network, {.threads = 1});
    for (std::size_t t : {2u, 3u, 8u}) {
      const auto b = worst_case_all(nc.network, {.threads = t});
      CHECK(a.cwc == b.cwc);
      CHECK(a.argmax_rank == b.argmax_rank);
      CHECK(a.candidates_valid == b.candidates_valid);
    }
  }

  TEST_CASE("MISO bounds") {
    const auto nc = oracle::case9();
    const auto rep = worst_case_all(nc.network);
    const std::vector<std::size_t> loads{1, 3, 5};
    for (std::size_t g = 0; g < 3; ++g) {
      const auto m = worst_case_miso(nc.network, g, loads);
      double sq = 0.0, mx = 0.0;
      for (auto l : loads) {
        sq += rep.cwc(g, l) * rep.cwc(g, l);
        mx = std::max(mx, rep.cwc(g, l));
      }
      CHECK(m.value >= mx - 1e-12);
      CHECK(m.value <= std::sqrt(sq) + 1e-12);
      const auto single = worst_case_miso(nc.network, g, {4});
      CHECK(single.value == doctest::Approx(rep.cwc(g, 4)).epsilon(1e-14));
    }
    CHECK(kind_of([&] { worst_case_miso(nc.network, 0, {}); }) == ErrorKind::EmptyLoadSet);
    CHECK(kind_of([&] { worst_case_siso(nc.network, 3, 0); }) == ErrorKind::InvalidIndex);
  }

  TEST_CASE("local sensitivity never exceeds the worst case") {
    const auto nc = oracle::case9();
    const auto rep = worst_case_all(nc.network);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> cost(0.5, 10.0), scale(0.6, 1.4);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
      OpfParams p = nc.params;
      for (double& f : p.cost) f = cost(rng);
      LoadVector load = nc.load;
      for (double& v : load.values) v *= scale(rng);
      for (std::size_t g = 0; g < 3; ++g)
        for (std::size_t l = 0; l < 6; ++l) {
          double local = 0.0;
          try {
            local = local_sensitivity(nc.network, p, load, g, l);
          } catch (const Error& e) {
            CHECK((e.kind() == ErrorKind::DegeneratePoint ||
                   e.kind() == ErrorKind::DependentBindings));
            continue;
          }
          CHECK(local <= rep.cwc(g, l) + 1e-9);
          ++checked;
        }
    }
    CHECK(checked > 0);
  }

  TEST_CASE("sampled bound is a lower bound") {
    const auto nc = oracle::case9();
    const auto rep = worst_case_all(nc.network);
    std::vector<double> low, high;
    for (double v : nc.load.values) {
      low.push_back(0.5 * v);
      high.push_back(1.5 * v + 0.2);
    }
    const auto sb = sampled_sensitivity(nc.network, nc.params, low, high, 2, 5, 200, 3);
    CHECK(sb.samples == 200);
    CHECK(sb.regular > 0);
    CHECK(sb.value <= rep.cwc(2, 5) + 1e-9);
    const auto again = sampled_sensitivity(nc.network, nc.params, low, high, 2, 5, 200, 3);
    CHECK(again.value == sb.value);
  }

  TEST_CASE("every independent set keeps a free generator in each component") {
    const auto nc = oracle::case9();
    for (const auto& set : enumerate_binding_sets(nc.network)) {
      const auto sc = structural_check(nc.network, set);
      CHECK(sc.passed);
      CHECK(sc.failing.empty());
    }
  }

  TEST_CASE("a component whose generators all bind fails the structural check") {
    const auto nc = oracle::case9();
    // cut (1,4) and bind generator 1: the component {1} has no free generator
    const BindingSet set{{0}, {0}};
    const auto sc = structural_check(nc.network, set);
    CHECK_FALSE(sc.passed);
    REQUIRE(sc.failing.size() == 1);
    CHECK(sc.components[sc.failing[0]] == std::vector<std::size_t>{0});
    CHECK_FALSE(independence_check(nc.network, set));
  }
}
