#include <random>

#include "doctest.h"

#include "../oracles.hpp"

using namespace auctionlab;

namespace {

AllocationProblem random_problem(std::mt19937_64& rng, bool restricted) {
  std::uniform_int_distribution<int> nb(1, 4), ni(1, 3), cap(1, 2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<int> caps(static_cast<std::size_t>(ni(rng)));
  for (auto& c : caps) c = cap(rng);
  auto space = std::make_shared<const BundleSpace>(Capacities(caps));
  AllocationProblem p;
  p.space = space;
  const int n = nb(rng);
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(space->size());
    for (std::size_t k = 1; k < v.size(); ++k) v[k] = u(rng) < 3.0 ? 0.0 : u(rng);
    p.values.push_back(v);
    std::vector<std::size_t> cand;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (!restricted || k == 0 || u(rng) < 5.0) cand.push_back(k);
    p.candidates.push_back(cand);
  }
  return p;
}

double brute(const AllocationProblem& p) {
  return oracle::exhaustive(p.space->capacities().values(), p.values.size(),
                            [&](std::size_t i, const Bundle& x) {
                              const std::size_t k = p.space->index(x);
                              const auto& c = p.candidates[i];
                              return std::binary_search(c.begin(), c.end(), k) ? p.values[i][k] : -1.0;
                            })
      .value;
}

}  // namespace

TEST_CASE("property: exact search matches exhaustive enumeration") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const auto p = random_problem(rng, t % 2 == 1);
    const auto s = solve_exact(p);
    REQUIRE(s.has_value());
    CHECK(s->exact);
    CHECK(s->value == doctest::Approx(brute(p)).epsilon(1e-12));
    double v = 0.0;
    for (std::size_t i = 0; i < s->choice.size(); ++i) v += p.values[i][s->choice[i]];
    CHECK(v == doctest::Approx(s->value).epsilon(1e-12));
    CHECK(is_feasible(to_allocation(*p.space, s->choice), p.space->capacities()));
  }
}

TEST_CASE("property: local search is feasible and never beats the optimum") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_problem(rng, false);
    const auto exact = solve_exact(p);
    const auto local = solve_local_search(p, static_cast<std::uint64_t>(t));
    REQUIRE(local.has_value());
    CHECK_FALSE(local->exact);
    CHECK(local->value <= exact->value + 1e-9);
    CHECK(is_feasible(to_allocation(*p.space, local->choice), p.space->capacities()));
  }
}

TEST_CASE("exact search ties resolve to the lexicographically smallest allocation") {
  auto space = std::make_shared<const BundleSpace>(Capacities{1});
  const auto p = full_problem(space, {{0.0, 5.0}, {0.0, 5.0}});
  const auto s = solve_exact(p);
  REQUIRE(s.has_value());
  // (0),(1) precedes (1),(0).
  CHECK(s->choice == std::vector<std::size_t>{0, 1});
}

TEST_CASE("exact search without a feasible allocation returns nothing") {
  auto space = std::make_shared<const BundleSpace>(Capacities{1});
  AllocationProblem p{space, {{0.0, 1.0}, {0.0, 1.0}}, {{1}, {1}}};
  CHECK_FALSE(solve_exact(p).has_value());
}

TEST_CASE("node budget overrun throws") {
  std::mt19937_64 rng(8);
  auto space = std::make_shared<const BundleSpace>(Capacities(std::vector<int>(6, 1)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> v(6, std::vector<double>(space->size()));
  for (auto& row : v)
    for (std::size_t k = 1; k < row.size(); ++k) row[k] = u(rng);
  CHECK_THROWS_AS(solve_exact(full_problem(space, v), 10), ExactOracleUnavailable);
}
