#include <random>

#include "doctest.h"

#include "../oracles.hpp"

using namespace auctionlab;

TEST_CASE("P1 closed-form values") {
  const auto p1 = make_pathological(PathologicalId::P1).instance;
  CHECK(p1.value(1, Bundle{10}) == doctest::Approx(94.0).epsilon(1e-15));
  CHECK(p1.value(1, Bundle{9}) == doctest::Approx(84.24).epsilon(1e-15));
  CHECK(p1.value(0, Bundle{1}) == 100.0);
  CHECK(p1.value(0, Bundle{0}) == 0.0);
  CHECK(p1.value(1, Bundle{0}) == 0.0);
}

TEST_CASE("pathological efficient allocations") {
  const auto p1 = make_pathological(PathologicalId::P1).instance;
  CHECK(p1.optimum().scw == doctest::Approx(184.24).epsilon(1e-15));
  CHECK(p1.optimum().allocation == Allocation({Bundle{1}, Bundle{9}}));

  const auto p2 = make_pathological(PathologicalId::P2).instance;
  CHECK(p2.optimum().scw == 400.0);
  CHECK(p2.optimum().allocation[0][0] == 1);
  CHECK(p2.optimum().allocation[1][0] == 0);

  const auto p4 = make_pathological(PathologicalId::P4).instance;
  CHECK(p4.items() == 12);
  CHECK(p4.optimum().scw == 1000.0);
  CHECK(p4.optimum().allocation[1] == Bundle::full(p4.capacities()));
}

TEST_CASE("pathological instances agree with the exhaustive oracle") {
  for (auto id : {PathologicalId::P1, PathologicalId::P2, PathologicalId::P3, PathologicalId::P5}) {
    const auto inst = make_pathological(id).instance;
    CHECK(inst.optimum().scw == doctest::Approx(oracle::optimal_scw(inst)).epsilon(1e-15));
  }
}

TEST_CASE("utility-maximizing bundles for P1 bidder 2") {
  const auto p1 = make_pathological(PathologicalId::P1).instance;
  const auto& v2 = p1.oracles()[1];
  CHECK(utility_max_bundle(v2, PriceVector{9.3}) == Bundle{10});
  CHECK(utility_max_bundle(v2, PriceVector{9.5}) == Bundle{0});
  CHECK(utility_max_bundle(v2, PriceVector{0.0}) == Bundle{10});
}

TEST_CASE("single-bidder optimum is the value-maximizing bundle") {
  std::mt19937_64 rng(2);
  ToyDomainParams p;
  p.bidders = 1;
  p.items = 5;
  const auto inst = sample_toy_instance(p, 4);
  const auto& o = inst.optimum();
  CHECK(o.allocation[0] == utility_max_bundle(inst.oracles()[0], PriceVector::zero(5)));
}

TEST_CASE("toy instances are deterministic in the seed") {
  ToyDomainParams p;
  const auto a = sample_toy_instance(p, 17);
  const auto b = sample_toy_instance(p, 17);
  const auto c = sample_toy_instance(p, 18);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_json(a) != to_json(c));
}

TEST_CASE("zero synergy density gives additive oracles") {
  ToyDomainParams p;
  p.synergy_density = 0.0;
  p.capacity_hi = 2;
  const auto inst = sample_toy_instance(p, 3);
  const std::size_t m = inst.items();
  for (std::size_t i = 0; i < inst.bidders(); ++i) {
    std::vector<double> unit(m);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<int> e(m, 0);
      e[j] = 1;
      unit[j] = inst.value(i, Bundle(e));
    }
    for (const auto& x : oracle::all_bundles(inst.capacities().values())) {
      double additive = 0.0;
      for (std::size_t j = 0; j < m; ++j) additive += unit[j] * x[j];
      CHECK(inst.value(i, x) == doctest::Approx(additive).epsilon(1e-12));
    }
  }
}

TEST_CASE("toy instance n=4 m=8 seed 1 optimum matches an exhaustive scan") {
  ToyDomainParams p;
  const auto inst = sample_toy_instance(p, 1);
  CHECK(inst.optimum().scw == doctest::Approx(oracle::optimal_scw(inst)).epsilon(1e-12));
  CHECK(inst.social_welfare(inst.optimum().allocation) == inst.optimum().scw);
}

TEST_CASE("property: generated oracles are normalized and monotone") {
  std::mt19937_64 rng(21);
  ToyDomainParams p;
  p.capacity_hi = 2;
  p.items = 6;
  p.national_bidder = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = sample_toy_instance(p, s);
    const auto& caps = inst.capacities().values();
    for (std::size_t i = 0; i < inst.bidders(); ++i) {
      const auto& o = inst.oracles()[i];
      CHECK(o.value(Bundle::zero(caps.size())) == 0.0);
      for (int t = 0; t < 100; ++t) {
        std::vector<int> x(caps.size()), y(caps.size());
        for (std::size_t j = 0; j < caps.size(); ++j) {
          y[j] = std::uniform_int_distribution<int>(0, caps[j])(rng);
          x[j] = std::uniform_int_distribution<int>(0, y[j])(rng);
        }
        CHECK(o.value(Bundle(x)) <= o.value(Bundle(y)));
        CHECK(o.value(Bundle(x)) >= 0.0);
      }
    }
  }
}

TEST_CASE("property: utility-maximizing bundle is never dominated") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> price(0.0, 8.0);
  ToyDomainParams p;
  p.items = 5;
  p.capacity_hi = 2;
  const auto inst = sample_toy_instance(p, 9);
  const auto bundles = oracle::all_bundles(inst.capacities().values());
  for (int t = 0; t < 50; ++t) {
    std::vector<double> pv(inst.items());
    for (auto& v : pv) v = price(rng);
    const PriceVector prices(pv);
    for (std::size_t i = 0; i < inst.bidders(); ++i) {
      const auto& o = inst.oracles()[i];
      const Bundle best = utility_max_bundle(o, prices);
      const double u = o.value(best) - prices.price_of(best);
      for (const auto& x : bundles) CHECK(u >= o.value(x) - prices.price_of(x) - 1e-12);
    }
  }
}

TEST_CASE("property: efficient allocation beats random feasible allocations") {
  std::mt19937_64 rng(23);
  const auto inst = sample_toy_instance(ToyDomainParams{}, 5);
  const double best = inst.optimum().scw;
  for (int t = 0; t < 1000; ++t) {
    std::vector<Bundle> a(inst.bidders(), Bundle::zero(inst.items()));
    std::vector<std::vector<int>> counts(inst.bidders(), std::vector<int>(inst.items(), 0));
    for (std::size_t j = 0; j < inst.items(); ++j) {
      const int owner = std::uniform_int_distribution<int>(0, static_cast<int>(inst.bidders()))(rng);
      if (owner < static_cast<int>(inst.bidders())) counts[static_cast<std::size_t>(owner)][j] = 1;
    }
    for (std::size_t i = 0; i < inst.bidders(); ++i) a[i] = Bundle(counts[i]);
    CHECK(inst.social_welfare(Allocation(a)) <= best + 1e-12);
  }
}

TEST_CASE("instance JSON round trip is exact") {
  ToyDomainParams p;
  p.national_bidder = true;
  p.capacity_hi = 2;
  p.items = 5;
  const auto inst = sample_toy_instance(p, 31);
  const auto back = instance_from_json(nlohmann::json::parse(to_json(inst).dump()));
  CHECK(back.label() == inst.label());
  for (const auto& x : oracle::all_bundles(inst.capacities().values()))
    for (std::size_t i = 0; i < inst.bidders(); ++i) CHECK(back.value(i, x) == inst.value(i, x));

  const auto p1 = make_pathological(PathologicalId::P1).instance;
  const auto p1b = instance_from_json(nlohmann::json::parse(to_json(p1).dump()));
  for (int k = 0; k <= 10; ++k)
    for (std::size_t i = 0; i < 2; ++i) CHECK(p1b.value(i, Bundle{k}) == p1.value(i, Bundle{k}));
}

TEST_CASE("table oracles round trip bit-exactly") {
  const Capacities c{1, 2};
  ValueOracle o(c, TableValuation{{0.0, 0.1, 0.30000000000000004, 1.0 / 3.0, 2.0 / 3.0, 1.0}});
  Instance inst(c, {o}, "table");
  const auto back = instance_from_json(nlohmann::json::parse(to_json(inst).dump()));
  for (const auto& x : oracle::all_bundles(c.values())) CHECK(back.value(0, x) == inst.value(0, x));
}

TEST_CASE("malformed oracles are rejected") {
  CHECK_THROWS_AS(ValueOracle(Capacities{1}, TableValuation{{0.0}}), InvalidInput);
  CHECK_THROWS_AS(ValueOracle(Capacities{1}, TableValuation{{1.0, 2.0}}), InvalidInput);
  CHECK_THROWS_AS(ValueOracle(Capacities{1}, TableValuation{{0.0, -1.0}}), InvalidInput);
  CHECK_THROWS_AS(ValueOracle(Capacities{1, 1}, TableValuation{{0.0, 2.0, 3.0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(instance_from_json(nlohmann::json{{"capacities", {1}}}), InvalidInput);
}

TEST_CASE("oracle dimension mismatch is invalid input") {
  const auto p1 = make_pathological(PathologicalId::P1).instance;
  CHECK_THROWS_AS(p1.value(0, Bundle{1, 0}), InvalidInput);
}

TEST_CASE("pathological names parse") {
  CHECK(parse_pathological("P3") == PathologicalId::P3);
  CHECK_FALSE(parse_pathological("P9").has_value());
  CHECK(to_string(PathologicalId::P5) == "P5");
}
