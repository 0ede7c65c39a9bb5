#include <random>

#include "doctest.h"

#include "../oracles.hpp"

using namespace auctionlab;

namespace {

// Value reports for every non-empty bundle.
std::vector<BidderReports> full_reports(const Instance& inst) {
  std::vector<BidderReports> out(inst.bidders());
  for (const auto& x : oracle::all_bundles(inst.capacities().values())) {
    if (x.empty_bundle()) continue;
    for (std::size_t i = 0; i < inst.bidders(); ++i) out[i].add_vq(ValueReport{x, inst.value(i, x)});
  }
  return out;
}

Instance single_item(double v1, double v2) {
  const Capacities c{1};
  return Instance(c, {ValueOracle(c, TableValuation{{0.0, v1}}), ValueOracle(c, TableValuation{{0.0, v2}})}, "single");
}

Instance llg() {
  const Capacities c{1, 1};
  return Instance(c,
                  {ValueOracle(c, TableValuation{{0.0, 0.0, 4.0, 4.0}}),
                   ValueOracle(c, TableValuation{{0.0, 4.0, 0.0, 4.0}}),
                   ValueOracle(c, TableValuation{{0.0, 0.0, 0.0, 6.0}})},
                  "llg");
}

std::vector<BidderReports> p2_reports(bool third) {
  const auto pc = make_pathological(PathologicalId::P2);
  std::vector<BidderReports> r(2);
  const std::size_t rounds = third ? 3 : 2;
  for (std::size_t k = 0; k < rounds; ++k) {
    const auto& p = pc.script.clock_prices[k];
    for (std::size_t i = 0; i < 2; ++i) r[i].add_dq(DemandReport{pc.instance.demand(i, p), p});
  }
  return r;
}

}  // namespace

TEST_CASE("P2 winner determination after two and three queries") {
  const Capacities c{1, 1};
  const auto two = solve_wdp(p2_reports(false), c);
  CHECK(two.inferred_scw == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(two.allocation[0] == Bundle{1, 0});
  CHECK(two.allocation[1] == Bundle{0, 0});
  const auto three = solve_wdp(p2_reports(true), c);
  CHECK(three.inferred_scw == 2.0);
  CHECK(three.allocation[0] == Bundle{0, 1});
  CHECK(three.allocation[1] == Bundle{1, 0});
}

TEST_CASE("empty reports allocate nothing") {
  const auto r = solve_wdp(std::vector<BidderReports>(3), Capacities{2, 1});
  CHECK(r.inferred_scw == 0.0);
  for (const auto& x : r.allocation.bundles()) CHECK(x.empty_bundle());
}

TEST_CASE("economy restriction empties excluded bidders") {
  const auto inst = single_item(10.0, 5.0);
  const auto r = solve_wdp(full_reports(inst), inst.capacities(), Economy{false, true});
  CHECK(r.allocation[0] == Bundle{0});
  CHECK(r.allocation[1] == Bundle{1});
  CHECK(r.inferred_scw == 5.0);
}

TEST_CASE("ML winner determination with exclusions") {
  auto space = std::make_shared<const BundleSpace>(Capacities{1});
  const std::vector<ValueTable> models{{space, {0.0, 3.0}}, {space, {0.0, 5.0}}};
  const auto a = solve_ml_wdp(models, space->capacities(), {{}, {}});
  CHECK(a.allocation[1] == Bundle{1});
  CHECK(a.predicted == 5.0);
  CHECK(a.exact);
  const auto b = solve_ml_wdp(models, space->capacities(), {{}, {Bundle{1}}});
  CHECK(b.allocation[0] == Bundle{1});
  CHECK(b.allocation[1] == Bundle{0});
  const auto single = solve_ml_wdp({models[0]}, space->capacities(), {{}});
  CHECK(single.allocation[0] == Bundle{1});
  CHECK_THROWS_AS(solve_ml_wdp({models[0]}, space->capacities(), {{Bundle{0}, Bundle{1}}}), NoFeasibleQuery);
}

TEST_CASE("VCG examples") {
  const auto inst = single_item(10.0, 5.0);
  CHECK(vcg_payments(full_reports(inst), inst.capacities()) == std::vector<double>{5.0, 0.0});
  const Capacities c{1, 1};
  const Instance disjoint(c,
                          {ValueOracle(c, TableValuation{{0.0, 0.0, 3.0, 3.0}}),
                           ValueOracle(c, TableValuation{{0.0, 2.0, 0.0, 2.0}})},
                          "disjoint");
  CHECK(vcg_payments(full_reports(disjoint), c) == std::vector<double>{0.0, 0.0});
  const Instance alone(Capacities{1}, {ValueOracle(Capacities{1}, TableValuation{{0.0, 7.0}})}, "alone");
  CHECK(vcg_payments(full_reports(alone), alone.capacities()) == std::vector<double>{0.0});
}

TEST_CASE("core constraints for the single-item instance") {
  const auto inst = single_item(10.0, 5.0);
  const auto reports = full_reports(inst);
  const Allocation a({Bundle{1}, Bundle{0}});
  const auto sys = core_constraints(reports, a, inst.capacities());
  CHECK(sys.upper == std::vector<double>{10.0, 0.0});
  bool found_empty = false, found_two = false;
  for (const auto& k : sys.constraints) {
    if (k.coalition.empty()) {
      found_empty = true;
      CHECK(k.rhs <= 0.0);
    }
    if (k.coalition == std::vector<std::size_t>{1}) {
      found_two = true;
      CHECK(k.rhs == 5.0);
    }
  }
  CHECK(found_empty);
  CHECK(found_two);
  const Instance alone(Capacities{1}, {ValueOracle(Capacities{1}, TableValuation{{0.0, 7.0}})}, "alone");
  const auto one = core_constraints(full_reports(alone), Allocation({Bundle{1}}), alone.capacities());
  for (const auto& k : one.constraints) CHECK(k.rhs <= 0.0);
  CHECK(one.upper == std::vector<double>{7.0});
}

TEST_CASE("VCG-nearest examples") {
  const auto inst = single_item(10.0, 5.0);
  CHECK(vcg_nearest_payments(full_reports(inst), inst.capacities()) == std::vector<double>{5.0, 0.0});
  // LLG: VCG charges each local 2; the core needs 6 in total from them.
  const auto l = llg();
  const auto reports = full_reports(l);
  CHECK(vcg_payments(reports, l.capacities()) == std::vector<double>{2.0, 2.0, 0.0});
  const auto pi = vcg_nearest_payments(reports, l.capacities());
  CHECK(pi[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(pi[1] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(pi[2] == 0.0);
}

TEST_CASE("revealed-preference activity rule") {
  const std::vector<DemandReport> clock{{Bundle{1, 0}, PriceVector{2.0, 1.0}}};
  const std::map<Bundle, double> finals{{Bundle{1, 0}, 5.0}};
  CHECK(check_revealed_preference(ValueReport{Bundle{1, 0}, 5.0}, clock, finals, ActivityMode::final_cap));
  CHECK_FALSE(check_revealed_preference(ValueReport{Bundle{0, 1}, 10.0}, clock, finals, ActivityMode::final_cap));
  CHECK(check_revealed_preference(ValueReport{Bundle{0, 1}, 3.0}, clock, finals, ActivityMode::final_cap));
  CHECK_THROWS_AS(check_revealed_preference(ValueReport{Bundle{0, 1}, 3.0}, clock, {}, ActivityMode::all_rounds),
                  InvalidInput);
  const std::vector<DemandReport> two{{Bundle{0, 1}, PriceVector{1.0, 1.0}}, clock[0]};
  const std::map<Bundle, double> both{{Bundle{1, 0}, 5.0}, {Bundle{0, 1}, 1.0}};
  // The final round allows 4, the first only 1.
  CHECK(check_revealed_preference(ValueReport{Bundle{0, 1}, 3.0}, two, both, ActivityMode::final_cap));
  CHECK_FALSE(check_revealed_preference(ValueReport{Bundle{0, 1}, 3.0}, two, both, ActivityMode::all_rounds));
}

TEST_CASE("payment rule names") {
  CHECK(parse_payment_rule("vcg-nearest") == PaymentRule::vcg_nearest);
  CHECK(to_string(PaymentRule::zero) == "zero");
  CHECK_FALSE(parse_payment_rule("first-price").has_value());
}

TEST_CASE("property: WDP matches exhaustive search and grows with reports") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    ToyDomainParams p;
    p.bidders = 3;
    p.items = 4;
    p.capacity_hi = 2;
    const auto inst = sample_toy_instance(p, static_cast<std::uint64_t>(t));
    const auto bundles = oracle::all_bundles(inst.capacities().values());
    std::vector<BidderReports> reports(inst.bidders());
    double last = 0.0;
    for (int k = 0; k < 8; ++k) {
      const std::size_t i = static_cast<std::size_t>(u(rng) * static_cast<double>(inst.bidders()));
      if (u(rng) < 0.5) {
        const Bundle& x = bundles[static_cast<std::size_t>(u(rng) * static_cast<double>(bundles.size()))];
        if (!reports[i].has_vq(x)) reports[i].add_vq(ValueReport{x, inst.value(i, x)});
      } else {
        std::vector<double> pv(inst.items());
        for (auto& v : pv) v = 6.0 * u(rng);
        reports[i].add_dq(DemandReport{inst.demand(i, PriceVector(pv)), PriceVector(pv)});
      }
      const auto r = solve_wdp(reports, inst.capacities());
      CHECK(r.inferred_scw == doctest::Approx(oracle::wdp_value(reports, inst.capacities())).epsilon(1e-12));
      CHECK(r.inferred_scw == doctest::Approx(inferred_welfare(reports, r.allocation)).epsilon(1e-12));
      CHECK(r.inferred_scw >= last - 1e-12);
      last = r.inferred_scw;
    }
  }
}

TEST_CASE("property: payments are individually rational and in the revealed core") {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    ToyDomainParams p;
    p.bidders = 3;
    p.items = 3;
    const auto inst = sample_toy_instance(p, 100 + static_cast<std::uint64_t>(t));
    std::vector<BidderReports> reports(inst.bidders());
    for (const auto& x : oracle::all_bundles(inst.capacities().values()))
      for (std::size_t i = 0; i < inst.bidders(); ++i)
        if (!x.empty_bundle() && u(rng) < 0.4) reports[i].add_vq(ValueReport{x, inst.value(i, x)});
    const auto wdp = solve_wdp(reports, inst.capacities());
    const auto vcg = vcg_payments(reports, inst.capacities());
    const auto near = vcg_nearest_payments(reports, inst.capacities());
    const auto cons = oracle::core(reports, wdp.allocation, inst.capacities());
    CHECK(oracle::core_violation(cons, reports, wdp.allocation, near) <= 1e-8);
    for (std::size_t i = 0; i < vcg.size(); ++i) {
      CHECK(vcg[i] >= 0.0);
      CHECK(oracle::inferred(reports[i], wdp.allocation[i]) - vcg[i] >= -1e-9);
    }
    double rev = 0.0;
    for (double v : near) rev += v;
    const auto sys = core_constraints(reports, wdp.allocation, inst.capacities());
    double min_rev = 0.0;
    for (double v : min_revenue_core(sys)) min_rev += v;
    CHECK(rev == doctest::Approx(min_rev).epsilon(1e-8).scale(1.0));
  }
}
