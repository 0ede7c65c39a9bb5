#include <random>

#include "doctest.h"

#include "../oracles.hpp"

using namespace auctionlab;

namespace {

MvnnParams zero_model(const MvnnArch& arch) { return zero_like(init(arch, 0)); }

BidderReports demand_reports(const Instance& inst, std::size_t bidder, const std::vector<PriceVector>& prices) {
  BidderReports r;
  for (const auto& p : prices) r.add_dq(DemandReport{inst.demand(bidder, p), p});
  return r;
}

}  // namespace

TEST_CASE("dq_loss of the constant-zero model on P1 bidder 2 at 9.3") {
  const auto arch = MvnnArch::make(Capacities{10}, {4});
  const auto res = dq_loss(zero_model(arch), arch, DemandReport{Bundle{10}, PriceVector{9.3}});
  CHECK(res.loss == doctest::Approx(93.0).epsilon(1e-14));
  CHECK(res.predicted == Bundle{0});
}

TEST_CASE("dq_loss is zero when the reported bundle is the model's demand") {
  const auto arch = MvnnArch::make(Capacities{2}, {1});
  const MvnnParams m{{DenseLayer{1, 1, {1.0}, {0.0}}}, {1.0}, {}, 1.0};
  CHECK(dq_loss(m, arch, DemandReport{Bundle{2}, PriceVector{0.2}}).loss == 0.0);
  // Utilities 0, 0, 0 at p = 0.5: every bundle ties.
  CHECK(dq_loss(m, arch, DemandReport{Bundle{1}, PriceVector{0.5}}).loss == 0.0);
}

TEST_CASE("vq_loss is the squared error") {
  const auto arch = MvnnArch::make(Capacities{2}, {1});
  CHECK(vq_loss(zero_model(arch), arch, ValueReport{Bundle{1}, 0.5}) == 0.25);
  const MvnnParams m{{DenseLayer{1, 1, {1.0}, {0.0}}}, {2.0}, {}, 1.0};
  CHECK(vq_loss(m, arch, ValueReport{Bundle{2}, 0.5}) == 2.25);
  CHECK(vq_loss(m, arch, ValueReport{Bundle{2}, 2.0}) == 0.0);
}

TEST_CASE("empty reports return the initialization") {
  const auto arch = MvnnArch::make(Capacities{1, 1}, {4, 4});
  TrainHyperparams hp;
  hp.seed = 9;
  const auto res = mixed_train(BidderReports{}, arch, hp);
  CHECK(res.params == init(arch, 9));
  CHECK(res.loss == 0.0);
  const auto d = detect_inconsistency(BidderReports{}, arch, hp, 3);
  CHECK(d.min_loss == 0.0);
  CHECK_FALSE(d.inconsistent);
}

TEST_CASE("a single full-bundle value report is fitted") {
  const auto arch = MvnnArch::make(Capacities{1, 2}, {1});
  BidderReports r;
  r.add_vq(ValueReport{Bundle{1, 2}, 7.5});
  TrainHyperparams hp;
  hp.epochs = 500;
  const auto res = mixed_train(r, arch, hp);
  CHECK(vq_loss(res.params, arch, r.vq()[0]) < 1e-3);
}

TEST_CASE("P5 demand reports of bidder 2 give a near-linear model") {
  const auto pc = make_pathological(PathologicalId::P5);
  const auto r = demand_reports(pc.instance, 1, pc.script.clock_prices);
  const auto arch = ArchSpec{}.for_capacities(pc.instance.capacities());
  const auto res = mixed_train(r, arch, TrainHyperparams{});
  const double m10 = forward(res.params, arch, Bundle{10});
  const double m9 = forward(res.params, arch, Bundle{9});
  REQUIRE(m10 > 0.0);
  CHECK(std::abs(m9 - 0.9 * m10) / m10 < 0.15);
}

TEST_CASE("property: parameters stay feasible after every step") {
  const auto inst = sample_toy_instance(ToyDomainParams{}, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  BidderReports r;
  for (int k = 0; k < 6; ++k) {
    std::vector<double> p(inst.items());
    for (auto& v : p) v = u(rng);
    r.add_dq(DemandReport{inst.demand(0, PriceVector(p)), PriceVector(p)});
  }
  for (const auto& x : oracle::all_bundles(inst.capacities().values()))
    if (u(rng) < 0.05 && !r.has_vq(x)) r.add_vq(ValueReport{x, inst.value(0, x)});
  for (auto opt : {Optimizer::sgd, Optimizer::adam}) {
    TrainHyperparams hp;
    hp.epochs = 30;
    hp.optimizer = opt;
    hp.cache_frequency = 3;
    int steps = 0, bad = 0;
    mixed_train(r, ArchSpec{}.for_capacities(inst.capacities()), hp, [&](const MvnnParams& p) {
      ++steps;
      if (!satisfies_sign_constraints(p)) ++bad;
    });
    CHECK(steps > 0);
    CHECK(bad == 0);
  }
}

TEST_CASE("training is deterministic in the seed") {
  const auto inst = sample_toy_instance(ToyDomainParams{}, 4);
  const auto r = demand_reports(inst, 2, {PriceVector(std::vector<double>(8, 1.0)), PriceVector(std::vector<double>(8, 3.0))});
  const auto arch = ArchSpec{}.for_capacities(inst.capacities());
  TrainHyperparams hp;
  hp.epochs = 40;
  hp.seed = 5;
  CHECK(mixed_train(r, arch, hp).params == mixed_train(r, arch, hp).params);
}

TEST_CASE("demand-only data from a realizable model is fitted") {
  // Teacher: additive values 3 and 5 on two unit items, which a skip map
  // represents exactly.
  const Capacities c{1, 1};
  const ValueOracle teacher(c, TableValuation{{0.0, 5.0, 3.0, 8.0}});
  Instance inst(c, {teacher}, "teacher");
  std::vector<PriceVector> prices;
  for (double a : {1.0, 4.0, 6.0})
    for (double b : {2.0, 4.0, 7.0}) prices.push_back(PriceVector{a, b});
  const auto r = demand_reports(inst, 0, prices);
  const auto arch = MvnnArch::make(c, {4}, 1.0, true);
  TrainHyperparams hp;
  hp.epochs = 400;
  const auto res = mixed_train(r, arch, hp);
  double total = 0.0;
  for (const auto& d : r.dq()) total += dq_loss(res.params, arch, d).loss;
  CHECK(total < 1e-6);
}

TEST_CASE("contradictory reports keep a positive loss floor") {
  const auto arch = ArchSpec{}.for_capacities(Capacities{1, 1});
  BidderReports bad;
  bad.add_dq(DemandReport{Bundle{1, 0}, PriceVector{1.0, 1.0}});
  bad.add_vq(ValueReport{Bundle{1, 0}, 0.5});
  const auto res = detect_inconsistency(bad, arch, TrainHyperparams{}, 3);
  CHECK(res.min_loss >= 0.25 - 1e-9);
  CHECK(res.inconsistent);
  CHECK(res.threshold == doctest::Approx(0.05 * 0.75));
}

TEST_CASE("report magnitude averages values and demanded prices") {
  BidderReports r;
  r.add_dq(DemandReport{Bundle{1, 1}, PriceVector{1.0, 2.0}});
  r.add_vq(ValueReport{Bundle{1, 0}, 5.0});
  CHECK(report_magnitude(r) == 4.0);
  CHECK(report_magnitude(BidderReports{}) == 0.0);
}

TEST_CASE("hyperparameter validation") {
  TrainHyperparams hp;
  hp.epochs = 0;
  CHECK_THROWS_AS(hp.validate(), InvalidInput);
  hp = {};
  hp.learning_rate = 0.0;
  CHECK_THROWS_AS(hp.validate(), InvalidInput);
  hp = {};
  hp.cache_frequency = 0;
  CHECK_THROWS_AS(hp.validate(), InvalidInput);
  hp = {};
  hp.l2 = -1.0;
  CHECK_THROWS_AS(hp.validate(), InvalidInput);
  CHECK_THROWS_AS(detect_inconsistency(BidderReports{}, MvnnArch::make(Capacities{1}, {1}), TrainHyperparams{}, 0),
                  InvalidInput);
}

TEST_CASE("hyperparameter JSON round trip") {
  TrainHyperparams hp;
  hp.optimizer = Optimizer::adam;
  hp.epochs = 17;
  hp.learning_rate = 0.004;
  const auto back = train_hyperparams_from_json(to_json(hp));
  CHECK(back.optimizer == Optimizer::adam);
  CHECK(back.epochs == 17);
  CHECK(back.learning_rate == 0.004);
  CHECK_THROWS_AS(train_hyperparams_from_json(nlohmann::json{{"optimizer", "rmsprop"}}), InvalidInput);
}
