#include <random>

#include "doctest.h"

#include "../oracles.hpp"

using namespace auctionlab;

namespace {

// One hidden unit, W1 = [1], b = 0, t = 1, W2 = [1], c = (2).
struct Tiny {
  MvnnArch arch = MvnnArch::make(Capacities{2}, {1}, 1.0, false);
  MvnnParams params{{DenseLayer{1, 1, {1.0}, {0.0}}}, {1.0}, {}, 1.0};
};

}  // namespace

TEST_CASE("hand-evaluated single-unit network") {
  Tiny t;
  CHECK(forward(t.params, t.arch, Bundle{0}) == 0.0);
  CHECK(forward(t.params, t.arch, Bundle{1}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(forward(t.params, t.arch, Bundle{2}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("single-unit argmax at p = 0.2 is (2)") {
  Tiny t;
  CHECK(argmax_utility(t.params, t.arch, PriceVector{0.2}) == Bundle{2});
  CHECK(argmax_utility(t.params, t.arch, PriceVector{100.0}) == Bundle{0});
  CHECK(argmax_utility(t.params, t.arch, PriceVector{0.0}) == Bundle{2});
}

TEST_CASE("bReLU cutoff and output scale") {
  Tiny t;
  t.params.hidden[0].weights = {4.0};
  CHECK(forward(t.params, t.arch, Bundle{1}) == 1.0);
  t.params.output_scale = 3.0;
  CHECK(forward(t.params, t.arch, Bundle{2}) == 3.0);
  t.params.hidden[0].bias = {-0.5};
  t.params.hidden[0].weights = {1.0};
  CHECK(forward(t.params, t.arch, Bundle{1}) == 0.0);
  CHECK(forward(t.params, t.arch, Bundle{2}) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("skip map adds a linear term on the normalized input") {
  auto arch = MvnnArch::make(Capacities{2, 1}, {1}, 1.0, true);
  MvnnParams p{{DenseLayer{2, 1, {0.0, 0.0}, {0.0}}}, {1.0}, {2.0, 3.0}, 1.0};
  CHECK(forward(p, arch, Bundle{1, 1}) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(forward(p, arch, Bundle{2, 0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("init is deterministic, feasible and normalized") {
  const auto arch = MvnnArch::make(Capacities{1, 2, 3}, {8, 4}, 1.0, true);
  const auto a = init(arch, 11);
  CHECK(a == init(arch, 11));
  CHECK_FALSE(a == init(arch, 12));
  CHECK(satisfies_sign_constraints(a));
  CHECK(project_params(a) == a);
  CHECK(forward(a, arch, Bundle{0, 0, 0}) == 0.0);
  for (const auto& l : a.hidden) {
    for (double w : l.weights) CHECK((w >= 0.0 && w <= 2.0 / static_cast<double>(l.in)));
    for (double b : l.bias) CHECK(b == 0.0);
  }
  for (double w : a.skip) CHECK((w >= 0.0 && w <= 1.0 / 3.0));
}

TEST_CASE("projection clamps and is idempotent") {
  MvnnParams p{{DenseLayer{2, 1, {-0.3, 0.7}, {0.2}}}, {-1.0}, {}, 1.0};
  const auto q = project_params(p);
  CHECK(q.hidden[0].weights == std::vector<double>{0.0, 0.7});
  CHECK(q.hidden[0].bias == std::vector<double>{0.0});
  CHECK(q.output == std::vector<double>{0.0});
  CHECK(project_params(q) == q);
  CHECK_FALSE(satisfies_sign_constraints(p));
  CHECK(satisfies_sign_constraints(q));
}

TEST_CASE("invalid architectures are rejected") {
  CHECK_THROWS_AS(MvnnArch::make(Capacities{1}, {0}), InvalidInput);
  CHECK_THROWS_AS(MvnnArch::make(Capacities{1}, {2}, 0.0), InvalidInput);
  Tiny t;
  CHECK_THROWS_AS(forward(t.params, t.arch, Bundle{1, 1}), InvalidInput);
}

TEST_CASE("property: monotone, normalized and bounded by the full bundle") {
  std::mt19937_64 rng(71);
  for (int k = 0; k < 1000; ++k) {
    const auto arch = oracle::random_arch(rng);
    const auto params = oracle::random_params(arch, rng);
    const auto& caps = arch.capacities.values();
    std::vector<int> x(caps.size()), y(caps.size());
    for (std::size_t j = 0; j < caps.size(); ++j) {
      y[j] = std::uniform_int_distribution<int>(0, caps[j])(rng);
      x[j] = std::uniform_int_distribution<int>(0, y[j])(rng);
    }
    const double fx = forward(params, arch, Bundle(x));
    const double fy = forward(params, arch, Bundle(y));
    CHECK(fx <= fy + 1e-12);
    CHECK(fx >= 0.0);
    CHECK(fy <= forward(params, arch, Bundle::full(arch.capacities)) + 1e-12);
    CHECK(forward(params, arch, Bundle::zero(caps.size())) == 0.0);
  }
}

TEST_CASE("property: argmax_utility matches an exhaustive scan") {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> price(0.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const auto arch = oracle::random_arch(rng);
    const auto params = oracle::random_params(arch, rng);
    std::vector<double> p(arch.input_dim());
    for (auto& v : p) v = price(rng);
    const auto ref = oracle::w_eval({{params, arch}}, p, arch.capacities.values());
    CHECK(argmax_utility(params, arch, PriceVector(p)) == ref.demands[0]);
  }
}

TEST_CASE("value_table agrees with forward") {
  std::mt19937_64 rng(73);
  const auto arch = oracle::random_arch(rng);
  const auto params = oracle::random_params(arch, rng);
  const BundleSpace space(arch.capacities);
  const auto table = value_table(params, arch, space);
  for (std::size_t k = 0; k < space.size(); ++k) CHECK(table[k] == forward(params, arch, space.bundle(k)));
}

TEST_CASE("checkpoints reload bit-exactly") {
  std::mt19937_64 rng(74);
  for (int k = 0; k < 20; ++k) {
    const auto arch = oracle::random_arch(rng);
    const auto params = oracle::random_params(arch, rng);
    const auto text = checkpoint(params, arch).dump();
    const auto j = nlohmann::json::parse(text);
    const auto arch2 = arch_from_json(j.at("arch"));
    const auto back = params_from_checkpoint(j, arch2);
    CHECK(back == params);
    for (const auto& x : oracle::all_bundles(arch.capacities.values()))
      CHECK(forward(back, arch2, x) == forward(params, arch, x));
  }
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(75);
  const auto arch = MvnnArch::make(Capacities{2, 3}, {3, 2}, 1.0, true);
  auto params = oracle::random_params(arch, rng);
  params.output_scale = 1.0;
  const Bundle x{1, 2};
  const auto in = normalized_input(arch, x);
  auto grad = zero_like(params);
  accumulate_gradient(params, arch, in, 1.0, grad);
  const double h = 1e-6;
  for (std::size_t l = 0; l < params.hidden.size(); ++l)
    for (std::size_t k = 0; k < params.hidden[l].weights.size(); ++k) {
      auto up = params, dn = params;
      up.hidden[l].weights[k] += h;
      dn.hidden[l].weights[k] -= h;
      const double fd = (forward(up, arch, x) - forward(dn, arch, x)) / (2 * h);
      CHECK(grad.hidden[l].weights[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  for (std::size_t k = 0; k < params.skip.size(); ++k) {
    auto up = params;
    up.skip[k] += h;
    CHECK(grad.skip[k] == doctest::Approx((forward(up, arch, x) - forward(params, arch, x)) / h).epsilon(1e-5));
  }
}
