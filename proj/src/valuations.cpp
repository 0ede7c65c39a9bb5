#include "auctionlab/valuations.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include "auctionlab/search.hpp"

namespace auctionlab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double eval(const TableValuation& t, const Capacities& caps, const Bundle& x) {
  std::size_t idx = 0, stride = 1;
  for (std::size_t j = caps.size(); j-- > 0;) {
    idx += static_cast<std::size_t>(x[j]) * stride;
    stride *= static_cast<std::size_t>(caps[j] + 1);
  }
  return t.values[idx];
}

double eval(const AdditiveSynergyValuation& a, const Capacities&, const Bundle& x) {
  const std::size_t m = x.size();
  double base = 0.0;
  for (std::size_t j = 0; j < m; ++j) base += a.item_values[j] * x[j];
  if (!a.synergy.empty()) {
    for (std::size_t j = 0; j < m; ++j) {
      if (x[j] == 0) continue;
      for (std::size_t k = j + 1; k < m; ++k) {
        const double s = a.synergy[j * m + k];
        if (s != 0.0) base += s * std::min(x[j], x[k]);
      }
    }
  }
  if (a.size_bonus > 0.0) {
    const int size = x.item_count();
    if (size > 1) base *= 1.0 + a.size_bonus * (size - 1);
  }
  return base;
}

double eval(const ClosedFormValuation& c, const Capacities& caps, const Bundle& x) {
  switch (c.rule) {
    case ClosedFormValuation::Rule::max_threshold: {
      double best = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j] >= 1) best = std::max(best, c.weights[j]);
      return best;
    }
    case ClosedFormValuation::Rule::count_poly: {
      const double s = x.item_count();
      return c.linear * s + c.quadratic * s * s;
    }
    case ClosedFormValuation::Rule::all_or_nothing:
      return x.counts() == caps.values() ? c.value : 0.0;
  }
  return 0.0;
}

std::string rule_name(ClosedFormValuation::Rule r) {
  switch (r) {
    case ClosedFormValuation::Rule::max_threshold: return "max-threshold";
    case ClosedFormValuation::Rule::count_poly: return "count-poly";
    case ClosedFormValuation::Rule::all_or_nothing: return "all-or-nothing";
  }
  return "?";
}

ClosedFormValuation::Rule parse_rule(const std::string& s) {
  if (s == "max-threshold") return ClosedFormValuation::Rule::max_threshold;
  if (s == "count-poly") return ClosedFormValuation::Rule::count_poly;
  if (s == "all-or-nothing") return ClosedFormValuation::Rule::all_or_nothing;
  throw InvalidInput("unknown closed-form rule '" + s + "'");
}

ValueOracle threshold_oracle(const Capacities& c, std::vector<double> weights) {
  ClosedFormValuation v;
  v.rule = ClosedFormValuation::Rule::max_threshold;
  v.weights = std::move(weights);
  return ValueOracle(c, v);
}

ValueOracle p1_bidder2(const Capacities& c) {
  ClosedFormValuation v;
  v.rule = ClosedFormValuation::Rule::count_poly;
  v.linear = 9.0;
  v.quadratic = 1.0 / 25.0;
  return ValueOracle(c, v);
}

}  // namespace

ValueOracle::ValueOracle(Capacities caps, Payload payload) : caps_(std::move(caps)), payload_(std::move(payload)) {
  const std::size_t m = caps_.size();
  std::visit(overloaded{
                 [&](const TableValuation& t) {
                   if (static_cast<double>(t.values.size()) != bundle_count(caps_))
                     throw InvalidInput("value table length does not match the bundle count");
                   for (double v : t.values)
                     if (!(v >= 0.0)) throw InvalidInput("value table entries must be non-negative");
                   if (t.values.front() != 0.0) throw InvalidInput("value of the empty bundle must be 0");
                   // Each bundle against the bundles one copy smaller.
                   const BundleSpace space(caps_);
                   for (std::size_t k = 1; k < space.size(); ++k)
                     for (std::size_t j = 0, stride = 1; j < m; ++j) {
                       const std::size_t jj = m - 1 - j;
                       if (space.digit(k, jj) > 0 && t.values[k - stride] > t.values[k])
                         throw InvalidInput("value table is not monotone");
                       stride *= static_cast<std::size_t>(caps_[jj] + 1);
                     }
                 },
                 [&](const AdditiveSynergyValuation& a) {
                   if (a.item_values.size() != m) throw InvalidInput("item value count differs from item count");
                   if (!a.synergy.empty() && a.synergy.size() != m * m)
                     throw InvalidInput("synergy matrix must be m*m");
                   for (double v : a.item_values)
                     if (!(v >= 0.0)) throw InvalidInput("item values must be non-negative");
                   for (double v : a.synergy)
                     if (!(v >= 0.0)) throw InvalidInput("synergies must be non-negative");
                   if (!(a.size_bonus >= 0.0)) throw InvalidInput("size bonus must be non-negative");
                 },
                 [&](const ClosedFormValuation& c) {
                   if (c.rule == ClosedFormValuation::Rule::max_threshold && c.weights.size() != m)
                     throw InvalidInput("threshold weights must cover every item");
                 }},
             payload_);
}

std::string ValueOracle::kind() const {
  return std::visit(overloaded{[](const TableValuation&) { return std::string("table"); },
                               [](const AdditiveSynergyValuation&) { return std::string("additive-synergy"); },
                               [](const ClosedFormValuation&) { return std::string("closed-form"); }},
                    payload_);
}

double ValueOracle::value(const Bundle& x) const {
  x.check_within(caps_);
  return std::visit([&](const auto& v) { return eval(v, caps_, x); }, payload_);
}

std::vector<double> ValueOracle::tabulate(const BundleSpace& space) const {
  if (space.capacities() != caps_) throw InvalidInput("bundle space capacities differ from oracle capacities");
  if (const auto* t = std::get_if<TableValuation>(&payload_)) return t->values;
  std::vector<double> out(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx)
    out[idx] = std::visit([&](const auto& v) { return eval(v, caps_, space.bundle(idx)); }, payload_);
  return out;
}

double true_value(const ValueOracle& o, const Bundle& x) { return o.value(x); }

// ---------------------------------------------------------------------------

struct Instance::Cache {
  std::once_flag tables_once;
  SharedSpace space;
  std::vector<ValueTable> tables;
  std::once_flag optimum_once;
  std::optional<EfficientOutcome> optimum;
};

Instance::Instance(Capacities caps, std::vector<ValueOracle> oracles, std::string label)
    : caps_(std::move(caps)), oracles_(std::move(oracles)), label_(std::move(label)),
      cache_(std::make_shared<Cache>()) {
  if (oracles_.empty()) throw InvalidInput("an instance needs at least one bidder");
  for (const auto& o : oracles_)
    if (o.capacities() != caps_) throw InvalidInput("oracle capacities differ from instance capacities");
}

const SharedSpace& Instance::space() const {
  std::call_once(cache_->tables_once, [this] {
    cache_->space = std::make_shared<const BundleSpace>(caps_);
    for (const auto& o : oracles_) cache_->tables.push_back(ValueTable{cache_->space, o.tabulate(*cache_->space)});
  });
  return cache_->space;
}

const ValueTable& Instance::table(std::size_t bidder) const {
  space();
  return cache_->tables.at(bidder);
}

double Instance::value(std::size_t bidder, const Bundle& x) const { return table(bidder).at(x); }

Bundle Instance::demand(std::size_t bidder, const PriceVector& p) const {
  const auto& t = table(bidder);
  return t.space->bundle(argmax_utility_index(t, p));
}

double Instance::social_welfare(const Allocation& a) const {
  if (a.size() != bidders()) throw InvalidInput("allocation size differs from bidder count");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += value(i, a[i]);
  return s;
}

const EfficientOutcome& Instance::optimum() const {
  std::call_once(cache_->optimum_once, [this] {
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < bidders(); ++i) values.push_back(table(i).values);
    const auto sol = solve_exact(full_problem(space(), std::move(values)));
    // The all-empty allocation is always feasible.
    cache_->optimum = EfficientOutcome{to_allocation(*space(), sol->choice), sol->value};
  });
  if (!cache_->optimum) throw ExactOracleUnavailable("efficient allocation unavailable");
  return *cache_->optimum;
}

EfficientOutcome efficient_allocation(const Instance& inst) { return inst.optimum(); }

Bundle utility_max_bundle(const ValueOracle& o, const PriceVector& p) {
  if (p.size() != o.capacities().size()) throw InvalidInput("price vector dimension mismatch");
  const auto space = std::make_shared<const BundleSpace>(o.capacities());
  const ValueTable table{space, o.tabulate(*space)};
  return space->bundle(argmax_utility_index(table, p));
}

// ---------------------------------------------------------------------------

std::optional<PathologicalId> parse_pathological(const std::string& name) {
  if (name == "P1") return PathologicalId::P1;
  if (name == "P2") return PathologicalId::P2;
  if (name == "P3") return PathologicalId::P3;
  if (name == "P4") return PathologicalId::P4;
  if (name == "P5") return PathologicalId::P5;
  return std::nullopt;
}

std::string to_string(PathologicalId id) {
  switch (id) {
    case PathologicalId::P1: return "P1";
    case PathologicalId::P2: return "P2";
    case PathologicalId::P3: return "P3";
    case PathologicalId::P4: return "P4";
    case PathologicalId::P5: return "P5";
  }
  return "?";
}

PathologicalCase make_pathological(PathologicalId id, const PathologicalOptions& opts) {
  switch (id) {
    case PathologicalId::P1: {
      const Capacities c{10};
      Instance inst(c, {threshold_oracle(c, {100.0}), p1_bidder2(c)}, "P1");
      QueryScript script;
      for (int k = 0; k <= 1200; ++k) script.clock_prices.push_back(PriceVector{k / 100.0});
      return {std::move(inst), std::move(script)};
    }
    case PathologicalId::P2:
    case PathologicalId::P3: {
      const Capacities c{1, 1};
      Instance inst(c, {threshold_oracle(c, {400.0, 2.0}), threshold_oracle(c, {1.1, 0.0})}, to_string(id));
      QueryScript script;
      script.clock_prices = {PriceVector{1.0, 1.0}, PriceVector{1.2, 1.0}};
      if (id == PathologicalId::P2)
        script.clock_prices.push_back(PriceVector{401.0, 1.0});
      else
        script.value_queries = {{Bundle{0, 1}, Bundle{1, 0}}};
      return {std::move(inst), std::move(script)};
    }
    case PathologicalId::P4: {
      if (opts.p4_items < 1) throw InvalidInput("P4 needs at least one item");
      const Capacities c(std::vector<int>(static_cast<std::size_t>(opts.p4_items), 1));
      ClosedFormValuation big;
      big.rule = ClosedFormValuation::Rule::all_or_nothing;
      big.value = opts.p4_big_value;
      Instance inst(c,
                    {threshold_oracle(c, std::vector<double>(c.size(), opts.p4_epsilon)), ValueOracle(c, big)},
                    "P4");
      return {std::move(inst), {}};
    }
    case PathologicalId::P5: {
      const Capacities c{10};
      const double eps = opts.p5_epsilon;
      Instance inst(c, {threshold_oracle(c, {100.0}), p1_bidder2(c)}, "P5");
      QueryScript script;
      script.clock_prices = {PriceVector{eps}, PriceVector{100.0 - eps}, PriceVector{100.0 + eps},
                             PriceVector{(94.0 - eps) / 10.0}, PriceVector{(94.0 + eps) / 10.0}};
      script.value_queries = {{std::nullopt, Bundle{9}}};
      return {std::move(inst), std::move(script)};
    }
  }
  throw InvalidInput("unknown pathological instance");
}

// ---------------------------------------------------------------------------

Instance sample_toy_instance(const ToyDomainParams& p, std::uint64_t seed) {
  if (p.bidders < 1 || p.items < 1) throw InvalidInput("toy domain needs >= 1 bidder and item");
  if (p.capacity_lo < 1 || p.capacity_hi < p.capacity_lo) throw InvalidInput("invalid capacity range");
  if (p.base_lo < 0 || p.base_hi < p.base_lo || p.synergy_lo < 0 || p.synergy_hi < p.synergy_lo ||
      p.national_bonus < 0)
    throw InvalidInput("toy bounds must be non-negative and ordered");
  if (p.synergy_density < 0 || p.synergy_density > 1 || p.interest < 0 || p.interest > 1)
    throw InvalidInput("toy densities must lie in [0,1]");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cap_dist(p.capacity_lo, p.capacity_hi);
  std::vector<int> caps(static_cast<std::size_t>(p.items));
  for (auto& c : caps) c = cap_dist(rng);
  const Capacities capacities(caps);
  const double count = bundle_count(capacities);
  if (count > static_cast<double>(kDefaultEnumerationCap)) throw EnumerationTooLarge(count, kDefaultEnumerationCap);

  const std::size_t m = capacities.size();
  std::uniform_real_distribution<double> base(p.base_lo, p.base_hi);
  std::uniform_real_distribution<double> syn(p.synergy_lo, p.synergy_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_item(0, m - 1);

  std::vector<ValueOracle> oracles;
  for (int i = 0; i < p.bidders; ++i) {
    const bool national = p.national_bidder && i == p.bidders - 1;
    std::vector<bool> interested(m, true);
    if (!national) {
      bool any = false;
      for (std::size_t j = 0; j < m; ++j) any |= (interested[j] = unit(rng) < p.interest);
      if (!any) interested[pick_item(rng)] = true;
    }
    AdditiveSynergyValuation v;
    v.item_values.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double draw = base(rng);
      if (interested[j]) v.item_values[j] = draw;
    }
    if (p.synergy_density > 0.0) {
      v.synergy.assign(m * m, 0.0);
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k) {
          const bool hit = unit(rng) < p.synergy_density;
          const double s = syn(rng);
          if (hit && interested[j] && interested[k]) v.synergy[j * m + k] = s;
        }
    }
    if (national) v.size_bonus = p.national_bonus;
    oracles.emplace_back(capacities, std::move(v));
  }
  return Instance(capacities, std::move(oracles), "toy-" + std::to_string(seed));
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Instance& inst) {
  nlohmann::json bidders = nlohmann::json::array();
  for (const auto& o : inst.oracles()) {
    nlohmann::json payload = std::visit(
        overloaded{[](const TableValuation& t) { return nlohmann::json{{"values", t.values}}; },
                   [](const AdditiveSynergyValuation& a) {
                     return nlohmann::json{
                         {"item_values", a.item_values}, {"synergy", a.synergy}, {"size_bonus", a.size_bonus}};
                   },
                   [](const ClosedFormValuation& c) {
                     return nlohmann::json{{"rule", rule_name(c.rule)},
                                           {"weights", c.weights},
                                           {"linear", c.linear},
                                           {"quadratic", c.quadratic},
                                           {"value", c.value}};
                   }},
        o.payload());
    bidders.push_back({{"kind", o.kind()}, {"payload", payload}});
  }
  return {{"label", inst.label()}, {"capacities", inst.capacities().values()}, {"bidders", bidders}};
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    const Capacities caps(j.at("capacities").get<std::vector<int>>());
    std::vector<ValueOracle> oracles;
    for (const auto& b : j.at("bidders")) {
      const auto kind = b.at("kind").get<std::string>();
      const auto& pl = b.at("payload");
      if (kind == "table") {
        oracles.emplace_back(caps, TableValuation{pl.at("values").get<std::vector<double>>()});
      } else if (kind == "additive-synergy") {
        AdditiveSynergyValuation a;
        a.item_values = pl.at("item_values").get<std::vector<double>>();
        a.synergy = pl.value("synergy", std::vector<double>{});
        a.size_bonus = pl.value("size_bonus", 0.0);
        oracles.emplace_back(caps, std::move(a));
      } else if (kind == "closed-form") {
        ClosedFormValuation c;
        c.rule = parse_rule(pl.at("rule").get<std::string>());
        c.weights = pl.value("weights", std::vector<double>{});
        c.linear = pl.value("linear", 0.0);
        c.quadratic = pl.value("quadratic", 0.0);
        c.value = pl.value("value", 0.0);
        oracles.emplace_back(caps, std::move(c));
      } else {
        throw InvalidInput("bidders[].kind: unknown oracle kind '" + kind + "'");
      }
    }
    return Instance(caps, std::move(oracles), j.value("label", std::string("instance")));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed instance: ") + e.what());
  }
}

nlohmann::json to_json(const ToyDomainParams& p) {
  return {{"bidders", p.bidders},
          {"items", p.items},
          {"capacity_lo", p.capacity_lo},
          {"capacity_hi", p.capacity_hi},
          {"base_lo", p.base_lo},
          {"base_hi", p.base_hi},
          {"interest", p.interest},
          {"synergy_density", p.synergy_density},
          {"synergy_lo", p.synergy_lo},
          {"synergy_hi", p.synergy_hi},
          {"national_bidder", p.national_bidder},
          {"national_bonus", p.national_bonus}};
}

ToyDomainParams toy_params_from_json(const nlohmann::json& j) {
  ToyDomainParams p;
  try {
    p.bidders = j.value("bidders", p.bidders);
    p.items = j.value("items", p.items);
    p.capacity_lo = j.value("capacity_lo", p.capacity_lo);
    p.capacity_hi = j.value("capacity_hi", p.capacity_hi);
    p.base_lo = j.value("base_lo", p.base_lo);
    p.base_hi = j.value("base_hi", p.base_hi);
    p.interest = j.value("interest", p.interest);
    p.synergy_density = j.value("synergy_density", p.synergy_density);
    p.synergy_lo = j.value("synergy_lo", p.synergy_lo);
    p.synergy_hi = j.value("synergy_hi", p.synergy_hi);
    p.national_bidder = j.value("national_bidder", p.national_bidder);
    p.national_bonus = j.value("national_bonus", p.national_bonus);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("toy domain parameters: ") + e.what());
  }
  return p;
}

}  // namespace auctionlab
