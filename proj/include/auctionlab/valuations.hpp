#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "auctionlab/core.hpp"

namespace auctionlab {

/// Explicit value for every bundle, stored in lexicographic bundle order.
struct TableValuation {
  std::vector<double> values;
};

/// v(x) = (sum_j a_j x_j + sum_{j<k} s_jk min(x_j, x_k)) * (1 + bonus * (|x| - 1)^+)
struct AdditiveSynergyValuation {
  std::vector<double> item_values;
  std::vector<double> synergy;  // m*m row-major, only j<k entries used
  double size_bonus = 0.0;      // > 0 for the "national" bidder
};

/// Closed-form rules used by the pathological instances.
struct ClosedFormValuation {
  enum class Rule {
    max_threshold,  // max_j weights[j] * 1{x_j >= 1}
    count_poly,     // linear * |x| + quadratic * |x|^2
    all_or_nothing  // value * 1{x = full bundle}
  };
  Rule rule = Rule::max_threshold;
  std::vector<double> weights;
  double linear = 0.0;
  double quadratic = 0.0;
  double value = 0.0;
};

/// A bidder's true value function.
class ValueOracle {
public:
  using Payload = std::variant<TableValuation, AdditiveSynergyValuation, ClosedFormValuation>;

  ValueOracle(Capacities caps, Payload payload);

  const Capacities& capacities() const noexcept { return caps_; }
  const Payload& payload() const noexcept { return payload_; }
  std::string kind() const;

  double value(const Bundle& x) const;
  /// Values for every bundle of `space` (which must share the capacities).
  std::vector<double> tabulate(const BundleSpace& space) const;

private:
  Capacities caps_;
  Payload payload_;
};

double true_value(const ValueOracle& o, const Bundle& x);

struct EfficientOutcome {
  Allocation allocation;
  double scw = 0.0;
};

/// Capacities, one oracle per bidder, and a label. Value tables and the
/// efficient allocation are computed lazily and shared between copies.
class Instance {
public:
  Instance(Capacities caps, std::vector<ValueOracle> oracles, std::string label);

  const Capacities& capacities() const noexcept { return caps_; }
  const std::vector<ValueOracle>& oracles() const noexcept { return oracles_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t bidders() const noexcept { return oracles_.size(); }
  std::size_t items() const noexcept { return caps_.size(); }

  const SharedSpace& space() const;
  const ValueTable& table(std::size_t bidder) const;
  double value(std::size_t bidder, const Bundle& x) const;
  /// Truthful demand response (lexicographic tie-break).
  Bundle demand(std::size_t bidder, const PriceVector& p) const;
  /// sum_i v_i(a_i)
  double social_welfare(const Allocation& a) const;
  /// Exact optimum; throws ExactOracleUnavailable past the node budget.
  const EfficientOutcome& optimum() const;

private:
  struct Cache;
  Capacities caps_;
  std::vector<ValueOracle> oracles_;
  std::string label_;
  std::shared_ptr<Cache> cache_;
};

/// Forced query sequences replaying the hand-built counterexamples.
struct QueryScript {
  std::vector<PriceVector> clock_prices;
  /// Per value-query round (after the bridge bid), per bidder; nullopt lets
  /// the mechanism choose.
  std::vector<std::vector<std::optional<Bundle>>> value_queries;
};

enum class PathologicalId { P1, P2, P3, P4, P5 };

std::optional<PathologicalId> parse_pathological(const std::string& name);
std::string to_string(PathologicalId id);

struct PathologicalOptions {
  int p4_items = 12;
  double p4_epsilon = 0.01;
  double p4_big_value = 1000.0;
  double p5_epsilon = 0.1;
};

struct PathologicalCase {
  Instance instance;
  QueryScript script;
};

/// P1: two bidders, ten copies of one item; no demand query ever reveals the
///     value of nine copies. Script: the price grid 0.00..12.00.
/// P2: two items; the third scripted demand query destroys efficiency.
/// P3: P2's first two queries followed by the harmful value queries.
/// P4: sparse high-value bidder; random value queries miss its bundle.
/// P5: P1 with a handful of informative demand queries and the single value
///     query for nine copies.
PathologicalCase make_pathological(PathologicalId id, const PathologicalOptions& opts = {});

struct ToyDomainParams {
  int bidders = 4;
  int items = 8;
  int capacity_lo = 1;
  int capacity_hi = 1;
  double base_lo = 1.0;
  double base_hi = 10.0;
  double interest = 0.6;  // probability an item is of interest to a regional bidder
  double synergy_density = 0.3;
  double synergy_lo = 0.0;
  double synergy_hi = 5.0;
  bool national_bidder = false;
  double national_bonus = 0.15;
};

/// Synthetic additive-plus-pairwise-synergy domain (our own distributions).
Instance sample_toy_instance(const ToyDomainParams& p, std::uint64_t seed);

Bundle utility_max_bundle(const ValueOracle& o, const PriceVector& p);

EfficientOutcome efficient_allocation(const Instance& inst);

// JSON: {label, capacities, bidders:[{kind, payload}]}
nlohmann::json to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ToyDomainParams& p);
ToyDomainParams toy_params_from_json(const nlohmann::json& j);

}  // namespace auctionlab
