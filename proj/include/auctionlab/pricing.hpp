#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "auctionlab/core.hpp"

namespace auctionlab {

class Instance;

struct PriceEngineConfig {
  double initial_fraction = 0.05;  // of the mean single-copy value per item
  double cca_increment = 0.05;
  std::optional<double> step;      // descent step; default is step_fraction * mean model value per copy
  double step_fraction = 0.01;
  double over_demand_boost = 0.5;  // mu
  int descent_steps = 200;

  void validate() const;
};

/// Raise every over-demanded item's price by the factor 1 + delta.
PriceVector cca_next_price(const PriceVector& p, const std::vector<Bundle>& demands, const Capacities& c,
                           double delta);

/// max_x v(x) - <p, x>
double indirect_utility(const ValueTable& v, const PriceVector& p);

/// sum_j c_j p_j + sum_i indirect_utility(v_i, p)
double w_objective(const std::vector<ValueTable>& models, const PriceVector& p, const Capacities& c);

/// c - sum_i argmax_utility(v_i, p)
std::vector<double> w_subgradient(const std::vector<ValueTable>& models, const PriceVector& p, const Capacities& c);

/// Utility-maximizing bundle of each model at p (lexicographic ties).
std::vector<Bundle> demands_at(const std::vector<ValueTable>& models, const PriceVector& p);

bool is_clearing(const std::vector<Bundle>& demands, const Capacities& c);
bool is_over_demanded(const std::vector<Bundle>& demands, const Capacities& c, std::size_t item);
bool demands_feasible(const std::vector<Bundle>& demands, const Capacities& c);

struct DescentStep {
  int step = 0;
  PriceVector prices;
  double w = 0.0;
  std::vector<int> over_demand;  // sum_i x_ij - c_j
  bool feasible = false;
};

struct DescentResult {
  PriceVector prices;
  double w = 0.0;
  bool feasible = false;
  double step = 0.0;
  std::vector<DescentStep> trace;  // includes the start point as step 0
};

/// Asymmetric projected subgradient descent on W. Returns the visited price
/// with the smallest W among those with feasible predicted demand, or the
/// smallest W overall if none is feasible (earliest on ties).
DescentResult ml_next_price(const std::vector<ValueTable>& models, const PriceVector& start, const Capacities& c,
                            const PriceEngineConfig& cfg);

/// CSV: step,p_1..p_m,W,over_1..over_m
std::string descent_trace_csv(const DescentResult& r);

/// initial_fraction times the mean over bidders of v_i(e_j); falls back to
/// the mean full-bundle value per copy when that is zero.
PriceVector initial_prices(const Instance& inst, double fraction);

nlohmann::json to_json(const PriceEngineConfig& cfg);
PriceEngineConfig price_config_from_json(const nlohmann::json& j, PriceEngineConfig base = {});

}  // namespace auctionlab
