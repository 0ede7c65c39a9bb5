#include "auctionlab/pricing.hpp"

#include <algorithm>
#include <sstream>

#include "auctionlab/valuations.hpp"

namespace auctionlab {
namespace {

void check_models(const std::vector<ValueTable>& models, const PriceVector& p) {
  for (const auto& v : models) {
    if (!v.space || v.values.size() != v.space->size()) throw InvalidInput("malformed value table");
    if (v.space->dims() != p.size()) throw InvalidInput("price vector dimension mismatch");
  }
}

std::vector<int> totals(const std::vector<Bundle>& demands, const Capacities& c) {
  std::vector<int> sum(c.size(), 0);
  for (const auto& x : demands) {
    if (x.size() != c.size()) throw InvalidInput("demand dimension mismatch");
    for (std::size_t j = 0; j < c.size(); ++j) sum[j] += x[j];
  }
  return sum;
}

struct Evaluation {
  double w = 0.0;
  std::vector<Bundle> demands;
};

Evaluation evaluate(const std::vector<ValueTable>& models, const PriceVector& p, const Capacities& c) {
  Evaluation e;
  for (std::size_t j = 0; j < c.size(); ++j) e.w += c[j] * p[j];
  for (const auto& v : models) {
    const auto prices = v.space->price_table(p);
    const std::size_t idx = argmax_utility_index(v.values, prices);
    e.w += v.values[idx] - prices[idx];
    e.demands.push_back(v.space->bundle(idx));
  }
  return e;
}

}  // namespace

void PriceEngineConfig::validate() const {
  if (!(initial_fraction > 0.0)) throw InvalidInput("pricing.initial_fraction must be > 0");
  if (!(cca_increment > 0.0)) throw InvalidInput("pricing.cca_increment must be > 0");
  if (step && !(*step > 0.0)) throw InvalidInput("pricing.step must be > 0");
  if (!(step_fraction > 0.0)) throw InvalidInput("pricing.step_fraction must be > 0");
  if (!(over_demand_boost >= 0.0)) throw InvalidInput("pricing.over_demand_boost must be >= 0");
  if (descent_steps < 0) throw InvalidInput("pricing.descent_steps must be >= 0");
}

PriceVector cca_next_price(const PriceVector& p, const std::vector<Bundle>& demands, const Capacities& c,
                           double delta) {
  if (p.size() != c.size()) throw InvalidInput("price vector dimension mismatch");
  const auto sum = totals(demands, c);
  std::vector<double> next = p.values();
  for (std::size_t j = 0; j < c.size(); ++j)
    if (sum[j] > c[j]) next[j] *= 1.0 + delta;
  return PriceVector(std::move(next));
}

double indirect_utility(const ValueTable& v, const PriceVector& p) {
  check_models({v}, p);
  const auto prices = v.space->price_table(p);
  const std::size_t idx = argmax_utility_index(v.values, prices);
  return v.values[idx] - prices[idx];
}

double w_objective(const std::vector<ValueTable>& models, const PriceVector& p, const Capacities& c) {
  check_models(models, p);
  if (p.size() != c.size()) throw InvalidInput("price vector dimension mismatch");
  return evaluate(models, p, c).w;
}

std::vector<Bundle> demands_at(const std::vector<ValueTable>& models, const PriceVector& p) {
  check_models(models, p);
  std::vector<Bundle> out;
  for (const auto& v : models) out.push_back(v.space->bundle(argmax_utility_index(v, p)));
  return out;
}

std::vector<double> w_subgradient(const std::vector<ValueTable>& models, const PriceVector& p, const Capacities& c) {
  const auto sum = totals(demands_at(models, p), c);
  std::vector<double> g(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) g[j] = c[j] - sum[j];
  return g;
}

bool is_clearing(const std::vector<Bundle>& demands, const Capacities& c) {
  const auto sum = totals(demands, c);
  for (std::size_t j = 0; j < c.size(); ++j)
    if (sum[j] != c[j]) return false;
  return true;
}

bool is_over_demanded(const std::vector<Bundle>& demands, const Capacities& c, std::size_t item) {
  return totals(demands, c).at(item) > c[item];
}

bool demands_feasible(const std::vector<Bundle>& demands, const Capacities& c) {
  const auto sum = totals(demands, c);
  for (std::size_t j = 0; j < c.size(); ++j)
    if (sum[j] > c[j]) return false;
  return true;
}

DescentResult ml_next_price(const std::vector<ValueTable>& models, const PriceVector& start, const Capacities& c,
                            const PriceEngineConfig& cfg) {
  cfg.validate();
  check_models(models, start);
  if (start.size() != c.size()) throw InvalidInput("price vector dimension mismatch");
  const std::size_t m = c.size();

  double gamma = 0.0;
  if (cfg.step) {
    gamma = *cfg.step;
  } else {
    // Scale by the models' mean value per copy; fall back to the mean price.
    double scale = 0.0;
    for (const auto& v : models) scale += v.values.back();
    scale /= std::max<double>(1.0, static_cast<double>(models.size())) * c.total();
    if (!(scale > 0.0)) {
      for (double v : start.values()) scale += v;
      scale /= static_cast<double>(m);
    }
    const double mean = scale;
    gamma = cfg.step_fraction * (mean > 0.0 ? mean : 1.0);
  }

  DescentResult res;
  res.step = gamma;
  std::vector<double> p = start.values();
  std::optional<std::size_t> best_feasible, best_any;
  for (int step = 0; step <= cfg.descent_steps; ++step) {
    const PriceVector pv(p);
    auto e = evaluate(models, pv, c);
    const auto sum = totals(e.demands, c);
    DescentStep rec{step, pv, e.w, std::vector<int>(m), true};
    for (std::size_t j = 0; j < m; ++j) {
      rec.over_demand[j] = sum[j] - c[j];
      if (sum[j] > c[j]) rec.feasible = false;
    }
    const std::size_t k = res.trace.size();
    if (!best_any || rec.w < res.trace[*best_any].w) best_any = k;
    if (rec.feasible && (!best_feasible || rec.w < res.trace[*best_feasible].w)) best_feasible = k;
    res.trace.push_back(rec);
    if (step == cfg.descent_steps) break;
    for (std::size_t j = 0; j < m; ++j) {
      const double g = static_cast<double>(c[j] - sum[j]);
      const double rate = sum[j] > c[j] ? gamma * (1.0 + cfg.over_demand_boost) : gamma;
      p[j] = std::max(0.0, p[j] - rate * g);
    }
  }
  const auto& chosen = res.trace[best_feasible ? *best_feasible : *best_any];
  res.prices = chosen.prices;
  res.w = chosen.w;
  res.feasible = chosen.feasible;
  return res;
}

std::string descent_trace_csv(const DescentResult& r) {
  std::ostringstream os;
  const std::size_t m = r.trace.empty() ? 0 : r.trace.front().prices.size();
  os << "step";
  for (std::size_t j = 0; j < m; ++j) os << ",p_" << j + 1;
  os << ",W";
  for (std::size_t j = 0; j < m; ++j) os << ",over_" << j + 1;
  os << '\n';
  for (const auto& s : r.trace) {
    os << s.step;
    for (double v : s.prices.values()) os << ',' << format_number(v);
    os << ',' << format_number(s.w);
    for (int v : s.over_demand) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

PriceVector initial_prices(const Instance& inst, double fraction) {
  const std::size_t m = inst.items();
  const double n = static_cast<double>(inst.bidders());
  std::vector<double> p(m, 0.0);
  bool any = false;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<int> e(m, 0);
    e[j] = 1;
    const Bundle unit(e);
    for (std::size_t i = 0; i < inst.bidders(); ++i) p[j] += inst.value(i, unit);
    p[j] = fraction * p[j] / n;
    any |= p[j] > 0.0;
  }
  if (!any) {
    double full = 0.0;
    for (std::size_t i = 0; i < inst.bidders(); ++i) full += inst.value(i, Bundle::full(inst.capacities()));
    const double per_copy = full / n / inst.capacities().total();
    std::fill(p.begin(), p.end(), fraction * per_copy);
  }
  for (auto& v : p)
    if (!(v > 0.0)) v = fraction;
  return PriceVector(std::move(p));
}

nlohmann::json to_json(const PriceEngineConfig& cfg) {
  nlohmann::json j{{"initial_fraction", cfg.initial_fraction},
                   {"cca_increment", cfg.cca_increment},
                   {"step_fraction", cfg.step_fraction},
                   {"over_demand_boost", cfg.over_demand_boost},
                   {"descent_steps", cfg.descent_steps}};
  if (cfg.step) j["step"] = *cfg.step;
  return j;
}

PriceEngineConfig price_config_from_json(const nlohmann::json& j, PriceEngineConfig cfg) {
  try {
    cfg.initial_fraction = j.value("initial_fraction", cfg.initial_fraction);
    cfg.cca_increment = j.value("cca_increment", cfg.cca_increment);
    cfg.step_fraction = j.value("step_fraction", cfg.step_fraction);
    cfg.over_demand_boost = j.value("over_demand_boost", cfg.over_demand_boost);
    cfg.descent_steps = j.value("descent_steps", cfg.descent_steps);
    if (j.contains("step")) cfg.step = j.at("step").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("pricing: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace auctionlab
