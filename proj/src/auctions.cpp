#include "auctionlab/auctions.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace auctionlab {
namespace {

std::string join_prices(const PriceVector& p) {
  std::string s;
  for (std::size_t j = 0; j < p.size(); ++j) s += (j ? ";" : "") + format_number(p[j]);
  return s;
}

std::string join_allocation(const Allocation& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ";" : "") + to_string(a[i]);
  std::replace(s.begin(), s.end(), ',', ' ');
  return s;
}

class Engine {
public:
  Engine(const Instance& inst, const MechanismConfig& cfg)
      : inst_(inst), cfg_(cfg), n_(inst.bidders()), space_(inst.space()), rng_(mix_seed(cfg.seed, 0xa0c7)) {
    out_.mechanism = cfg.name;
    out_.instance_label = inst.label();
    out_.config = to_json(cfg);
    out_.reports.assign(n_, BidderReports{});
    out_.queries.assign(n_, 0);
    try {
      optimum_ = inst.optimum().scw;
    } catch (const ExactOracleUnavailable&) {
    }
  }

  // ---- clock phase --------------------------------------------------------

  void clock_phase(int rounds) {
    const auto& script = cfg_.script;
    for (int k = 0; k < rounds; ++k) {
      PriceVector p;
      if (script && static_cast<std::size_t>(k) < script->clock_prices.size()) {
        p = script->clock_prices[static_cast<std::size_t>(k)];
      } else if (!price_) {
        p = first_price();
      } else {
        p = cca_next_price(*price_, demands_, inst_.capacities(), cfg_.pricing.cca_increment);
      }
      ask_demand(p, "cca-dq");
    }
  }

  // Returns true when the auction ended at clearing prices.
  bool ml_dq_phase(int rounds) {
    const MvnnArch arch = cfg_.arch.for_capacities(inst_.capacities());
    for (int k = 0; k < rounds; ++k) {
      const auto models = train(arch, cfg_.dq_training, {});
      const PriceVector start = price_ ? *price_ : first_price();
      const auto desc = ml_next_price(models, start, inst_.capacities(), cfg_.pricing);
      ask_demand(desc.prices, "ml-dq");
      if (is_clearing(demands_, inst_.capacities())) {
        clearing_ = Allocation(demands_);
        auto& rec = out_.trace.back();
        rec.clearing = true;
        rec.allocation = *clearing_;
        rec.inferred_scw = inferred_welfare(out_.reports, *clearing_);
        rec.true_scw = inst_.social_welfare(*clearing_);
        rec.efficiency = efficiency(rec.true_scw);
        return true;
      }
    }
    return false;
  }

  void bridge_bid() {
    const auto wdp = solve_wdp(out_.reports, inst_.capacities());
    RoundRecord rec = blank("bridge");
    for (std::size_t i = 0; i < n_; ++i) ask_value(rec, i, wdp.allocation[i]);
    record(std::move(rec));
  }

  void ml_vq_phase(int rounds) {
    const MvnnArch arch = cfg_.arch.for_capacities(inst_.capacities());
    const auto& script = cfg_.script;
    for (int k = 1; k <= rounds; ++k) {
      std::vector<std::optional<Bundle>> forced(n_);
      if (script && static_cast<std::size_t>(k - 1) < script->value_queries.size()) {
        const auto& row = script->value_queries[static_cast<std::size_t>(k - 1)];
        for (std::size_t i = 0; i < n_ && i < row.size(); ++i) forced[i] = row[i];
      }
      const bool all_forced = std::all_of(forced.begin(), forced.end(), [](const auto& f) { return f.has_value(); });
      const bool main = k % cfg_.qround == 0;
      RoundRecord rec = blank(all_forced ? "scripted" : main ? "ml-vq-main" : "ml-vq-marginal");

      std::vector<std::optional<Bundle>> choice = forced;
      if (!all_forced) {
        const auto models = train(arch, cfg_.vq_training, {});
        const auto picks = main ? main_economy_queries(models) : marginal_economy_queries(models, k);
        for (std::size_t i = 0; i < n_; ++i)
          if (!choice[i]) choice[i] = picks[i];
      }
      for (std::size_t i = 0; i < n_; ++i)
        if (choice[i]) ask_value(rec, i, *choice[i]);
      record(std::move(rec));
    }
  }

  void supplementary_phase(Supplementary kind, int profit_max_bids) {
    if (kind == Supplementary::clock) return;
    RoundRecord rec = blank("supplementary");
    for (std::size_t i = 0; i < n_; ++i) {
      std::set<Bundle> bid;
      for (const auto& r : out_.reports[i].dq())
        if (!r.bundle.empty_bundle() && bid.insert(r.bundle).second) ask_value(rec, i, r.bundle);
      if (kind != Supplementary::profit_max || !price_) continue;
      const auto& table = inst_.table(i);
      const auto prices = space_->price_table(*price_);
      std::vector<bool> used(space_->size(), false);
      used[0] = true;
      for (const auto& x : bid) used[space_->index(x)] = true;
      for (int q = 0; q < profit_max_bids; ++q) {
        std::optional<std::size_t> best;
        for (std::size_t idx = 0; idx < space_->size(); ++idx)
          if (!used[idx] && (!best || table[idx] - prices[idx] > table[*best] - prices[*best])) best = idx;
        if (!best) break;
        used[*best] = true;
        ask_value(rec, i, space_->bundle(*best));
      }
    }
    record(std::move(rec));
  }

  void random_vq_phase(int queries) {
    const std::size_t per = std::min<std::size_t>(static_cast<std::size_t>(std::max(queries, 0)), space_->size());
    std::vector<std::vector<std::size_t>> picks(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      std::mt19937_64 rng(mix_seed(cfg_.seed, i));
      std::vector<std::size_t> all(space_->size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      // Partial Fisher-Yates: the first `per` entries are a uniform sample.
      for (std::size_t k = 0; k < per; ++k) {
        std::uniform_int_distribution<std::size_t> d(k, all.size() - 1);
        std::swap(all[k], all[d(rng)]);
      }
      picks[i].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(per));
    }
    for (std::size_t k = 0; k < per; ++k) {
      RoundRecord rec = blank("random-vq");
      for (std::size_t i = 0; i < n_; ++i) ask_value(rec, i, space_->bundle(picks[i][k]));
      record(std::move(rec));
    }
  }

  AuctionOutcome finish() {
    const auto& c = inst_.capacities();
    if (clearing_) {
      out_.cleared = true;
      out_.allocation = *clearing_;
    } else {
      out_.allocation = solve_wdp(out_.reports, c).allocation;
    }
    try {
      out_.payments = compute_payments(cfg_.payment, out_.reports, c, out_.allocation);
    } catch (const AuctionError& e) {
      out_.payments = vcg_payments(out_.reports, c, out_.allocation);
      out_.note = std::string("vcg-nearest unavailable (") + e.what() + "); vcg payments reported";
    }
    out_.true_scw = inst_.social_welfare(out_.allocation);
    out_.optimal_scw = optimum_;
    out_.efficiency = efficiency(out_.true_scw);
    return std::move(out_);
  }

private:
  PriceVector first_price() {
    if (cfg_.random_first_price) {
      std::uniform_real_distribution<double> u(0.0, *cfg_.random_first_price);
      std::vector<double> p(inst_.items());
      for (auto& v : p) v = u(rng_);
      return PriceVector(std::move(p));
    }
    return initial_prices(inst_, cfg_.pricing.initial_fraction);
  }

  std::optional<double> efficiency(double scw) const {
    if (!optimum_) return std::nullopt;
    if (*optimum_ <= 0.0) return 1.0;
    return scw / *optimum_;
  }

  RoundRecord blank(std::string phase) {
    RoundRecord rec;
    rec.round = static_cast<int>(out_.trace.size()) + 1;
    rec.phase = std::move(phase);
    rec.queried.assign(n_, std::nullopt);
    rec.answers.assign(n_, 0.0);
    return rec;
  }

  void record(RoundRecord rec) {
    const auto wdp = solve_wdp(out_.reports, inst_.capacities());
    rec.allocation = wdp.allocation;
    rec.inferred_scw = wdp.inferred_scw;
    rec.true_scw = inst_.social_welfare(wdp.allocation);
    rec.efficiency = efficiency(rec.true_scw);
    out_.trace.push_back(std::move(rec));
  }

  void ask_demand(const PriceVector& p, std::string phase) {
    RoundRecord rec = blank(std::move(phase));
    rec.prices = p;
    demands_.clear();
    for (std::size_t i = 0; i < n_; ++i) {
      Bundle x = inst_.demand(i, p);
      out_.reports[i].add_dq({x, p});
      ++out_.queries[i];
      demands_.push_back(x);
    }
    rec.responses = demands_;
    price_ = p;
    record(std::move(rec));
  }

  void ask_value(RoundRecord& rec, std::size_t i, const Bundle& x) {
    const double v = inst_.value(i, x);
    out_.reports[i].add_vq({x, v});
    ++out_.queries[i];
    rec.queried[i] = x;
    rec.answers[i] = v;
  }

  std::vector<ValueTable> train(const MvnnArch& arch, const TrainHyperparams& base,
                                const std::vector<std::optional<Bundle>>& skip) {
    std::vector<ValueTable> models;
    const auto round = static_cast<std::uint64_t>(out_.trace.size());
    for (std::size_t i = 0; i < n_; ++i) {
      if (!skip.empty() && skip[i]) {
        models.push_back(ValueTable{space_, std::vector<double>(space_->size(), 0.0)});
        continue;
      }
      TrainHyperparams hp = base;
      hp.seed = mix_seed(mix_seed(cfg_.seed, round), i);
      const auto res = mixed_train(out_.reports[i], arch, hp);
      models.push_back(model_table(res.params, arch, space_));
    }
    return models;
  }

  std::vector<std::vector<Bundle>> value_reported() const {
    std::vector<std::vector<Bundle>> ex(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (const auto& r : out_.reports[i].vq()) ex[i].push_back(r.bundle);
    return ex;
  }

  bool exhausted(std::size_t i) const { return out_.reports[i].vq().size() >= space_->size(); }

  std::vector<std::optional<Bundle>> main_economy_queries(const std::vector<ValueTable>& models) {
    std::vector<std::optional<Bundle>> picks(n_);
    const auto excluded = value_reported();
    Economy economy(n_, true);
    for (std::size_t i = 0; i < n_; ++i) economy[i] = !exhausted(i);
    try {
      const auto res = solve_ml_wdp(models, inst_.capacities(), excluded, economy, mix_seed(cfg_.seed, 77));
      for (std::size_t i = 0; i < n_; ++i)
        if (economy[i]) picks[i] = res.allocation[i];
      return picks;
    } catch (const NoFeasibleQuery&) {
    }
    // Joint exclusions infeasible: exclude per bidder instead.
    for (std::size_t i = 0; i < n_; ++i) {
      if (!economy[i]) continue;
      std::vector<std::vector<Bundle>> only(n_);
      only[i] = excluded[i];
      picks[i] = solve_ml_wdp(models, inst_.capacities(), only, economy, mix_seed(cfg_.seed, 78)).allocation[i];
    }
    return picks;
  }

  std::vector<std::optional<Bundle>> marginal_economy_queries(const std::vector<ValueTable>& models, int k) {
    std::vector<std::optional<Bundle>> picks(n_);
    const auto excluded = value_reported();
    for (std::size_t i = 0; i < n_; ++i) {
      if (exhausted(i)) continue;
      std::vector<std::size_t> others;
      for (std::size_t j = 0; j < n_; ++j)
        if (j != i) others.push_back(j);
      std::mt19937_64 rng(mix_seed(mix_seed(cfg_.seed, static_cast<std::uint64_t>(k)), i + 1000));
      std::shuffle(others.begin(), others.end(), rng);
      const std::size_t drop = std::min<std::size_t>(static_cast<std::size_t>(cfg_.marginalization), others.size());
      Economy economy(n_, true);
      for (std::size_t d = 0; d < drop; ++d) economy[others[d]] = false;
      std::vector<std::vector<Bundle>> only(n_);
      only[i] = excluded[i];
      picks[i] = solve_ml_wdp(models, inst_.capacities(), only, economy, mix_seed(cfg_.seed, 79)).allocation[i];
    }
    return picks;
  }

  const Instance& inst_;
  const MechanismConfig& cfg_;
  std::size_t n_;
  SharedSpace space_;
  std::mt19937_64 rng_;
  AuctionOutcome out_;
  std::optional<double> optimum_;
  std::optional<PriceVector> price_;
  std::vector<Bundle> demands_;
  std::optional<Allocation> clearing_;
};

}  // namespace

std::string to_string(Supplementary s) {
  switch (s) {
    case Supplementary::clock: return "clock";
    case Supplementary::raised: return "raised";
    case Supplementary::profit_max: return "profit-max";
  }
  return "?";
}

std::optional<Supplementary> parse_supplementary(const std::string& s) {
  if (s == "clock") return Supplementary::clock;
  if (s == "raised") return Supplementary::raised;
  if (s == "profit-max") return Supplementary::profit_max;
  return std::nullopt;
}

std::string to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::mlhca: return "mlhca";
    case MechanismKind::mlcca: return "mlcca";
    case MechanismKind::cca: return "cca";
    case MechanismKind::random_vq: return "random-vq";
  }
  return "?";
}

std::optional<MechanismKind> parse_mechanism_kind(const std::string& s) {
  if (s == "mlhca") return MechanismKind::mlhca;
  if (s == "mlcca") return MechanismKind::mlcca;
  if (s == "cca") return MechanismKind::cca;
  if (s == "random-vq") return MechanismKind::random_vq;
  return std::nullopt;
}

void MechanismConfig::validate() const {
  if (qcca < 0 || qdq < 0 || qvq < 0) throw InvalidInput("query budgets must be >= 0");
  if (qround < 1) throw InvalidInput("qround must be >= 1");
  if (kind == MechanismKind::mlhca && bridge_bid && qvq < 1)
    throw InvalidInput("qvq must be >= 1 when the bridge bid is enabled");
  if (marginalization < 0) throw InvalidInput("marginalization must be >= 0");
  if (profit_max_bids < 0) throw InvalidInput("profit_max_bids must be >= 0");
  if (random_first_price && !(*random_first_price > 0.0)) throw InvalidInput("random_first_price must be > 0");
  dq_training.validate();
  vq_training.validate();
  pricing.validate();
}

AuctionOutcome run_mlhca(const Instance& inst, const MechanismConfig& cfg) {
  cfg.validate();
  Engine e(inst, cfg);
  e.clock_phase(cfg.qcca);
  if (e.ml_dq_phase(cfg.qdq)) return e.finish();
  int vq_rounds = cfg.qvq;
  if (cfg.bridge_bid && vq_rounds >= 1) {
    e.bridge_bid();
    --vq_rounds;
  }
  e.ml_vq_phase(vq_rounds);
  return e.finish();
}

AuctionOutcome run_mlcca(const Instance& inst, const MechanismConfig& cfg) {
  cfg.validate();
  Engine e(inst, cfg);
  e.clock_phase(cfg.qcca);
  if (e.ml_dq_phase(cfg.qdq)) return e.finish();
  e.supplementary_phase(cfg.supplementary, cfg.profit_max_bids);
  return e.finish();
}

AuctionOutcome run_cca(const Instance& inst, const MechanismConfig& cfg) {
  MechanismConfig c = cfg;
  c.kind = MechanismKind::cca;
  c.qdq = 0;
  c.qvq = 0;
  return run_mlcca(inst, c);
}

AuctionOutcome run_cca(const Instance& inst, int rounds, double increment, Supplementary supplementary,
                       int profit_max_bids) {
  MechanismConfig cfg;
  cfg.kind = MechanismKind::cca;
  cfg.name = "cca";
  cfg.qcca = rounds;
  cfg.pricing.cca_increment = increment;
  cfg.supplementary = supplementary;
  cfg.profit_max_bids = profit_max_bids;
  return run_cca(inst, cfg);
}

AuctionOutcome run_random_vq(const Instance& inst, int queries, std::uint64_t seed, PaymentRule payment) {
  MechanismConfig cfg;
  cfg.kind = MechanismKind::random_vq;
  cfg.name = "random-vq";
  cfg.qcca = cfg.qdq = 0;
  cfg.qvq = queries;
  cfg.seed = seed;
  cfg.payment = payment;
  Engine e(inst, cfg);
  e.random_vq_phase(queries);
  return e.finish();
}

AuctionOutcome run_mechanism(const Instance& inst, const MechanismConfig& cfg) {
  switch (cfg.kind) {
    case MechanismKind::mlhca: return run_mlhca(inst, cfg);
    case MechanismKind::mlcca: return run_mlcca(inst, cfg);
    case MechanismKind::cca: return run_cca(inst, cfg);
    case MechanismKind::random_vq: {
      cfg.validate();
      Engine e(inst, cfg);
      e.random_vq_phase(cfg.qvq);
      return e.finish();
    }
  }
  throw InvalidInput("unknown mechanism kind");
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const MechanismConfig& cfg) {
  nlohmann::json j{{"kind", to_string(cfg.kind)},
                   {"name", cfg.name},
                   {"qcca", cfg.qcca},
                   {"qdq", cfg.qdq},
                   {"qvq", cfg.qvq},
                   {"qround", cfg.qround},
                   {"payment", to_string(cfg.payment)},
                   {"bridge_bid", cfg.bridge_bid},
                   {"marginalization", cfg.marginalization},
                   {"seed", cfg.seed},
                   {"dq_training", to_json(cfg.dq_training)},
                   {"vq_training", to_json(cfg.vq_training)},
                   {"arch", {{"hidden", cfg.arch.hidden}, {"cutoff", cfg.arch.cutoff}, {"skip", cfg.arch.skip}}},
                   {"init", "weights U(0, 2/fan_in), biases 0, skip U(0, 1/m)"},
                   {"pricing", to_json(cfg.pricing)},
                   {"supplementary", to_string(cfg.supplementary)},
                   {"profit_max_bids", cfg.profit_max_bids}};
  if (cfg.random_first_price) j["random_first_price"] = *cfg.random_first_price;
  if (cfg.script) j["scripted"] = true;
  return j;
}

MechanismConfig mechanism_config_from_json(const nlohmann::json& j) {
  MechanismConfig cfg;
  try {
    if (j.contains("kind")) {
      const auto k = parse_mechanism_kind(j.at("kind").get<std::string>());
      if (!k) throw InvalidInput("mechanism.kind: expected mlhca, mlcca, cca or random-vq");
      cfg.kind = *k;
    }
    cfg.name = j.value("name", to_string(cfg.kind));
    if (cfg.kind == MechanismKind::cca) cfg.qdq = cfg.qvq = 0;
    if (cfg.kind == MechanismKind::mlcca) cfg.qvq = 0;
    cfg.qcca = j.value("qcca", cfg.qcca);
    cfg.qdq = j.value("qdq", cfg.qdq);
    cfg.qvq = j.value("qvq", cfg.qvq);
    cfg.qround = j.value("qround", cfg.qround);
    if (j.contains("payment")) {
      const auto p = parse_payment_rule(j.at("payment").get<std::string>());
      if (!p) throw InvalidInput("mechanism.payment: expected vcg, vcg-nearest or zero");
      cfg.payment = *p;
    }
    cfg.bridge_bid = j.value("bridge_bid", cfg.bridge_bid);
    cfg.marginalization = j.value("marginalization", cfg.marginalization);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("dq_training")) cfg.dq_training = train_hyperparams_from_json(j.at("dq_training"), cfg.dq_training);
    if (j.contains("vq_training")) cfg.vq_training = train_hyperparams_from_json(j.at("vq_training"), cfg.vq_training);
    if (j.contains("arch")) {
      const auto& a = j.at("arch");
      cfg.arch.hidden = a.value("hidden", cfg.arch.hidden);
      cfg.arch.cutoff = a.value("cutoff", cfg.arch.cutoff);
      cfg.arch.skip = a.value("skip", cfg.arch.skip);
    }
    if (j.contains("pricing")) cfg.pricing = price_config_from_json(j.at("pricing"), cfg.pricing);
    if (j.contains("supplementary")) {
      const auto s = parse_supplementary(j.at("supplementary").get<std::string>());
      if (!s) throw InvalidInput("mechanism.supplementary: expected clock, raised or profit-max");
      cfg.supplementary = *s;
    }
    cfg.profit_max_bids = j.value("profit_max_bids", cfg.profit_max_bids);
    if (j.contains("random_first_price")) cfg.random_first_price = j.at("random_first_price").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("mechanism: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const AuctionOutcome& o) {
  auto bundles = [](const Allocation& a) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& x : a.bundles()) arr.push_back(x.counts());
    return arr;
  };
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : o.trace) {
    nlohmann::json row{{"round", r.round},
                       {"phase", r.phase},
                       {"allocation", bundles(r.allocation)},
                       {"inferred_scw", r.inferred_scw},
                       {"true_scw", r.true_scw},
                       {"clearing", r.clearing}};
    row["efficiency"] = r.efficiency ? nlohmann::json(*r.efficiency) : nlohmann::json(nullptr);
    if (r.prices) {
      row["prices"] = r.prices->values();
      nlohmann::json resp = nlohmann::json::array();
      for (const auto& x : r.responses) resp.push_back(x.counts());
      row["responses"] = resp;
    } else {
      nlohmann::json q = nlohmann::json::array();
      for (std::size_t i = 0; i < r.queried.size(); ++i)
        q.push_back(r.queried[i] ? nlohmann::json{{"bundle", r.queried[i]->counts()}, {"value", r.answers[i]}}
                                 : nlohmann::json(nullptr));
      row["value_queries"] = q;
    }
    trace.push_back(std::move(row));
  }
  nlohmann::json j{{"config", o.config},
                   {"instance", o.instance_label},
                   {"cleared", o.cleared},
                   {"allocation", bundles(o.allocation)},
                   {"payments", o.payments},
                   {"queries", o.queries},
                   {"true_scw", o.true_scw},
                   {"trace", trace}};
  j["optimal_scw"] = o.optimal_scw ? nlohmann::json(*o.optimal_scw) : nlohmann::json(nullptr);
  j["efficiency"] = o.efficiency ? nlohmann::json(*o.efficiency) : nlohmann::json(nullptr);
  if (!o.note.empty()) j["note"] = o.note;
  return j;
}

std::string trace_csv(const AuctionOutcome& o) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  std::ostringstream os;
  os << "round,phase,prices,allocation,inferred_scw,true_scw,efficiency,clearing,revenue,queries,optimal_scw\n";
  for (const auto& r : o.trace)
    os << r.round << ',' << r.phase << ',' << (r.prices ? join_prices(*r.prices) : "") << ','
       << join_allocation(r.allocation) << ',' << format_number(r.inferred_scw) << ',' << format_number(r.true_scw)
       << ',' << opt(r.efficiency) << ',' << (r.clearing ? 1 : 0) << ",,,\n";
  const double revenue = std::accumulate(o.payments.begin(), o.payments.end(), 0.0);
  double queries = 0.0;
  for (int q : o.queries) queries += q;
  if (!o.queries.empty()) queries /= static_cast<double>(o.queries.size());
  os << "final,final,," << join_allocation(o.allocation) << ",," << format_number(o.true_scw) << ','
     << opt(o.efficiency) << ',' << (o.cleared ? 1 : 0) << ',' << format_number(revenue) << ','
     << format_number(queries) << ',' << opt(o.optimal_scw) << '\n';
  return os.str();
}

}  // namespace auctionlab
