#include "auctionlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace auctionlab {
namespace fs = std::filesystem;

namespace {

double optimum_of(const Instance& inst) { return inst.optimum().scw; }

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double r2_of(const std::vector<double>& y, const std::vector<double>& yhat, double shift) {
  const double ybar = mean_of(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double e = y[k] - (yhat[k] + shift);
    ss_res += e * e;
    ss_tot += (y[k] - ybar) * (y[k] - ybar);
  }
  return 1.0 - ss_res / ss_tot;
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') ? ch : '-';
  return out.empty() ? "mechanism" : out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write " + path.string());
  f << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(what + ": not a number: '" + s + "'");
  }
}

// Per-run figures that feed the summary; identical whether taken from an
// outcome or parsed back from its CSV.
struct RunFigures {
  double efficiency_loss = 0.0;
  double relative_revenue = 0.0;
  double queries = 0.0;
};

RunFigures figures_from_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read " + path.string());
  std::string line, last;
  while (std::getline(f, line))
    if (line.rfind("final,", 0) == 0) last = line;
  if (last.empty()) throw InvalidInput(path.string() + ": missing final row");
  const auto cols = split(last, ',');
  if (cols.size() != 11) throw InvalidInput(path.string() + ": final row has wrong column count");
  if (cols[6].empty() || cols[10].empty()) throw ExactOracleUnavailable(path.string() + ": no optimum recorded");
  RunFigures r;
  r.efficiency_loss = 1.0 - parse_double(cols[6], "efficiency");
  const double optimum = parse_double(cols[10], "optimal_scw");
  const double revenue = parse_double(cols[8], "revenue");
  r.relative_revenue = optimum > 0.0 ? revenue / optimum : 0.0;
  r.queries = parse_double(cols[9], "queries");
  return r;
}

std::vector<SummaryRow> summarize(const std::vector<std::string>& names,
                                  const std::vector<std::vector<RunFigures>>& runs) {
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double> loss, revenue, queries;
    for (const auto& r : runs[k]) {
      loss.push_back(r.efficiency_loss);
      revenue.push_back(r.relative_revenue);
      queries.push_back(r.queries);
    }
    SummaryRow row;
    row.mechanism = names[k];
    std::tie(row.mean_efficiency_loss, row.ci95) = mean_ci95(loss);
    row.mean_relative_revenue = mean_of(revenue);
    row.mean_queries = mean_of(queries);
    row.runs = static_cast<int>(runs[k].size());
    rows.push_back(row);
  }
  return rows;
}

// Mean value per copy of the full bundle, so synergies count.
double mean_item_value(const ValueOracle& o) {
  return o.value(Bundle::full(o.capacities())) / o.capacities().total();
}

std::string check_line(bool ok, const std::string& what) { return (ok ? "ok: " : "FAILED: ") + what; }

}  // namespace

// ---------------------------------------------------------------------------

double efficiency_loss(const AuctionOutcome& outcome, const Instance& inst) {
  const double opt = optimum_of(inst);
  if (opt <= 0.0) return 0.0;
  return 1.0 - inst.social_welfare(outcome.allocation) / opt;
}

double relative_revenue(const AuctionOutcome& outcome, const Instance& inst) {
  const double opt = optimum_of(inst);
  const double revenue = std::accumulate(outcome.payments.begin(), outcome.payments.end(), 0.0);
  return opt > 0.0 ? revenue / opt : 0.0;
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidInput("kendall tau needs equal-length inputs");
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a + 1; b < x.size(); ++b) {
      const double dx = x[a] - x[b];
      const double dy = y[a] - y[b];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const double n0 = static_cast<double>(concordant + discordant);
  const double denom = std::sqrt((n0 + static_cast<double>(ties_y)) * (n0 + static_cast<double>(ties_x)));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / denom;
}

LearningMetrics learning_metrics(const std::vector<double>& truth, const std::vector<double>& predicted) {
  if (truth.size() != predicted.size()) throw InvalidInput("truth and prediction sizes differ");
  if (truth.size() < 2) throw InvalidInput("learning metrics need at least two test points");
  if (std::all_of(truth.begin(), truth.end(), [&](double v) { return v == truth.front(); }))
    throw InvalidInput("learning metrics undefined for constant truths");
  LearningMetrics m;
  m.r2 = r2_of(truth, predicted, 0.0);
  m.kendall_tau = kendall_tau_b(truth, predicted);
  double abs_err = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    abs_err += std::abs(truth[k] - predicted[k]);
    shift += truth[k] - predicted[k];
  }
  const double n = static_cast<double>(truth.size());
  const double ybar = mean_of(truth);
  m.scaled_mae = ybar != 0.0 ? (abs_err / n) / ybar : std::numeric_limits<double>::infinity();
  m.r2_centered = r2_of(truth, predicted, shift / n);
  return m;
}

LearningMetrics learning_metrics(const MvnnParams& params, const MvnnArch& arch, const ValueOracle& oracle,
                                 const std::vector<Bundle>& test_set) {
  std::vector<double> truth, pred;
  for (const auto& x : test_set) {
    truth.push_back(oracle.value(x));
    pred.push_back(forward(params, arch, x));
  }
  return learning_metrics(truth, pred);
}

// ---------------------------------------------------------------------------

void LearningEvalSpec::validate() const {
  if (train_dqs < 0 || train_vqs < 0) throw InvalidInput("learning: train counts must be >= 0");
  if (train_dqs + train_vqs < 1) throw InvalidInput("learning: empty training recipe");
  if (test_random < 2) throw InvalidInput("learning.test_random must be >= 2");
  if (test_price < 2) throw InvalidInput("learning.test_price must be >= 2");
  if (!(price_range > 0.0)) throw InvalidInput("learning.price_range must be > 0");
  if (seeds < 1) throw InvalidInput("learning.seeds must be >= 1");
}

std::vector<LearningRow> run_learning_experiment(const LearningEvalSpec& spec, const ToyDomainParams& domain,
                                                 const ArchSpec& arch_spec, const TrainHyperparams& hp, int jobs) {
  spec.validate();
  hp.validate();
  const std::vector<std::string> arms{"dq-only", "vq-only", "mixed"};
  const std::vector<std::string> sets{"random", "price"};
  using Sums = std::vector<std::vector<LearningMetrics>>;
  using Counts = std::vector<std::vector<int>>;
  std::vector<Sums> seed_sums(static_cast<std::size_t>(spec.seeds),
                              Sums(arms.size(), std::vector<LearningMetrics>(sets.size())));
  std::vector<Counts> seed_counts(static_cast<std::size_t>(spec.seeds),
                                  Counts(arms.size(), std::vector<int>(sets.size(), 0)));

  parallel_for(spec.seeds, jobs, [&](int s) {
    auto& sums = seed_sums[static_cast<std::size_t>(s)];
    auto& counts = seed_counts[static_cast<std::size_t>(s)];
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(s);
    const Instance inst = sample_toy_instance(domain, seed);
    const auto& space = *inst.space();
    const Capacities& c = inst.capacities();
    const MvnnArch arch = arch_spec.for_capacities(c);

    // Simulated clock shared by all bidders.
    std::vector<std::vector<DemandReport>> clock(inst.bidders());
    PriceVector p = initial_prices(inst, PriceEngineConfig{}.initial_fraction);
    for (int r = 0; r < spec.train_dqs; ++r) {
      std::vector<Bundle> demands;
      for (std::size_t i = 0; i < inst.bidders(); ++i) {
        demands.push_back(inst.demand(i, p));
        clock[i].push_back(DemandReport{demands.back(), p});
      }
      p = cca_next_price(p, demands, c, PriceEngineConfig{}.cca_increment);
    }

    for (std::size_t i = 0; i < inst.bidders(); ++i) {
      const ValueOracle& oracle = inst.oracles()[i];
      std::mt19937_64 rng(mix_seed(seed, 0x1e4 + i));

      std::vector<std::size_t> order(space.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      const std::size_t vqs = std::min<std::size_t>(static_cast<std::size_t>(spec.train_vqs), order.size());
      for (std::size_t k = 0; k < vqs; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
        std::swap(order[k], order[pick(rng)]);
      }

      BidderReports dq_only, vq_only, mixed;
      for (const auto& r : clock[i]) {
        dq_only.add_dq(r);
        mixed.add_dq(r);
      }
      for (std::size_t k = 0; k < vqs; ++k) {
        const Bundle x = space.bundle(order[k]);
        vq_only.add_vq(ValueReport{x, oracle.value(x)});
        mixed.add_vq(ValueReport{x, oracle.value(x)});
      }

      std::vector<Bundle> test_random;
      std::uniform_int_distribution<std::size_t> any(0, space.size() - 1);
      for (int k = 0; k < spec.test_random; ++k) test_random.push_back(space.bundle(any(rng)));
      std::vector<Bundle> test_price;
      std::uniform_real_distribution<double> price(0.0, spec.price_range * mean_item_value(oracle));
      for (int k = 0; k < spec.test_price; ++k) {
        std::vector<double> q(c.size());
        for (auto& v : q) v = price(rng);
        test_price.push_back(utility_max_bundle(oracle, PriceVector(std::move(q))));
      }
      const std::vector<const std::vector<Bundle>*> tests{&test_random, &test_price};

      TrainHyperparams h = hp;
      h.seed = mix_seed(hp.seed, mix_seed(seed, i));
      const std::vector<const BidderReports*> recipes{&dq_only, &vq_only, &mixed};
      for (std::size_t a = 0; a < arms.size(); ++a) {
        if (recipes[a]->empty()) continue;
        const auto params = mixed_train(*recipes[a], arch, h).params;
        for (std::size_t t = 0; t < tests.size(); ++t) {
          const auto& xs = *tests[t];
          if (std::all_of(xs.begin(), xs.end(), [&](const Bundle& x) { return oracle.value(x) == oracle.value(xs[0]); }))
            continue;
          const auto m = learning_metrics(params, arch, oracle, xs);
          auto& acc = sums[a][t];
          acc.r2 += m.r2;
          acc.kendall_tau += m.kendall_tau;
          acc.scaled_mae += m.scaled_mae;
          acc.r2_centered += m.r2_centered;
          ++counts[a][t];
        }
      }
    }
  });

  Sums sums(arms.size(), std::vector<LearningMetrics>(sets.size()));
  Counts counts(arms.size(), std::vector<int>(sets.size(), 0));
  for (int s = 0; s < spec.seeds; ++s)
    for (std::size_t a = 0; a < arms.size(); ++a)
      for (std::size_t t = 0; t < sets.size(); ++t) {
        const auto& m = seed_sums[static_cast<std::size_t>(s)][a][t];
        sums[a][t].r2 += m.r2;
        sums[a][t].kendall_tau += m.kendall_tau;
        sums[a][t].scaled_mae += m.scaled_mae;
        sums[a][t].r2_centered += m.r2_centered;
        counts[a][t] += seed_counts[static_cast<std::size_t>(s)][a][t];
      }

  std::vector<LearningRow> rows;
  for (std::size_t a = 0; a < arms.size(); ++a)
    for (std::size_t t = 0; t < sets.size(); ++t) {
      const int n = counts[a][t];
      if (n == 0) continue;
      LearningMetrics m = sums[a][t];
      m.r2 /= n;
      m.kendall_tau /= n;
      m.scaled_mae /= n;
      m.r2_centered /= n;
      rows.push_back(LearningRow{arms[a], sets[t], m, n});
    }
  return rows;
}

LearningConfig learning_config_from_json(const nlohmann::json& j) {
  LearningConfig cfg;
  try {
    if (!j.is_object()) throw InvalidInput("learning config must be a JSON object");
    auto& s = cfg.spec;
    s.train_dqs = j.value("train_dqs", s.train_dqs);
    s.train_vqs = j.value("train_vqs", s.train_vqs);
    s.test_random = j.value("test_random", s.test_random);
    s.test_price = j.value("test_price", s.test_price);
    s.price_range = j.value("price_range", s.price_range);
    s.seeds = j.value("seeds", s.seeds);
    s.seed = j.value("seed", s.seed);
    if (j.contains("domain")) cfg.domain = toy_params_from_json(j.at("domain"));
    if (j.contains("arch")) {
      const auto& a = j.at("arch");
      cfg.arch.hidden = a.value("hidden", cfg.arch.hidden);
      cfg.arch.cutoff = a.value("cutoff", cfg.arch.cutoff);
      cfg.arch.skip = a.value("skip", cfg.arch.skip);
    }
    if (j.contains("training")) cfg.training = train_hyperparams_from_json(j.at("training"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("learning config: ") + e.what());
  }
  cfg.spec.validate();
  return cfg;
}

std::string learning_csv(const std::vector<LearningRow>& rows) {
  std::ostringstream os;
  os << "arm,test_set,r2,kendall_tau,scaled_mae,r2_centered,samples\n";
  for (const auto& r : rows)
    os << r.arm << ',' << r.test_set << ',' << format_number(r.metrics.r2) << ','
       << format_number(r.metrics.kendall_tau) << ',' << format_number(r.metrics.scaled_mae) << ','
       << format_number(r.metrics.r2_centered) << ',' << r.samples << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (mechanisms.empty()) throw InvalidInput("mechanisms: at least one mechanism required");
  if (repetitions < 1) throw InvalidInput("repetitions: must be >= 1");
  std::vector<std::string> names;
  for (const auto& m : mechanisms) {
    m.validate();
    names.push_back(safe_name(m.name));
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw InvalidInput("mechanisms: names must be distinct");
  if (instances.kind == InstanceSource::Kind::file && instances.file.empty())
    throw InvalidInput("instances.path: missing instance file");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.write_traces = j.value("write_traces", cfg.write_traces);
    if (!j.contains("mechanisms") || !j.at("mechanisms").is_array())
      throw InvalidInput("mechanisms: expected an array");
    for (const auto& m : j.at("mechanisms")) cfg.mechanisms.push_back(mechanism_config_from_json(m));
    if (j.contains("instances")) {
      const auto& src = j.at("instances");
      const std::string kind = src.value("kind", std::string("toy"));
      if (kind == "toy") {
        cfg.instances.kind = InstanceSource::Kind::toy;
        if (src.contains("toy")) cfg.instances.toy = toy_params_from_json(src.at("toy"));
      } else if (kind == "pathological") {
        cfg.instances.kind = InstanceSource::Kind::pathological;
        const auto id = parse_pathological(src.value("id", std::string()));
        if (!id) throw InvalidInput("instances.id: expected P1..P5");
        cfg.instances.pathological = *id;
      } else if (kind == "file") {
        cfg.instances.kind = InstanceSource::Kind::file;
        cfg.instances.file = src.value("path", std::string());
      } else {
        throw InvalidInput("instances.kind: expected toy, pathological or file");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::pair<double, double> mean_ci95(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = mean_of(xs);
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "mechanism,mean_efficiency_loss,ci95,mean_relative_revenue,mean_queries,runs\n";
  for (const auto& r : rows)
    os << r.mechanism << ',' << format_number(r.mean_efficiency_loss) << ',' << format_number(r.ci95) << ','
       << format_number(r.mean_relative_revenue) << ',' << format_number(r.mean_queries) << ',' << r.runs << '\n';
  return os.str();
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(jobs, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<SummaryRow> run_experiment(const ExperimentConfig& cfg, const fs::path& out, int jobs) {
  cfg.validate();
  const fs::path runs_dir = out / "runs";
  fs::create_directories(runs_dir);

  std::optional<PathologicalCase> pathological;
  std::optional<Instance> from_file;
  if (cfg.instances.kind == InstanceSource::Kind::pathological) {
    pathological = make_pathological(cfg.instances.pathological);
  } else if (cfg.instances.kind == InstanceSource::Kind::file) {
    std::ifstream f(cfg.instances.file);
    if (!f) throw InvalidInput("instances.path: cannot read " + cfg.instances.file);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("instances.path: " + std::string(e.what()));
    }
    from_file = instance_from_json(j);
  }

  const int reps = cfg.repetitions;
  std::vector<Instance> instances;
  for (int r = 0; r < reps; ++r) {
    if (pathological) {
      instances.push_back(pathological->instance);
    } else if (from_file) {
      instances.push_back(*from_file);
    } else {
      instances.push_back(sample_toy_instance(cfg.instances.toy, cfg.seed + static_cast<std::uint64_t>(r)));
    }
  }

  const int mechs = static_cast<int>(cfg.mechanisms.size());
  std::vector<std::vector<RunFigures>> figures(cfg.mechanisms.size(), std::vector<RunFigures>(reps));
  std::vector<std::string> names;
  for (const auto& m : cfg.mechanisms) names.push_back(safe_name(m.name));

  parallel_for(mechs * reps, jobs, [&](int task) {
    const int k = task / reps;
    const int r = task % reps;
    MechanismConfig mc = cfg.mechanisms[static_cast<std::size_t>(k)];
    mc.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)), mc.seed);
    if (pathological && !mc.script) mc.script = pathological->script;
    const Instance& inst = instances[static_cast<std::size_t>(r)];
    const AuctionOutcome o = run_mechanism(inst, mc);
    const std::string stem = names[static_cast<std::size_t>(k)] + "_" + std::to_string(r);
    const std::string csv = trace_csv(o);
    write_file(runs_dir / (stem + ".csv"), csv);
    if (cfg.write_traces) write_file(runs_dir / (stem + ".json"), to_json(o).dump(2) + "\n");
    figures[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = figures_from_csv(runs_dir / (stem + ".csv"));
  });

  std::ostringstream manifest;
  manifest << "mechanism,rep,file\n";
  for (int k = 0; k < mechs; ++k)
    for (int r = 0; r < reps; ++r)
      manifest << names[static_cast<std::size_t>(k)] << ',' << r << ",runs/" << names[static_cast<std::size_t>(k)]
               << '_' << r << ".csv\n";
  write_file(out / "manifest.csv", manifest.str());

  const auto rows = summarize(names, figures);
  write_file(out / "summary.csv", summary_csv(rows));
  return rows;
}

std::vector<SummaryRow> summarize_run_csvs(const fs::path& out) {
  std::ifstream f(out / "manifest.csv");
  if (!f) throw InvalidInput("missing " + (out / "manifest.csv").string());
  std::string line;
  std::getline(f, line);
  std::vector<std::string> names;
  std::vector<std::vector<RunFigures>> runs;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 3) throw InvalidInput("manifest.csv: malformed row '" + line + "'");
    auto it = std::find(names.begin(), names.end(), cols[0]);
    if (it == names.end()) {
      names.push_back(cols[0]);
      runs.emplace_back();
      it = names.end() - 1;
    }
    runs[static_cast<std::size_t>(it - names.begin())].push_back(figures_from_csv(out / cols[2]));
  }
  return summarize(names, runs);
}

// ---------------------------------------------------------------------------

CheckResult check_p1() {
  const auto pc = make_pathological(PathologicalId::P1);
  MechanismConfig cfg;
  cfg.kind = MechanismKind::cca;
  cfg.name = "cca";
  cfg.qcca = static_cast<int>(pc.script.clock_prices.size());
  cfg.supplementary = Supplementary::raised;
  cfg.script = pc.script;
  const auto o = run_cca(pc.instance, cfg);
  const double eff = o.efficiency.value_or(-1.0);
  const bool dq_ok = std::abs(eff - 100.0 / 184.24) <= 1e-9;

  auto reports = o.reports;
  const Bundle nine{9};
  reports[1].add_vq(ValueReport{nine, pc.instance.value(1, nine)});
  const auto wdp = solve_wdp(reports, pc.instance.capacities());
  const double eff_vq = pc.instance.social_welfare(wdp.allocation) / pc.instance.optimum().scw;
  const bool vq_ok = eff_vq == 1.0;
  return {"P1", dq_ok && vq_ok,
          check_line(dq_ok, "demand-query efficiency " + format_number(eff)) + "; " +
              check_line(vq_ok, "after v2(9) " + format_number(eff_vq))};
}

CheckResult check_p2() {
  const auto pc = make_pathological(PathologicalId::P2);
  MechanismConfig cfg;
  cfg.kind = MechanismKind::cca;
  cfg.name = "cca";
  cfg.script = pc.script;
  cfg.qcca = 2;
  const auto two = run_cca(pc.instance, cfg);
  cfg.qcca = 3;
  const auto three = run_cca(pc.instance, cfg);
  const auto& r2 = two.trace.back();
  const auto& r3 = three.trace.back();
  const bool a = r2.efficiency == 1.0 && std::abs(r2.inferred_scw - 1.2) <= 1e-12;
  const bool b = r3.inferred_scw == 2.0 && std::abs(*r3.efficiency - 3.1 / 400.0) <= 1e-15;
  return {"P2", a && b,
          check_line(a, "two DQs: efficiency " + format_number(r2.efficiency.value_or(-1)) + ", inferred SCW " +
                            format_number(r2.inferred_scw)) +
              "; " +
              check_line(b, "three DQs: efficiency " + format_number(r3.efficiency.value_or(-1)) +
                                ", inferred SCW " + format_number(r3.inferred_scw))};
}

CheckResult check_p3() {
  const auto pc = make_pathological(PathologicalId::P3);
  MechanismConfig cfg;
  cfg.script = pc.script;
  cfg.qcca = static_cast<int>(pc.script.clock_prices.size());
  cfg.qdq = 0;

  cfg.bridge_bid = false;
  cfg.qvq = 1;
  const auto off = run_mlhca(pc.instance, cfg);
  const double before = off.trace.at(static_cast<std::size_t>(cfg.qcca - 1)).efficiency.value_or(-1);
  const double after = off.efficiency.value_or(-1);
  const bool harmful = before == 1.0 && std::abs(after - 3.1 / 400.0) <= 1e-15;

  cfg.bridge_bid = true;
  cfg.qvq = 2;
  const auto on = run_mlhca(pc.instance, cfg);
  bool kept = on.efficiency == 1.0;
  for (std::size_t k = static_cast<std::size_t>(cfg.qcca); k < on.trace.size(); ++k)
    kept = kept && on.trace[k].efficiency == 1.0;
  return {"P3", harmful && kept,
          check_line(harmful, "without bridge bid " + format_number(before) + " -> " + format_number(after)) + "; " +
              check_line(kept, "with bridge bid final " + format_number(on.efficiency.value_or(-1)))};
}

CheckResult check_p4(int seeds) {
  const auto pc = make_pathological(PathologicalId::P4);
  double dq_total = 0.0, vq_total = 0.0, vq_eff = 0.0;
  for (int s = 0; s < seeds; ++s) {
    MechanismConfig cfg;
    cfg.kind = MechanismKind::cca;
    cfg.name = "random-dq";
    cfg.qcca = 1;
    cfg.random_first_price = 1.0;
    cfg.seed = static_cast<std::uint64_t>(s);
    dq_total += run_cca(pc.instance, cfg).true_scw;
    const auto vq = run_random_vq(pc.instance, 12, static_cast<std::uint64_t>(s));
    vq_total += vq.true_scw;
    vq_eff += vq.efficiency.value_or(0.0);
  }
  const double ratio = vq_total > 0.0 ? dq_total / vq_total : std::numeric_limits<double>::infinity();
  const bool pass = ratio > 100.0;
  return {"P4", pass,
          check_line(pass, "mean SCW ratio DQ/VQ " + format_number(ratio) + " over " + std::to_string(seeds) +
                               " seeds, mean VQ efficiency " + format_number(vq_eff / std::max(1, seeds)))};
}

CheckResult check_p5() {
  const auto pc = make_pathological(PathologicalId::P5);
  MechanismConfig cfg;
  cfg.script = pc.script;
  cfg.qcca = static_cast<int>(pc.script.clock_prices.size());
  cfg.qdq = 0;
  cfg.qvq = 2;
  const auto o = run_mlhca(pc.instance, cfg);
  const bool pass = o.efficiency == 1.0;
  return {"P5", pass, check_line(pass, "final efficiency " + format_number(o.efficiency.value_or(-1)))};
}

CheckResult check_bridge_bid(int instances, std::uint64_t seed, int jobs) {
  ToyDomainParams domain;
  domain.bidders = 4;
  domain.items = 8;
  std::vector<int> bridge_ok(static_cast<std::size_t>(instances), 0);
  std::vector<int> monotone_ok(static_cast<std::size_t>(instances), 0);
  std::vector<int> clearing_bad(static_cast<std::size_t>(instances), 0);
  parallel_for(instances, jobs, [&](int k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    const Instance inst = sample_toy_instance(domain, s);
    MechanismConfig cfg;
    cfg.seed = s;
    const auto o = run_mlhca(inst, cfg);
    const auto idx = static_cast<std::size_t>(k);
    if (o.cleared) {
      bridge_ok[idx] = monotone_ok[idx] = 1;
      clearing_bad[idx] = inst.social_welfare(o.allocation) != inst.optimum().scw;
      return;
    }
    std::optional<double> last_dq;
    bool after = false, ok = true, mono = true;
    std::optional<double> prev_vq;
    for (const auto& r : o.trace) {
      if (r.phase == "cca-dq" || r.phase == "ml-dq") {
        last_dq = r.efficiency;
        continue;
      }
      after = true;
      if (last_dq && r.efficiency < last_dq) ok = false;
      if (prev_vq && r.true_scw < *prev_vq) mono = false;
      prev_vq = r.true_scw;
    }
    if (last_dq && o.efficiency < last_dq) ok = false;
    bridge_ok[idx] = after && ok;
    monotone_ok[idx] = mono;
  });
  const int b = std::accumulate(bridge_ok.begin(), bridge_ok.end(), 0);
  const int m = std::accumulate(monotone_ok.begin(), monotone_ok.end(), 0);
  const int c = std::accumulate(clearing_bad.begin(), clearing_bad.end(), 0);
  const bool pass = b == instances && m == instances && c == 0;
  return {"bridge bid", pass,
          check_line(pass, std::to_string(b) + "/" + std::to_string(instances) + " bridge, " + std::to_string(m) +
                               "/" + std::to_string(instances) + " monotone value rounds, " + std::to_string(c) +
                               " inefficient clearings")};
}

CheckResult check_subgradient(int models, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bidders(1, 4), items(1, 3), cap(1, 3), width(2, 8), depth(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int failures = 0;
  double worst = 0.0;
  for (int t = 0; t < models; ++t) {
    std::vector<int> caps(static_cast<std::size_t>(items(rng)));
    for (auto& cj : caps) cj = cap(rng);
    const Capacities c(caps);
    std::vector<std::size_t> hidden(static_cast<std::size_t>(depth(rng)));
    for (auto& h : hidden) h = static_cast<std::size_t>(width(rng));
    const MvnnArch arch = MvnnArch::make(c, hidden, 0.5 + unit(rng), unit(rng) < 0.5);
    auto space = std::make_shared<const BundleSpace>(c);
    std::vector<ValueTable> tables;
    double scale_sum = 0.0;
    const int n = bidders(rng);
    for (int i = 0; i < n; ++i) {
      MvnnParams params = init(arch, rng());
      for (auto& l : params.hidden)
        for (auto& b : l.bias) b = -0.5 * unit(rng);
      params.output_scale = 1.0 + 9.0 * unit(rng);
      scale_sum += params.output_scale;
      tables.push_back(model_table(params, arch, space));
    }
    const double hi = 2.0 * scale_sum / n;
    auto draw = [&] {
      std::vector<double> p(c.size());
      for (auto& v : p) v = hi * unit(rng);
      return PriceVector(std::move(p));
    };
    for (int k = 0; k < pairs; ++k) {
      const PriceVector p = draw(), q = draw();
      const double wp = w_objective(tables, p, c);
      const double wq = w_objective(tables, q, c);
      const auto g = w_subgradient(tables, p, c);
      double lin = wp;
      for (std::size_t j = 0; j < c.size(); ++j) lin += g[j] * (q[j] - p[j]);
      const double gap = lin - wq;
      worst = std::max(worst, gap);
      if (gap > 1e-9) ++failures;
    }
  }
  const bool pass = failures == 0;
  return {"subgradient", pass,
          check_line(pass, std::to_string(failures) + " violations in " + std::to_string(models * pairs) +
                               " checks, worst gap " + format_number(worst))};
}

std::vector<CheckResult> run_verify(const VerifyOptions& opts) {
  return {check_p1(),
          check_p2(),
          check_p3(),
          check_p4(opts.p4_seeds),
          check_p5(),
          check_bridge_bid(opts.bridge_instances, opts.seed, opts.jobs),
          check_subgradient(opts.subgradient_models, opts.subgradient_pairs, opts.seed)};
}

}  // namespace auctionlab
