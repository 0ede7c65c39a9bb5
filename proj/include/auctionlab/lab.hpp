#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "auctionlab/auctions.hpp"

namespace auctionlab {

// ---------------------------------------------------------------------------
// Outcome metrics
// ---------------------------------------------------------------------------

/// 1 - V(a)/V(a*) for the outcome's final allocation.
double efficiency_loss(const AuctionOutcome& outcome, const Instance& inst);

/// Total payments divided by the optimal social welfare.
double relative_revenue(const AuctionOutcome& outcome, const Instance& inst);

struct LearningMetrics {
  double r2 = 0.0;
  double kendall_tau = 0.0;
  double scaled_mae = 0.0;
  double r2_centered = 0.0;
};

/// Metrics of predictions against truths; throws InvalidInput for fewer than
/// two points or constant truths.
LearningMetrics learning_metrics(const std::vector<double>& truth, const std::vector<double>& predicted);
LearningMetrics learning_metrics(const MvnnParams& params, const MvnnArch& arch, const ValueOracle& oracle,
                                 const std::vector<Bundle>& test_set);

/// Tie-corrected Kendall rank correlation.
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Learning experiment
// ---------------------------------------------------------------------------

struct LearningEvalSpec {
  int train_dqs = 40;            // clock rounds simulated for the demand-query arm
  int train_vqs = 20;            // random value queries
  int test_random = 200;         // random-bundle test set size
  int test_price = 200;          // price-driven test set size
  double price_range = 3.0;      // per-item price upper bound, multiple of v(full) / total copies
  int seeds = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LearningRow {
  std::string arm;      // dq-only, vq-only, mixed
  std::string test_set; // random, price
  LearningMetrics metrics;
  int samples = 0;      // bidder models averaged
};

std::vector<LearningRow> run_learning_experiment(const LearningEvalSpec& spec, const ToyDomainParams& domain,
                                                 const ArchSpec& arch, const TrainHyperparams& hp, int jobs = 1);

struct LearningConfig {
  LearningEvalSpec spec;
  ToyDomainParams domain;
  ArchSpec arch;
  TrainHyperparams training;
};

LearningConfig learning_config_from_json(const nlohmann::json& j);
std::string learning_csv(const std::vector<LearningRow>& rows);

// ---------------------------------------------------------------------------
// Mechanism experiments
// ---------------------------------------------------------------------------

struct InstanceSource {
  enum class Kind { toy, pathological, file } kind = Kind::toy;
  ToyDomainParams toy;
  PathologicalId pathological = PathologicalId::P1;
  std::string file;
};

struct ExperimentConfig {
  std::vector<MechanismConfig> mechanisms;
  InstanceSource instances;
  int repetitions = 1;
  std::uint64_t seed = 1;
  bool write_traces = true;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct SummaryRow {
  std::string mechanism;
  double mean_efficiency_loss = 0.0;
  double ci95 = 0.0;
  double mean_relative_revenue = 0.0;
  double mean_queries = 0.0;
  int runs = 0;
};

/// mean and 1.96 * standard error of the samples.
std::pair<double, double> mean_ci95(const std::vector<double>& xs);

std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Runs every mechanism on every repetition's instance and writes
/// runs/<mechanism>_<rep>.{json,csv} plus summary.csv under `out`.
std::vector<SummaryRow> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs);

/// Runs fn(0..count-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

/// Rebuild the summary from the per-run CSV files written by run_experiment.
std::vector<SummaryRow> summarize_run_csvs(const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Closed-form instance checks
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  int bridge_instances = 10;
  int p4_seeds = 1000;
  int subgradient_models = 10;
  int subgradient_pairs = 100;
  std::uint64_t seed = 1;
  int jobs = 1;
};

CheckResult check_p1();
CheckResult check_p2();
CheckResult check_p3();
CheckResult check_p4(int seeds);
CheckResult check_p5();
/// Full MLHCA runs on random toy instances (n=4, m=8 binary): efficiency after
/// the bridge bid never drops below the last demand round, true SCW is
/// non-decreasing through the value rounds and cleared runs are efficient.
CheckResult check_bridge_bid(int instances, std::uint64_t seed, int jobs = 1);
CheckResult check_subgradient(int models, int pairs, std::uint64_t seed);

std::vector<CheckResult> run_verify(const VerifyOptions& opts);

}  // namespace auctionlab
