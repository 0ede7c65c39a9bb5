#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "json.hpp"

#include "auctionlab/core.hpp"
#include "auctionlab/mvnn.hpp"

namespace auctionlab {

enum class Optimizer { sgd, adam };

struct TrainHyperparams {
  int epochs = 200;
  double learning_rate = 0.03;
  double l2 = 1e-6;
  int cache_frequency = 1;  // epochs between recomputations of the predicted demand
  int batch_size = 4;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::sgd;

  void validate() const;
};

struct DqLossResult {
  double loss = 0.0;
  Bundle predicted;
};

/// Hinge on the predicted utility gap between the model's demand and the
/// reported bundle.
DqLossResult dq_loss(const MvnnParams& params, const MvnnArch& arch, const DemandReport& r);

/// (forward(x) - value)^2
double vq_loss(const MvnnParams& params, const MvnnArch& arch, const ValueReport& r);

/// Sum of dq_loss and vq_loss over all reports (no regularization).
double data_loss(const MvnnParams& params, const MvnnArch& arch, const BidderReports& reports);

struct TrainResult {
  MvnnParams params;
  double loss = 0.0;  // final data_loss
};

/// Called after every parameter update.
using StepObserver = std::function<void(const MvnnParams&)>;

/// Per epoch: one step per demand report in report order, then shuffled value
/// report batches. Parameters are projected after every step.
TrainResult mixed_train(const BidderReports& reports, const MvnnArch& arch, const TrainHyperparams& hp,
                        const StepObserver& observer = {});

/// Typical magnitude of the reports: mean of value reports and of <p, x> over
/// demand reports. 0 for empty reports.
double report_magnitude(const BidderReports& reports);

struct InconsistencyResult {
  double min_loss = 0.0;
  double threshold = 0.0;
  int restarts = 0;
  bool inconsistent = false;
};

/// Trains from `restarts` seeds and flags the reports when no fit gets below
/// 5% of the report magnitude.
InconsistencyResult detect_inconsistency(const BidderReports& reports, const MvnnArch& arch,
                                         const TrainHyperparams& hp, int restarts);

std::string to_string(Optimizer o);
nlohmann::json to_json(const TrainHyperparams& hp);
TrainHyperparams train_hyperparams_from_json(const nlohmann::json& j, TrainHyperparams base = {});

}  // namespace auctionlab
