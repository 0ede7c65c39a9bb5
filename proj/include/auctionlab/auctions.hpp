#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "auctionlab/allocation.hpp"
#include "auctionlab/core.hpp"
#include "auctionlab/mvnn.hpp"
#include "auctionlab/pricing.hpp"
#include "auctionlab/training.hpp"
#include "auctionlab/valuations.hpp"

namespace auctionlab {

enum class Supplementary { clock, raised, profit_max };

std::string to_string(Supplementary s);
std::optional<Supplementary> parse_supplementary(const std::string& s);

struct ArchSpec {
  std::vector<std::size_t> hidden{16, 16};
  double cutoff = 1.0;
  bool skip = true;

  MvnnArch for_capacities(const Capacities& c) const { return MvnnArch::make(c, hidden, cutoff, skip); }
};

enum class MechanismKind { mlhca, mlcca, cca, random_vq };

std::string to_string(MechanismKind k);
std::optional<MechanismKind> parse_mechanism_kind(const std::string& s);

struct MechanismConfig {
  MechanismKind kind = MechanismKind::mlhca;
  std::string name = "mlhca";
  int qcca = 6;
  int qdq = 4;
  int qvq = 10;  // value queries per bidder; also the random-vq budget
  int qround = 4;
  PaymentRule payment = PaymentRule::vcg;
  bool bridge_bid = true;
  int marginalization = 1;
  std::uint64_t seed = 0;
  TrainHyperparams dq_training;
  TrainHyperparams vq_training;
  ArchSpec arch;
  PriceEngineConfig pricing;
  Supplementary supplementary = Supplementary::clock;
  int profit_max_bids = 0;
  /// First clock price drawn uniformly from [0, hi) per item.
  std::optional<double> random_first_price;
  std::optional<QueryScript> script;

  void validate() const;
};

struct RoundRecord {
  int round = 0;
  std::string phase;  // cca-dq, ml-dq, bridge, ml-vq-main, ml-vq-marginal, supplementary, random-vq, scripted
  std::optional<PriceVector> prices;
  std::vector<std::optional<Bundle>> queried;  // value-queried bundle per bidder
  std::vector<Bundle> responses;               // demand responses per bidder
  std::vector<double> answers;                 // value answers per bidder
  Allocation allocation;                       // WDP over the reports so far
  double inferred_scw = 0.0;
  double true_scw = 0.0;
  std::optional<double> efficiency;
  bool clearing = false;
};

struct AuctionOutcome {
  std::string mechanism;
  std::string instance_label;
  bool cleared = false;
  Allocation allocation;
  std::vector<double> payments;
  std::vector<RoundRecord> trace;
  std::vector<BidderReports> reports;
  std::vector<int> queries;  // queries answered per bidder
  double true_scw = 0.0;
  std::optional<double> optimal_scw;
  std::optional<double> efficiency;
  std::string note;
  nlohmann::json config;
};

/// CCA clock rounds, ML demand rounds with clearing early exit, the bridge
/// bid, ML value rounds (main or marginal economies), final WDP and payments.
AuctionOutcome run_mlhca(const Instance& inst, const MechanismConfig& cfg);

/// Clock rounds with percentage increments followed by a supplementary round.
AuctionOutcome run_cca(const Instance& inst, const MechanismConfig& cfg);
AuctionOutcome run_cca(const Instance& inst, int rounds, double increment, Supplementary supplementary,
                       int profit_max_bids = 0);

/// CCA and ML demand rounds only, then an optional supplementary round.
AuctionOutcome run_mlcca(const Instance& inst, const MechanismConfig& cfg);

/// Dispatch on cfg.kind.
AuctionOutcome run_mechanism(const Instance& inst, const MechanismConfig& cfg);

/// `queries` uniformly random distinct value queries per bidder.
AuctionOutcome run_random_vq(const Instance& inst, int queries, std::uint64_t seed,
                             PaymentRule payment = PaymentRule::vcg);

nlohmann::json to_json(const MechanismConfig& cfg);
MechanismConfig mechanism_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AuctionOutcome& outcome);
/// One row per round plus a closing "final" row.
std::string trace_csv(const AuctionOutcome& outcome);

}  // namespace auctionlab
