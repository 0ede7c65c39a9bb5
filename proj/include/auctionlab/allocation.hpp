#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "auctionlab/core.hpp"
#include "auctionlab/search.hpp"

namespace auctionlab {

enum class PaymentRule { vcg, vcg_nearest, zero };

std::string to_string(PaymentRule r);
std::optional<PaymentRule> parse_payment_rule(const std::string& s);

/// Sum over bidders outside `coalition` of their payments must be >= rhs.
struct CoreConstraint {
  std::vector<std::size_t> coalition;
  double rhs = 0.0;
};

/// Every coalition constraint plus the individual-rationality box
/// 0 <= pi_i <= upper[i].
struct CoreSystem {
  std::size_t bidders = 0;
  std::vector<CoreConstraint> constraints;
  std::vector<double> upper;

  /// Largest violation of any constraint at pi (0 when feasible).
  double max_violation(const std::vector<double>& pi) const;
};

/// Bidder subset as a membership mask; empty means every bidder.
using Economy = std::vector<bool>;

struct WdpResult {
  Allocation allocation;
  double inferred_scw = 0.0;
};

/// Exact winner determination over inferred values. Bidders draw from their
/// reported bundles plus the empty bundle; bidders outside `economy` get the
/// empty bundle.
WdpResult solve_wdp(const std::vector<BidderReports>& reports, const Capacities& c, const Economy& economy = {});

double inferred_welfare(const std::vector<BidderReports>& reports, const Allocation& a);

struct MlWdpResult {
  Allocation allocation;
  double predicted = 0.0;
  bool exact = true;
};

/// Maximize sum of model values over the economy with excluded bundles
/// removed per bidder. Falls back to seeded local search past the node budget.
MlWdpResult solve_ml_wdp(const std::vector<ValueTable>& models, const Capacities& c,
                         const std::vector<std::vector<Bundle>>& excluded, const Economy& economy = {},
                         std::uint64_t seed = 0, std::size_t node_budget = 2'000'000);

std::vector<double> vcg_payments(const std::vector<BidderReports>& reports, const Capacities& c);
/// VCG relative to a given final allocation (e.g. one found at clearing prices).
std::vector<double> vcg_payments(const std::vector<BidderReports>& reports, const Capacities& c,
                                 const Allocation& a);

inline constexpr std::size_t kMaxCoreBidders = 12;

CoreSystem core_constraints(const std::vector<BidderReports>& reports, const Allocation& a, const Capacities& c);

std::vector<double> vcg_nearest_payments(const std::vector<BidderReports>& reports, const Capacities& c);
std::vector<double> vcg_nearest_payments(const std::vector<BidderReports>& reports, const Capacities& c,
                                         const Allocation& a);

std::vector<double> compute_payments(PaymentRule rule, const std::vector<BidderReports>& reports,
                                     const Capacities& c, const Allocation& a);

/// min sum(pi) over the system; returns the optimal point.
std::vector<double> min_revenue_core(const CoreSystem& sys);

/// min ||pi - target||^2 over the system intersected with
/// sum(pi) = sum(start), starting from the feasible point `start`.
std::vector<double> nearest_in_core(const CoreSystem& sys, const std::vector<double>& target,
                                    const std::vector<double>& start);

enum class ActivityMode { final_cap, all_rounds };

/// b(x) <= b(x^r) + <p^r, x - x^r> for the last clock round (final_cap) or
/// every clock round (all_rounds).
bool check_revealed_preference(const ValueReport& bid, const std::vector<DemandReport>& clock,
                               const std::map<Bundle, double>& final_bids, ActivityMode mode);

}  // namespace auctionlab
