#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "auctionlab/core.hpp"

namespace auctionlab {

inline constexpr std::size_t kDefaultNodeBudget = 100'000'000;

/// Per-bidder tabulated values over one bundle space. Bundles not listed in
/// `candidates[i]` are unavailable to bidder i.
struct AllocationProblem {
  SharedSpace space;
  std::vector<std::vector<double>> values;          // [bidder][bundle index]
  std::vector<std::vector<std::size_t>> candidates;  // ascending indices
};

struct AllocationSolution {
  std::vector<std::size_t> choice;  // bundle index per bidder
  double value = 0.0;
  bool exact = true;
};

/// Build a problem where every bidder may receive any bundle.
AllocationProblem full_problem(SharedSpace space, std::vector<std::vector<double>> values);

/// Exact welfare maximization by depth-first search over bidders. Bounds use
/// each bidder's best available value within the remaining supply. Among
/// optimal allocations the lexicographically smallest (bidder 0 first) wins.
/// Returns nullopt when no feasible allocation exists; throws
/// ExactOracleUnavailable when more than `node_budget` nodes are visited.
std::optional<AllocationSolution> solve_exact(const AllocationProblem& problem,
                                              std::size_t node_budget = kDefaultNodeBudget);

/// Seeded multi-restart best-response local search; result flagged inexact.
std::optional<AllocationSolution> solve_local_search(const AllocationProblem& problem, std::uint64_t seed,
                                                     int restarts = 16);

Allocation to_allocation(const BundleSpace& space, const std::vector<std::size_t>& choice);

}  // namespace auctionlab
