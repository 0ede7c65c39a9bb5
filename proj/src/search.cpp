#include "auctionlab/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace auctionlab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Best available value (and lexicographically smallest argmax) among bundles
// y <= x, for every x.
struct Envelope {
  std::vector<double> value;
  std::vector<std::size_t> arg;
};

Envelope make_envelope(const BundleSpace& space, const std::vector<double>& values,
                       const std::vector<std::size_t>& candidates) {
  const std::size_t size = space.size();
  Envelope env{std::vector<double>(size, kNegInf), std::vector<std::size_t>(size, 0)};
  for (std::size_t idx : candidates) {
    env.value[idx] = values[idx];
    env.arg[idx] = idx;
  }
  for (std::size_t idx = 0; idx < size; ++idx) {
    for (std::size_t j = 0; j < space.dims(); ++j) {
      if (space.digit(idx, j) == 0) continue;
      const std::size_t below = idx - space.stride(j);
      const double v = env.value[below];
      if (v == kNegInf) continue;
      if (v > env.value[idx] || (v == env.value[idx] && env.arg[below] < env.arg[idx])) {
        env.value[idx] = v;
        env.arg[idx] = env.arg[below];
      }
    }
  }
  return env;
}

void validate(const AllocationProblem& p) {
  if (!p.space) throw InvalidInput("allocation problem without bundle space");
  if (p.values.size() != p.candidates.size() || p.values.empty())
    throw InvalidInput("allocation problem needs matching values and candidates for >= 1 bidder");
  for (const auto& v : p.values)
    if (v.size() != p.space->size()) throw InvalidInput("value table size differs from bundle space");
}

class ExactSearch {
public:
  ExactSearch(const AllocationProblem& p, std::size_t budget) : p_(p), budget_(budget) {
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const bool dense = p.candidates[i].size() * 8 >= p.space->size();
      envs_.push_back(dense ? make_envelope(*p.space, p.values[i], p.candidates[i]) : Envelope{});
    }
    current_.assign(p.values.size(), 0);
  }

  std::optional<AllocationSolution> run() {
    descend(0, p_.space->full_index(), 0.0);
    if (!found_) return std::nullopt;
    return AllocationSolution{best_choice_, best_value_, true};
  }

private:
  void descend(std::size_t bidder, std::size_t remaining, double partial) {
    if (++nodes_ > budget_)
      throw ExactOracleUnavailable("exact allocation search exceeded " + std::to_string(budget_) +
                                   " node visits");
    const std::size_t n = p_.values.size();
    double bound = partial;
    std::size_t pick = 0;
    for (std::size_t k = bidder; k < n; ++k) {
      const auto [e, arg] = best_within(k, remaining);
      if (e == kNegInf) return;
      bound += e;
      if (k == bidder) pick = arg;
    }
    if (found_ && bound < best_value_ - 1e-9 * std::max(1.0, std::abs(best_value_))) return;

    if (bidder + 1 == n) {
      const double total = partial + p_.values[bidder][pick];
      if (!found_ || total > best_value_) {
        current_[bidder] = pick;
        best_choice_ = current_;
        best_value_ = total;
        found_ = true;
      }
      return;
    }
    for (std::size_t idx : p_.candidates[bidder]) {
      if (!p_.space->fits(idx, remaining)) continue;
      current_[bidder] = idx;
      descend(bidder + 1, remaining - idx, partial + p_.values[bidder][idx]);
    }
  }

  // Best available value among candidates fitting `remaining`, with the
  // lexicographically smallest argmax.
  std::pair<double, std::size_t> best_within(std::size_t k, std::size_t remaining) const {
    const auto& env = envs_[k];
    if (!env.value.empty()) return {env.value[remaining], env.arg[remaining]};
    double best = kNegInf;
    std::size_t arg = 0;
    for (std::size_t idx : p_.candidates[k]) {
      if (idx > remaining || !p_.space->fits(idx, remaining)) continue;
      if (p_.values[k][idx] > best) {
        best = p_.values[k][idx];
        arg = idx;
      }
    }
    return {best, arg};
  }

  const AllocationProblem& p_;
  std::size_t budget_;
  std::vector<Envelope> envs_;
  std::vector<std::size_t> current_;
  std::vector<std::size_t> best_choice_;
  double best_value_ = 0.0;
  bool found_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace

AllocationProblem full_problem(SharedSpace space, std::vector<std::vector<double>> values) {
  AllocationProblem p{std::move(space), std::move(values), {}};
  std::vector<std::size_t> all(p.space->size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  p.candidates.assign(p.values.size(), all);
  return p;
}

std::optional<AllocationSolution> solve_exact(const AllocationProblem& problem, std::size_t node_budget) {
  validate(problem);
  ExactSearch search(problem, node_budget);
  return search.run();
}

std::optional<AllocationSolution> solve_local_search(const AllocationProblem& problem, std::uint64_t seed,
                                                     int restarts) {
  validate(problem);
  const auto& space = *problem.space;
  const std::size_t n = problem.values.size();
  std::vector<Envelope> envs;
  for (std::size_t i = 0; i < n; ++i) envs.push_back(make_envelope(space, problem.values[i], problem.candidates[i]));

  std::mt19937_64 rng(seed);
  std::optional<AllocationSolution> best;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int restart = 0; restart < std::max(1, restarts); ++restart) {
    if (restart > 0) std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> choice(n, 0);
    std::size_t remaining = space.full_index();
    bool ok = true;
    for (std::size_t i : order) {
      if (envs[i].value[remaining] == kNegInf) {
        ok = false;
        break;
      }
      choice[i] = envs[i].arg[remaining];
      remaining -= choice[i];
    }
    if (!ok) continue;

    for (int sweep = 0; sweep < 100; ++sweep) {
      bool improved = false;
      for (std::size_t i : order) {
        std::size_t others = 0;
        for (std::size_t k = 0; k < n; ++k)
          if (k != i) others += choice[k];
        const std::size_t free_supply = space.full_index() - others;
        const std::size_t cand = envs[i].arg[free_supply];
        if (envs[i].value[free_supply] > problem.values[i][choice[i]] + 1e-12) {
          choice[i] = cand;
          improved = true;
        }
      }
      if (!improved) break;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += problem.values[i][choice[i]];
    if (!best || total > best->value) best = AllocationSolution{choice, total, false};
  }
  return best;
}

Allocation to_allocation(const BundleSpace& space, const std::vector<std::size_t>& choice) {
  std::vector<Bundle> bundles;
  bundles.reserve(choice.size());
  for (std::size_t idx : choice) bundles.push_back(space.bundle(idx));
  return Allocation(std::move(bundles));
}

}  // namespace auctionlab
