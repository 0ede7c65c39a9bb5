// Test-side reference computations. Everything here is deliberately naive:
// plain enumeration with no pruning, sharing no code with the library beyond
// the data types and value oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "auctionlab/lab.hpp"

namespace oracle {

using namespace auctionlab;

// All bundles x with 0 <= x <= caps, last item varying fastest.
inline std::vector<Bundle> all_bundles(const std::vector<int>& caps) {
  std::vector<Bundle> out;
  std::vector<int> x(caps.size(), 0);
  for (;;) {
    out.emplace_back(x);
    std::size_t j = caps.size();
    while (j > 0 && x[j - 1] == caps[j - 1]) x[--j] = 0;
    if (j == 0) return out;
    ++x[j - 1];
  }
}

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<Bundle> allocation;
};

// Exhaustive search over allocations; value(i, x) < 0 marks x unavailable
// to bidder i. Bidders with in_economy[i] == false receive the zero bundle.
inline Best exhaustive(const std::vector<int>& caps, std::size_t n,
                       const std::function<double(std::size_t, const Bundle&)>& value,
                       const std::vector<bool>& in_economy = {}) {
  const auto bundles = all_bundles(caps);
  Best best;
  std::vector<Bundle> cur(n, Bundle::zero(caps.size()));
  std::vector<int> left = caps;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
    if (i == n) {
      if (acc > best.value) {
        best.value = acc;
        best.allocation = cur;
      }
      return;
    }
    if (!in_economy.empty() && !in_economy[i]) {
      cur[i] = Bundle::zero(caps.size());
      rec(i + 1, acc);
      return;
    }
    for (const auto& x : bundles) {
      bool fits = true;
      for (std::size_t j = 0; j < caps.size(); ++j) fits = fits && x[j] <= left[j];
      if (!fits) continue;
      const double v = value(i, x);
      if (v < 0) continue;
      for (std::size_t j = 0; j < caps.size(); ++j) left[j] -= x[j];
      cur[i] = x;
      rec(i + 1, acc + v);
      for (std::size_t j = 0; j < caps.size(); ++j) left[j] += x[j];
    }
  };
  rec(0, 0.0);
  return best;
}

inline double optimal_scw(const Instance& inst) {
  return exhaustive(inst.capacities().values(), inst.bidders(),
                    [&](std::size_t i, const Bundle& x) { return inst.oracles()[i].value(x); })
      .value;
}

// Inferred value recomputed straight from the reports.
inline double inferred(const BidderReports& r, const Bundle& x) {
  for (const auto& v : r.vq())
    if (v.bundle == x) return v.value;
  double best = 0.0;
  for (const auto& d : r.dq())
    if (d.bundle == x) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * d.prices[j];
      best = std::max(best, s);
    }
  return best;
}

inline double wdp_value(const std::vector<BidderReports>& reports, const Capacities& c,
                        const std::vector<bool>& economy = {}) {
  return exhaustive(c.values(), reports.size(),
                    [&](std::size_t i, const Bundle& x) { return inferred(reports[i], x); }, economy)
      .value;
}

// Revealed core constraints: for each coalition L (proper subset, including
// the empty set) sum_{i not in L} pi_i >= W(L) - sum_{i in L} v_i(a_i), plus
// 0 <= pi_i <= v_i(a_i).
struct Constraint {
  std::vector<bool> payers;
  double rhs;
};

inline std::vector<Constraint> core(const std::vector<BidderReports>& reports, const Allocation& a,
                                    const Capacities& c) {
  const std::size_t n = reports.size();
  std::vector<Constraint> out;
  for (std::size_t mask = 0; mask + 1 < (std::size_t{1} << n); ++mask) {
    std::vector<bool> in_l(n), payers(n);
    double held = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      in_l[i] = (mask >> i) & 1;
      payers[i] = !in_l[i];
      if (in_l[i]) held += inferred(reports[i], a[i]);
    }
    out.push_back({payers, wdp_value(reports, c, in_l) - held});
  }
  return out;
}

inline double core_violation(const std::vector<Constraint>& cons, const std::vector<BidderReports>& reports,
                             const Allocation& a, const std::vector<double>& pi) {
  double worst = 0.0;
  for (const auto& k : cons) {
    double s = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i)
      if (k.payers[i]) s += pi[i];
    worst = std::max(worst, k.rhs - s);
  }
  for (std::size_t i = 0; i < pi.size(); ++i) {
    worst = std::max(worst, -pi[i]);
    worst = std::max(worst, pi[i] - inferred(reports[i], a[i]));
  }
  return worst;
}

// W(p) = sum_j c_j p_j + sum_i max_x (M_i(x) - <p, x>), evaluated by direct
// forward passes; also returns the lexicographically first demand per model.
struct WEval {
  double w = 0.0;
  std::vector<Bundle> demands;
};

inline WEval w_eval(const std::vector<std::pair<MvnnParams, MvnnArch>>& models, const std::vector<double>& p,
                    const std::vector<int>& caps) {
  WEval e;
  for (std::size_t j = 0; j < caps.size(); ++j) e.w += caps[j] * p[j];
  const auto bundles = all_bundles(caps);
  for (const auto& [params, arch] : models) {
    double best = -std::numeric_limits<double>::infinity();
    Bundle arg;
    for (const auto& x : bundles) {
      double u = forward(params, arch, x);
      for (std::size_t j = 0; j < caps.size(); ++j) u -= x[j] * p[j];
      if (u > best) {
        best = u;
        arg = x;
      }
    }
    e.w += best;
    e.demands.push_back(arg);
  }
  return e;
}

// Random feasible MVNN parameters with some negative biases so that bReLU
// kinks fall inside the input box.
inline MvnnParams random_params(const MvnnArch& arch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MvnnParams p = init(arch, rng());
  for (auto& l : p.hidden) {
    for (auto& w : l.weights) w *= 2.0 * u(rng);
    for (auto& b : l.bias) b = -0.5 * u(rng);
  }
  p.output_scale = 1.0 + 9.0 * u(rng);
  return p;
}

inline MvnnArch random_arch(std::mt19937_64& rng, int max_items = 3, int max_cap = 3) {
  std::uniform_int_distribution<int> items(1, max_items), cap(1, max_cap), width(1, 8), depth(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> caps(static_cast<std::size_t>(items(rng)));
  for (auto& c : caps) c = cap(rng);
  std::vector<std::size_t> hidden(static_cast<std::size_t>(depth(rng)));
  for (auto& h : hidden) h = static_cast<std::size_t>(width(rng));
  return MvnnArch::make(Capacities(caps), hidden, 0.5 + u(rng), u(rng) < 0.5);
}

}  // namespace oracle
