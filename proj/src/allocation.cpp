#include "auctionlab/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace auctionlab {
namespace {

bool in_economy(const Economy& e, std::size_t i) { return e.empty() || e.at(i); }

void check_reports(const std::vector<BidderReports>& reports, const Capacities& c) {
  if (reports.empty()) throw InvalidInput("winner determination needs at least one bidder");
  for (const auto& r : reports) {
    for (const auto& d : r.dq()) d.bundle.check_within(c);
    for (const auto& v : r.vq()) v.bundle.check_within(c);
  }
}

// Dense tableau simplex for  max c^T x  s.t.  A x <= b,  x >= 0  with b >= 0.
// Uses Bland's rule. Returns the row duals, or nullopt when unbounded.
std::optional<std::vector<double>> simplex_duals(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                                                 const std::vector<double>& c) {
  constexpr double eps = 1e-12;
  const std::size_t rows = A.size();
  const std::size_t vars = c.size();
  const std::size_t cols = vars + rows;
  std::vector<std::vector<double>> t(rows + 1, std::vector<double>(cols + 1, 0.0));
  std::vector<std::size_t> basis(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < vars; ++j) t[r][j] = A[r][j];
    t[r][vars + r] = 1.0;
    t[r][cols] = b[r];
    basis[r] = vars + r;
  }
  for (std::size_t j = 0; j < vars; ++j) t[rows][j] = -c[j];

  for (std::size_t iter = 0; iter < 100000; ++iter) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j)
      if (t[rows][j] < -eps) {
        enter = j;
        break;
      }
    if (enter == cols) {
      std::vector<double> duals(rows);
      for (std::size_t r = 0; r < rows; ++r) duals[r] = t[rows][vars + r];
      return duals;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows; ++r)
      if (t[r][enter] > eps) best = std::min(best, t[r][cols] / t[r][enter]);
    std::size_t leave = rows;
    for (std::size_t r = 0; r < rows; ++r)
      if (t[r][enter] > eps && t[r][cols] / t[r][enter] <= best + eps && (leave == rows || basis[r] < basis[leave]))
        leave = r;
    if (leave == rows) return std::nullopt;
    const double piv = t[leave][enter];
    for (auto& v : t[leave]) v /= piv;
    for (std::size_t r = 0; r <= rows; ++r) {
      if (r == leave) continue;
      const double f = t[r][enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) t[r][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  throw AuctionError("simplex iteration limit reached");
}

struct LinearRow {
  std::vector<double> g;
  double h = 0.0;
};

std::vector<LinearRow> inequality_rows(const CoreSystem& sys) {
  const std::size_t n = sys.bidders;
  std::vector<LinearRow> rows;
  for (const auto& k : sys.constraints) {
    if (k.rhs <= 0.0) continue;
    LinearRow r{std::vector<double>(n, 1.0), k.rhs};
    for (std::size_t i : k.coalition) r.g[i] = 0.0;
    rows.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < n; ++i) {
    LinearRow lo{std::vector<double>(n, 0.0), 0.0};
    lo.g[i] = 1.0;
    rows.push_back(std::move(lo));
    LinearRow hi{std::vector<double>(n, 0.0), -sys.upper[i]};
    hi.g[i] = -1.0;
    rows.push_back(std::move(hi));
  }
  return rows;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

std::string to_string(PaymentRule r) {
  switch (r) {
    case PaymentRule::vcg: return "vcg";
    case PaymentRule::vcg_nearest: return "vcg-nearest";
    case PaymentRule::zero: return "zero";
  }
  return "?";
}

std::optional<PaymentRule> parse_payment_rule(const std::string& s) {
  if (s == "vcg") return PaymentRule::vcg;
  if (s == "vcg-nearest") return PaymentRule::vcg_nearest;
  if (s == "zero") return PaymentRule::zero;
  return std::nullopt;
}

double CoreSystem::max_violation(const std::vector<double>& pi) const {
  double worst = 0.0;
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (const auto& k : constraints) {
    double outside = total;
    for (std::size_t i : k.coalition) outside -= pi[i];
    worst = std::max(worst, k.rhs - outside);
  }
  for (std::size_t i = 0; i < bidders; ++i) worst = std::max({worst, -pi[i], pi[i] - upper[i]});
  return worst;
}

// ---------------------------------------------------------------------------

WdpResult solve_wdp(const std::vector<BidderReports>& reports, const Capacities& c, const Economy& economy) {
  check_reports(reports, c);
  if (!economy.empty() && economy.size() != reports.size()) throw InvalidInput("economy mask size mismatch");
  auto space = std::make_shared<const BundleSpace>(c);
  AllocationProblem problem{space, {}, {}};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::vector<double> values(space->size(), 0.0);
    std::vector<std::size_t> cand{0};
    if (in_economy(economy, i)) {
      for (const auto& d : reports[i].dq()) cand.push_back(space->index(d.bundle));
      for (const auto& v : reports[i].vq()) cand.push_back(space->index(v.bundle));
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      for (std::size_t idx : cand) values[idx] = inferred_value(reports[i], space->bundle(idx));
    }
    problem.values.push_back(std::move(values));
    problem.candidates.push_back(std::move(cand));
  }
  const auto sol = solve_exact(problem);
  return {to_allocation(*space, sol->choice), sol->value};
}

double inferred_welfare(const std::vector<BidderReports>& reports, const Allocation& a) {
  if (a.size() != reports.size()) throw InvalidInput("allocation size differs from bidder count");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += inferred_value(reports[i], a[i]);
  return s;
}

MlWdpResult solve_ml_wdp(const std::vector<ValueTable>& models, const Capacities& c,
                         const std::vector<std::vector<Bundle>>& excluded, const Economy& economy, std::uint64_t seed,
                         std::size_t node_budget) {
  if (models.empty()) throw InvalidInput("ML winner determination needs at least one model");
  if (!excluded.empty() && excluded.size() != models.size()) throw InvalidInput("exclusion list size mismatch");
  if (!economy.empty() && economy.size() != models.size()) throw InvalidInput("economy mask size mismatch");
  const SharedSpace space = models.front().space;
  if (space->capacities() != c) throw InvalidInput("model bundle space differs from capacities");

  AllocationProblem problem{space, {}, {}};
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].space->capacities() != c) throw InvalidInput("model bundle space differs from capacities");
    std::vector<std::size_t> cand;
    if (in_economy(economy, i)) {
      std::vector<bool> banned(space->size(), false);
      if (!excluded.empty())
        for (const auto& x : excluded[i]) banned[space->index(x)] = true;
      for (std::size_t idx = 0; idx < space->size(); ++idx)
        if (!banned[idx]) cand.push_back(idx);
      if (cand.empty())
        throw NoFeasibleQuery("every bundle is excluded for bidder " + std::to_string(i));
    } else {
      cand.push_back(0);
    }
    problem.values.push_back(in_economy(economy, i) ? models[i].values : std::vector<double>(space->size(), 0.0));
    problem.candidates.push_back(std::move(cand));
  }
  std::optional<AllocationSolution> sol;
  try {
    sol = solve_exact(problem, node_budget);
  } catch (const ExactOracleUnavailable&) {
    sol = solve_local_search(problem, seed);
  }
  if (!sol) throw NoFeasibleQuery("no feasible allocation respects the exclusions");
  return {to_allocation(*space, sol->choice), sol->value, sol->exact};
}

// ---------------------------------------------------------------------------

std::vector<double> vcg_payments(const std::vector<BidderReports>& reports, const Capacities& c,
                                 const Allocation& a) {
  check_reports(reports, c);
  const std::size_t n = reports.size();
  if (a.size() != n) throw InvalidInput("allocation size differs from bidder count");
  std::vector<double> own(n);
  for (std::size_t i = 0; i < n; ++i) own[i] = inferred_value(reports[i], a[i]);
  std::vector<double> pi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Economy without(n, true);
    without[i] = false;
    const double marginal = solve_wdp(reports, c, without).inferred_scw;
    double others = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others += own[j];
    pi[i] = std::max(0.0, marginal - others);
  }
  return pi;
}

std::vector<double> vcg_payments(const std::vector<BidderReports>& reports, const Capacities& c) {
  return vcg_payments(reports, c, solve_wdp(reports, c).allocation);
}

CoreSystem core_constraints(const std::vector<BidderReports>& reports, const Allocation& a, const Capacities& c) {
  check_reports(reports, c);
  const std::size_t n = reports.size();
  if (n > kMaxCoreBidders)
    throw InvalidInput("core constraints enumerate 2^n coalitions; n = " + std::to_string(n) + " exceeds " +
                       std::to_string(kMaxCoreBidders));
  if (a.size() != n) throw InvalidInput("allocation size differs from bidder count");
  CoreSystem sys;
  sys.bidders = n;
  std::vector<double> own(n);
  for (std::size_t i = 0; i < n; ++i) own[i] = inferred_value(reports[i], a[i]);
  sys.upper = own;
  const std::size_t full = (std::size_t{1} << n) - 1;
  for (std::size_t mask = 0; mask < full; ++mask) {
    CoreConstraint k;
    Economy e(n, false);
    double held = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) {
        k.coalition.push_back(i);
        e[i] = true;
        held += own[i];
      }
    k.rhs = mask == 0 ? 0.0 : solve_wdp(reports, c, e).inferred_scw - held;
    sys.constraints.push_back(std::move(k));
  }
  return sys;
}

std::vector<double> min_revenue_core(const CoreSystem& sys) {
  const std::size_t n = sys.bidders;
  // Dual of  min 1^T pi  s.t.  G pi >= h, -pi >= -u, pi >= 0.
  std::vector<const CoreConstraint*> active;
  for (const auto& k : sys.constraints)
    if (k.rhs > 0.0) active.push_back(&k);
  const std::size_t vars = active.size() + n;
  std::vector<std::vector<double>> A(n, std::vector<double>(vars, 0.0));
  std::vector<double> obj(vars, 0.0);
  for (std::size_t k = 0; k < active.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) A[i][k] = 1.0;
    for (std::size_t i : active[k]->coalition) A[i][k] = 0.0;
    obj[k] = active[k]->rhs;
  }
  for (std::size_t i = 0; i < n; ++i) {
    A[i][active.size() + i] = -1.0;
    obj[active.size() + i] = -sys.upper[i];
  }
  const auto duals = simplex_duals(A, std::vector<double>(n, 1.0), obj);
  if (!duals) throw AuctionError("revealed core is empty");
  std::vector<double> pi = *duals;
  for (std::size_t i = 0; i < n; ++i) pi[i] = std::clamp(pi[i], 0.0, sys.upper[i]);
  return pi;
}

std::vector<double> nearest_in_core(const CoreSystem& sys, const std::vector<double>& target,
                                    const std::vector<double>& start) {
  const std::size_t n = sys.bidders;
  if (n == 0) return {};
  const auto rows = inequality_rows(sys);
  constexpr double tol = 1e-10;

  std::vector<double> pi = start;
  // Working set: index -1 is the revenue equality.
  std::vector<long> work{-1};
  const std::vector<double> ones(n, 1.0);
  auto row_of = [&](long k) -> const std::vector<double>& {
    return k < 0 ? ones : rows[static_cast<std::size_t>(k)].g;
  };
  auto independent_with = [&](long k) {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(work.size() + 1), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r <= work.size(); ++r) {
      const auto& g = row_of(r < work.size() ? work[r] : k);
      for (std::size_t i = 0; i < n; ++i) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = g[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-10);
    return static_cast<std::size_t>(lu.rank()) == work.size() + 1;
  };
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (std::abs(dot(rows[k].g, pi) - rows[k].h) <= 1e-9 && work.size() < n &&
        independent_with(static_cast<long>(k)))
      work.push_back(static_cast<long>(k));

  for (int iter = 0; iter < 10000; ++iter) {
    const auto w = static_cast<Eigen::Index>(work.size());
    Eigen::MatrixXd A(w, static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < w; ++r) {
      const auto& g = row_of(work[static_cast<std::size_t>(r)]);
      for (std::size_t i = 0; i < n; ++i) A(r, static_cast<Eigen::Index>(i)) = g[i];
    }
    Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) resid(static_cast<Eigen::Index>(i)) = pi[i] - target[i];
    const Eigen::VectorXd lambda = (A * A.transpose()).ldlt().solve(A * resid);
    const Eigen::VectorXd d = A.transpose() * lambda - resid;

    if (d.norm() <= 1e-12) {
      Eigen::Index worst = -1;
      double most_negative = -tol;
      for (Eigen::Index r = 1; r < w; ++r)
        if (lambda(r) < most_negative) {
          most_negative = lambda(r);
          worst = r;
        }
      if (worst < 0) break;
      work.erase(work.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    long blocking = -2;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (std::find(work.begin(), work.end(), static_cast<long>(k)) != work.end()) continue;
      double gd = 0.0;
      for (std::size_t i = 0; i < n; ++i) gd += rows[k].g[i] * d(static_cast<Eigen::Index>(i));
      if (gd >= -1e-14) continue;
      const double step = std::max(0.0, (rows[k].h - dot(rows[k].g, pi)) / gd);
      if (step < alpha) {
        alpha = step;
        blocking = static_cast<long>(k);
      }
    }
    for (std::size_t i = 0; i < n; ++i) pi[i] += alpha * d(static_cast<Eigen::Index>(i));
    if (blocking >= 0) work.push_back(blocking);
  }
  for (std::size_t i = 0; i < n; ++i) pi[i] = std::clamp(pi[i], 0.0, sys.upper[i]);
  return pi;
}

std::vector<double> vcg_nearest_payments(const std::vector<BidderReports>& reports, const Capacities& c,
                                         const Allocation& a) {
  const auto sys = core_constraints(reports, a, c);
  const auto stage1 = min_revenue_core(sys);
  return nearest_in_core(sys, vcg_payments(reports, c, a), stage1);
}

std::vector<double> vcg_nearest_payments(const std::vector<BidderReports>& reports, const Capacities& c) {
  return vcg_nearest_payments(reports, c, solve_wdp(reports, c).allocation);
}

std::vector<double> compute_payments(PaymentRule rule, const std::vector<BidderReports>& reports,
                                     const Capacities& c, const Allocation& a) {
  switch (rule) {
    case PaymentRule::vcg: return vcg_payments(reports, c, a);
    case PaymentRule::vcg_nearest: return vcg_nearest_payments(reports, c, a);
    case PaymentRule::zero: return std::vector<double>(reports.size(), 0.0);
  }
  return {};
}

// ---------------------------------------------------------------------------

bool check_revealed_preference(const ValueReport& bid, const std::vector<DemandReport>& clock,
                               const std::map<Bundle, double>& final_bids, ActivityMode mode) {
  if (clock.empty()) return true;
  const std::size_t first = mode == ActivityMode::final_cap ? clock.size() - 1 : 0;
  for (std::size_t r = first; r < clock.size(); ++r) {
    const auto& round = clock[r];
    if (round.bundle.size() != bid.bundle.size()) throw InvalidInput("bid/clock dimension mismatch");
    double anchor;
    if (auto it = final_bids.find(round.bundle); it != final_bids.end())
      anchor = it->second;
    else if (round.bundle == bid.bundle)
      anchor = bid.value;
    else
      throw InvalidInput("no final bid for clock bundle " + to_string(round.bundle));
    const double cap = anchor + round.prices.price_of(bid.bundle) - round.prices.price_of(round.bundle);
    if (bid.value > cap + kCurrencyTol) return false;
  }
  return true;
}

}  // namespace auctionlab
