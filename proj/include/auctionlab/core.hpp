#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace auctionlab {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class AuctionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public AuctionError {
public:
  using AuctionError::AuctionError;
};

class EnumerationTooLarge : public AuctionError {
public:
  EnumerationTooLarge(double requested, std::size_t cap);
  std::size_t cap() const noexcept { return cap_; }

private:
  std::size_t cap_;
};

class ExactOracleUnavailable : public AuctionError {
public:
  using AuctionError::AuctionError;
};

class NoFeasibleQuery : public AuctionError {
public:
  using AuctionError::AuctionError;
};

class InconsistentReports : public InvalidInput {
public:
  using InvalidInput::InvalidInput;
};

/// Default bound on the number of bundles any exact enumeration may visit.
inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 22;

/// Absolute tolerance for currency comparisons.
inline constexpr double kCurrencyTol = 1e-9;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Copies available of each item.
class Capacities {
public:
  Capacities() = default;
  explicit Capacities(std::vector<int> caps);
  Capacities(std::initializer_list<int> caps) : Capacities(std::vector<int>(caps)) {}

  std::size_t size() const noexcept { return caps_.size(); }
  int operator[](std::size_t j) const { return caps_[j]; }
  const std::vector<int>& values() const noexcept { return caps_; }
  int total() const noexcept;

  friend bool operator==(const Capacities&, const Capacities&) = default;

private:
  std::vector<int> caps_;
};

/// Integer item-count vector. Ordering is lexicographic.
class Bundle {
public:
  Bundle() = default;
  explicit Bundle(std::vector<int> counts) : counts_(std::move(counts)) {}
  Bundle(std::initializer_list<int> counts) : counts_(counts) {}

  static Bundle zero(std::size_t m) { return Bundle(std::vector<int>(m, 0)); }
  static Bundle full(const Capacities& c) { return Bundle(c.values()); }

  std::size_t size() const noexcept { return counts_.size(); }
  int operator[](std::size_t j) const { return counts_[j]; }
  const std::vector<int>& counts() const noexcept { return counts_; }
  bool empty_bundle() const noexcept;
  int item_count() const noexcept;

  /// Throws InvalidInput unless 0 <= x_j <= c_j for every item.
  void check_within(const Capacities& c) const;
  bool within(const Capacities& c) const noexcept;
  /// Componentwise x <= y.
  bool leq(const Bundle& other) const;

  friend bool operator==(const Bundle&, const Bundle&) = default;
  friend auto operator<=>(const Bundle&, const Bundle&) = default;

private:
  std::vector<int> counts_;
};

std::string to_string(const Bundle& x);

/// Linear per-copy item prices.
class PriceVector {
public:
  PriceVector() = default;
  explicit PriceVector(std::vector<double> prices);
  PriceVector(std::initializer_list<double> prices) : PriceVector(std::vector<double>(prices)) {}

  static PriceVector zero(std::size_t m) { return PriceVector(std::vector<double>(m, 0.0)); }

  std::size_t size() const noexcept { return prices_.size(); }
  double operator[](std::size_t j) const { return prices_[j]; }
  const std::vector<double>& values() const noexcept { return prices_; }

  /// <p, x>
  double price_of(const Bundle& x) const;

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

private:
  std::vector<double> prices_;
};

struct DemandReport {
  Bundle bundle;
  PriceVector prices;
};

struct ValueReport {
  Bundle bundle;
  double value = 0.0;
};

/// A bidder's elicited demand and value responses.
class BidderReports {
public:
  BidderReports() = default;

  const std::vector<DemandReport>& dq() const noexcept { return dq_; }
  const std::vector<ValueReport>& vq() const noexcept { return vq_; }
  bool empty() const noexcept { return dq_.empty() && vq_.empty(); }
  std::size_t size() const noexcept { return dq_.size() + vq_.size(); }

  void add_dq(DemandReport r);
  /// Duplicate bundles collapse; a conflicting value for a known bundle
  /// throws InconsistentReports.
  void add_vq(ValueReport r);

  bool has_vq(const Bundle& x) const;
  const ValueReport* find_vq(const Bundle& x) const;

private:
  std::vector<DemandReport> dq_;
  std::vector<ValueReport> vq_;
};

class Allocation {
public:
  Allocation() = default;
  explicit Allocation(std::vector<Bundle> bundles) : bundles_(std::move(bundles)) {}

  static Allocation empty(std::size_t n, std::size_t m);

  std::size_t size() const noexcept { return bundles_.size(); }
  const Bundle& operator[](std::size_t i) const { return bundles_[i]; }
  Bundle& operator[](std::size_t i) { return bundles_[i]; }
  const std::vector<Bundle>& bundles() const noexcept { return bundles_; }

  friend bool operator==(const Allocation&, const Allocation&) = default;
  friend auto operator<=>(const Allocation&, const Allocation&) = default;

private:
  std::vector<Bundle> bundles_;
};

// ---------------------------------------------------------------------------
// Bundle space
// ---------------------------------------------------------------------------

/// The finite set X of all bundles for given capacities, indexed in
/// lexicographic order (last item varies fastest). The index is linear in the
/// bundle: index(x) = sum_j x_j * stride_j.
class BundleSpace {
public:
  explicit BundleSpace(Capacities caps, std::size_t cap = kDefaultEnumerationCap);

  const Capacities& capacities() const noexcept { return caps_; }
  std::size_t dims() const noexcept { return caps_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(std::size_t j) const { return strides_[j]; }
  std::size_t full_index() const noexcept { return size_ - 1; }

  std::size_t index(const Bundle& x) const;
  Bundle bundle(std::size_t idx) const;
  int digit(std::size_t idx, std::size_t j) const;
  std::span<const int> digits(std::size_t idx) const;

  /// x(idx) <= x(outer) componentwise.
  bool fits(std::size_t idx, std::size_t outer) const;
  double price_of(std::size_t idx, const PriceVector& p) const;
  /// <p, x> for every bundle, in index order.
  std::vector<double> price_table(const PriceVector& p) const;

private:
  Capacities caps_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<int> digits_;  // size_ * dims(), row per bundle
};

using SharedSpace = std::shared_ptr<const BundleSpace>;

/// A value function tabulated over a bundle space (index order).
struct ValueTable {
  SharedSpace space;
  std::vector<double> values;

  double operator[](std::size_t idx) const { return values[idx]; }
  double at(const Bundle& x) const { return values[space->index(x)]; }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Largest lower bound on a bidder's value for `x` deducible from its
/// reports, without assuming monotonicity.
double inferred_value(const BidderReports& reports, const Bundle& x);

bool is_feasible(const Allocation& a, const Capacities& c);

/// Every bundle for capacities c in lexicographic order.
std::vector<Bundle> enumerate_bundles(const Capacities& c, std::size_t cap = kDefaultEnumerationCap);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Deterministic seed derivation (splitmix64 finalizer over a and b).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// prod_j (c_j + 1) as a double (no overflow).
double bundle_count(const Capacities& c);

/// Utility-maximizing bundle index of a tabulated value function; ties go to
/// the lexicographically smallest bundle.
std::size_t argmax_utility_index(const ValueTable& v, const PriceVector& p);

/// Same over precomputed bundle prices.
std::size_t argmax_utility_index(std::span<const double> values, std::span<const double> prices);

}  // namespace auctionlab
