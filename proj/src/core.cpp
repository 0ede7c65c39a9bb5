#include "auctionlab/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace auctionlab {

EnumerationTooLarge::EnumerationTooLarge(double requested, std::size_t cap)
    : AuctionError("bundle enumeration of " + std::to_string(static_cast<long double>(requested)) +
                   " bundles exceeds the enumeration cap of " + std::to_string(cap)),
      cap_(cap) {}

Capacities::Capacities(std::vector<int> caps) : caps_(std::move(caps)) {
  if (caps_.empty()) throw InvalidInput("capacities must cover at least one item");
  for (int c : caps_)
    if (c < 1) throw InvalidInput("every capacity must be >= 1");
}

int Capacities::total() const noexcept { return std::accumulate(caps_.begin(), caps_.end(), 0); }

bool Bundle::empty_bundle() const noexcept {
  return std::all_of(counts_.begin(), counts_.end(), [](int v) { return v == 0; });
}

int Bundle::item_count() const noexcept { return std::accumulate(counts_.begin(), counts_.end(), 0); }

bool Bundle::within(const Capacities& c) const noexcept {
  if (counts_.size() != c.size()) return false;
  for (std::size_t j = 0; j < counts_.size(); ++j)
    if (counts_[j] < 0 || counts_[j] > c[j]) return false;
  return true;
}

void Bundle::check_within(const Capacities& c) const {
  if (counts_.size() != c.size())
    throw InvalidInput("bundle has " + std::to_string(counts_.size()) + " items, capacities have " +
                       std::to_string(c.size()));
  if (!within(c)) throw InvalidInput("bundle " + to_string(*this) + " exceeds capacities");
}

bool Bundle::leq(const Bundle& other) const {
  if (size() != other.size()) throw InvalidInput("bundle dimension mismatch");
  for (std::size_t j = 0; j < size(); ++j)
    if (counts_[j] > other.counts_[j]) return false;
  return true;
}

std::string to_string(const Bundle& x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t j = 0; j < x.size(); ++j) os << (j ? "," : "") << x[j];
  os << ')';
  return os.str();
}

PriceVector::PriceVector(std::vector<double> prices) : prices_(std::move(prices)) {
  for (double p : prices_)
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("prices must be finite and non-negative");
}

double PriceVector::price_of(const Bundle& x) const {
  if (x.size() != prices_.size()) throw InvalidInput("price/bundle dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < prices_.size(); ++j) s += prices_[j] * x[j];
  return s;
}

void BidderReports::add_dq(DemandReport r) {
  if (r.bundle.size() != r.prices.size()) throw InvalidInput("demand report dimension mismatch");
  if (!dq_.empty() && dq_.front().bundle.size() != r.bundle.size())
    throw InvalidInput("demand report dimension differs from earlier reports");
  dq_.push_back(std::move(r));
}

void BidderReports::add_vq(ValueReport r) {
  if (!(r.value >= 0.0)) throw InvalidInput("reported values must be non-negative");
  if (const ValueReport* known = find_vq(r.bundle)) {
    if (known->value != r.value)
      throw InconsistentReports("conflicting value reports for bundle " + to_string(r.bundle));
    return;
  }
  vq_.push_back(std::move(r));
}

const ValueReport* BidderReports::find_vq(const Bundle& x) const {
  for (const auto& r : vq_)
    if (r.bundle == x) return &r;
  return nullptr;
}

bool BidderReports::has_vq(const Bundle& x) const { return find_vq(x) != nullptr; }

Allocation Allocation::empty(std::size_t n, std::size_t m) {
  return Allocation(std::vector<Bundle>(n, Bundle::zero(m)));
}

// ---------------------------------------------------------------------------

BundleSpace::BundleSpace(Capacities caps, std::size_t cap) : caps_(std::move(caps)) {
  const double count = bundle_count(caps_);
  if (count > static_cast<double>(cap)) throw EnumerationTooLarge(count, cap);
  size_ = static_cast<std::size_t>(count);
  const std::size_t m = caps_.size();
  strides_.assign(m, 1);
  for (std::size_t j = m; j-- > 1;) strides_[j - 1] = strides_[j] * static_cast<std::size_t>(caps_[j] + 1);

  if (size_ * m <= (std::size_t{1} << 24)) {
    digits_.resize(size_ * m);
    std::vector<int> cur(m, 0);
    for (std::size_t idx = 0; idx < size_; ++idx) {
      std::copy(cur.begin(), cur.end(), digits_.begin() + static_cast<std::ptrdiff_t>(idx * m));
      for (std::size_t j = m; j-- > 0;) {
        if (++cur[j] <= caps_[j]) break;
        cur[j] = 0;
      }
    }
  }
}

std::size_t BundleSpace::index(const Bundle& x) const {
  x.check_within(caps_);
  std::size_t idx = 0;
  for (std::size_t j = 0; j < dims(); ++j) idx += static_cast<std::size_t>(x[j]) * strides_[j];
  return idx;
}

int BundleSpace::digit(std::size_t idx, std::size_t j) const {
  if (!digits_.empty()) return digits_[idx * dims() + j];
  return static_cast<int>((idx / strides_[j]) % static_cast<std::size_t>(caps_[j] + 1));
}

std::span<const int> BundleSpace::digits(std::size_t idx) const {
  if (digits_.empty()) throw AuctionError("digit table unavailable for this bundle space");
  return {digits_.data() + idx * dims(), dims()};
}

Bundle BundleSpace::bundle(std::size_t idx) const {
  std::vector<int> x(dims());
  for (std::size_t j = 0; j < dims(); ++j) x[j] = digit(idx, j);
  return Bundle(std::move(x));
}

bool BundleSpace::fits(std::size_t idx, std::size_t outer) const {
  for (std::size_t j = 0; j < dims(); ++j)
    if (digit(idx, j) > digit(outer, j)) return false;
  return true;
}

double BundleSpace::price_of(std::size_t idx, const PriceVector& p) const {
  double s = 0.0;
  for (std::size_t j = 0; j < dims(); ++j) s += p[j] * digit(idx, j);
  return s;
}

std::vector<double> BundleSpace::price_table(const PriceVector& p) const {
  if (p.size() != dims()) throw InvalidInput("price vector dimension mismatch");
  std::vector<double> out(size_);
  for (std::size_t idx = 0; idx < size_; ++idx) out[idx] = price_of(idx, p);
  return out;
}

// ---------------------------------------------------------------------------

double inferred_value(const BidderReports& reports, const Bundle& x) {
  for (const auto& r : reports.vq()) {
    if (r.bundle.size() != x.size()) throw InvalidInput("bundle/report dimension mismatch");
    if (r.bundle == x) return r.value;
  }
  double best = 0.0;
  for (const auto& r : reports.dq()) {
    if (r.bundle.size() != x.size()) throw InvalidInput("bundle/report dimension mismatch");
    if (r.bundle == x) best = std::max(best, r.prices.price_of(x));
  }
  return best;
}

bool is_feasible(const Allocation& a, const Capacities& c) {
  std::vector<long> used(c.size(), 0);
  for (const auto& b : a.bundles()) {
    if (b.size() != c.size()) throw InvalidInput("allocation bundle dimension mismatch");
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (b[j] < 0) return false;
      used[j] += b[j];
    }
  }
  for (std::size_t j = 0; j < c.size(); ++j)
    if (used[j] > c[j]) return false;
  return true;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double bundle_count(const Capacities& c) {
  double n = 1.0;
  for (int v : c.values()) n *= static_cast<double>(v + 1);
  return n;
}

std::vector<Bundle> enumerate_bundles(const Capacities& c, std::size_t cap) {
  BundleSpace space(c, cap);
  std::vector<Bundle> out;
  out.reserve(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx) out.push_back(space.bundle(idx));
  return out;
}

std::size_t argmax_utility_index(std::span<const double> values, std::span<const double> prices) {
  std::size_t best = 0;
  double best_u = values[0] - prices[0];
  for (std::size_t idx = 1; idx < values.size(); ++idx) {
    const double u = values[idx] - prices[idx];
    if (u > best_u) {
      best_u = u;
      best = idx;
    }
  }
  return best;
}

std::size_t argmax_utility_index(const ValueTable& v, const PriceVector& p) {
  const auto prices = v.space->price_table(p);
  return argmax_utility_index(v.values, prices);
}

}  // namespace auctionlab
