#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "auctionlab/core.hpp"

namespace auctionlab {

/// Layout of a monotone value network over bundles of a fixed capacity
/// vector. Inputs are scaled by D = diag(1/c_j) before the first layer.
struct MvnnArch {
  Capacities capacities;
  std::vector<std::size_t> hidden;  // d^1..d^{K-1}; may be empty (linear model)
  std::vector<double> cutoffs;      // bReLU cap per hidden layer
  bool skip = false;

  static MvnnArch make(const Capacities& c, std::vector<std::size_t> hidden, double cutoff = 1.0,
                       bool skip = false);

  std::size_t input_dim() const noexcept { return capacities.size(); }
  std::vector<double> normalization() const;
  void validate() const;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MvnnParams {
  std::vector<DenseLayer> hidden;
  std::vector<double> output;  // weights of the final linear layer
  std::vector<double> skip;    // empty unless the arch has a skip map
  /// Fixed non-negative factor applied to the network output (not trained).
  double output_scale = 1.0;

  friend bool operator==(const MvnnParams&, const MvnnParams&) = default;
};

MvnnParams init(const MvnnArch& arch, std::uint64_t seed);

/// Clamp weights to >= 0 and biases to <= 0.
MvnnParams project_params(MvnnParams params);
void project_in_place(MvnnParams& params);
bool satisfies_sign_constraints(const MvnnParams& params);

double forward(const MvnnParams& params, const MvnnArch& arch, const Bundle& x);

/// forward() for every bundle of `space`, in index order.
std::vector<double> value_table(const MvnnParams& params, const MvnnArch& arch, const BundleSpace& space);
ValueTable model_table(const MvnnParams& params, const MvnnArch& arch, SharedSpace space);

/// Exact predicted-utility maximizer by enumeration (lexicographic ties).
Bundle argmax_utility(const MvnnParams& params, const MvnnArch& arch, const PriceVector& p);

/// Parameter-shaped container for gradients.
MvnnParams zero_like(const MvnnParams& params);

/// grad += coef * d forward(x) / d params, ignoring output_scale.
/// Returns the unscaled network output at x.
double accumulate_gradient(const MvnnParams& params, const MvnnArch& arch, std::span<const double> input,
                           double coef, MvnnParams& grad);

/// D x as a dense vector.
std::vector<double> normalized_input(const MvnnArch& arch, const Bundle& x);

nlohmann::json to_json(const MvnnArch& arch);
MvnnArch arch_from_json(const nlohmann::json& j);
/// Checkpoint: {arch, weights, biases, skip, output_scale}.
nlohmann::json checkpoint(const MvnnParams& params, const MvnnArch& arch);
MvnnParams params_from_checkpoint(const nlohmann::json& j, const MvnnArch& arch);

}  // namespace auctionlab
