#include "auctionlab/mvnn.hpp"

#include <algorithm>
#include <random>

namespace auctionlab {
namespace {

inline double brelu(double z, double t) { return std::min(t, std::max(0.0, z)); }

void check_shape(const MvnnParams& params, const MvnnArch& arch) {
  if (params.hidden.size() != arch.hidden.size()) throw InvalidInput("parameter depth differs from architecture");
  std::size_t in = arch.input_dim();
  for (std::size_t k = 0; k < arch.hidden.size(); ++k) {
    const auto& l = params.hidden[k];
    if (l.in != in || l.out != arch.hidden[k] || l.weights.size() != l.in * l.out || l.bias.size() != l.out)
      throw InvalidInput("layer " + std::to_string(k) + " shape differs from architecture");
    in = l.out;
  }
  if (params.output.size() != in) throw InvalidInput("output layer shape differs from architecture");
  if (params.skip.size() != (arch.skip ? arch.input_dim() : 0))
    throw InvalidInput("skip weights differ from architecture");
}

// Forward pass keeping every layer's pre-activations and activations.
struct Activations {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> h;  // h[0] is the input
};

double forward_raw(const MvnnParams& params, const MvnnArch& arch, std::span<const double> input,
                   Activations* keep) {
  std::vector<double> h(input.begin(), input.end());
  if (keep) keep->h.push_back(h);
  for (std::size_t k = 0; k < params.hidden.size(); ++k) {
    const auto& l = params.hidden[k];
    std::vector<double> z(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double s = l.bias[r];
      const double* w = l.weights.data() + r * l.in;
      for (std::size_t c = 0; c < l.in; ++c) s += w[c] * h[c];
      z[r] = s;
    }
    std::vector<double> next(l.out);
    for (std::size_t r = 0; r < l.out; ++r) next[r] = brelu(z[r], arch.cutoffs[k]);
    if (keep) {
      keep->z.push_back(std::move(z));
      keep->h.push_back(next);
    }
    h = std::move(next);
  }
  double out = 0.0;
  for (std::size_t c = 0; c < h.size(); ++c) out += params.output[c] * h[c];
  for (std::size_t c = 0; c < params.skip.size(); ++c) out += params.skip[c] * input[c];
  return out;
}

}  // namespace

MvnnArch MvnnArch::make(const Capacities& c, std::vector<std::size_t> hidden, double cutoff, bool skip) {
  MvnnArch a;
  a.capacities = c;
  a.cutoffs.assign(hidden.size(), cutoff);
  a.hidden = std::move(hidden);
  a.skip = skip;
  a.validate();
  return a;
}

std::vector<double> MvnnArch::normalization() const {
  std::vector<double> d(input_dim());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = 1.0 / capacities[j];
  return d;
}

void MvnnArch::validate() const {
  if (capacities.size() == 0) throw InvalidInput("architecture needs capacities");
  if (cutoffs.size() != hidden.size()) throw InvalidInput("one bReLU cutoff per hidden layer required");
  for (std::size_t w : hidden)
    if (w < 1) throw InvalidInput("hidden widths must be >= 1");
  for (double t : cutoffs)
    if (!(t > 0.0)) throw InvalidInput("bReLU cutoffs must be > 0");
}

MvnnParams init(const MvnnArch& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  MvnnParams p;
  std::size_t in = arch.input_dim();
  for (std::size_t width : arch.hidden) {
    DenseLayer l{in, width, std::vector<double>(in * width), std::vector<double>(width, 0.0)};
    std::uniform_real_distribution<double> u(0.0, 2.0 / static_cast<double>(in));
    for (auto& w : l.weights) w = u(rng);
    p.hidden.push_back(std::move(l));
    in = width;
  }
  std::uniform_real_distribution<double> u(0.0, 2.0 / static_cast<double>(in));
  p.output.resize(in);
  for (auto& w : p.output) w = u(rng);
  if (arch.skip) {
    std::uniform_real_distribution<double> us(0.0, 1.0 / static_cast<double>(arch.input_dim()));
    p.skip.resize(arch.input_dim());
    for (auto& w : p.skip) w = us(rng);
  }
  return p;
}

void project_in_place(MvnnParams& params) {
  for (auto& l : params.hidden) {
    for (auto& w : l.weights) w = std::max(w, 0.0);
    for (auto& b : l.bias) b = std::min(b, 0.0);
  }
  for (auto& w : params.output) w = std::max(w, 0.0);
  for (auto& w : params.skip) w = std::max(w, 0.0);
  params.output_scale = std::max(params.output_scale, 0.0);
}

MvnnParams project_params(MvnnParams params) {
  project_in_place(params);
  return params;
}

bool satisfies_sign_constraints(const MvnnParams& params) {
  auto nonneg = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double w) { return w >= 0.0; });
  };
  for (const auto& l : params.hidden) {
    if (!nonneg(l.weights)) return false;
    if (!std::all_of(l.bias.begin(), l.bias.end(), [](double b) { return b <= 0.0; })) return false;
  }
  return nonneg(params.output) && nonneg(params.skip) && params.output_scale >= 0.0;
}

std::vector<double> normalized_input(const MvnnArch& arch, const Bundle& x) {
  x.check_within(arch.capacities);
  std::vector<double> in(x.size());
  for (std::size_t j = 0; j < in.size(); ++j) in[j] = static_cast<double>(x[j]) / arch.capacities[j];
  return in;
}

double forward(const MvnnParams& params, const MvnnArch& arch, const Bundle& x) {
  check_shape(params, arch);
  const auto in = normalized_input(arch, x);
  return params.output_scale * forward_raw(params, arch, in, nullptr);
}

std::vector<double> value_table(const MvnnParams& params, const MvnnArch& arch, const BundleSpace& space) {
  check_shape(params, arch);
  if (space.capacities() != arch.capacities) throw InvalidInput("bundle space differs from architecture");
  const std::size_t m = arch.input_dim();
  const auto d = arch.normalization();
  std::vector<double> out(space.size());
  std::vector<double> in(m);
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    for (std::size_t j = 0; j < m; ++j) in[j] = space.digit(idx, j) * d[j];
    out[idx] = params.output_scale * forward_raw(params, arch, in, nullptr);
  }
  return out;
}

ValueTable model_table(const MvnnParams& params, const MvnnArch& arch, SharedSpace space) {
  auto values = value_table(params, arch, *space);
  return ValueTable{std::move(space), std::move(values)};
}

Bundle argmax_utility(const MvnnParams& params, const MvnnArch& arch, const PriceVector& p) {
  if (p.size() != arch.input_dim()) throw InvalidInput("price vector dimension mismatch");
  auto space = std::make_shared<const BundleSpace>(arch.capacities);
  const auto table = model_table(params, arch, space);
  return space->bundle(argmax_utility_index(table, p));
}

MvnnParams zero_like(const MvnnParams& params) {
  MvnnParams g = params;
  for (auto& l : g.hidden) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  std::fill(g.output.begin(), g.output.end(), 0.0);
  std::fill(g.skip.begin(), g.skip.end(), 0.0);
  g.output_scale = 0.0;
  return g;
}

double accumulate_gradient(const MvnnParams& params, const MvnnArch& arch, std::span<const double> input,
                           double coef, MvnnParams& grad) {
  Activations act;
  const double out = forward_raw(params, arch, input, &act);
  const auto& top = act.h.back();
  for (std::size_t c = 0; c < top.size(); ++c) grad.output[c] += coef * top[c];
  for (std::size_t c = 0; c < params.skip.size(); ++c) grad.skip[c] += coef * input[c];
  if (coef == 0.0 || params.hidden.empty()) return out;

  std::vector<double> delta(params.output.size());
  for (std::size_t c = 0; c < delta.size(); ++c) delta[c] = coef * params.output[c];
  for (std::size_t k = params.hidden.size(); k-- > 0;) {
    const auto& l = params.hidden[k];
    auto& gl = grad.hidden[k];
    const auto& z = act.z[k];
    const auto& h_in = act.h[k];
    std::vector<double> back(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      if (!(z[r] > 0.0 && z[r] < arch.cutoffs[k])) continue;
      const double d = delta[r];
      if (d == 0.0) continue;
      gl.bias[r] += d;
      double* gw = gl.weights.data() + r * l.in;
      const double* w = l.weights.data() + r * l.in;
      for (std::size_t c = 0; c < l.in; ++c) {
        gw[c] += d * h_in[c];
        back[c] += d * w[c];
      }
    }
    delta = std::move(back);
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const MvnnArch& arch) {
  return {{"capacities", arch.capacities.values()},
          {"input_dim", arch.input_dim()},
          {"hidden", arch.hidden},
          {"cutoffs", arch.cutoffs},
          {"skip", arch.skip},
          {"normalization", arch.normalization()}};
}

MvnnArch arch_from_json(const nlohmann::json& j) {
  try {
    MvnnArch a;
    a.capacities = Capacities(j.at("capacities").get<std::vector<int>>());
    a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    a.cutoffs = j.at("cutoffs").get<std::vector<double>>();
    a.skip = j.value("skip", false);
    a.validate();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed architecture: ") + e.what());
  }
}

nlohmann::json checkpoint(const MvnnParams& params, const MvnnArch& arch) {
  check_shape(params, arch);
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& l : params.hidden) {
    weights.push_back(l.weights);
    biases.push_back(l.bias);
  }
  weights.push_back(params.output);
  return {{"arch", to_json(arch)},
          {"weights", weights},
          {"biases", biases},
          {"skip", params.skip},
          {"output_scale", params.output_scale}};
}

MvnnParams params_from_checkpoint(const nlohmann::json& j, const MvnnArch& arch) {
  try {
    MvnnParams p;
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != arch.hidden.size() + 1 || biases.size() != arch.hidden.size())
      throw InvalidInput("checkpoint depth differs from architecture");
    std::size_t in = arch.input_dim();
    for (std::size_t k = 0; k < arch.hidden.size(); ++k) {
      p.hidden.push_back(DenseLayer{in, arch.hidden[k], weights[k].get<std::vector<double>>(),
                                    biases[k].get<std::vector<double>>()});
      in = arch.hidden[k];
    }
    p.output = weights.back().get<std::vector<double>>();
    p.skip = j.value("skip", std::vector<double>{});
    p.output_scale = j.value("output_scale", 1.0);
    check_shape(p, arch);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace auctionlab
