#include "auctionlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace auctionlab {
namespace {

void for_each_buffer(MvnnParams& a, const std::function<void(std::vector<double>&, bool)>& f) {
  for (auto& l : a.hidden) {
    f(l.weights, true);
    f(l.bias, false);
  }
  f(a.output, true);
  f(a.skip, true);
}

struct Stepper {
  Stepper(const MvnnParams& like, const TrainHyperparams& hp, double l2_scale)
      : hp_(hp), l2_(hp.l2 * l2_scale), m_(zero_like(like)), v_(zero_like(like)) {}

  void step(MvnnParams& params, MvnnParams& grad) {
    ++t_;
    add_l2(params, grad);
    if (hp_.optimizer == Optimizer::sgd) {
      apply(params, grad, [&](double& w, double g, double&, double&) { w -= hp_.learning_rate * g; });
    } else {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double c1 = 1.0 - std::pow(b1, t_);
      const double c2 = 1.0 - std::pow(b2, t_);
      apply(params, grad, [&](double& w, double g, double& m, double& v) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        w -= hp_.learning_rate * (m / c1) / (std::sqrt(v / c2) + eps);
      });
    }
    project_in_place(params);
  }

private:
  void add_l2(const MvnnParams& params, MvnnParams& grad) const {
    if (l2_ == 0.0) return;
    auto add = [&](const std::vector<double>& w, std::vector<double>& g) {
      for (std::size_t k = 0; k < w.size(); ++k) g[k] += 2.0 * l2_ * w[k];
    };
    for (std::size_t k = 0; k < params.hidden.size(); ++k) add(params.hidden[k].weights, grad.hidden[k].weights);
    add(params.output, grad.output);
    add(params.skip, grad.skip);
  }

  template <class F>
  void apply(MvnnParams& params, MvnnParams& grad, F&& f) {
    auto one = [&](std::vector<double>& w, std::vector<double>& g, std::vector<double>& m, std::vector<double>& v) {
      for (std::size_t k = 0; k < w.size(); ++k) f(w[k], g[k], m[k], v[k]);
    };
    for (std::size_t k = 0; k < params.hidden.size(); ++k) {
      one(params.hidden[k].weights, grad.hidden[k].weights, m_.hidden[k].weights, v_.hidden[k].weights);
      one(params.hidden[k].bias, grad.hidden[k].bias, m_.hidden[k].bias, v_.hidden[k].bias);
    }
    one(params.output, grad.output, m_.output, v_.output);
    one(params.skip, grad.skip, m_.skip, v_.skip);
  }

  const TrainHyperparams& hp_;
  double l2_;
  MvnnParams m_, v_;
  long t_ = 0;
};

void clear(MvnnParams& g) {
  for_each_buffer(g, [](std::vector<double>& b, bool) { std::fill(b.begin(), b.end(), 0.0); });
}

double training_scale(const BidderReports& reports) {
  double s = 0.0;
  for (const auto& r : reports.vq()) s = std::max(s, r.value);
  for (const auto& r : reports.dq()) s = std::max(s, r.prices.price_of(r.bundle));
  if (s > 0.0) return s;
  for (const auto& r : reports.dq()) {
    double full = 0.0;
    for (double p : r.prices.values()) full += p;
    s = std::max(s, full);
  }
  return s > 0.0 ? s : 1.0;
}

}  // namespace

void TrainHyperparams::validate() const {
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be > 0");
  if (!(l2 >= 0.0)) throw InvalidInput("l2 must be >= 0");
  if (cache_frequency < 1) throw InvalidInput("cache_frequency must be >= 1");
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
}

DqLossResult dq_loss(const MvnnParams& params, const MvnnArch& arch, const DemandReport& r) {
  auto space = std::make_shared<const BundleSpace>(arch.capacities);
  const auto table = model_table(params, arch, space);
  const auto prices = space->price_table(r.prices);
  const std::size_t hat = argmax_utility_index(table.values, prices);
  const std::size_t rep = space->index(r.bundle);
  const double gap = (table[hat] - prices[hat]) - (table[rep] - prices[rep]);
  return {std::max(0.0, gap), space->bundle(hat)};
}

double vq_loss(const MvnnParams& params, const MvnnArch& arch, const ValueReport& r) {
  const double d = forward(params, arch, r.bundle) - r.value;
  return d * d;
}

double data_loss(const MvnnParams& params, const MvnnArch& arch, const BidderReports& reports) {
  if (reports.empty()) return 0.0;
  auto space = std::make_shared<const BundleSpace>(arch.capacities);
  const auto table = model_table(params, arch, space);
  double loss = 0.0;
  for (const auto& r : reports.dq()) {
    const auto prices = space->price_table(r.prices);
    const std::size_t hat = argmax_utility_index(table.values, prices);
    const std::size_t rep = space->index(r.bundle);
    loss += std::max(0.0, (table[hat] - prices[hat]) - (table[rep] - prices[rep]));
  }
  for (const auto& r : reports.vq()) {
    const double d = table.at(r.bundle) - r.value;
    loss += d * d;
  }
  return loss;
}

TrainResult mixed_train(const BidderReports& reports, const MvnnArch& arch, const TrainHyperparams& hp,
                        const StepObserver& observer) {
  hp.validate();
  arch.validate();
  MvnnParams params = init(arch, hp.seed);
  if (reports.empty()) return {params, 0.0};

  const double scale = training_scale(reports);
  const auto space = std::make_shared<const BundleSpace>(arch.capacities);
  const auto d = arch.normalization();
  const std::size_t m = arch.input_dim();
  auto input_of = [&](std::size_t idx) {
    std::vector<double> in(m);
    for (std::size_t j = 0; j < m; ++j) in[j] = space->digit(idx, j) * d[j];
    return in;
  };

  struct Dq {
    std::size_t reported;
    std::vector<double> prices;  // normalized bundle prices
    std::size_t predicted = 0;
  };
  std::vector<Dq> dqs;
  for (const auto& r : reports.dq()) {
    auto prices = space->price_table(r.prices);
    for (auto& p : prices) p /= scale;
    dqs.push_back({space->index(r.bundle), std::move(prices)});
  }
  struct Vq {
    std::vector<double> input;
    double target;
  };
  std::vector<Vq> vqs;
  for (const auto& r : reports.vq()) vqs.push_back({input_of(space->index(r.bundle)), r.value / scale});

  Stepper stepper(params, hp, 1.0 / static_cast<double>(reports.size()));
  MvnnParams grad = zero_like(params);
  std::mt19937_64 rng(hp.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(vqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    if (!dqs.empty()) {
      std::vector<double> table;
      if (epoch % hp.cache_frequency == 0) {
        table = value_table(params, arch, *space);
        for (auto& q : dqs) q.predicted = argmax_utility_index(table, q.prices);
      }
      for (const auto& q : dqs) {
        clear(grad);
        if (q.predicted != q.reported) {
          const auto in_hat = input_of(q.predicted);
          const auto in_rep = input_of(q.reported);
          const double m_hat = accumulate_gradient(params, arch, in_hat, 1.0, grad);
          const double m_rep = accumulate_gradient(params, arch, in_rep, -1.0, grad);
          const double gap = (m_hat - q.prices[q.predicted]) - (m_rep - q.prices[q.reported]);
          if (gap <= 0.0) clear(grad);
        }
        stepper.step(params, grad);
        if (observer) observer(params);
      }
    }
    if (!vqs.empty()) {
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t batch = static_cast<std::size_t>(hp.batch_size);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(order.size(), start + batch);
        clear(grad);
        for (std::size_t k = start; k < end; ++k) {
          const auto& q = vqs[order[k]];
          const double pred = accumulate_gradient(params, arch, q.input, 0.0, grad);
          const double coef = 2.0 * (pred - q.target) / static_cast<double>(end - start);
          accumulate_gradient(params, arch, q.input, coef, grad);
        }
        stepper.step(params, grad);
        if (observer) observer(params);
      }
    }
  }
  params.output_scale = scale;
  return {params, data_loss(params, arch, reports)};
}

double report_magnitude(const BidderReports& reports) {
  if (reports.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : reports.vq()) s += r.value;
  for (const auto& r : reports.dq()) s += r.prices.price_of(r.bundle);
  return s / static_cast<double>(reports.size());
}

InconsistencyResult detect_inconsistency(const BidderReports& reports, const MvnnArch& arch,
                                         const TrainHyperparams& hp, int restarts) {
  if (restarts < 1) throw InvalidInput("restarts must be >= 1");
  InconsistencyResult res;
  res.restarts = restarts;
  res.threshold = 0.05 * report_magnitude(reports);
  if (reports.empty()) return res;
  res.min_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    TrainHyperparams h = hp;
    h.seed = hp.seed + static_cast<std::uint64_t>(r);
    res.min_loss = std::min(res.min_loss, mixed_train(reports, arch, h).loss);
  }
  res.inconsistent = res.min_loss > res.threshold;
  return res;
}

std::string to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

nlohmann::json to_json(const TrainHyperparams& hp) {
  return {{"epochs", hp.epochs},
          {"learning_rate", hp.learning_rate},
          {"l2", hp.l2},
          {"cache_frequency", hp.cache_frequency},
          {"batch_size", hp.batch_size},
          {"seed", hp.seed},
          {"optimizer", to_string(hp.optimizer)}};
}

TrainHyperparams train_hyperparams_from_json(const nlohmann::json& j, TrainHyperparams hp) {
  try {
    hp.epochs = j.value("epochs", hp.epochs);
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    hp.l2 = j.value("l2", hp.l2);
    hp.cache_frequency = j.value("cache_frequency", hp.cache_frequency);
    hp.batch_size = j.value("batch_size", hp.batch_size);
    hp.seed = j.value("seed", hp.seed);
    if (j.contains("optimizer")) {
      const auto o = j.at("optimizer").get<std::string>();
      if (o == "sgd")
        hp.optimizer = Optimizer::sgd;
      else if (o == "adam")
        hp.optimizer = Optimizer::adam;
      else
        throw InvalidInput("training.optimizer: expected 'sgd' or 'adam'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("training hyperparameters: ") + e.what());
  }
  hp.validate();
  return hp;
}

}  // namespace auctionlab
