// auctionlab command line: run, learn, verify, instance.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "auctionlab/lab.hpp"

namespace fs = std::filesystem;
using namespace auctionlab;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInvalidInput = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write " + path.string());
  f << text;
}

// --seed beats AUCTIONLAB_SEED, which beats the config file.
std::optional<std::uint64_t> seed_override(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("AUCTIONLAB_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw InvalidInput(std::string("AUCTIONLAB_SEED: not an unsigned integer: '") + env + "'");
    }
  }
  return std::nullopt;
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--seed", c.seed, "Master seed (overrides AUCTIONLAB_SEED and the config)");
  cmd->add_option("--out", c.out, out_help);
  cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

int cmd_run(const std::string& config, const Common& c) {
  auto cfg = experiment_config_from_json(read_json(config));
  if (auto s = seed_override(c.seed)) cfg.seed = *s;
  const fs::path out = c.out.empty() ? fs::path("results") : fs::path(c.out);
  const auto rows = run_experiment(cfg, out, c.jobs);
  std::cout << summary_csv(rows);
  return kOk;
}

int cmd_learn(const std::string& config, const Common& c) {
  auto cfg = learning_config_from_json(read_json(config));
  if (auto s = seed_override(c.seed)) cfg.spec.seed = *s;
  const auto csv = learning_csv(run_learning_experiment(cfg.spec, cfg.domain, cfg.arch, cfg.training, c.jobs));
  if (!c.out.empty()) write_text(fs::path(c.out) / "learning.csv", csv);
  std::cout << csv;
  return kOk;
}

int cmd_verify(VerifyOptions opts, const Common& c) {
  if (auto s = seed_override(c.seed)) opts.seed = *s;
  opts.jobs = c.jobs;
  const auto checks = run_verify(opts);
  std::string csv = "check,pass,detail\n";
  bool all = true;
  for (const auto& r : checks) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    csv += r.name + ',' + (r.pass ? "1" : "0") + ",\"" + r.detail + "\"\n";
    all = all && r.pass;
  }
  if (!c.out.empty()) write_text(fs::path(c.out) / "verify.csv", csv);
  return all ? kOk : kCheckFailed;
}

void describe(const Instance& inst) {
  std::cout << "label: " << inst.label() << '\n' << "capacities:";
  for (int v : inst.capacities().values()) std::cout << ' ' << v;
  std::cout << '\n' << "bidders: " << inst.bidders() << '\n';
  for (std::size_t i = 0; i < inst.bidders(); ++i)
    std::cout << "  bidder " << i + 1 << ": " << inst.oracles()[i].kind() << '\n';
  try {
    const auto& opt = inst.optimum();
    std::cout << "optimal SCW: " << format_number(opt.scw) << '\n' << "efficient allocation:";
    for (const auto& x : opt.allocation.bundles()) std::cout << ' ' << to_string(x);
    std::cout << '\n';
  } catch (const ExactOracleUnavailable& e) {
    std::cout << "optimal SCW: unavailable (" << e.what() << ")\n";
  }
}

int cmd_instance(const std::string& pathological, const std::string& toy, const std::string& inspect,
                 const Common& c) {
  const int sources = !pathological.empty() + !toy.empty() + !inspect.empty();
  if (sources != 1) throw InvalidInput("instance: give exactly one of --pathological, --toy, --inspect");
  std::optional<Instance> inst;
  if (!pathological.empty()) {
    const auto id = parse_pathological(pathological);
    if (!id) throw InvalidInput("--pathological: expected P1..P5, got '" + pathological + "'");
    inst = make_pathological(*id).instance;
  } else if (!toy.empty()) {
    const auto params = toy_params_from_json(read_json(toy));
    inst = sample_toy_instance(params, seed_override(c.seed).value_or(1));
  } else {
    inst = instance_from_json(read_json(inspect));
  }
  if (!c.out.empty()) {
    write_text(c.out, to_json(*inst).dump(2) + "\n");
  } else {
    describe(*inst);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative combinatorial auction simulator"};
  app.require_subcommand(1);

  Common common;
  std::string config;

  auto* run = app.add_subcommand("run", "Run an experiment config; writes per-run outcomes and summary.csv");
  run->add_option("config", config, "Experiment JSON")->required();
  add_common(run, common, "Output directory (default: results)");

  auto* learn = app.add_subcommand("learn", "Evaluate learning metrics; writes learning.csv");
  learn->add_option("config", config, "Learning JSON")->required();
  add_common(learn, common, "Output directory");

  VerifyOptions vopts;
  auto* verify = app.add_subcommand("verify", "Replay the closed-form instance checks");
  verify->add_option("--bridge-instances", vopts.bridge_instances, "Random toy instances for the bridge-bid check")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--p4-seeds", vopts.p4_seeds, "Monte Carlo seeds for P4")->check(CLI::PositiveNumber);
  verify->add_option("--subgradient-models", vopts.subgradient_models)->check(CLI::PositiveNumber);
  verify->add_option("--subgradient-pairs", vopts.subgradient_pairs)->check(CLI::PositiveNumber);
  add_common(verify, common, "Output directory for verify.csv");

  std::string pathological, toy, inspect;
  auto* instance = app.add_subcommand("instance", "Generate or inspect instance files");
  instance->add_option("--pathological", pathological, "P1..P5");
  instance->add_option("--toy", toy, "Toy domain parameter JSON");
  instance->add_option("--inspect", inspect, "Instance JSON to describe");
  add_common(instance, common, "Instance file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    seed_override(common.seed);  // reject a malformed AUCTIONLAB_SEED up front
    if (*run) return cmd_run(config, common);
    if (*learn) return cmd_learn(config, common);
    if (*verify) return cmd_verify(vopts, common);
    if (*instance) return cmd_instance(pathological, toy, inspect, common);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kInvalidInput;
}
