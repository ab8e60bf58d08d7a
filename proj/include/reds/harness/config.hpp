#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "reds/algorithm.hpp"
#include "reds/benchmarks.hpp"
#include "reds/errors.hpp"
#include "reds/kernels.hpp"
#include "reds/trace.hpp"

namespace reds::harness {

/// Flat `key = value` file; `#` starts a comment, blank lines are ignored.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
  }
  return out;
}

struct ExperimentConfig {
  BenchmarkName benchmark = BenchmarkName::Branin;
  StrategyKind strategy = StrategyKind::REDS;
  RunConfig run;
  KernelSpec kernel = SquaredExponential{0.2};
  std::size_t replicas = 10;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "results";

  void validate() const {
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    try {
      run.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    try {
      validate_kernel(kernel);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (strategy == StrategyKind::GP_UCB && run.variant != Variant::Noisy)
      throw ConfigError("gp-ucb requires variant = noisy");
  }
};

/// Reference-protocol defaults for a benchmark: noisy feedback with sigma = 0.2,
/// tau = 0.2, alpha = 1, B = b, T = 1000, ten replicas.
inline ExperimentConfig default_experiment(BenchmarkName name, StrategyKind strategy) {
  const BenchmarkSpec spec = make_benchmark(name);
  ExperimentConfig cfg;
  cfg.benchmark = name;
  cfg.strategy = strategy;
  cfg.kernel = SquaredExponential{spec.default_lengthscale()};
  cfg.run.B = spec.upper_bound();
  cfg.run.delta = 0.1;
  cfg.run.tau = 0.2;
  cfg.run.sigma_noise = 0.2;
  cfg.run.variant = Variant::Noisy;
  cfg.run.n1 = spec.default_n1();
  cfg.run.T = 1000;
  cfg.run.domain_size = spec.default_domain_size();
  cfg.run.alpha = 1.0;
  cfg.run.seed = {0, 0};
  return cfg;
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not a number: " + v);
  }
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not a non-negative integer: " + v);
  }
}

inline KernelSpec parse_kernel(const std::string& name, double lengthscale) {
  if (name == "se" || name == "squared-exponential") return SquaredExponential{lengthscale};
  if (name == "matern12") return Matern{0.5, lengthscale};
  if (name == "matern32") return Matern{1.5, lengthscale};
  if (name == "matern52") return Matern{2.5, lengthscale};
  throw ConfigError("unknown kernel: " + name);
}

}  // namespace detail

/// Builds an experiment from parsed keys; unspecified keys take the benchmark's
/// reference-protocol defaults.
inline ExperimentConfig experiment_from_keys(const std::map<std::string, std::string>& kv) {
  static const std::set<std::string> known{"benchmark", "strategy",    "variant", "B",      "delta",
                                           "tau",       "sigma_noise", "n1",      "T",      "domain_size",
                                           "seed",      "replicas",    "workers", "out",    "alpha",
                                           "kernel",    "lengthscale"};
  for (const auto& [k, v] : kv)
    if (!known.count(k)) throw ConfigError("unknown key: " + k);

  auto get = [&](const std::string& k) -> std::optional<std::string> {
    const auto it = kv.find(k);
    return it == kv.end() ? std::nullopt : std::optional<std::string>(it->second);
  };

  const BenchmarkName bench = parse_benchmark(get("benchmark").value_or("branin"));
  const StrategyKind strategy = parse_strategy(get("strategy").value_or("reds"));
  ExperimentConfig cfg = default_experiment(bench, strategy);

  if (auto v = get("variant")) {
    if (*v == "noisy") cfg.run.variant = Variant::Noisy;
    else if (*v == "noise-free" || *v == "noisefree") cfg.run.variant = Variant::NoiseFree;
    else throw ConfigError("unknown variant: " + *v);
  }
  if (cfg.run.variant == Variant::NoiseFree) {
    cfg.run.sigma_noise = 0.0;
    cfg.run.tau = 0.0;
    cfg.run.alpha.reset();
  }
  if (auto v = get("B")) cfg.run.B = detail::to_double("B", *v);
  if (auto v = get("delta")) cfg.run.delta = detail::to_double("delta", *v);
  if (auto v = get("tau")) cfg.run.tau = detail::to_double("tau", *v);
  if (auto v = get("sigma_noise")) cfg.run.sigma_noise = detail::to_double("sigma_noise", *v);
  if (auto v = get("n1")) cfg.run.n1 = detail::to_uint("n1", *v);
  if (auto v = get("T")) cfg.run.T = detail::to_uint("T", *v);
  if (auto v = get("domain_size")) cfg.run.domain_size = detail::to_uint("domain_size", *v);
  if (auto v = get("seed")) cfg.run.seed.master_seed = detail::to_uint("seed", *v);
  if (auto v = get("replicas")) cfg.replicas = detail::to_uint("replicas", *v);
  if (auto v = get("workers")) cfg.workers = detail::to_uint("workers", *v);
  if (auto v = get("out")) cfg.out_dir = *v;
  if (auto v = get("alpha")) {
    if (*v == "theory") cfg.run.alpha.reset();
    else cfg.run.alpha = detail::to_double("alpha", *v);
  }
  const double ls = get("lengthscale") ? detail::to_double("lengthscale", *get("lengthscale"))
                                       : make_benchmark(bench).default_lengthscale();
  cfg.kernel = detail::parse_kernel(get("kernel").value_or("se"), ls);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  return experiment_from_keys(parse_key_values(in));
}

}  // namespace reds::harness
