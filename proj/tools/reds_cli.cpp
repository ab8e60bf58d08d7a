#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reds/reds.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_summary(const reds::harness::ExperimentConfig& cfg, const reds::harness::ExperimentResult& res) {
  const auto& a = res.aggregate;
  std::printf("%-10s %-8s replicas=%zu final_cum_regret=%.6g (std %.3g) wall=%.4fs (std %.3g)\n",
              std::string(reds::to_string(cfg.benchmark)).c_str(), std::string(reds::to_string(cfg.strategy)).c_str(),
              a.replicas, a.mean.empty() ? 0.0 : a.mean.back(), a.std.empty() ? 0.0 : a.std.back(),
              a.wall_ns_mean * 1e-9, a.wall_ns_std * 1e-9);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random exploration with domain shrinking: experiments and validation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--workers", workers, "Parallel replicas");
  run->add_option("--seed", seed, "Master seed");

  double beta = 2.0, tau = 0.2;
  std::size_t seeds = 10;
  std::string theory_out = "validation";
  int rank = 500;
  auto* vt = app.add_subcommand("validate-theory", "Empirical checks of the concentration and decay results");
  vt->add_option("--beta", beta, "Eigendecay exponent")->required();
  vt->add_option("--tau", tau, "Regularization")->required();
  vt->add_option("--seeds", seeds, "Monte Carlo seeds")->required();
  vt->add_option("--out", theory_out, "Output directory")->required();
  vt->add_option("--rank", rank, "Mercer rank J");

  std::string suite = "branin", strategies = "reds,bpe";
  std::string bench_out = "bench";
  std::optional<std::size_t> replicas, horizon;
  auto* bench = app.add_subcommand("bench", "Compare strategies on the benchmark suite");
  bench->add_option("--suite", suite, "branin|hartmann4|hartmann6|all")
      ->check(CLI::IsMember({"branin", "hartmann4", "hartmann6", "all"}));
  bench->add_option("--strategies", strategies, "Comma-separated: reds,bpe,gp-ucb,uniform");
  bench->add_option("--out", bench_out, "Output directory");
  bench->add_option("--replicas", replicas, "Monte Carlo runs per strategy");
  bench->add_option("--T", horizon, "Horizon");
  bench->add_option("--workers", workers, "Parallel replicas");
  bench->add_option("--seed", seed, "Master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  using namespace reds;
  try {
    if (*run) {
      harness::ExperimentConfig cfg = harness::load_experiment(config_path);
      if (out_dir) cfg.out_dir = *out_dir;
      if (seed) cfg.run.seed.master_seed = *seed;
      cfg.workers = harness::resolve_workers(workers, cfg.workers);
      const auto res = harness::run_experiment(cfg);
      harness::emit_plot_data({res.aggregate}, cfg.out_dir);
      print_summary(cfg, res);
    } else if (*vt) {
      harness::TheorySuiteOptions o;
      o.beta = beta;
      o.tau = tau;
      o.seeds = seeds;
      o.rank = rank;
      const auto records = harness::run_theory_suite(o);
      harness::write_validation_report(records, theory_out);
      bool ok = true;
      for (const auto& r : records) {
        std::printf("%-32s measured=%-14.6g bound=%-18s %s\n", r.name.c_str(), r.measured, r.bound.c_str(),
                    r.pass ? "PASS" : "FAIL");
        ok = ok && r.pass;
      }
      return ok ? kExitOk : kExitFailure;
    } else if (*bench) {
      std::vector<BenchmarkName> names;
      if (suite == "all") names = {BenchmarkName::Branin, BenchmarkName::Hartmann4, BenchmarkName::Hartmann6};
      else names = {parse_benchmark(suite)};
      std::vector<StrategyKind> kinds;
      for (const auto& s : split_list(strategies)) kinds.push_back(parse_strategy(s));
      if (kinds.empty()) throw ConfigError("no strategies given");
      harness::ensure_writable_dir(bench_out);
      for (const auto name : names) {
        std::vector<harness::Aggregate> aggs;
        const std::filesystem::path dir = std::filesystem::path(bench_out) / std::string(to_string(name));
        for (const auto kind : kinds) {
          harness::ExperimentConfig cfg = harness::default_experiment(name, kind);
          cfg.out_dir = dir;
          if (replicas) cfg.replicas = *replicas;
          if (horizon) cfg.run.T = *horizon;
          if (seed) cfg.run.seed.master_seed = *seed;
          cfg.workers = harness::resolve_workers(workers, cfg.workers);
          const auto res = harness::run_experiment(cfg);
          print_summary(cfg, res);
          aggs.push_back(res.aggregate);
        }
        harness::emit_plot_data(aggs, dir);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalDegeneracy& e) {
    std::fprintf(stderr, "numerical degeneracy: %s (final jitter %g)\n", e.what(), e.final_jitter());
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
