#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "reds/harness/config.hpp"
#include "reds/harness/experiment.hpp"
#include "reds/harness/report.hpp"

using namespace reds;
using namespace reds::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("reds_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

Trace synthetic_trace(const std::vector<double>& f, double f_star) {
  Trace t;
  t.f_star = f_star;
  for (std::size_t i = 0; i < f.size(); ++i) {
    QueryRecord r;
    r.t = i + 1;
    r.x = Eigen::Vector2d(0.1, 0.2);
    r.f_x = f[i];
    r.y = f[i];
    t.records.push_back(r);
  }
  return t;
}

ExperimentConfig small_config(const fs::path& out, std::size_t replicas, std::size_t T) {
  ExperimentConfig c = default_experiment(BenchmarkName::Branin, StrategyKind::REDS);
  c.out_dir = out;
  c.replicas = replicas;
  c.run.T = T;
  c.run.domain_size = 400;
  return c;
}

}  // namespace

TEST(ParseKeyValues, CommentsBlanksAndTrim) {
  std::istringstream in("# header\n\n  benchmark = hartmann4  # trailing\nT=300\n");
  const auto kv = parse_key_values(in);
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("benchmark"), "hartmann4");
  EXPECT_EQ(kv.at("T"), "300");
}

TEST(ParseKeyValues, Errors) {
  std::istringstream a("benchmark branin\n"), b("T = 1\nT = 2\n"), c(" = 4\n");
  EXPECT_THROW(parse_key_values(a), ConfigError);
  EXPECT_THROW(parse_key_values(b), ConfigError);
  EXPECT_THROW(parse_key_values(c), ConfigError);
}

TEST(ExperimentFromKeys, DefaultsFollowBenchmark) {
  const auto c = experiment_from_keys({{"benchmark", "hartmann6"}, {"strategy", "bpe"}});
  EXPECT_EQ(c.run.domain_size, 20000u);
  EXPECT_EQ(c.run.n1, 100u);
  EXPECT_EQ(c.run.B, 3.5);
  EXPECT_EQ(std::get<SquaredExponential>(c.kernel).lengthscale, 1.0);
  EXPECT_EQ(c.strategy, StrategyKind::BPE_MPV);
  EXPECT_EQ(c.replicas, 10u);
  EXPECT_EQ(*c.run.alpha, 1.0);
}

TEST(ExperimentFromKeys, Overrides) {
  const auto c = experiment_from_keys({{"variant", "noise-free"},
                                       {"T", "200"},
                                       {"replicas", "3"},
                                       {"kernel", "matern32"},
                                       {"lengthscale", "0.4"},
                                       {"seed", "17"}});
  EXPECT_EQ(c.run.variant, Variant::NoiseFree);
  EXPECT_EQ(c.run.tau, 0.0);
  EXPECT_EQ(c.run.sigma_noise, 0.0);
  EXPECT_EQ(c.run.T, 200u);
  EXPECT_EQ(c.replicas, 3u);
  EXPECT_EQ(std::get<Matern>(c.kernel).nu, 1.5);
  EXPECT_EQ(c.run.seed.master_seed, 17u);
}

TEST(ExperimentFromKeys, InvalidValuesAreConfigErrors) {
  EXPECT_THROW(experiment_from_keys({{"replicas", "0"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"T", "-5"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"delta", "abc"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"delta", "1.5"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"benchmrk", "branin"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"strategy", "gp-ucb"}, {"variant", "noise-free"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"lengthscale", "0"}}), ConfigError);
  EXPECT_THROW(experiment_from_keys({{"variant", "noisy"}, {"tau", "0"}}), ConfigError);
}

TEST(LoadExperiment, MissingFile) { EXPECT_THROW(load_experiment("/nonexistent/x.cfg"), ConfigError); }

TEST(CumulativeRegret, AllAtOptimumIsZero) {
  const auto r = cumulative_regret(synthetic_trace(std::vector<double>(20, 1.5), 1.5), 1.5);
  for (double v : r) EXPECT_EQ(v, 0.0);
}

TEST(CumulativeRegret, ConstantGapIsArithmetic) {
  const auto r = cumulative_regret(synthetic_trace(std::vector<double>(50, 0.75), 1.0), 1.0);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_NEAR(r[t], 0.25 * (t + 1), 1e-12);
}

TEST(CumulativeRegret, MatchesStreamingOracle) {
  Engine e = make_engine({1, 1});
  std::vector<double> f(1000);
  for (auto& v : f) v = uniform01(e);
  const auto r = cumulative_regret(synthetic_trace(f, 1.0), 1.0);
  long double acc = 0;
  for (std::size_t t = 0; t < f.size(); ++t) {
    acc += 1.0L - f[t];
    EXPECT_NEAR(r[t], static_cast<double>(acc), 1e-9);
    if (t) {
      EXPECT_GE(r[t], r[t - 1]);
    }
  }
}

TEST(CumulativeRegret, MissingFxIsInvalidTrace) {
  Trace t = synthetic_trace({0.1, 0.2}, 1.0);
  t.records[1].f_x.reset();
  EXPECT_THROW(cumulative_regret(t, 1.0), InvalidTrace);
}

TEST(RunExperiment, SingleReplicaOneEpoch) {
  const auto out = scratch("single");
  auto c = small_config(out, 1, 50);
  const auto res = run_experiment(c);
  const auto rows = read_csv(out / "trace_reds_0.csv");
  ASSERT_EQ(rows.size(), 51u);  // header + N1 rows
  EXPECT_EQ(rows[0], (std::vector<std::string>{"run_id", "t", "epoch", "point_index", "x0", "x1", "y", "f_x",
                                               "inst_regret", "cum_regret", "wall_ns"}));
  EXPECT_EQ(slurp(out / "trace_reds_0.csv").rfind("# reds-trace v1\n", 0), 0u);
  EXPECT_TRUE(fs::exists(out / "aggregate_reds.csv"));
  EXPECT_TRUE(fs::exists(out / "metadata_reds.json"));
  EXPECT_EQ(res.aggregate.std, std::vector<double>(50, 0.0));
}

TEST(RunExperiment, MetadataEchoesConfigAndSeeds) {
  const auto out = scratch("meta");
  auto c = small_config(out, 3, 60);
  c.run.seed.master_seed = 1234;
  run_experiment(c);
  const auto j = nlohmann::json::parse(slurp(out / "metadata_reds.json"));
  EXPECT_EQ(j["config"]["benchmark"], "branin");
  EXPECT_EQ(j["config"]["master_seed"], 1234u);
  EXPECT_EQ(j["seeds"].size(), 3u);
  EXPECT_EQ(j["seeds"][2]["algorithm_stream"], 2u);
  EXPECT_EQ(j["seeds"][2]["noise_stream"], 1'000'002u);
  EXPECT_EQ(j["version"], kVersion);
}

TEST(RunExperiment, AggregateRecomputableFromTraceFiles) {
  const auto out = scratch("agg");
  auto c = small_config(out, 4, 120);
  c.workers = 2;
  run_experiment(c);
  std::vector<std::vector<double>> cums;
  for (int i = 0; i < 4; ++i) {
    const auto rows = read_csv(out / trace_filename(StrategyKind::REDS, i));
    std::vector<double> cum;
    for (std::size_t r = 1; r < rows.size(); ++r) cum.push_back(std::stod(rows[r][9]));
    cums.push_back(cum);
  }
  const auto agg = read_csv(out / "aggregate_reds.csv");
  ASSERT_EQ(agg.size(), 121u);
  for (std::size_t t = 0; t < 120; ++t) {
    double m = 0;
    for (auto& c4 : cums) m += c4[t];
    m /= 4;
    double s = 0;
    for (auto& c4 : cums) s += (c4[t] - m) * (c4[t] - m);
    s = std::sqrt(s / 3);
    EXPECT_NEAR(std::stod(agg[t + 1][1]), m, 1e-9 * (1 + m));
    EXPECT_NEAR(std::stod(agg[t + 1][2]), s, 1e-9 * (1 + s));
  }
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkerCounts) {
  auto strip_wall = [](const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
    return out.str();
  };
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = small_config(a, 3, 150), cb = small_config(b, 3, 150);
  cb.workers = 3;
  run_experiment(ca);
  run_experiment(cb);
  for (int i = 0; i < 3; ++i) {
    const auto fa = slurp(a / trace_filename(StrategyKind::REDS, i));
    const auto fb = slurp(b / trace_filename(StrategyKind::REDS, i));
    EXPECT_EQ(strip_wall(fa), strip_wall(fb));
  }
}

TEST(RunExperiment, UnwritableDirFailsBeforeCompute) {
  const auto base = scratch("ro");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  auto c = small_config(base / "file" / "sub", 1, 50);
  EXPECT_THROW(run_experiment(c), IoError);
}

TEST(ResolveWorkers, Precedence) {
  ::unsetenv("REDS_WORKERS");
  EXPECT_EQ(resolve_workers(std::nullopt, 3), 3u);
  ::setenv("REDS_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(std::nullopt, 3), 5u);
  EXPECT_EQ(resolve_workers(2, 3), 2u);
  ::setenv("REDS_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_workers(std::nullopt, 3), ConfigError);
  ::unsetenv("REDS_WORKERS");
}

TEST(EmitPlotData, SingleReplicaBandWidthZero) {
  const auto out = scratch("plot1");
  auto c = small_config(out, 1, 80);
  const auto res = run_experiment(c);
  emit_plot_data({res.aggregate}, out);
  std::ifstream band(out / "plot_reds_band.dat");
  std::size_t t;
  std::string lo, hi;
  int rows = 0;
  while (band >> t >> lo >> hi) {
    EXPECT_EQ(lo, hi);
    ++rows;
  }
  EXPECT_EQ(rows, 80);
}

TEST(EmitPlotData, BitIdenticalToAggregateAndShapes) {
  const auto out = scratch("plot2");
  std::vector<Aggregate> aggs;
  for (auto k : {StrategyKind::REDS, StrategyKind::UniformNoShrink}) {
    auto c = small_config(out, 3, 100);
    c.strategy = k;
    aggs.push_back(run_experiment(c).aggregate);
  }
  const auto files = emit_plot_data(aggs, out);
  EXPECT_EQ(files.size(), 4u);
  std::size_t total_rows = 0;
  for (auto k : {std::string("reds"), std::string("uniform")}) {
    const auto agg = read_csv(out / ("aggregate_" + k + ".csv"));
    std::ifstream mean(out / ("plot_" + k + "_mean.dat"));
    std::string line;
    std::size_t r = 1;
    while (std::getline(mean, line)) {
      std::stringstream ss(line);
      std::string t, v, extra;
      ss >> t >> v;
      EXPECT_FALSE(ss >> extra);
      EXPECT_EQ(t, agg[r][0]);
      EXPECT_EQ(v, agg[r][1]);
      ++r;
      ++total_rows;
    }
    EXPECT_EQ(r, agg.size());
  }
  EXPECT_EQ(total_rows, 2u * 100u);
}

TEST(EmitPlotData, RejectsEmpty) { EXPECT_THROW(emit_plot_data({}, scratch("plot3")), InvalidArgument); }

TEST(ValidationReport, RecordsSerialize) {
  const auto out = scratch("report");
  write_validation_report({{"a", {{"n", 3}}, 0.5, "<= 1", true}, {"b", {}, 2.0, "< 1", false}}, out);
  const auto j = nlohmann::json::parse(slurp(out / "validation_report.json"));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["name"], "a");
  EXPECT_EQ(j[0]["params"]["n"], 3);
  EXPECT_EQ(j[1]["pass"], false);
}

TEST(Median, OddEven) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), InvalidArgument);
}
