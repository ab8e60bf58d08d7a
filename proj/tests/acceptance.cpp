#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reds/reds.hpp"

using namespace reds;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PointSet random_points(int d, std::size_t n, Engine& e) {
  PointSet X(d, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (int i = 0; i < d; ++i) X(i, j) = uniform01(e);
  return X;
}

const MercerSpec& beta2() {
  static const MercerSpec s = MercerSpec::with_decay(2.0, 500);
  return s;
}

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "reds_acceptance" / name;
  fs::remove_all(p);
  return p;
}

// ---- shared Branin runs (criteria 8-11, 13) ----

harness::ExperimentConfig branin_protocol(StrategyKind kind, const fs::path& out) {
  auto cfg = harness::default_experiment(BenchmarkName::Branin, kind);
  cfg.replicas = 10;
  cfg.out_dir = out;
  cfg.workers = harness::resolve_workers(std::nullopt, 1);
  return cfg;
}

std::map<std::string, harness::ExperimentResult>& experiment_cache() {
  static std::map<std::string, harness::ExperimentResult> cache;
  return cache;
}

const harness::ExperimentResult& comparison_run(StrategyKind kind) {
  const std::string key(to_string(kind));
  auto& cache = experiment_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  return cache.emplace(key, harness::run_experiment(branin_protocol(kind, work_dir("compare")))).first->second;
}

std::vector<Trace>& retention_runs() {
  static std::vector<Trace> runs;
  if (!runs.empty()) return runs;
  const BenchmarkSpec spec = make_benchmark(BenchmarkName::Branin);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto s = harness::replica_seeds(0, i);
    BenchmarkObjective obj(spec, s.noise);
    RunConfig cfg;
    cfg.variant = Variant::NoiseFree;
    cfg.B = 1.2;
    cfg.delta = 0.1;
    cfg.n1 = 50;
    cfg.T = 1000;
    cfg.seed = s.algorithm;
    runs.push_back(run_reds(obj, SquaredExponential{0.2}, discretize(spec.box(), 2000, s.domain), cfg));
  }
  return runs;
}

double mean_final_regret(const harness::Aggregate& a) { return a.mean.back(); }

// ---- criteria ----

Outcome c1_interpolation() {
  const auto t0 = std::chrono::steady_clock::now();
  Engine e = make_engine({1, 0});
  const PointSet X = random_points(2, 50, e);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = branin(X(0, i), X(1, i));
  const auto m = fit(SquaredExponential{0.2}, X, y, 0.0);
  const double mean_err = (m.means(X) - y).cwiseAbs().maxCoeff();
  const double max_var = m.variances(X).maxCoeff();
  const double secs = seconds_since(t0);
  return {mean_err <= 1e-6 && max_var <= 1e-8 && secs < 1.0,
          "max|mu-y|=" + fmt("%.3g", mean_err) + " (<=1e-6), max var=" + fmt("%.3g", max_var) +
              " (<=1e-8), " + fmt("%.3f", secs) + "s (<1s)"};
}

Outcome c2_info_gain() {
  const auto t0 = std::chrono::steady_clock::now();
  Engine e = make_engine({2, 0});
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(e) * 50);
    const PointSet X = random_points(2, n, e);
    const double tau = 0.05 + uniform01(e);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(SquaredExponential{0.2}, X));
    double oracle = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      oracle += 0.5 * std::log1p(std::max(0.0, es.eigenvalues()[i]) / tau);
    worst = std::max(worst, std::abs(info_gain(SquaredExponential{0.2}, X, tau) - oracle));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 5.0,
          "max abs diff=" + fmt("%.3g", worst) + " (<=1e-8), " + fmt("%.3f", secs) + "s (<5s)"};
}

Outcome decay_exponent(double tau, double lo, double hi) {
  const auto t0 = std::chrono::steady_clock::now();
  const PointSet grid = theory::unit_grid();
  std::vector<double> slopes;
  for (std::uint64_t s = 0; s < 10; ++s)
    slopes.push_back(
        theory::decay_fit(theory::decay_sweep(beta2(), tau, {64, 128, 256, 512, 1024, 2048, 4096}, {3, s}, grid)).slope);
  const double med = harness::median(slopes);
  const double secs = seconds_since(t0);
  std::string all;
  for (double s : slopes) all += fmt(" %.2f", s);
  return {med >= lo && med <= hi && secs < 300.0, "median slope=" + fmt("%.4f", med) + " in [" + fmt("%g", lo) + ", " +
                                                      fmt("%g", hi) + "], per-seed:" + all + ", " + fmt("%.1f", secs) +
                                                      "s (<300s)"};
}

Outcome c3_noisy_decay() { return decay_exponent(0.2, -1.0, -0.2); }
Outcome c4_noise_free_decay() { return decay_exponent(0.0, -1.6, -0.7); }

Outcome c5_variance_ratio() {
  const PointSet probes = theory::unit_grid(100);
  std::size_t applicable = 0, violations = 0;
  double worst_ratio = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Engine e = make_engine({5, s});
    const auto rep = theory::variance_ratio_check(beta2(), theory::sample_unit_interval(512, e), 0.2, probes);
    if (!rep.applicable) continue;
    ++applicable;
    violations += static_cast<std::size_t>(std::count(rep.probe_pass.begin(), rep.probe_pass.end(), false));
    worst_ratio = std::max(worst_ratio, rep.max_ratio / rep.factor);
  }
  return {violations == 0, "violations=" + std::to_string(violations) + " (==0) over " + std::to_string(applicable) +
                               "/20 applicable seeds, max ratio/factor=" + fmt("%.4f", worst_ratio)};
}

Outcome c6_info_gain_bound() {
  const PointSet grid = theory::unit_grid();
  int passed = 0;
  double worst = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Engine e = make_engine({6, s});
    const auto rep = theory::info_gain_bound_check(beta2(), theory::sample_unit_interval(2048, e), 0.2, grid);
    passed += rep.pass;
    worst = std::max(worst, rep.ratio);
  }
  return {passed >= 95, "passed " + std::to_string(passed) + "/100 (>=95), max lhs/rhs=" + fmt("%.4f", worst)};
}

Outcome c7_feature_identity() {
  double worst = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Engine e = make_engine({7, s});
    const PointSet X = theory::sample_unit_interval(200, e);
    const PointSet probes = theory::sample_unit_interval(100, e);
    const Eigen::VectorXd feat = theory::feature_space_variance(beta2(), X, 0.2, probes);
    const Eigen::VectorXd gpv = fit(FiniteRankMercer{beta2()}, X, Eigen::VectorXd::Zero(200), 0.2).variances(probes);
    for (Eigen::Index i = 0; i < 100; ++i) worst = std::max(worst, std::abs(feat[i] - gpv[i]) / gpv[i]);
  }
  return {worst <= 1e-6, "max relative diff=" + fmt("%.3g", worst) + " (<=1e-6)"};
}

Outcome c8_retention() {
  int kept = 0;
  for (const auto& t : retention_runs()) kept += t.x_star_retained();
  return {kept >= 18, "x* active in every epoch in " + std::to_string(kept) + "/20 runs (>=18)"};
}

bool non_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return true;
}

// Mean per-step increment of the last quartile below that of the first.
bool flattening(const std::vector<double>& v) {
  const std::size_t q = v.size() / 4;
  const double first = v[q - 1] / static_cast<double>(q);
  const double last = (v.back() - v[v.size() - q - 1]) / static_cast<double>(q);
  return last < first;
}

Outcome c9_regret() {
  const auto& reds = comparison_run(StrategyKind::REDS).aggregate;
  const auto& bpe = comparison_run(StrategyKind::BPE_MPV).aggregate;
  const double r = mean_final_regret(reds), b = mean_final_regret(bpe);
  bool curves_ok = true;
  for (const auto* res : {&comparison_run(StrategyKind::REDS), &comparison_run(StrategyKind::BPE_MPV)})
    for (const auto& tr : res->traces) curves_ok = curves_ok && non_decreasing(harness::cumulative_regret(tr, *tr.f_star));
  const bool shape = non_decreasing(reds.mean) && non_decreasing(bpe.mean) && flattening(reds.mean) && flattening(bpe.mean);
  return {r <= 2 * b && curves_ok && shape, "REDS=" + fmt("%.2f", r) + " BPE=" + fmt("%.2f", b) +
                                                " ratio=" + fmt("%.3f", r / b) + " (<=2), curves " +
                                                (curves_ok && shape ? "non-decreasing and flattening" : "malformed")};
}

Outcome c10_runtime() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& reds = comparison_run(StrategyKind::REDS).aggregate;
  const auto& bpe = comparison_run(StrategyKind::BPE_MPV).aggregate;
  const double secs = seconds_since(t0);
  const double ratio = bpe.wall_ns_mean / reds.wall_ns_mean;
  return {ratio >= 5 && secs < 600, "BPE/REDS compute time=" + fmt("%.1f", ratio) + " (>=5), REDS " +
                                        fmt("%.3f", reds.wall_ns_mean * 1e-9) + "s BPE " +
                                        fmt("%.3f", bpe.wall_ns_mean * 1e-9) + "s per run, comparison " +
                                        fmt("%.1f", secs) + "s (<600s)"};
}

std::size_t schedule_violations(const Trace& t, std::size_t n1, std::size_t T, std::size_t m) {
  std::size_t bad = 0, total = 0;
  std::vector<char> prev(m, 1);
  for (std::size_t r = 0; r < t.epochs.size(); ++r) {
    const auto& e = t.epochs[r];
    const bool last = r + 1 == t.epochs.size();
    bad += e.batch_size != (n1 << r);
    bad += last ? e.queries > e.batch_size : e.queries != e.batch_size;
    bad += e.active_after < 1;
    for (std::size_t i = 0; i < m; ++i) bad += e.active_after_mask[i] && !prev[i];
    prev = e.active_after_mask;
    total += e.queries;
  }
  return bad + (total != T);
}

Outcome c11_nesting() {
  std::size_t bad = 0, runs = 0;
  for (const auto& t : retention_runs()) bad += schedule_violations(t, 50, 1000, 2000), ++runs;
  for (auto k : {StrategyKind::REDS, StrategyKind::BPE_MPV})
    for (const auto& t : comparison_run(k).traces) bad += schedule_violations(t, 50, 1000, 2000), ++runs;
  return {bad == 0, "violations=" + std::to_string(bad) + " (==0) across " + std::to_string(runs) + " runs"};
}

Outcome c12_nbar() {
  std::string detail;
  bool ok = true;
  for (double beta : {2.0, 3.0}) {
    const MercerSpec spec = MercerSpec::with_decay(beta, 500);
    const auto rep = theory::nbar(spec, 0.1, 0.2);
    const auto tables = theory::spectral_tables(spec);
    bool witness = rep.feasible && theory::in_r_set(spec, tables, rep.min_feasible_n, rep.witness_R, 0.1, 0.2);
    bool none_below = true;
    for (int R = 1; R <= spec.rank && rep.feasible; ++R)
      none_below = none_below && !theory::in_r_set(spec, tables, rep.min_feasible_n - 1, R, 0.1, 0.2);
    ok = ok && witness && none_below;
    detail += "beta=" + fmt("%g", beta) + ": n=" + std::to_string(rep.min_feasible_n) +
              " R=" + std::to_string(rep.witness_R) + " nbar=" + std::to_string(rep.nbar) +
              (witness ? " witness ok" : " witness FAILS") + (none_below ? ", n-1 none; " : ", n-1 admits one; ");
  }
  return {ok, detail};
}

std::string masked_trace(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream out;
  std::string line;
  while (std::getline(f, line)) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

Outcome c13_determinism() {
  std::size_t files = 0, mismatched = 0;
  const fs::path a = work_dir("determinism_a"), b = work_dir("determinism_b");
  for (auto k : {StrategyKind::REDS, StrategyKind::BPE_MPV}) {
    harness::run_experiment(branin_protocol(k, a));
    harness::run_experiment(branin_protocol(k, b));
    for (std::size_t i = 0; i < 10; ++i) {
      const auto name = harness::trace_filename(k, i);
      ++files;
      mismatched += masked_trace(a / name) != masked_trace(b / name);
    }
  }
  return {mismatched == 0,
          std::to_string(files - mismatched) + "/" + std::to_string(files) + " trace CSVs identical outside wall_ns"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 13));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "interpolation exactness", c1_interpolation},
      {2, "information gain vs eigendecomposition", c2_info_gain},
      {3, "noisy variance decay exponent", c3_noisy_decay},
      {4, "noise-free variance decay exponent", c4_noise_free_decay},
      {5, "variance-ratio implication", c5_variance_ratio},
      {6, "information-gain bound", c6_info_gain_bound},
      {7, "feature-space variance identity", c7_feature_identity},
      {8, "argmax retention", c8_retention},
      {9, "regret comparability", c9_regret},
      {10, "compute-time ratio", c10_runtime},
      {11, "nested shrinking and schedule", c11_nesting},
      {12, "nbar witness consistency", c12_nbar},
      {13, "determinism", c13_determinism},
  };

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %2d %-40s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
