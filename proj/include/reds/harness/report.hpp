#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "reds/harness/experiment.hpp"
#include "reds/theory.hpp"

namespace reds::harness {

/// One machine-readable validation outcome.
struct ValidationRecord {
  std::string name;
  nlohmann::json params;
  double measured = 0.0;
  std::string bound;
  bool pass = false;
};

inline nlohmann::json to_json(const ValidationRecord& r) {
  return {{"name", r.name}, {"params", r.params}, {"measured", r.measured}, {"bound", r.bound}, {"pass", r.pass}};
}

inline void write_validation_report(const std::vector<ValidationRecord>& records, const std::filesystem::path& dir) {
  ensure_writable_dir(dir);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  auto f = open_output(dir / "validation_report.json");
  f << arr.dump(2) << '\n';
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct TheorySuiteOptions {
  double beta = 2.0;
  double tau = 0.2;
  std::size_t seeds = 10;
  int rank = 500;
  double delta = 0.1;
  std::uint64_t master_seed = 0;
  std::vector<std::size_t> checkpoints{64, 128, 256, 512, 1024, 2048, 4096};
  std::size_t ratio_n = 512;
  std::size_t info_gain_n = 2048;
  std::size_t probes = 100;
  std::size_t grid = theory::kDefaultGridSize;
};

/// Decay exponents (noisy and noise-free), the variance-ratio implication,
/// the information-gain bound, the feature-space identity, and nbar.
inline std::vector<ValidationRecord> run_theory_suite(const TheorySuiteOptions& o) {
  if (o.seeds < 1) throw ConfigError("seeds must be >= 1");
  if (!(o.tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(o.beta > 1.0)) throw ConfigError("beta must be > 1");
  const MercerSpec spec = MercerSpec::with_decay(o.beta, o.rank);
  const PointSet grid = theory::unit_grid(o.grid);
  const PointSet probes = theory::unit_grid(o.probes);
  std::vector<ValidationRecord> out;
  const nlohmann::json base{{"beta", o.beta}, {"rank", o.rank}, {"seeds", o.seeds}};

  for (const bool noisy : {true, false}) {
    const double tau = noisy ? o.tau : 0.0;
    std::vector<double> slopes;
    for (std::size_t s = 0; s < o.seeds; ++s)
      slopes.push_back(
          theory::decay_fit(theory::decay_sweep(spec, tau, o.checkpoints, {o.master_seed, s}, grid)).slope);
    const double expected = noisy ? 1.0 / o.beta - 1.0 : 1.0 - o.beta;
    const double lo = expected - (noisy ? 0.5 : 0.6);
    const double hi = expected + (noisy ? 0.3 : 0.3);
    ValidationRecord r;
    r.name = noisy ? "decay_exponent_noisy" : "decay_exponent_noise_free";
    r.params = base;
    r.params["tau"] = tau;
    r.params["checkpoints"] = o.checkpoints;
    r.params["slopes"] = slopes;
    r.measured = median(slopes);
    r.bound = "[" + format_double(lo) + ", " + format_double(hi) + "]";
    r.pass = r.measured >= lo && r.measured <= hi;
    out.push_back(std::move(r));
  }

  {
    std::size_t applicable = 0, violations = 0;
    for (std::size_t s = 0; s < o.seeds; ++s) {
      Engine eng = make_engine({o.master_seed, 100 + s});
      const auto rep = theory::variance_ratio_check(spec, theory::sample_unit_interval(o.ratio_n, eng), o.tau, probes);
      if (!rep.applicable) continue;
      ++applicable;
      violations += static_cast<std::size_t>(std::count(rep.probe_pass.begin(), rep.probe_pass.end(), false));
    }
    ValidationRecord r;
    r.name = "variance_ratio_violations";
    r.params = base;
    r.params["n"] = o.ratio_n;
    r.params["tau"] = o.tau;
    r.params["applicable_seeds"] = applicable;
    r.measured = static_cast<double>(violations);
    r.bound = "== 0";
    r.pass = violations == 0;
    out.push_back(std::move(r));
  }

  {
    std::size_t passed = 0;
    for (std::size_t s = 0; s < o.seeds; ++s) {
      Engine eng = make_engine({o.master_seed, 200 + s});
      passed += theory::info_gain_bound_check(spec, theory::sample_unit_interval(o.info_gain_n, eng), o.tau, grid).pass;
    }
    ValidationRecord r;
    r.name = "info_gain_bound_pass_rate";
    r.params = base;
    r.params["n"] = o.info_gain_n;
    r.params["tau"] = o.tau;
    r.measured = static_cast<double>(passed) / static_cast<double>(o.seeds);
    r.bound = ">= 0.95";
    r.pass = r.measured >= 0.95;
    out.push_back(std::move(r));
  }

  {
    double worst = 0.0;
    for (std::size_t s = 0; s < o.seeds; ++s) {
      Engine eng = make_engine({o.master_seed, 300 + s});
      const PointSet X = theory::sample_unit_interval(200, eng);
      const Eigen::VectorXd feat = theory::feature_space_variance(spec, X, o.tau, probes);
      const PosteriorModel m = fit(FiniteRankMercer{spec}, X, Eigen::VectorXd::Zero(X.cols()), o.tau);
      const Eigen::VectorXd direct = m.variances(probes);
      for (Eigen::Index i = 0; i < probes.cols(); ++i)
        worst = std::max(worst, std::abs(feat[i] - direct[i]) / std::max(std::abs(direct[i]), 1e-300));
    }
    ValidationRecord r;
    r.name = "feature_space_identity_rel_err";
    r.params = base;
    r.params["n"] = 200;
    r.params["tau"] = o.tau;
    r.measured = worst;
    r.bound = "<= 1e-6";
    r.pass = worst <= 1e-6;
    out.push_back(std::move(r));
  }

  {
    const auto rep = theory::nbar(spec, o.delta, o.tau);
    ValidationRecord r;
    r.name = "nbar";
    r.params = base;
    r.params["delta"] = o.delta;
    r.params["tau"] = o.tau;
    r.params["witness_R"] = rep.witness_R;
    r.params["min_feasible_n"] = rep.min_feasible_n;
    r.params["floor_term"] = rep.floor_term;
    r.measured = static_cast<double>(rep.nbar);
    r.bound = "feasible";
    r.pass = rep.feasible;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace reds::harness
