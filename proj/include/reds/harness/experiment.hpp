#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "reds/baselines.hpp"
#include "reds/benchmarks.hpp"
#include "reds/errors.hpp"
#include "reds/harness/config.hpp"
#include "reds/trace.hpp"

namespace reds::harness {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kTraceSchema = "# reds-trace v1";
inline constexpr const char* kAggregateSchema = "# reds-aggregate v1";
inline constexpr std::uint64_t kNoiseStreamOffset = 1'000'000;
inline constexpr std::uint64_t kDomainStreamOffset = 2'000'000;

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Prefix sums of f_star - f(x_t).
inline std::vector<double> cumulative_regret(const Trace& trace, double f_star) {
  std::vector<double> out;
  out.reserve(trace.records.size());
  double acc = 0.0;
  for (const auto& r : trace.records) {
    if (!r.f_x) throw InvalidTrace("cumulative_regret: record " + std::to_string(r.t) + " has no f(x)");
    acc += f_star - *r.f_x;
    out.push_back(acc);
  }
  return out;
}

struct Aggregate {
  StrategyKind strategy = StrategyKind::REDS;
  std::size_t replicas = 0;
  std::vector<double> mean;  // cumulative regret at t = 1..T
  std::vector<double> std;
  double wall_ns_mean = 0.0;
  double wall_ns_std = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

/// Mean and sample standard deviation across replicas; all traces must share T.
inline Aggregate aggregate(const std::vector<Trace>& traces) {
  if (traces.empty()) throw InvalidArgument("aggregate: no traces");
  Aggregate a;
  a.strategy = traces.front().strategy;
  a.replicas = traces.size();
  const std::size_t T = traces.front().records.size();
  std::vector<std::vector<double>> regrets;
  std::vector<double> walls;
  for (const auto& tr : traces) {
    if (tr.records.size() != T) throw InvalidTrace("aggregate: traces differ in length");
    if (!tr.f_star) throw InvalidTrace("aggregate: trace lacks f_star");
    regrets.push_back(cumulative_regret(tr, *tr.f_star));
    walls.push_back(static_cast<double>(tr.total_wall_ns));
  }
  a.mean.resize(T);
  a.std.resize(T);
  std::vector<double> col(traces.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < traces.size(); ++i) col[i] = regrets[i][t];
    std::tie(a.mean[t], a.std[t]) = detail::mean_std(col);
  }
  std::tie(a.wall_ns_mean, a.wall_ns_std) = detail::mean_std(walls);
  return a;
}

/// Creates the directory and proves it writable.
inline void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory: " + dir.string());
  const auto probe = dir / ".reds_write_probe";
  {
    std::ofstream f(probe);
    if (!f || !(f << "x") || !f.flush()) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + p.string());
  return f;
}

inline void write_trace_csv(std::ostream& out, const Trace& trace, std::size_t run_id) {
  const std::size_t d = trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().x.size());
  out << kTraceSchema << '\n' << "run_id,t,epoch,point_index";
  for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
  out << ",y,f_x,inst_regret,cum_regret,wall_ns\n";
  double cum = 0.0;
  for (const auto& r : trace.records) {
    out << run_id << ',' << r.t << ',' << r.epoch << ',' << r.point_index;
    for (Eigen::Index j = 0; j < r.x.size(); ++j) out << ',' << format_double(r.x[j]);
    out << ',' << format_double(r.y) << ',';
    if (r.f_x && trace.f_star) {
      const double inst = *trace.f_star - *r.f_x;
      cum += inst;
      out << format_double(*r.f_x) << ',' << format_double(inst) << ',' << format_double(cum);
    } else {
      out << ",,";
    }
    out << ',' << r.wall_ns << '\n';
  }
}

inline void write_epochs_csv(std::ostream& out, const Trace& trace, std::size_t run_id) {
  out << "# reds-epochs v1\n"
      << "run_id,r,batch_size,queries,active_before,active_after,shrunk,tau_eff,max_active_sigma,gap,gap_bound,"
         "x_star_active,fit_wall_ns\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& e : trace.epochs) {
    out << run_id << ',' << e.r << ',' << e.batch_size << ',' << e.queries << ',' << e.active_before << ','
        << e.active_after << ',' << (e.shrunk ? 1 : 0) << ',' << format_double(e.tau_eff) << ','
        << format_double(e.max_active_sigma) << ',' << opt(e.gap) << ',' << opt(e.gap_bound) << ','
        << (e.x_star_active ? (*e.x_star_active ? "1" : "0") : "") << ',' << e.fit_wall_ns << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& out, const Aggregate& a) {
  out << kAggregateSchema << '\n'
      << "# strategy=" << to_string(a.strategy) << " replicas=" << a.replicas
      << " wall_ns_mean=" << format_double(a.wall_ns_mean) << " wall_ns_std=" << format_double(a.wall_ns_std)
      << '\n'
      << "t,mean_cum_regret,std_cum_regret\n";
  for (std::size_t t = 0; t < a.mean.size(); ++t)
    out << (t + 1) << ',' << format_double(a.mean[t]) << ',' << format_double(a.std[t]) << '\n';
}

inline std::string trace_filename(StrategyKind s, std::size_t run_id) {
  return "trace_" + std::string(to_string(s)) + "_" + std::to_string(run_id) + ".csv";
}

/// Per strategy: plot_<s>_mean.dat with (t, mean) and plot_<s>_band.dat with
/// (t, mean - std, mean + std), whitespace separated.
inline std::vector<std::filesystem::path> emit_plot_data(const std::vector<Aggregate>& aggregates,
                                                         const std::filesystem::path& dir) {
  if (aggregates.empty()) throw InvalidArgument("emit_plot_data: no aggregates");
  ensure_writable_dir(dir);
  std::vector<std::filesystem::path> files;
  for (const auto& a : aggregates) {
    const std::string s(to_string(a.strategy));
    const auto mean_path = dir / ("plot_" + s + "_mean.dat");
    const auto band_path = dir / ("plot_" + s + "_band.dat");
    auto mf = open_output(mean_path);
    auto bf = open_output(band_path);
    for (std::size_t t = 0; t < a.mean.size(); ++t) {
      mf << (t + 1) << ' ' << format_double(a.mean[t]) << '\n';
      bf << (t + 1) << ' ' << format_double(a.mean[t] - a.std[t]) << ' ' << format_double(a.mean[t] + a.std[t])
         << '\n';
    }
    files.push_back(mean_path);
    files.push_back(band_path);
  }
  return files;
}

inline nlohmann::json kernel_json(const KernelSpec& k) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using K = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<K, SquaredExponential>) {
          return {{"type", "squared-exponential"}, {"lengthscale", v.lengthscale}};
        } else if constexpr (std::is_same_v<K, Matern>) {
          return {{"type", "matern"}, {"nu", v.nu}, {"lengthscale", v.lengthscale}};
        } else {
          return {{"type", "finite-rank-mercer"}, {"beta", v.spec.beta}, {"rank", v.spec.rank}};
        }
      },
      k);
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["benchmark"] = std::string(to_string(cfg.benchmark));
  j["strategy"] = std::string(to_string(cfg.strategy));
  j["variant"] = cfg.run.variant == Variant::Noisy ? "noisy" : "noise-free";
  j["B"] = cfg.run.B;
  j["delta"] = cfg.run.delta;
  j["tau"] = cfg.run.tau;
  j["sigma_noise"] = cfg.run.sigma_noise;
  j["n1"] = cfg.run.n1;
  j["T"] = cfg.run.T;
  j["domain_size"] = cfg.run.domain_size;
  j["alpha"] = cfg.run.alpha ? nlohmann::json(*cfg.run.alpha) : nlohmann::json("theory");
  j["kernel"] = kernel_json(cfg.kernel);
  j["replicas"] = cfg.replicas;
  j["master_seed"] = cfg.run.seed.master_seed;
  return j;
}

struct ReplicaSeeds {
  RngSeed algorithm;
  RngSeed noise;
  RngSeed domain;
};

inline ReplicaSeeds replica_seeds(std::uint64_t master, std::size_t i) {
  return {{master, i}, {master, kNoiseStreamOffset + i}, {master, kDomainStreamOffset + i}};
}

/// One replica on its own seeds; the candidate set is shared by every strategy
/// run with the same master seed and replica index.
inline Trace run_replica(const ExperimentConfig& cfg, std::size_t i) {
  const ReplicaSeeds s = replica_seeds(cfg.run.seed.master_seed, i);
  BenchmarkSpec spec = make_benchmark(cfg.benchmark, cfg.run.variant == Variant::Noisy ? cfg.run.sigma_noise : 0.0);
  DiscreteDomain dom = discretize(spec.box(), cfg.run.domain_size, s.domain);
  BenchmarkObjective obj(spec, s.noise);
  RunConfig rc = cfg.run;
  rc.seed = s.algorithm;
  return run_strategy(cfg.strategy, obj, cfg.kernel, std::move(dom), rc);
}

/// Worker count: explicit request, else REDS_WORKERS, else the config value.
inline std::size_t resolve_workers(std::optional<std::size_t> requested, std::size_t config_value) {
  if (requested) {
    if (*requested < 1) throw ConfigError("workers must be >= 1");
    return *requested;
  }
  if (const char* env = std::getenv("REDS_WORKERS"); env && *env) {
    const std::uint64_t w = detail::to_uint("REDS_WORKERS", env);
    if (w < 1) throw ConfigError("REDS_WORKERS must be >= 1");
    return w;
  }
  return config_value;
}

struct ExperimentResult {
  std::vector<Trace> traces;
  Aggregate aggregate;
  std::vector<std::filesystem::path> files;
};

/// Runs all replicas in parallel and writes traces, epochs, aggregate and
/// metadata under cfg.out_dir. Timing covers selection and fitting only.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_writable_dir(cfg.out_dir);

  ExperimentResult res;
  res.traces.resize(cfg.replicas);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.replicas) return;
      try {
        res.traces[i] = run_replica(cfg, i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(cfg.replicas);
      }
    }
  };
  const std::size_t nthreads = std::min(cfg.workers, cfg.replicas);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nthreads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::string s(to_string(cfg.strategy));
  for (std::size_t i = 0; i < cfg.replicas; ++i) {
    const auto tp = cfg.out_dir / trace_filename(cfg.strategy, i);
    auto tf = open_output(tp);
    write_trace_csv(tf, res.traces[i], i);
    const auto ep = cfg.out_dir / ("epochs_" + s + "_" + std::to_string(i) + ".csv");
    auto ef = open_output(ep);
    write_epochs_csv(ef, res.traces[i], i);
    res.files.push_back(tp);
    res.files.push_back(ep);
  }

  res.aggregate = aggregate(res.traces);
  const auto ap = cfg.out_dir / ("aggregate_" + s + ".csv");
  {
    auto af = open_output(ap);
    write_aggregate_csv(af, res.aggregate);
  }
  res.files.push_back(ap);

  nlohmann::json meta;
  meta["version"] = kVersion;
  meta["config"] = config_json(cfg);
  meta["workers"] = cfg.workers;
  nlohmann::json seeds = nlohmann::json::array();
  std::size_t neg = 0;
  for (std::size_t i = 0; i < cfg.replicas; ++i) {
    const ReplicaSeeds rs = replica_seeds(cfg.run.seed.master_seed, i);
    seeds.push_back({{"replica", i},
                     {"algorithm_stream", rs.algorithm.stream_id},
                     {"noise_stream", rs.noise.stream_id},
                     {"domain_stream", rs.domain.stream_id}});
    neg += res.traces[i].negative_variance_count;
  }
  meta["seeds"] = seeds;
  meta["f_star"] = res.traces.front().f_star ? nlohmann::json(*res.traces.front().f_star) : nlohmann::json();
  meta["wall_ns_mean"] = res.aggregate.wall_ns_mean;
  meta["wall_ns_std"] = res.aggregate.wall_ns_std;
  meta["negative_variance_count"] = neg;
  const auto mp = cfg.out_dir / ("metadata_" + s + ".json");
  {
    auto mf = open_output(mp);
    mf << meta.dump(2) << '\n';
  }
  res.files.push_back(mp);
  return res;
}

}  // namespace reds::harness
