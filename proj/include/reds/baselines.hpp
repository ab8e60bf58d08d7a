#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "reds/algorithm.hpp"

namespace reds {

/// Batched pure exploration with maximum-posterior-variance queries: the REDS
/// epoch and elimination skeleton, except each query maximizes the variance of
/// a model refitted on the epoch's earlier queries. Reconstruction of BPE.
template <ObservationOracle O>
Trace run_bpe(O& objective, const KernelSpec& kernel, DiscreteDomain dom, const RunConfig& cfg) {
  const double fit_tau = cfg.fit_tau();
  return detail::run_epochs(
      objective, kernel, std::move(dom), cfg, StrategyKind::BPE_MPV,
      [&kernel, fit_tau](const DiscreteDomain& d, std::size_t n, Engine&) {
        std::vector<std::size_t> chosen;
        chosen.reserve(n);
        for (std::size_t q = 0; q < n; ++q) {
          // Posterior variance ignores the labels, so zeros stand in for y.
          const PosteriorModel m =
              fit(kernel, detail::gather(d, chosen), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q)), fit_tau);
          chosen.push_back(max_active_variance(m, d).first);
        }
        return chosen;
      });
}

/// Fully sequential GP-UCB over the candidate set: at every t, refit on the
/// whole history and query argmax mu + alpha sigma. Noisy variant only.
template <ObservationOracle O>
Trace run_gp_ucb(O& objective, const KernelSpec& kernel, DiscreteDomain dom, const RunConfig& cfg) {
  cfg.validate();
  if (cfg.variant != Variant::Noisy) throw InvalidArgument("run_gp_ucb: requires the noisy variant");
  const auto bench = detail::make_benchmark_context(objective, dom);
  const double scale = cfg.alpha ? *cfg.alpha : alpha_tau(cfg.delta, cfg.B, cfg.sigma_noise, cfg.tau, dom.size());

  Trace trace;
  trace.strategy = StrategyKind::GP_UCB;
  if (bench) {
    trace.f_star = bench->f_star;
    trace.x_star_index = bench->x_star;
  }
  trace.records.reserve(cfg.T);

  std::vector<std::size_t> history;
  Eigen::VectorXd Y(0);
  const auto start = detail::Clock::now();
  std::int64_t fit_ns = 0;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    const auto t0 = detail::Clock::now();
    const PosteriorModel m = fit(kernel, detail::gather(dom, history), Y, cfg.tau);
    const Eigen::VectorXd mu = m.means(dom.points());
    const Eigen::VectorXd var = m.variances(dom.points());
    std::vector<double> ucb(dom.size());
    for (std::size_t i = 0; i < dom.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      ucb[i] = mu[k] + scale * std::sqrt(var[k]);
    }
    const std::size_t next = argmax_active(dom, ucb).first;
    trace.negative_variance_count += m.negative_variance_count();
    history.push_back(next);
    detail::observe_batch(objective, dom, {next}, 1, bench, trace);
    Y.conservativeResize(Y.size() + 1);
    Y[Y.size() - 1] = trace.records.back().y;
    const auto t1 = detail::Clock::now();
    trace.records.back().wall_ns = detail::elapsed_ns(t0, t1);
    fit_ns += trace.records.back().wall_ns;
  }

  EpochSummary es;
  es.r = 1;
  es.batch_size = cfg.T;
  es.queries = cfg.T;
  es.active_before = dom.active_count();
  es.active_after = dom.active_count();
  es.active_after_mask = dom.active_mask();
  es.fit_wall_ns = fit_ns;
  if (bench) {
    es.gap = epoch_gap(dom, bench->f_values, bench->f_star);
    es.x_star_active = dom.is_active(bench->x_star);
  }
  trace.epochs.push_back(std::move(es));
  trace.total_wall_ns = std::max(fit_ns, detail::elapsed_ns(start, detail::Clock::now()));
  return trace;
}

/// Pure uniform exploration of the full candidate set without elimination.
/// The worst-case active variance is recorded at n = N1, 2 N1, 4 N1, ... <= T,
/// each checkpoint conditioning on the first n queries.
template <ObservationOracle O>
Trace run_uniform(O& objective, const KernelSpec& kernel, DiscreteDomain dom, const RunConfig& cfg) {
  cfg.validate();
  Engine eng = make_engine(cfg.seed);
  const auto bench = detail::make_benchmark_context(objective, dom);

  Trace trace;
  trace.strategy = StrategyKind::UniformNoShrink;
  if (bench) {
    trace.f_star = bench->f_star;
    trace.x_star_index = bench->x_star;
  }
  const auto t0 = detail::Clock::now();
  const std::vector<std::size_t> idx = sample_uniform(dom, cfg.T, eng);
  detail::observe_batch(objective, dom, idx, 1, bench, trace);
  const auto t1 = detail::Clock::now();

  for (std::size_t n = cfg.n1; n <= cfg.T; n *= 2) {
    const std::vector<std::size_t> prefix(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) Y[static_cast<Eigen::Index>(i)] = trace.records[i].y;
    const PosteriorModel m = fit(kernel, detail::gather(dom, prefix), std::move(Y), cfg.fit_tau());
    trace.checkpoints.push_back({n, max_active_variance(m, dom).second});
    trace.negative_variance_count += m.negative_variance_count();
  }
  const auto t2 = detail::Clock::now();

  EpochSummary es;
  es.r = 1;
  es.batch_size = cfg.T;
  es.queries = cfg.T;
  es.active_before = dom.active_count();
  es.active_after = dom.active_count();
  es.active_after_mask = dom.active_mask();
  es.fit_wall_ns = detail::elapsed_ns(t1, t2);
  if (bench) {
    es.gap = epoch_gap(dom, bench->f_values, bench->f_star);
    es.x_star_active = dom.is_active(bench->x_star);
  }
  trace.epochs.push_back(std::move(es));
  detail::spread_wall_ns(trace.records, 0, trace.records.size(), detail::elapsed_ns(t0, t2));
  trace.total_wall_ns = detail::elapsed_ns(t0, t2);
  return trace;
}

/// Dispatch on the strategy enum.
template <ObservationOracle O>
Trace run_strategy(StrategyKind kind, O& objective, const KernelSpec& kernel, DiscreteDomain dom,
                   const RunConfig& cfg) {
  switch (kind) {
    case StrategyKind::REDS: return run_reds(objective, kernel, std::move(dom), cfg);
    case StrategyKind::BPE_MPV: return run_bpe(objective, kernel, std::move(dom), cfg);
    case StrategyKind::GP_UCB: return run_gp_ucb(objective, kernel, std::move(dom), cfg);
    case StrategyKind::UniformNoShrink: return run_uniform(objective, kernel, std::move(dom), cfg);
  }
  throw InvalidArgument("run_strategy: unknown strategy");
}

}  // namespace reds
