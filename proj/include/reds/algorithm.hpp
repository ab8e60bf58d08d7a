#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "reds/domain.hpp"
#include "reds/errors.hpp"
#include "reds/gp.hpp"
#include "reds/kernels.hpp"
#include "reds/trace.hpp"

namespace reds {

enum class Variant { NoiseFree, Noisy };

/// Returns one scalar observation per call and owns its own noise stream.
template <class O>
concept ObservationOracle = requires(O& o, const PointRef& x) {
  { o.observe(x) } -> std::convertible_to<double>;
};

/// An oracle whose noiseless objective is also known, enabling regret accounting.
template <class O>
concept BenchmarkOracle = ObservationOracle<O> && requires(const O& o, const PointRef& x) {
  { o.value(x) } -> std::convertible_to<double>;
};

struct RunConfig {
  double B = 1.0;
  double delta = 0.1;
  double tau = 0.0;
  double sigma_noise = 0.0;
  std::size_t n1 = 50;
  std::size_t T = 1000;
  Variant variant = Variant::NoiseFree;
  std::size_t domain_size = 2000;
  RngSeed seed{};
  /// Fixed confidence scale for the noisy band; unset uses alpha_tau(delta').
  std::optional<double> alpha;

  void validate() const {
    if (!(B > 0.0)) throw InvalidArgument("RunConfig: B must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("RunConfig: delta must lie in (0,1)");
    if (!(tau >= 0.0)) throw InvalidArgument("RunConfig: tau must be >= 0");
    if (!(sigma_noise >= 0.0)) throw InvalidArgument("RunConfig: sigma_noise must be >= 0");
    if (n1 < 1) throw InvalidArgument("RunConfig: N1 must be >= 1");
    if (T < 1) throw InvalidArgument("RunConfig: T must be >= 1");
    if (domain_size < 1) throw InvalidArgument("RunConfig: domain_size must be >= 1");
    if (variant == Variant::Noisy && !(tau > 0.0)) throw InvalidArgument("RunConfig: noisy variant needs tau > 0");
    if (variant == Variant::NoiseFree && sigma_noise != 0.0)
      throw InvalidArgument("RunConfig: noise-free variant needs sigma_noise = 0");
    if (alpha && !(*alpha > 0.0)) throw InvalidArgument("RunConfig: alpha must be > 0");
  }

  /// Regularizer used by the per-epoch fit.
  double fit_tau() const { return variant == Variant::Noisy ? tau : 0.0; }

  /// delta / log2 T (noise-free) or delta / (2 log2 T) (noisy); log2 T floored at 1.
  double delta_prime() const {
    const double l = std::max(1.0, std::log2(static_cast<double>(T)));
    return variant == Variant::Noisy ? delta / (2.0 * l) : delta / l;
  }
};

struct EpochState {
  int r = 1;
  std::size_t batch_size = 0;
  std::size_t t_curr = 0;
};

struct ConfidenceBand {
  std::vector<double> ucb;    // NaN at inactive candidates
  std::vector<double> lcb;    // NaN at inactive candidates
  std::vector<double> sigma;  // posterior std at active candidates
  double scale = 0.0;
  double offset = 0.0;
};

/// alpha_tau(delta) = B + sigma_noise sqrt((2 / tau) log(|D| / delta)).
inline double alpha_tau(double delta, double B, double sigma_noise, double tau, std::size_t domain_size) {
  if (!(tau > 0.0)) throw InvalidArgument("alpha_tau: tau must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("alpha_tau: delta must lie in (0,1)");
  if (domain_size < 1) throw InvalidArgument("alpha_tau: domain_size must be >= 1");
  return B + sigma_noise * std::sqrt((2.0 / tau) * std::log(static_cast<double>(domain_size) / delta));
}

/// Additive band offset of the noisy variant: 2B/T + sqrt(2 sigma^2 / (T tau) log(2T / delta')).
inline double noisy_band_offset(const RunConfig& cfg, double delta_prime) {
  const double T = static_cast<double>(cfg.T);
  return 2.0 * cfg.B / T +
         std::sqrt(2.0 * cfg.sigma_noise * cfg.sigma_noise / (T * cfg.tau) * std::log(2.0 * T / delta_prime));
}

/// (scale, offset) of the band for this config over a candidate set of the given size.
inline std::pair<double, double> band_parameters(const RunConfig& cfg, double delta_prime, std::size_t domain_size) {
  if (cfg.variant == Variant::NoiseFree) return {cfg.B, 0.0};
  const double scale =
      cfg.alpha ? *cfg.alpha : alpha_tau(delta_prime, cfg.B, cfg.sigma_noise, cfg.tau, domain_size);
  return {scale, noisy_band_offset(cfg, delta_prime)};
}

namespace detail {

inline PointSet gather(const DiscreteDomain& dom, const std::vector<std::size_t>& idx) {
  PointSet out(dom.dim(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = dom.point(idx[i]);
  return out;
}

}  // namespace detail

inline ConfidenceBand confidence_band(const PosteriorModel& m, const DiscreteDomain& dom, const RunConfig& cfg,
                                      double delta_prime) {
  const auto [scale, offset] = band_parameters(cfg, delta_prime, dom.size());
  const std::vector<std::size_t> active = dom.active_indices();
  const PointSet C = detail::gather(dom, active);
  const Eigen::VectorXd mu = m.means(C);
  const Eigen::VectorXd var = m.variances(C);

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ConfidenceBand band{std::vector<double>(dom.size(), nan), std::vector<double>(dom.size(), nan),
                      std::vector<double>(dom.size(), nan), scale, offset};
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double s = std::sqrt(var[static_cast<Eigen::Index>(i)]);
    const double mid = mu[static_cast<Eigen::Index>(i)];
    band.sigma[active[i]] = s;
    band.ucb[active[i]] = mid + scale * s + offset;
    band.lcb[active[i]] = mid - scale * s - offset;
  }
  return band;
}

inline constexpr double kShrinkTolerance = 1e-12;

/// Keeps active x with ucb(x) >= max over active lcb (less a 1e-12 slack).
inline std::vector<char> shrink(const DiscreteDomain& dom, const ConfidenceBand& band) {
  if (dom.active_count() == 0) throw EmptyDomainError();
  double best_lcb = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.is_active(i)) best_lcb = std::max(best_lcb, band.lcb[i]);
  std::vector<char> mask(dom.size(), 0);
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.is_active(i) && band.ucb[i] >= best_lcb - kShrinkTolerance) mask[i] = 1;
  return mask;
}

/// f(x*) minus the smallest f over the active candidates.
inline double epoch_gap(const DiscreteDomain& dom, const std::vector<double>& f_values, double f_star) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.is_active(i)) lo = std::min(lo, f_values[i]);
  return f_star - lo;
}

namespace detail {

/// Noiseless objective over every candidate, when the oracle exposes it.
struct BenchmarkContext {
  std::vector<double> f_values;
  double f_star = 0.0;
  std::size_t x_star = 0;
};

template <ObservationOracle O>
std::optional<BenchmarkContext> make_benchmark_context(const O& obj, const DiscreteDomain& dom) {
  if constexpr (BenchmarkOracle<O>) {
    BenchmarkContext ctx;
    ctx.f_values.resize(dom.size());
    for (std::size_t i = 0; i < dom.size(); ++i) ctx.f_values[i] = obj.value(dom.point(i));
    DiscreteDomain all = dom;
    all.activate_all();
    std::tie(ctx.x_star, ctx.f_star) = argmax_active(all, ctx.f_values);
    return ctx;
  } else {
    return std::nullopt;
  }
}

template <ObservationOracle O>
void observe_batch(O& obj, const DiscreteDomain& dom, const std::vector<std::size_t>& idx, int epoch,
                   const std::optional<BenchmarkContext>& bench, Trace& trace) {
  for (std::size_t i : idx) {
    QueryRecord rec;
    rec.t = trace.records.size() + 1;
    rec.epoch = epoch;
    rec.point_index = i;
    rec.x = dom.point(i);
    rec.y = static_cast<double>(obj.observe(rec.x));
    if (bench) rec.f_x = bench->f_values[i];
    trace.records.push_back(std::move(rec));
  }
}

/// Per-epoch gap bound for the next epoch, from this epoch's worst active sigma.
inline double next_gap_bound(const RunConfig& cfg, double scale, double max_sigma, double delta_prime) {
  if (cfg.variant == Variant::NoiseFree) return 4.0 * scale * max_sigma;
  const double T = static_cast<double>(cfg.T);
  return 4.0 * scale * max_sigma + 2.0 * cfg.B / T +
         cfg.sigma_noise * std::sqrt(2.0 / (T * cfg.tau) * std::log(4.0 * T / delta_prime));
}

/// Shared epoch loop: N_r = N1 2^(r-1) queries chosen by `select`, a fresh fit
/// on the epoch's own observations, then elimination. The epoch that exhausts
/// the budget is neither fitted nor shrunk.
template <ObservationOracle O, class Selector>
Trace run_epochs(O& obj, const KernelSpec& kernel, DiscreteDomain dom, const RunConfig& cfg, StrategyKind kind,
                 Selector&& select) {
  cfg.validate();
  Engine eng = make_engine(cfg.seed);
  const auto bench = make_benchmark_context(obj, dom);
  const double dprime = cfg.delta_prime();

  Trace trace;
  trace.strategy = kind;
  trace.records.reserve(cfg.T);
  if (bench) {
    trace.f_star = bench->f_star;
    trace.x_star_index = bench->x_star;
  }

  EpochState state{1, cfg.n1, 0};
  std::optional<double> gap_bound = 2.0 * cfg.B;
  const auto run_start = Clock::now();
  std::int64_t accounted = 0;

  while (state.t_curr < cfg.T) {
    const std::size_t remaining = cfg.T - state.t_curr;
    const std::size_t count = std::min(state.batch_size, remaining);
    const bool last = count == remaining;

    EpochSummary es;
    es.r = state.r;
    es.batch_size = state.batch_size;
    es.queries = count;
    es.active_before = dom.active_count();
    if (bench) {
      es.gap = epoch_gap(dom, bench->f_values, bench->f_star);
      es.gap_bound = gap_bound;
      es.x_star_active = dom.is_active(bench->x_star);
    }

    const auto t0 = Clock::now();
    const std::size_t first = trace.records.size();
    const std::vector<std::size_t> idx = select(dom, count, eng);
    observe_batch(obj, dom, idx, state.r, bench, trace);
    const auto t1 = Clock::now();

    if (!last) {
      const PointSet X = gather(dom, idx);
      Eigen::VectorXd Y(static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) Y[static_cast<Eigen::Index>(i)] = trace.records[first + i].y;
      const PosteriorModel model = fit(kernel, X, std::move(Y), cfg.fit_tau());
      const ConfidenceBand band = confidence_band(model, dom, cfg, dprime);
      double max_sigma = 0.0;
      for (std::size_t i = 0; i < dom.size(); ++i)
        if (dom.is_active(i)) max_sigma = std::max(max_sigma, band.sigma[i]);
      dom.set_active_mask(shrink(dom, band));
      es.shrunk = true;
      es.tau_eff = model.tau_eff();
      es.max_active_sigma = max_sigma;
      trace.negative_variance_count += model.negative_variance_count();
      gap_bound = next_gap_bound(cfg, band.scale, max_sigma, dprime);
    }
    const auto t2 = Clock::now();

    es.active_after = dom.active_count();
    es.active_after_mask = dom.active_mask();
    es.fit_wall_ns = elapsed_ns(t1, t2);
    const std::int64_t epoch_ns = elapsed_ns(t0, t2);
    spread_wall_ns(trace.records, first, count, epoch_ns);
    accounted += epoch_ns;
    trace.epochs.push_back(std::move(es));

    state.t_curr += count;
    state.batch_size *= 2;
    ++state.r;
  }
  trace.total_wall_ns = std::max(accounted, elapsed_ns(run_start, Clock::now()));
  return trace;
}

}  // namespace detail

/// Random exploration with domain shrinking: each epoch samples N_r points
/// uniformly from the active set, refits on just those, and eliminates every
/// candidate whose UCB falls below the best LCB.
template <ObservationOracle O>
Trace run_reds(O& objective, const KernelSpec& kernel, DiscreteDomain dom, const RunConfig& cfg) {
  return detail::run_epochs(objective, kernel, std::move(dom), cfg, StrategyKind::REDS,
                            [](const DiscreteDomain& d, std::size_t n, Engine& eng) { return sample_uniform(d, n, eng); });
}

}  // namespace reds
