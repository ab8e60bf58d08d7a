#pragma once

// Numerical checks of the random-exploration concentration results on the
// finite-rank cosine Mercer kernel. Everything lives in the J-dimensional
// feature space, where the kernel is exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "reds/domain.hpp"
#include "reds/errors.hpp"
#include "reds/gp.hpp"
#include "reds/kernels.hpp"

namespace reds::theory {

inline constexpr std::size_t kDefaultGridSize = 10000;

/// Evenly spaced probe grid on [0,1], endpoints included.
inline PointSet unit_grid(std::size_t m = kDefaultGridSize) {
  if (m < 2) throw InvalidArgument("unit_grid: needs at least 2 points");
  PointSet g(1, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) g(0, static_cast<Eigen::Index>(i)) = static_cast<double>(i) / static_cast<double>(m - 1);
  return g;
}

/// n i.i.d. uniform points on [0,1].
inline PointSet sample_unit_interval(std::size_t n, Engine& eng) {
  PointSet X(1, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < X.cols(); ++i) X(0, i) = uniform01(eng);
  return X;
}

/// Grid suprema of the head sums N(R) = sup_x sum_{j<=R} phi_j(x)^2 (R = 1..J)
/// and the tail sums T(R) = sup_x sum_{R<j<=J} lambda_j phi_j(x)^2 (R = 0..J).
struct SpectralTables {
  std::vector<double> head;  // head[R], head[0] unused
  std::vector<double> tail;  // tail[R], tail[J] = 0
};

inline SpectralTables spectral_tables(const MercerSpec& spec, std::size_t grid_size = kDefaultGridSize) {
  spec.validate();
  const int J = spec.rank;
  const PointSet grid = unit_grid(grid_size);
  SpectralTables t{std::vector<double>(static_cast<std::size_t>(J) + 1, 0.0),
                   std::vector<double>(static_cast<std::size_t>(J) + 1, 0.0)};
  std::vector<double> phi2(static_cast<std::size_t>(J) + 1), weighted(static_cast<std::size_t>(J) + 1);
  for (Eigen::Index g = 0; g < grid.cols(); ++g) {
    const double x = grid(0, g);
    for (int j = 1; j <= J; ++j) {
      const double p = spec.eigenfunction(j, x);
      phi2[static_cast<std::size_t>(j)] = p * p;
      weighted[static_cast<std::size_t>(j)] = spec.eigenvalue(j) * p * p;
    }
    double head = 0.0;
    for (int R = 1; R <= J; ++R) {
      head += phi2[static_cast<std::size_t>(R)];
      t.head[static_cast<std::size_t>(R)] = std::max(t.head[static_cast<std::size_t>(R)], head);
    }
    double tail = 0.0;
    for (int R = J - 1; R >= 0; --R) {
      tail += weighted[static_cast<std::size_t>(R) + 1];
      t.tail[static_cast<std::size_t>(R)] = std::max(t.tail[static_cast<std::size_t>(R)], tail);
    }
  }
  return t;
}

/// Spectral function N(R), 1 <= R <= J.
inline double spectral_function_N(const MercerSpec& spec, int R, std::size_t grid_size = kDefaultGridSize) {
  if (R < 1 || R > spec.rank) throw InvalidArgument("spectral_function_N: R must lie in [1, J]");
  const PointSet grid = unit_grid(grid_size);
  double best = 0.0;
  for (Eigen::Index g = 0; g < grid.cols(); ++g) {
    double s = 0.0;
    for (int j = 1; j <= R; ++j) {
      const double p = spec.eigenfunction(j, grid(0, g));
      s += p * p;
    }
    best = std::max(best, s);
  }
  return best;
}

/// Tail function T(R), 0 <= R < J, within the truncation.
inline double tail_function_T(const MercerSpec& spec, int R, std::size_t grid_size = kDefaultGridSize) {
  if (R < 0 || R >= spec.rank) throw InvalidArgument("tail_function_T: R must lie in [0, J)");
  const PointSet grid = unit_grid(grid_size);
  double best = 0.0;
  for (Eigen::Index g = 0; g < grid.cols(); ++g) {
    double s = 0.0;
    for (int j = R + 1; j <= spec.rank; ++j) {
      const double p = spec.eigenfunction(j, grid(0, g));
      s += spec.eigenvalue(j) * p * p;
    }
    best = std::max(best, s);
  }
  return best;
}

/// Whether R belongs to both R-sets at sample size n:
///   N(R) <= n / (1944 log(6n / delta))  and
///   max{42 T(R), n lambda_{R+1}} log(12 / delta) <= tau / 27.
inline bool in_r_set(const MercerSpec& spec, const SpectralTables& tables, std::uint64_t n, int R, double delta,
                     double tau) {
  if (R < 1 || R > spec.rank || n == 0) return false;
  const double nd = static_cast<double>(n);
  const bool first = tables.head[static_cast<std::size_t>(R)] <= nd / (1944.0 * std::log(6.0 * nd / delta));
  const double worst = std::max(42.0 * tables.tail[static_cast<std::size_t>(R)], nd * spec.eigenvalue(R + 1));
  const bool second = worst * std::log(12.0 / delta) <= tau / 27.0;
  return first && second;
}

struct NbarReport {
  bool feasible = false;
  std::uint64_t min_feasible_n = 0;  // smallest n with a non-empty R-set
  int witness_R = 0;
  std::uint64_t floor_term = 0;      // ceil(729 F^4 log(12 / delta))
  std::uint64_t nbar = 0;            // max of the two; 0 when infeasible
  std::uint64_t cap = 0;
};

/// Sample-size threshold for the concentration results. For a fixed R the
/// first condition holds on a half-line [n_lo(R), inf) and the second on
/// [1, n_hi(R)], so the minimum over R of n_lo(R) (when n_lo <= n_hi) is the
/// exact smallest feasible n; n_lo comes from doubling plus bisection.
inline NbarReport nbar(const MercerSpec& spec, double delta, double tau, std::uint64_t cap = 1'000'000'000ULL,
                       std::size_t grid_size = kDefaultGridSize) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("nbar: delta must lie in (0,1)");
  if (!(tau > 0.0)) throw InvalidArgument("nbar: tau must be > 0");
  const SpectralTables tables = spectral_tables(spec, grid_size);
  const double logd = std::log(12.0 / delta);
  const double F = spec.eigenfunction_bound;

  NbarReport rep;
  rep.cap = cap;
  rep.floor_term = static_cast<std::uint64_t>(std::ceil(729.0 * F * F * F * F * logd));

  auto first_holds = [&](std::uint64_t n, int R) {
    const double nd = static_cast<double>(n);
    return tables.head[static_cast<std::size_t>(R)] <= nd / (1944.0 * std::log(6.0 * nd / delta));
  };

  std::optional<std::uint64_t> best;
  for (int R = 1; R <= spec.rank; ++R) {
    if (42.0 * tables.tail[static_cast<std::size_t>(R)] * logd > tau / 27.0) continue;
    const double lam_next = spec.eigenvalue(R + 1);
    std::uint64_t n_hi = cap;
    if (lam_next > 0.0) {
      const double bound = tau / (27.0 * logd * lam_next);
      if (bound < 1.0) continue;
      n_hi = std::min<std::uint64_t>(cap, static_cast<std::uint64_t>(std::floor(bound)));
    }
    std::uint64_t lo = 1, hi = 1;
    while (!first_holds(hi, R)) {
      lo = hi + 1;
      if (hi >= n_hi) break;
      hi = std::min(n_hi, hi * 2);
    }
    if (!first_holds(hi, R)) continue;
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (first_holds(mid, R)) hi = mid;
      else lo = mid + 1;
    }
    if (!best || hi < *best) {
      best = hi;
      rep.witness_R = R;
    }
  }
  if (best) {
    rep.feasible = true;
    rep.min_feasible_n = *best;
    rep.nbar = std::max(*best, rep.floor_term);
  }
  return rep;
}

/// Sample covariance in feature coordinates, Zhat = Psi^T Psi + tau I, and its
/// expectation under the uniform measure, Z = diag(n lambda_j + tau).
struct OperatorPair {
  Eigen::MatrixXd Zhat;
  Eigen::VectorXd Z;
};

inline OperatorPair operator_pair(const MercerSpec& spec, const PointSet& X, double tau) {
  const int J = spec.rank;
  OperatorPair p;
  p.Zhat = Eigen::MatrixXd::Zero(J, J);
  if (X.cols() > 0) {
    const Eigen::MatrixXd Psi = feature_matrix(spec, X);
    p.Zhat.selfadjointView<Eigen::Lower>().rankUpdate(Psi.transpose());
    p.Zhat.triangularView<Eigen::StrictlyUpper>() = p.Zhat.transpose();
  }
  p.Zhat.diagonal().array() += tau;
  p.Z.resize(J);
  for (int j = 1; j <= J; ++j) p.Z[j - 1] = static_cast<double>(X.cols()) * spec.eigenvalue(j) + tau;
  return p;
}

/// ||Z^-1/2 Zhat Z^-1/2 - I||_2 via a symmetric eigendecomposition.
inline double operator_deviation(const MercerSpec& spec, const PointSet& X, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("operator_deviation: tau must be > 0");
  const OperatorPair p = operator_pair(spec, X, tau);
  const Eigen::VectorXd s = p.Z.array().rsqrt();
  Eigen::MatrixXd M = s.asDiagonal() * p.Zhat * s.asDiagonal();
  M.diagonal().array() -= 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// psi_x^T Zhat^-1 psi_x and psi_x^T Z^-1 psi_x at every probe.
struct QuadraticForms {
  Eigen::VectorXd sample;
  Eigen::VectorXd expected;
};

inline QuadraticForms quadratic_forms(const MercerSpec& spec, const OperatorPair& p, const PointSet& probes) {
  const Eigen::MatrixXd Fp = feature_matrix(spec, probes);  // m x J
  Eigen::LLT<Eigen::MatrixXd> llt(p.Zhat);
  const Eigen::MatrixXd S = llt.solve(Fp.transpose());  // J x m
  QuadraticForms q;
  q.sample = (Fp.transpose().array() * S.array()).colwise().sum().transpose();
  q.expected = (Fp.array().square().rowwise() * p.Z.cwiseInverse().transpose().array()).rowwise().sum();
  return q;
}

/// tau psi_x^T Zhat^-1 psi_x, the feature-space form of the posterior variance.
inline Eigen::VectorXd feature_space_variance(const MercerSpec& spec, const PointSet& X, double tau,
                                              const PointSet& probes) {
  return tau * quadratic_forms(spec, operator_pair(spec, X, tau), probes).sample;
}

struct VarianceRatioReport {
  bool applicable = false;  // measured deviation below 1/3
  double deviation = 0.0;
  double factor = 0.0;  // sqrt(1-b) / (sqrt(1-b) - sqrt(2b))
  double max_ratio = 0.0;
  std::vector<bool> probe_pass;
  bool all_pass = true;
};

/// Whenever b = ||Z^-1/2 Zhat Z^-1/2 - I|| < 1/3, every probe must satisfy
/// psi^T Zhat^-1 psi <= factor(b) psi^T Z^-1 psi.
inline VarianceRatioReport variance_ratio_check(const MercerSpec& spec, const PointSet& X, double tau,
                                                const PointSet& probes) {
  VarianceRatioReport rep;
  rep.deviation = operator_deviation(spec, X, tau);
  if (!(rep.deviation < 1.0 / 3.0)) return rep;
  rep.applicable = true;
  const double b = rep.deviation;
  rep.factor = std::sqrt(1.0 - b) / (std::sqrt(1.0 - b) - std::sqrt(2.0 * b));
  const QuadraticForms q = quadratic_forms(spec, operator_pair(spec, X, tau), probes);
  rep.probe_pass.resize(static_cast<std::size_t>(probes.cols()));
  for (Eigen::Index i = 0; i < probes.cols(); ++i) {
    const double ratio = q.sample[i] / q.expected[i];
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    // Relative slack of 1e-10 absorbs the solve's round-off at b = 0.
    const bool ok = q.sample[i] <= rep.factor * q.expected[i] * (1.0 + 1e-10);
    rep.probe_pass[static_cast<std::size_t>(i)] = ok;
    rep.all_pass = rep.all_pass && ok;
  }
  return rep;
}

struct InfoGainBoundReport {
  double lhs = 0.0;        // grid sup of psi^T Z^-1 psi
  double info_gain = 0.0;  // 1/2 log det(I + K / tau)
  double rhs = 0.0;        // 54 F^2 / (13 n) * info_gain
  double ratio = 0.0;      // lhs / rhs
  bool pass = false;
};

/// sup_x psi_x^T Z^-1 psi_x <= (54 F^2 / 13 n) * information gain of X.
inline InfoGainBoundReport info_gain_bound_check(const MercerSpec& spec, const PointSet& X, double tau,
                                                 const PointSet& grid) {
  if (X.cols() < 1) throw InvalidArgument("info_gain_bound_check: needs n >= 1");
  if (!(tau > 0.0)) throw InvalidArgument("info_gain_bound_check: tau must be > 0");
  const double n = static_cast<double>(X.cols());
  InfoGainBoundReport rep;
  const Eigen::MatrixXd Fg = feature_matrix(spec, grid);
  Eigen::VectorXd zinv(spec.rank);
  for (int j = 1; j <= spec.rank; ++j) zinv[j - 1] = 1.0 / (n * spec.eigenvalue(j) + tau);
  rep.lhs = (Fg.array().square().rowwise() * zinv.transpose().array()).rowwise().sum().maxCoeff();
  rep.info_gain = info_gain(FiniteRankMercer{spec}, X, tau);
  const double F = spec.eigenfunction_bound;
  rep.rhs = 54.0 * F * F / (13.0 * n) * rep.info_gain;
  rep.ratio = rep.lhs / rep.rhs;
  rep.pass = rep.lhs <= rep.rhs;
  return rep;
}

struct DecayFit {
  std::vector<double> n_grid;
  std::vector<double> sup_var;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<std::string> warnings;
};

/// Least-squares slope of log sup_var against log n. Non-positive variances
/// are dropped with a warning; fewer than four usable points is an error.
inline DecayFit decay_fit(const std::vector<std::pair<double, double>>& checkpoints) {
  DecayFit fit;
  for (const auto& [n, v] : checkpoints) {
    if (!(v > 0.0)) {
      fit.warnings.push_back("dropped checkpoint n=" + std::to_string(n) + " with non-positive variance");
      continue;
    }
    if (!fit.n_grid.empty() && !(n > fit.n_grid.back())) throw InvalidArgument("decay_fit: n-grid must increase");
    fit.n_grid.push_back(n);
    fit.sup_var.push_back(v);
  }
  if (fit.n_grid.size() < 4) throw InsufficientData("decay_fit: fewer than 4 usable checkpoints");
  const auto k = static_cast<Eigen::Index>(fit.n_grid.size());
  Eigen::MatrixXd A(k, 2);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    A(i, 0) = std::log(fit.n_grid[static_cast<std::size_t>(i)]);
    A(i, 1) = 1.0;
    b[i] = std::log(fit.sup_var[static_cast<std::size_t>(i)]);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
  fit.slope = coef[0];
  fit.intercept = coef[1];
  return fit;
}

/// Worst-case posterior variance over the probe grid after conditioning on X
/// (exact Cholesky fit with the usual jitter ladder when tau = 0).
inline double sup_grid_variance(const MercerSpec& spec, const PointSet& X, double tau, const PointSet& grid) {
  const PosteriorModel m = fit(FiniteRankMercer{spec}, X, Eigen::VectorXd::Zero(X.cols()), tau);
  return m.variances_mercer(grid).maxCoeff();
}

/// One uniform-sampling sweep: draws max(checkpoints) points once and measures
/// the sup-grid variance on each nested prefix.
inline std::vector<std::pair<double, double>> decay_sweep(const MercerSpec& spec, double tau,
                                                          const std::vector<std::size_t>& checkpoints,
                                                          const RngSeed& seed, const PointSet& grid) {
  if (checkpoints.empty()) return {};
  Engine eng = make_engine(seed);
  const std::size_t n_max = *std::max_element(checkpoints.begin(), checkpoints.end());
  const PointSet X = sample_unit_interval(n_max, eng);
  std::vector<std::pair<double, double>> out;
  for (std::size_t n : checkpoints)
    out.emplace_back(static_cast<double>(n), sup_grid_variance(spec, X.leftCols(static_cast<Eigen::Index>(n)), tau, grid));
  return out;
}

}  // namespace reds::theory
