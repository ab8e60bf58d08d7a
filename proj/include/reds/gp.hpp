#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "reds/domain.hpp"
#include "reds/errors.hpp"
#include "reds/kernels.hpp"

namespace reds {

/// Additive jitter ladder tried in order until the factorization succeeds.
inline constexpr std::array<double, 5> kJitterLadder{0.0, 1e-10, 1e-8, 1e-6, 1e-4};

/// Raw variances below this are counted as a health metric before clamping.
inline constexpr double kNegativeVarianceTolerance = 1e-6;

namespace detail {

/// Cholesky that also rejects pivots lost in round-off.
inline std::optional<Eigen::LLT<Eigen::MatrixXd>> try_cholesky(const Eigen::MatrixXd& A) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const double scale = A.diagonal().maxCoeff();
  const double floor =
      static_cast<double>(A.rows()) * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
  const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
  if ((piv.array().square() <= floor).any() || !piv.allFinite()) return std::nullopt;
  return llt;
}

}  // namespace detail

/// Exact GP posterior conditioned on (X, Y) with regularizer tau.
/// Immutable after fit; queries are safe from many threads.
class PosteriorModel {
public:
  PosteriorModel(KernelSpec kernel, PointSet X, Eigen::VectorXd Y, double tau, double tau_eff,
                 Eigen::LLT<Eigen::MatrixXd> llt, Eigen::VectorXd alpha)
      : kernel_(std::move(kernel)),
        X_(std::move(X)),
        Y_(std::move(Y)),
        tau_(tau),
        tau_eff_(tau_eff),
        llt_(std::move(llt)),
        alpha_(std::move(alpha)),
        negatives_(std::make_shared<std::atomic<std::size_t>>(0)) {}

  const KernelSpec& kernel() const { return kernel_; }
  const PointSet& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return Y_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.cols()); }
  bool is_prior() const { return X_.cols() == 0; }
  double tau() const { return tau_; }
  double tau_eff() const { return tau_eff_; }
  Eigen::MatrixXd cholesky_factor() const { return is_prior() ? Eigen::MatrixXd() : Eigen::MatrixXd(llt_.matrixL()); }
  const Eigen::VectorXd& weights() const { return alpha_; }

  /// Raw variances that came out below -1e-6 before clamping.
  std::size_t negative_variance_count() const { return negatives_->load(std::memory_order_relaxed); }

  /// Posterior means at every column of C.
  Eigen::VectorXd means(const PointSet& C) const {
    if (is_prior()) return Eigen::VectorXd::Zero(C.cols());
    return cross_covariance(kernel_, X_, C).transpose() * alpha_;
  }

  /// Posterior variances at every column of C, clamped at zero.
  Eigen::VectorXd variances(const PointSet& C) const {
    Eigen::VectorXd var = kernel_diagonal(kernel_, C);
    if (is_prior()) return var;
    constexpr Eigen::Index kBlock = 2048;
    for (Eigen::Index start = 0; start < C.cols(); start += kBlock) {
      const Eigen::Index len = std::min(kBlock, C.cols() - start);
      Eigen::MatrixXd V = cross_covariance(kernel_, X_, C.middleCols(start, len));
      llt_.matrixL().solveInPlace(V);
      var.segment(start, len) -= V.colwise().squaredNorm().transpose();
    }
    return clamp(std::move(var));
  }

  double mean(const PointRef& x) const { return means(PointSet(x))[0]; }
  double variance(const PointRef& x) const { return variances(PointSet(x))[0]; }

  /// Same quantity as variances() for FiniteRankMercer kernels, evaluated in
  /// feature coordinates: k(x,x) - psi_x^T M psi_x with M = Psi^T (K + tau I)^-1 Psi
  /// formed once, so a 10^4-point probe grid costs O(m J^2).
  Eigen::VectorXd variances_mercer(const PointSet& C) const {
    const auto* fr = std::get_if<FiniteRankMercer>(&kernel_);
    if (fr == nullptr) throw InvalidArgument("variances_mercer: kernel is not FiniteRankMercer");
    const Eigen::MatrixXd Fc = feature_matrix(fr->spec, C);
    Eigen::VectorXd var = Fc.rowwise().squaredNorm();
    if (is_prior()) return var;
    Eigen::MatrixXd W = feature_matrix(fr->spec, X_);
    llt_.matrixL().solveInPlace(W);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(W.cols(), W.cols());
    M.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose());
    M.triangularView<Eigen::StrictlyUpper>() = M.transpose();
    var -= ((Fc * M).array() * Fc.array()).rowwise().sum().matrix();
    return clamp(std::move(var));
  }

private:
  Eigen::VectorXd clamp(Eigen::VectorXd var) const {
    std::size_t neg = 0;
    for (Eigen::Index i = 0; i < var.size(); ++i) {
      if (var[i] < -kNegativeVarianceTolerance) ++neg;
      if (var[i] < 0.0) var[i] = 0.0;
    }
    if (neg) negatives_->fetch_add(neg, std::memory_order_relaxed);
    return var;
  }

  KernelSpec kernel_;
  PointSet X_;
  Eigen::VectorXd Y_;
  double tau_;
  double tau_eff_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  std::shared_ptr<std::atomic<std::size_t>> negatives_;
};

/// Factorizes K + tau_eff I, escalating jitter along kJitterLadder.
inline PosteriorModel fit(const KernelSpec& kernel, PointSet X, Eigen::VectorXd Y, double tau) {
  if (X.cols() != Y.size()) throw InvalidArgument("fit: |X| != |Y|");
  if (!(tau >= 0.0)) throw InvalidArgument("fit: tau must be >= 0");
  if (X.cols() == 0) return PosteriorModel(kernel, std::move(X), std::move(Y), tau, tau, {}, Eigen::VectorXd());

  Eigen::MatrixXd K = gram(kernel, X);
  double tried = tau;
  for (double jitter : kJitterLadder) {
    tried = tau + jitter;
    Eigen::MatrixXd A = K;
    A.diagonal().array() += tried;
    if (auto llt = detail::try_cholesky(A)) {
      Eigen::VectorXd alpha = llt->solve(Y);
      return PosteriorModel(kernel, std::move(X), std::move(Y), tau, tried, std::move(*llt), std::move(alpha));
    }
  }
  throw NumericalDegeneracy("fit: Cholesky of K + tau I failed", tried);
}

inline double mean(const PosteriorModel& m, const PointRef& x) { return m.mean(x); }
inline double variance(const PosteriorModel& m, const PointRef& x) { return m.variance(x); }

/// Information gain 1/2 log det(I + K / tau), via the Cholesky diagonal.
inline double info_gain(const KernelSpec& kernel, const PointSet& X, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("info_gain: tau must be > 0");
  if (X.cols() < 1) throw InvalidArgument("info_gain: needs at least one point");
  Eigen::MatrixXd A = gram(kernel, X) / tau;
  A.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalDegeneracy("info_gain: I + K/tau not positive definite", tau);
  return llt.matrixLLT().diagonal().array().log().sum();
}

/// Active candidate with the largest posterior variance (smallest index on ties).
inline std::pair<std::size_t, double> max_active_variance(const PosteriorModel& m, const DiscreteDomain& dom) {
  const Eigen::VectorXd v = m.variances(dom.points());
  return argmax_active(dom, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace reds
