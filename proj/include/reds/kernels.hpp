#pragma once

#include <cmath>
#include <numbers>
#include <variant>

#include <Eigen/Core>

#include "reds/domain.hpp"
#include "reds/errors.hpp"

namespace reds {

struct SquaredExponential {
  double lengthscale = 0.2;
};

/// Matérn kernel; only the closed forms nu in {1/2, 3/2, 5/2} are supported.
struct Matern {
  double nu = 2.5;
  double lengthscale = 1.0;
};

/// Synthetic kernel on [0,1] with a known Mercer expansion under the uniform
/// measure: phi_j(x) = sqrt(2) cos(pi j x), lambda_j = c j^-beta, j = 1..J.
///
/// The default scale c = 1 / (2 zeta(beta)) makes sum_j lambda_j phi_j(x)^2
/// at most 1 for the untruncated expansion, so k(x,x) <= 1 holds for every J.
struct MercerSpec {
  double beta = 2.0;
  int rank = 500;
  double scale = 0.0;  // 0 selects 1 / (2 zeta(beta))
  double eigenfunction_bound = std::numbers::sqrt2;

  static MercerSpec with_decay(double beta, int rank = 500) {
    MercerSpec s;
    s.beta = beta;
    s.rank = rank;
    s.scale = 1.0 / (2.0 * std::riemann_zeta(beta));
    return s;
  }

  double c() const { return scale > 0.0 ? scale : 1.0 / (2.0 * std::riemann_zeta(beta)); }

  /// lambda_j for 1-based j; zero past the truncation rank.
  double eigenvalue(int j) const { return (j >= 1 && j <= rank) ? c() * std::pow(static_cast<double>(j), -beta) : 0.0; }

  double eigenfunction(int j, double x) const { return std::numbers::sqrt2 * std::cos(std::numbers::pi * j * x); }

  void validate() const {
    if (!(beta > 1.0)) throw InvalidArgument("MercerSpec: beta must exceed 1");
    if (rank < 1) throw InvalidArgument("MercerSpec: rank must be >= 1");
  }
};

struct FiniteRankMercer {
  MercerSpec spec;
};

using KernelSpec = std::variant<SquaredExponential, Matern, FiniteRankMercer>;

namespace detail {

inline double matern_closed_form(double nu, double r) {
  if (nu == 0.5) return std::exp(-r);
  if (nu == 1.5) {
    const double s = std::sqrt(3.0) * r;
    return (1.0 + s) * std::exp(-s);
  }
  if (nu == 2.5) {
    const double s = std::sqrt(5.0) * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
  }
  throw InvalidArgument("Matern: nu must be one of 1/2, 3/2, 5/2");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

/// Coordinates of psi_x in the orthonormal RKHS basis upsilon_j = sqrt(lambda_j) phi_j.
inline Eigen::VectorXd feature_map(const MercerSpec& spec, double x) {
  Eigen::VectorXd out(spec.rank);
  const double c = spec.c();
  for (int j = 1; j <= spec.rank; ++j)
    out[j - 1] = std::sqrt(c * std::pow(static_cast<double>(j), -spec.beta)) * spec.eigenfunction(j, x);
  return out;
}

/// Row i holds feature_map(X(0, i)).
inline Eigen::MatrixXd feature_matrix(const MercerSpec& spec, const PointSet& X) {
  if (X.rows() != 1) throw InvalidArgument("FiniteRankMercer kernels are defined on [0,1]");
  Eigen::MatrixXd out(X.cols(), spec.rank);
  for (Eigen::Index i = 0; i < X.cols(); ++i) out.row(i) = feature_map(spec, X(0, i)).transpose();
  return out;
}

inline double kernel_eval(const KernelSpec& k, const PointRef& x, const PointRef& xp) {
  return std::visit(detail::overloaded{
                        [&](const SquaredExponential& se) {
                          const double d2 = (x - xp).squaredNorm();
                          return std::exp(-0.5 * d2 / (se.lengthscale * se.lengthscale));
                        },
                        [&](const Matern& m) { return detail::matern_closed_form(m.nu, (x - xp).norm() / m.lengthscale); },
                        [&](const FiniteRankMercer& fr) {
                          // Same term order as feature_map(x).dot(feature_map(xp)).
                          const Eigen::VectorXd a = feature_map(fr.spec, x[0]);
                          const Eigen::VectorXd b = feature_map(fr.spec, xp[0]);
                          double s = 0.0;
                          for (Eigen::Index j = 0; j < a.size(); ++j) s += a[j] * b[j];
                          return s;
                        },
                    },
                    k);
}

/// n x m cross-covariance between columns of A and columns of B.
inline Eigen::MatrixXd cross_covariance(const KernelSpec& k, const PointSet& A, const PointSet& B) {
  if (const auto* fr = std::get_if<FiniteRankMercer>(&k)) {
    return feature_matrix(fr->spec, A) * feature_matrix(fr->spec, B).transpose();
  }
  Eigen::MatrixXd out(A.cols(), B.cols());
  for (Eigen::Index j = 0; j < B.cols(); ++j)
    for (Eigen::Index i = 0; i < A.cols(); ++i) out(i, j) = kernel_eval(k, A.col(i), B.col(j));
  return out;
}

/// Gram matrix [k(x_i, x_j)]; exactly symmetric.
inline Eigen::MatrixXd gram(const KernelSpec& k, const PointSet& X) {
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd K(n, n);
  if (const auto* fr = std::get_if<FiniteRankMercer>(&k)) {
    const Eigen::MatrixXd F = feature_matrix(fr->spec, X);
    K.setZero();
    K.selfadjointView<Eigen::Lower>().rankUpdate(F);
  } else {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i) K(i, j) = kernel_eval(k, X.col(i), X.col(j));
  }
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  return K;
}

/// k(x, x) for every column of X.
inline Eigen::VectorXd kernel_diagonal(const KernelSpec& k, const PointSet& X) {
  Eigen::VectorXd d(X.cols());
  if (std::holds_alternative<FiniteRankMercer>(k)) {
    for (Eigen::Index i = 0; i < X.cols(); ++i) d[i] = kernel_eval(k, X.col(i), X.col(i));
  } else {
    d.setOnes();  // stationary kernels are normalized
  }
  return d;
}

/// Rejects non-positive or non-finite lengthscales and unsupported smoothness.
inline void validate_kernel(const KernelSpec& k) {
  std::visit(detail::overloaded{
                 [](const SquaredExponential& se) {
                   if (!(std::isfinite(se.lengthscale) && se.lengthscale > 0.0))
                     throw InvalidArgument("SquaredExponential: lengthscale must be finite and > 0");
                 },
                 [](const Matern& m) {
                   if (!(std::isfinite(m.lengthscale) && m.lengthscale > 0.0))
                     throw InvalidArgument("Matern: lengthscale must be finite and > 0");
                   if (m.nu != 0.5 && m.nu != 1.5 && m.nu != 2.5)
                     throw InvalidArgument("Matern: nu must be 0.5, 1.5 or 2.5");
                 },
                 [](const FiniteRankMercer& fr) { fr.spec.validate(); },
             },
             k);
}

inline bool is_stationary(const KernelSpec& k) { return !std::holds_alternative<FiniteRankMercer>(k); }

}  // namespace reds
