#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "reds/errors.hpp"

namespace reds {

using Point = Eigen::VectorXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;
/// Points stored column-wise: a d x m matrix holds m points of dimension d.
using PointSet = Eigen::MatrixXd;

/// Axis-aligned box [lower, upper] in R^d.
class Box {
public:
  Box(Eigen::VectorXd lower, Eigen::VectorXd upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() < 1 || lower_.size() != upper_.size())
      throw InvalidArgument("Box: bounds must share a dimension >= 1");
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
      if (!(lower_[i] < upper_[i])) throw InvalidArgument("Box: lower must be < upper on every axis");
  }

  static Box unit(int d) { return Box(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)); }

  int dim() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  bool contains(const PointRef& x) const {
    if (x.size() != lower_.size()) return false;
    return ((x.array() >= lower_.array()) && (x.array() <= upper_.array())).all();
  }

private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// Identifies one deterministic random stream. Streams with different ids
/// under the same master seed are decorrelated through a splitmix64 mix.
struct RngSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

using Engine = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline Engine make_engine(const RngSeed& seed) {
  const std::uint64_t a = detail::splitmix64(seed.master_seed);
  const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(seed.stream_id + 0x632be59bd9b4e019ULL));
  const std::uint64_t c = detail::splitmix64(b);
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Engine(seq);
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// Finite candidate set with a mask of active points. Point order never
/// changes, so indices are stable identities across shrinking.
class DiscreteDomain {
public:
  DiscreteDomain(Box box, PointSet points) : box_(std::move(box)), points_(std::move(points)) {
    if (points_.cols() < 1) throw InvalidArgument("DiscreteDomain: needs at least one point");
    if (points_.rows() != box_.dim()) throw InvalidArgument("DiscreteDomain: point dimension mismatch");
    for (Eigen::Index i = 0; i < points_.cols(); ++i)
      if (!box_.contains(points_.col(i))) throw InvalidArgument("DiscreteDomain: point outside box");
    active_.assign(static_cast<std::size_t>(points_.cols()), 1);
    active_count_ = active_.size();
  }

  const Box& box() const { return box_; }
  int dim() const { return box_.dim(); }
  std::size_t size() const { return active_.size(); }
  const PointSet& points() const { return points_; }
  auto point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }

  bool is_active(std::size_t i) const { return active_[i] != 0; }
  std::size_t active_count() const { return active_count_; }
  const std::vector<char>& active_mask() const { return active_; }

  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> out;
    out.reserve(active_count_);
    for (std::size_t i = 0; i < active_.size(); ++i)
      if (active_[i]) out.push_back(i);
    return out;
  }

  /// Replaces the active mask. The new mask must keep at least one point.
  void set_active_mask(std::vector<char> mask) {
    if (mask.size() != active_.size()) throw InvalidArgument("set_active_mask: size mismatch");
    std::size_t count = 0;
    for (char& m : mask) {
      m = m ? 1 : 0;
      count += static_cast<std::size_t>(m);
    }
    if (count == 0) throw EmptyDomainError();
    active_ = std::move(mask);
    active_count_ = count;
  }

  void activate_all() {
    active_.assign(active_.size(), 1);
    active_count_ = active_.size();
  }

private:
  Box box_;
  PointSet points_;
  std::vector<char> active_;
  std::size_t active_count_ = 0;
};

/// m i.i.d. uniform points in the box, all active.
inline DiscreteDomain discretize(const Box& box, std::size_t m, const RngSeed& seed) {
  if (m == 0) throw InvalidArgument("discretize: m must be >= 1");
  Engine eng = make_engine(seed);
  PointSet pts(box.dim(), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd width = box.upper() - box.lower();
  for (Eigen::Index j = 0; j < pts.cols(); ++j)
    for (int i = 0; i < box.dim(); ++i) pts(i, j) = box.lower()[i] + width[i] * uniform01(eng);
  return DiscreteDomain(box, std::move(pts));
}

/// n indices drawn i.i.d. (with replacement) from the active subset.
inline std::vector<std::size_t> sample_uniform(const DiscreteDomain& dom, std::size_t n, Engine& eng) {
  if (dom.active_count() == 0) throw EmptyDomainError();
  const std::vector<std::size_t> active = dom.active_indices();
  std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
  std::vector<std::size_t> out(n);
  for (auto& idx : out) idx = active[pick(eng)];
  return out;
}

inline std::vector<std::size_t> sample_uniform(const DiscreteDomain& dom, std::size_t n, const RngSeed& seed) {
  Engine eng = make_engine(seed);
  return sample_uniform(dom, n, eng);
}

/// Active index with the largest value; ties go to the smallest index.
inline std::pair<std::size_t, double> argmax_active(const DiscreteDomain& dom, const std::vector<double>& values) {
  if (dom.active_count() == 0) throw EmptyDomainError();
  std::size_t best = dom.size();
  double best_val = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_active(i)) continue;
    if (best == dom.size() || values[i] > best_val) {
      best = i;
      best_val = values[i];
    }
  }
  return {best, best_val};
}

/// Brute-force maximizer of f over the active candidates.
inline std::pair<std::size_t, double> grid_argmax(const std::function<double(const PointRef&)>& f,
                                                  const DiscreteDomain& dom) {
  std::vector<double> values(dom.size(), 0.0);
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.is_active(i)) values[i] = f(dom.point(i));
  return argmax_active(dom, values);
}

}  // namespace reds
