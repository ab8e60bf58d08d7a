#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>

#include "reds/domain.hpp"
#include "reds/errors.hpp"

namespace reds {

/// Branin on [0,1]^2, negated and rescaled so that the maximum is about 1.047.
inline double branin(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  const double u = 15.0 * x1 - 5.0;
  const double v = 15.0 * x2;
  const double a = v - 5.1 * u * u / (4.0 * pi * pi) + 5.0 * u / pi - 6.0;
  return -(a * a + (10.0 - 10.0 / (8.0 * pi)) * std::cos(u) - 44.81) / 51.95;
}

namespace hartmann {

inline constexpr std::array<double, 4> kWeights{1.0, 1.2, 3.0, 3.2};

inline constexpr std::array<std::array<double, 6>, 4> kA{{
    {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
    {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
    {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
    {17.0, 8.0, 0.05, 10.0, 0.1, 14.0},
}};

// C = 1e-4 * kCScaled
inline constexpr std::array<std::array<double, 6>, 4> kCScaled{{
    {1312, 1696, 5569, 124, 8283, 5886},
    {2329, 4135, 8307, 3736, 1004, 9991},
    {2348, 1451, 3522, 2883, 3047, 6650},
    {4047, 8828, 8732, 5743, 1091, 381},
}};

/// sum_i w_i exp(-sum_{j < d} A_ij (x_j - C_ij)^2) over the first d columns.
inline double evaluate(const PointRef& x, int d) {
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = x[j] - 1e-4 * kCScaled[i][static_cast<std::size_t>(j)];
      s += kA[i][static_cast<std::size_t>(j)] * diff * diff;
    }
    total += kWeights[i] * std::exp(-s);
  }
  return total;
}

}  // namespace hartmann

/// Uses the first four columns of the six-column A and C.
inline double hartmann4(const PointRef& x) {
  if (x.size() != 4) throw InvalidArgument("hartmann4: expects a 4-vector");
  return hartmann::evaluate(x, 4);
}

inline double hartmann6(const PointRef& x) {
  if (x.size() != 6) throw InvalidArgument("hartmann6: expects a 6-vector");
  return hartmann::evaluate(x, 6);
}

enum class BenchmarkName { Branin, Hartmann4, Hartmann6 };

inline std::string_view to_string(BenchmarkName n) {
  switch (n) {
    case BenchmarkName::Branin: return "branin";
    case BenchmarkName::Hartmann4: return "hartmann4";
    case BenchmarkName::Hartmann6: return "hartmann6";
  }
  return "unknown";
}

inline BenchmarkName parse_benchmark(std::string_view s) {
  if (s == "branin") return BenchmarkName::Branin;
  if (s == "hartmann4") return BenchmarkName::Hartmann4;
  if (s == "hartmann6") return BenchmarkName::Hartmann6;
  throw ConfigError("unknown benchmark: " + std::string(s));
}

/// A benchmark objective with its experiment defaults: (a, b) bounds on f(x*),
/// candidate-set size, initial batch, kernel lengthscale.
struct BenchmarkSpec {
  BenchmarkName name = BenchmarkName::Branin;
  double sigma_noise = 0.0;
  std::optional<double> f_star;
  std::optional<std::size_t> x_star_idx;

  int dim() const {
    switch (name) {
      case BenchmarkName::Branin: return 2;
      case BenchmarkName::Hartmann4: return 4;
      case BenchmarkName::Hartmann6: return 6;
    }
    return 0;
  }
  Box box() const { return Box::unit(dim()); }

  double lower_bound() const { return name == BenchmarkName::Branin ? 0.5 : 0.0; }
  double upper_bound() const {
    switch (name) {
      case BenchmarkName::Branin: return 1.2;
      case BenchmarkName::Hartmann4: return 3.8;
      case BenchmarkName::Hartmann6: return 3.5;
    }
    return 0.0;
  }
  std::size_t default_domain_size() const {
    switch (name) {
      case BenchmarkName::Branin: return 2000;
      case BenchmarkName::Hartmann4: return 7000;
      case BenchmarkName::Hartmann6: return 20000;
    }
    return 0;
  }
  std::size_t default_n1() const { return name == BenchmarkName::Branin ? 50 : 100; }
  double default_lengthscale() const { return name == BenchmarkName::Branin ? 0.2 : 1.0; }

  double value(const PointRef& x) const {
    switch (name) {
      case BenchmarkName::Branin: return branin(x[0], x[1]);
      case BenchmarkName::Hartmann4: return hartmann4(x);
      case BenchmarkName::Hartmann6: return hartmann6(x);
    }
    return 0.0;
  }

  /// Caches the candidate-set maximizer.
  void cache_grid_oracle(const DiscreteDomain& dom) {
    const auto [idx, val] = grid_argmax([this](const PointRef& x) { return value(x); }, dom);
    x_star_idx = idx;
    f_star = val;
  }
};

inline BenchmarkSpec make_benchmark(BenchmarkName name, double sigma_noise = 0.0) {
  BenchmarkSpec s;
  s.name = name;
  s.sigma_noise = sigma_noise;
  return s;
}

/// f(x) + sigma_noise * N(0, 1); returns f(x) unchanged when sigma_noise = 0.
inline double observe(const BenchmarkSpec& spec, const PointRef& x, Engine& eng) {
  const double f = spec.value(x);
  if (spec.sigma_noise == 0.0) return f;
  std::normal_distribution<double> gauss(0.0, 1.0);
  return f + spec.sigma_noise * gauss(eng);
}

inline double observe(const BenchmarkSpec& spec, const PointRef& x, const RngSeed& seed) {
  Engine eng = make_engine(seed);
  return observe(spec, x, eng);
}

/// Observation oracle over a benchmark that owns its noise stream.
class BenchmarkObjective {
public:
  BenchmarkObjective(BenchmarkSpec spec, const RngSeed& noise_seed)
      : spec_(std::move(spec)), eng_(make_engine(noise_seed)) {}

  double observe(const PointRef& x) { return reds::observe(spec_, x, eng_); }
  double value(const PointRef& x) const { return spec_.value(x); }
  const BenchmarkSpec& spec() const { return spec_; }

private:
  BenchmarkSpec spec_;
  Engine eng_;
};

}  // namespace reds
