// Runs REDS once on the noisy Branin benchmark and prints the per-epoch picture.
#include <cstdio>

#include "reds/reds.hpp"

int main() {
  using namespace reds;
  const BenchmarkSpec spec = make_benchmark(BenchmarkName::Branin, 0.2);
  DiscreteDomain dom = discretize(spec.box(), spec.default_domain_size(), {7, 0});
  BenchmarkObjective objective(spec, {7, 1});

  RunConfig cfg;
  cfg.variant = Variant::Noisy;
  cfg.B = spec.upper_bound();
  cfg.tau = 0.2;
  cfg.sigma_noise = 0.2;
  cfg.alpha = 1.0;
  cfg.n1 = 50;
  cfg.T = 1000;
  cfg.seed = {7, 2};

  const Trace trace = run_reds(objective, SquaredExponential{0.2}, std::move(dom), cfg);
  for (const auto& e : trace.epochs)
    std::printf("epoch %d: %4zu queries, active %4zu -> %4zu\n", e.r, e.queries, e.active_before, e.active_after);
  const auto regret = harness::cumulative_regret(trace, *trace.f_star);
  std::printf("cumulative regret after %zu steps: %.4f\n", regret.size(), regret.back());
  std::printf("compute time: %.3f ms\n", static_cast<double>(trace.total_wall_ns) * 1e-6);
}
