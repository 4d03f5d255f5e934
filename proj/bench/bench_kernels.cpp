#include "mglue/flow_operator.hpp"
#include "mglue/gluing.hpp"
#include "mglue/polynomial.hpp"

#include <benchmark/benchmark.h>

using namespace mglue;

namespace {

MorseModel curved(int n) {
  // Quartic coupling of every pair, index n/2.
  std::vector<double> eig;
  for (int i = 0; i < n; ++i) eig.push_back(i < n / 2 ? 1.0 + 0.1 * (n / 2 - 1 - i) : -1.0 - 0.1 * (i - n / 2));
  std::string expr = "0";
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j) expr += " + 0.01*x" + std::to_string(i) + "^2*x" + std::to_string(j) + "^2";
  return MorseModel(eig, n / 2, parse_polynomial(expr, n), "bench");
}

DiscretePath wave(const Grid& g, int n) {
  return DiscretePath::sample(g, n, [n](double s) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = 0.3 * std::sin(s + i);
    return v;
  });
}

void nodal(benchmark::State& st, Execution ex) {
  const int n = static_cast<int>(st.range(0));
  MorseModel m = curved(n);
  Grid g = Grid::symmetric(200, 0.002);
  FlowOperator op(m, g.spacing());
  DiscretePath w = wave(g, n);
  for (auto _ : st) benchmark::DoNotOptimize(op.nodal_nonlinearity(w, ex));
  st.SetItemsProcessed(st.iterations() * g.size());
}

void sweep(benchmark::State& st, Execution ex) {
  MorseModel m(std::vector<double>{1, -1}, 1, parse_polynomial("0.1*x1^2*x2", 2), "C1");
  ModelConstants k = compute_constants(m, 0.9, 0);
  GlueSettings s;
  s.strict = false;
  s.execution = ex;
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.3), y0 = Eigen::VectorXd::Constant(1, 0.3);
  for (auto _ : st)
    benchmark::DoNotOptimize(convergence_sweep(m, k, Cutoff::quintic(), x0, y0, {3, 4, 5, 6, 7, 8}, 1.0, s));
}

}  // namespace

BENCHMARK_CAPTURE(nodal, serial, Execution::serial)->Arg(2)->Arg(6);
BENCHMARK_CAPTURE(nodal, parallel, Execution::parallel)->Arg(2)->Arg(6);
BENCHMARK_CAPTURE(sweep, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
