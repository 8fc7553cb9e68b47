// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include "cclab/amplify.hpp"
#include "cclab/certify.hpp"
#include "cclab/cli.hpp"

using namespace cclab;

namespace {

struct ExactFixture {
  ProblemSpec spec = problems::xor_n(5);
  ProtocolPtr p = corrupted(separation_protocol("XOR", 5, 0.4), 6, 24);
  std::vector<InputPair> dom = spec.domain();
};

void BM_ExactError(benchmark::State& st) {
  ExactFixture f;
  for (auto _ : st) benchmark::DoNotOptimize(exact_error(*f.p, f.spec.truth(), f.dom));
}

void BM_ExactErrorSerial(benchmark::State& st) {
  ExactFixture f;
  for (auto _ : st) benchmark::DoNotOptimize(exact_error_serial(*f.p, f.spec.truth(), f.dom));
}

struct MeasureFixture {
  ProblemSpec spec = problems::xor_n(64);
  ProtocolPtr p = amplify_xor(corrupted(separation_protocol("XOR", 64, 0.4), 4, 6), 0.4, 0.05);
  std::vector<InputPair> in{{BitString(64), BitString(64)}};
};

void BM_Measure(benchmark::State& st) {
  MeasureFixture f;
  for (auto _ : st) benchmark::DoNotOptimize(measure(*f.p, f.spec.truth(), f.in, st.range(0), 0.99, 7));
}

void BM_MeasureSerial(benchmark::State& st) {
  MeasureFixture f;
  for (auto _ : st) benchmark::DoNotOptimize(measure_serial(*f.p, f.spec.truth(), f.in, st.range(0), 0.99, 7));
}

void BM_Rank(benchmark::State& st) {
  const QMatrix m = build_comm_matrix(problems::xor_n(st.range(0))).m;
  for (auto _ : st) benchmark::DoNotOptimize(exact_rank(m));
}

void BM_RankSerial(benchmark::State& st) {
  const QMatrix m = build_comm_matrix(problems::xor_n(st.range(0))).m;
  for (auto _ : st) benchmark::DoNotOptimize(exact_rank_serial(m));
}

}  // namespace

BENCHMARK(BM_ExactError)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactErrorSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Measure)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeasureSerial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rank)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RankSerial)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
