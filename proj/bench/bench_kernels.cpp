// Serial reference kernels against the production kernels, plus whole-model
// throughput for scoring and training steps.

#include <benchmark/benchmark.h>

#include <random>

#include "gtan/dataset.hpp"
#include "gtan/kernels.hpp"
#include "gtan/metrics.hpp"
#include "gtan/synthetic.hpp"
#include "gtan/trainer.hpp"

using namespace gtan;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Tensor t(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.values()) v = u(rng);
  return t;
}

template <void (*Kernel)(const Tensor&, const Tensor&, Tensor&, bool)>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor(n, n, 1), b = random_tensor(n, n, 2);
  Tensor out(n, n);
  for (auto _ : state) {
    Kernel(a, b, out, false);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

BENCHMARK(BM_matmul<kernels::reference::matmul>)->Name("matmul/reference")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_matmul<kernels::matmul>)->Name("matmul/production")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_matmul<kernels::reference::matmul_tn>)->Name("matmul_tn/reference")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_matmul<kernels::matmul_tn>)->Name("matmul_tn/production")->RangeMultiplier(2)->Range(32, 256);

struct Fixture {
  data::Dataset ds;
  model::Model model;
  std::vector<model::PreparedQuestion> prepared;
  std::vector<std::vector<train::Pair>> pairs;

  Fixture() {
    corpus::SyntheticOptions o;
    o.num_questions = 200;
    ds = data::prepare_dataset(corpus::generate_synthetic(o), {}, 42);
    model = model::Model(model::ModelConfig{}, ds.vocab.size(), data::training_respondents(ds));
    model.initialize(42);
    for (const corpus::Question& q : ds.questions) {
      prepared.push_back(model::prepare_question(q, ds.tfidf, model));
      pairs.push_back(train::make_pairs(q));
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_evaluate(benchmark::State& state) {
  const Fixture& f = fixture();
  eval::EvalOptions o;
  o.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate_prepared(f.model, f.prepared, o).mrr);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.prepared.size()));
}
BENCHMARK(BM_evaluate)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();

void BM_question_gradient(benchmark::State& state) {
  const Fixture& f = fixture();
  std::size_t k = 0;
  for (auto _ : state) {
    const std::size_t i = k++ % f.prepared.size();
    benchmark::DoNotOptimize(train::question_gradient(f.model, f.prepared[i], f.pairs[i], 1.0).loss);
  }
}
BENCHMARK(BM_question_gradient);

}  // namespace

BENCHMARK_MAIN();
