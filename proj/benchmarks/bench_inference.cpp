#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "sumalign/semimarkov.hpp"
#include "sumalign/synthetic.hpp"
#include "sumalign/trainer.hpp"

using namespace sumalign;

namespace {

struct Fixture {
  SyntheticCorpus corpus;
  TrainConfig config;
  Models models;
  std::vector<JumpGeometry> geos;
};

// Documents of `doc_len` tokens, phrase bounds 3, relative jumps.
const Fixture& fixture(int doc_len) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(doc_len);
  if (it != cache.end()) return it->second;
  Fixture f;
  auto sc = planted_config(7);
  sc.pairs = 16;
  sc.doc_len = doc_len;
  sc.summary_len = doc_len / 4;
  sc.with_parses = false;
  f.corpus = generate_corpus(sc);
  f.config.jump_kind = JumpKind::Relative;
  f.config.max_doc_phrase_len = 3;
  f.config.max_summary_phrase_len = 3;
  f.models = init_params(f.corpus.pairs, f.config);
  for (const auto& p : f.corpus.pairs) f.geos.push_back(f.models.jump.geometry(p, f.config.max_doc_phrase_len));
  return cache.emplace(doc_len, std::move(f)).first->second;
}

void BM_Forward(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const double beam = static_cast<double>(state.range(1)) / 100.0;
  const auto scores = score_pair(f.corpus.pairs[0], f.models.jump, f.geos[0], f.models.rewrite);
  for (auto _ : state) benchmark::DoNotOptimize(forward(scores, beam).total_loglik);
}
BENCHMARK(BM_Forward)->Args({20, 100})->Args({40, 100})->Args({40, 50})->Args({80, 100})->Args({80, 50});

void BM_Viterbi(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const auto scores = score_pair(f.corpus.pairs[0], f.models.jump, f.geos[0], f.models.rewrite);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(scores).best_loglik);
}
BENCHMARK(BM_Viterbi)->Arg(20)->Arg(40)->Arg(80);

void BM_EStep(benchmark::State& state) {
  const auto& f = fixture(40);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(e_step(f.corpus.pairs, f.geos, f.models, 1.0, workers).loglik);
}
BENCHMARK(BM_EStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
