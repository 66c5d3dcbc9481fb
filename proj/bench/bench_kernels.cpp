// Serial vs OpenMP versions of the three parallel kernels on the ~500 KB
// synthetic corpus. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "elicit/extraction.hpp"
#include "elicit/ngram.hpp"
#include "synthetic_corpus.hpp"

using namespace elicit;

namespace {

const synth::Corpus& corpus() {
  static const synth::Corpus c = synth::make_corpus(1);
  return c;
}

const lm::ModelGrid& grid() {
  static const lm::ModelGrid g = lm::build_grid(corpus().documents);
  return g;
}

text::Tokens window() {
  std::mt19937_64 rng(5);
  const synth::Zipf zipf(corpus().vocab.size(), 1.05);
  text::Tokens w;
  for (int i = 0; i < 60; ++i) w.push_back(corpus().vocab[zipf(rng)]);
  return w;
}

std::vector<extract::RelevantTerm> terms() {
  const auto w = window();
  const auto sel = lm::select_model(grid(), w);
  static const auto automaton = lm::to_wfst(grid().model(sel.key));
  return extract::extract_relevant_terms(automaton, w, extract::ExtractionConfig{}).terms;
}

void BM_GridBuild(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lm::build_grid(corpus().documents));
}
void BM_GridBuildSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lm::build_grid_serial(corpus().documents));
}

void BM_SelectModel(benchmark::State& state) {
  const auto w = window();
  grid();
  for (auto _ : state) benchmark::DoNotOptimize(lm::select_model(grid(), w));
}
void BM_SelectModelSerial(benchmark::State& state) {
  const auto w = window();
  grid();
  for (auto _ : state) benchmark::DoNotOptimize(lm::select_model_serial(grid(), w));
}

void BM_ScoreSnippets(benchmark::State& state) {
  const auto t = terms();
  const extract::ExtractionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(extract::score_snippets(corpus().documents, t, cfg));
}
void BM_ScoreSnippetsSerial(benchmark::State& state) {
  const auto t = terms();
  const extract::ExtractionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(extract::score_snippets_serial(corpus().documents, t, cfg));
}

}  // namespace

BENCHMARK(BM_GridBuild)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GridBuildSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SelectModel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_SelectModelSerial)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ScoreSnippets)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ScoreSnippetsSerial)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
