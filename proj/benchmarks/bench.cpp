#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "claimworthy/baselines.hpp"
#include "claimworthy/corpus.hpp"
#include "claimworthy/digest.hpp"
#include "claimworthy/metrics.hpp"
#include "claimworthy/prompt.hpp"
#include "claimworthy/rng.hpp"
#include "claimworthy/soft_prompt.hpp"
#include "claimworthy/tinylm.hpp"

using namespace claimworthy;

namespace {

// Synthetic corpus so the benchmarks need no files on disk.
std::vector<LabeledExample> synth_examples(std::size_t n, std::uint32_t seed) {
  static const std::vector<std::string> words = {
      "amber", "basil", "cedar", "delta", "ember",
      "fjord", "grove", "heath", "ivory", "juniper"};
  rng::Engine engine = rng::make_engine(seed);
  std::vector<LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = (i % 2) == 0;
    std::string text = positive ? "zebra" : words[rng::bounded(engine, 10)];
    const std::size_t extra = 3 + rng::bounded(engine, 5);
    for (std::size_t k = 0; k < extra; ++k) {
      text += ' ';
      text += words[rng::bounded(engine, 10)];
    }
    out.push_back({{std::to_string(i + 1), text, std::nullopt},
                   positive ? Label::Yes : Label::No});
  }
  return out;
}

}  // namespace

static void BM_AssemblePrompt3Shot(benchmark::State& state) {
  const PromptTemplate tmpl = builtin_template(TemplateKind::short_form());
  const std::vector<LabeledExample> examples = synth_examples(8, 1);
  const Claim& claim = examples.front().claim;
  const std::vector<LabeledExample> demos(examples.begin() + 1,
                                          examples.begin() + 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble(tmpl, claim, demos));
  }
}
BENCHMARK(BM_AssemblePrompt3Shot);

static void BM_PromptDigest1KiB(benchmark::State& state) {
  std::string text;
  rng::Engine engine = rng::make_engine(2);
  for (int i = 0; i < 1024; ++i) {
    text += static_cast<char>('a' + rng::bounded(engine, 26));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(prompt_digest(text));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 1024);
}
BENCHMARK(BM_PromptDigest1KiB);

static void BM_MetricsReport318(benchmark::State& state) {
  rng::Engine engine = rng::make_engine(3);
  std::vector<Label> pred(318), gold(318);
  for (std::size_t i = 0; i < 318; ++i) {
    pred[i] = rng::fair_bit(engine) ? Label::Yes : Label::No;
    gold[i] = rng::fair_bit(engine) ? Label::Yes : Label::No;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(report(confusion(pred, gold)));
  }
}
BENCHMARK(BM_MetricsReport318);

static void BM_NgramPredict(benchmark::State& state) {
  const std::vector<LabeledExample> train = synth_examples(200, 4);
  const NgramModel model = ngram_fit(train);
  const std::string text = "amber zebra cedar grove heath ivory";
  for (auto _ : state) {
    benchmark::DoNotOptimize(ngram_predict(model, text));
  }
}
BENCHMARK(BM_NgramPredict);

static void BM_PrefixClassify(benchmark::State& state) {
  TinyLMConfig config;
  config.vocab_size = 128;
  config.embed_dim = 16;
  config.n_layers = 1;
  config.n_heads = 4;
  config.context_len = 32;
  config.seed = 3;
  const TinyLM lm = TinyLM::init(config);
  const SoftPromptState sp = init_soft_prompt(4, config.embed_dim, 11);
  const std::vector<std::size_t> ids = byte_tokenize("zebra amber cedar", 28);
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify_with_prefix(lm, sp, ids));
  }
}
BENCHMARK(BM_PrefixClassify);

BENCHMARK_MAIN();
