// Hot paths of the service: search, recommend, LTR scoring and keyphrase
// extraction, on the 200-document synthetic corpus.

#include <benchmark/benchmark.h>

#include <array>

#include "eileen/engine.hpp"
#include "eileen/forest.hpp"
#include "eileen/keyphrase.hpp"
#include "eileen/ltr.hpp"
#include "eileen/relevance.hpp"
#include "eileen/rng.hpp"
#include "eileen/synth.hpp"

using namespace eileen;

namespace {

struct World {
    EngineConfig config;
    SemanticModel model;
    Corpus corpus;
    Tokenizer tokenizer;
    InvertedIndex index;
    LibraryState library;

    World()
        : model(fit_semantics(generate_corpus({}).docs, config)),
          corpus(model.docs),
          index(InvertedIndex::build(corpus.records(), tokenizer)) {
        library.library_topic = TopicVector::zeros(model.lsa.k);
        for (DocId id : {3, 17, 42}) {
            library = apply_event(library, PreferenceEvent{"u", id, Action::vote_relevant, "", 1}, corpus);
        }
    }
};

World const& world() {
    static World const w;
    return w;
}

void BM_Bm25Search(benchmark::State& state) {
    auto const& w = world();
    for (auto _ : state) benchmark::DoNotOptimize(search("malaria transmission vaccine", w.index, w.tokenizer));
}
BENCHMARK(BM_Bm25Search);

void BM_Recommend(benchmark::State& state) {
    auto const& w = world();
    RecommendOptions options;
    options.full_scan = state.range(0) != 0;
    TopicVector const q_o = TopicVector::zeros(w.model.lsa.k);
    for (auto _ : state) benchmark::DoNotOptimize(recommend(w.library, q_o, w.corpus, options));
}
BENCHMARK(BM_Recommend)->Arg(0)->Arg(1)->ArgName("full_scan");

void BM_LtrFeatures(benchmark::State& state) {
    auto const& w = world();
    auto const& doc = w.corpus.at(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            extract_features("malaria transmission", doc, 3.2, w.library.library_topic, w.tokenizer));
    }
}
BENCHMARK(BM_LtrFeatures);

void BM_ForestPredict(benchmark::State& state) {
    Rng rng(1);
    FeatureMatrix x(kLtrFeatureCount);
    std::vector<int> y;
    for (int i = 0; i < 1000; ++i) {
        std::array<double, kLtrFeatureCount> row{};
        for (auto& v : row) v = rng.uniform();
        x.add_row(row);
        y.push_back(row[0] + 0.3 * row[1] > 0.6 ? 1 : 0);
    }
    ForestConfig config;
    config.n_trees = static_cast<std::size_t>(state.range(0));
    auto const model = train_forest(x, y, config, 3);
    for (auto _ : state) benchmark::DoNotOptimize(predict_p1(model, x));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows()));
}
BENCHMARK(BM_ForestPredict)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_TextRank(benchmark::State& state) {
    auto const text = keyphrase_text(world().corpus.at(0));
    for (auto _ : state) benchmark::DoNotOptimize(textrank(text));
}
BENCHMARK(BM_TextRank);

void BM_CandidatePool(benchmark::State& state) {
    auto const text = keyphrase_text(world().corpus.at(0));
    for (auto _ : state) benchmark::DoNotOptimize(candidate_pool(text, RakeParams::extraction(), true));
}
BENCHMARK(BM_CandidatePool);

}  // namespace

BENCHMARK_MAIN();
