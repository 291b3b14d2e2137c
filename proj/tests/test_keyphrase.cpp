#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "eileen/error.hpp"
#include "eileen/keyphrase.hpp"
#include "eileen/synth.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace eileen;

namespace {

/// Forest that gives every candidate the same p1.
ForestModel constant_model(double p1) {
    ForestModel m;
    m.n_features = kCandidateFeatureCount;
    m.trees.push_back(Tree{{TreeNode{-1, 0.0, -1, -1, p1}}});
    m.feature_importances.assign(kCandidateFeatureCount, 0.0);
    return m;
}

bool has_key(std::vector<KeyphraseCandidate> const& candidates, std::string_view phrase) {
    auto const key = phrase_key(phrase);
    return std::any_of(candidates.begin(), candidates.end(),
                       [&](KeyphraseCandidate const& c) { return phrase_key(c.phrase) == key; });
}

constexpr std::string_view kMalariaTitle =
    "Ecological change as a factor in renewed malaria transmission in an eradicated area. A localized "
    "outbreak of A. Aquasalis-transmitted malaria on the demerara river estuary, British Guiana, in the "
    "fifteenth year of A. Darlingi.";

}  // namespace

TEST_CASE("RAKE degree over frequency with a custom stopword list") {
    StopwordList const stop({"helps", "of"});
    auto const c = rake_candidates("deep parsing helps deep parsing of deep parsing", {3, 4, 2}, stop);
    REQUIRE(c.size() == 1);
    CHECK(c[0].phrase == "deep parsing");
    // deg(deep) = deg(parsing) = 6, freq = 3: 2 + 2.
    CHECK(c[0].rake_score == doctest::Approx(4.0));
    CHECK(c[0].from_rake);
    CHECK(c[0].features.term_count == 3);
}

TEST_CASE("RAKE thresholds") {
    StopwordList const stop({"and"});
    std::string const text = "big data and big data and big data and tiny and tiny and ab and ab and ab";
    auto const c = rake_candidates(text, {3, 4, 2}, stop);
    CHECK(has_key(c, "big data"));
    CHECK(has_key(c, "tiny"));
    CHECK_FALSE(has_key(c, "ab"));  // shorter than min_char_len
    auto const strict = rake_candidates(text, {3, 4, 3}, stop);
    CHECK(has_key(strict, "big data"));
    CHECK_FALSE(has_key(strict, "tiny"));  // seen twice only
    auto const short_runs = rake_candidates("alpha beta gamma delta epsilon, alpha beta gamma delta epsilon", {3, 4, 1}, stop);
    CHECK(short_runs.empty());
    CHECK_THROWS_AS((RakeParams{0, 4, 2}.validate()), ConfigError);
}

TEST_CASE("malaria title yields the curated phrases") {
    auto const pool = candidate_pool(kMalariaTitle, RakeParams::extraction(), true);
    CHECK(has_key(pool, "malaria"));
    CHECK(has_key(pool, "british guiana"));
    for (auto const& c : pool) {
        CHECK(std::none_of(c.phrase.begin(), c.phrase.end(), [](char ch) { return ch >= 'A' && ch <= 'Z'; }));
    }
}

TEST_CASE("TextRank scores match dense PageRank") {
    std::string const text = "alpha beta gamma alpha delta beta epsilon gamma zeta alpha theta";
    TextRankParams params;
    params.tol = 1e-12;
    params.max_iter = 1000;
    auto const result = textrank(text, params, StopwordList(std::vector<std::string>{}));
    CHECK(result.converged);

    std::vector<std::string> const seq{"alpha", "beta",    "gamma", "alpha", "delta", "beta",
                                       "epsilon", "gamma", "zeta",  "alpha", "theta"};
    std::vector<std::string> words(seq);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    auto const index_of = [&](std::string const& w) {
        return static_cast<std::size_t>(std::find(words.begin(), words.end(), w) - words.begin());
    };
    std::vector<std::vector<int>> adj(words.size(), std::vector<int>(words.size(), 0));
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        auto const a = index_of(seq[i]);
        auto const b = index_of(seq[i + 1]);
        if (a == b) continue;
        adj[a][b] = adj[b][a] = 1;
    }
    auto const expected = oracle::dense_pagerank(adj, 0.85, 2000);
    REQUIRE(result.ranked.size() == words.size());
    for (auto const& [word, score] : result.ranked) {
        CHECK(std::abs(score - expected[index_of(word)]) < 1e-5);
    }
    for (std::size_t i = 1; i < result.ranked.size(); ++i) {
        CHECK(result.ranked[i - 1].second >= result.ranked[i].second);
    }
}

TEST_CASE("TextRank merges adjacent keywords into phrases") {
    auto const r = textrank(kMalariaTitle);
    CHECK(r.converged);
    CHECK(r.ranked.front().first == "malaria");
    CHECK(std::find(r.phrases.begin(), r.phrases.end(), "british guiana") != r.phrases.end());
    CHECK(textrank("").ranked.empty());
    TextRankParams bad;
    bad.window = 1;
    CHECK_THROWS_AS(textrank("x", bad), ConfigError);
}

TEST_CASE("labels match on stemmed keys") {
    CHECK(phrase_key("Malarias") == phrase_key("malaria"));
    CHECK(phrase_key("  British   Guiana ") == "british guiana");
    std::vector<KeyphraseCandidate> candidates(3);
    candidates[0].phrase = "malaria";
    candidates[1].phrase = "mosquito nets";
    candidates[2].phrase = "river estuary";
    std::vector<std::string> const gold{"malarias", "mosquito net", "anopheles"};
    auto const result = label_candidates(candidates, gold);
    CHECK(result.positives == 2);
    CHECK(candidates[0].label == 1);
    CHECK(candidates[1].label == 1);
    CHECK(candidates[2].label == 0);
    CHECK(result.unmatched_gold == std::vector<std::string>{"anopheles"});
}

TEST_CASE("candidate features from occurrences") {
    auto const tokens = word_tokens("Graph ranking works. Ranking graph ranking helps graph ranking.");
    REQUIRE(tokens.size() == 9);
    CHECK(tokens[3].boundary_before);
    auto const f = candidate_features("graph ranking", tokens);
    CHECK(f.term_count == 3);
    CHECK(f.term_length == 2);
    CHECK(f.max_word_length == 7);
    CHECK(f.spread == 7);
    CHECK(f.first_occurrence == doctest::Approx(0.0));
    CHECK(f.last_occurrence == doctest::Approx(7.0 / 9.0));
    // 2 * 3 / (freq(graph) 3 + freq(ranking) 4)
    CHECK(f.lexical_cohesion == doctest::Approx(6.0 / 7.0));
}

TEST_CASE("reranker learns the planted keyphrase rule") {
    auto const splits = generate_keyphrase_fixture({});
    RerankerOptions options;
    options.forest.n_trees = 100;
    options.seed = 3;
    auto const report = train_reranker(splits, options);
    REQUIRE(report.test_auc.has_value());
    REQUIRE(report.validation_auc.has_value());
    CHECK(*report.test_auc >= 0.95);
    CHECK(report.test_gold_recall > 0.9);
    CHECK(report.train_docs == splits.train.size());
    CHECK(report.test_scores.size() == report.test_rows);

    auto const again = train_reranker(splits, options);
    CHECK(again.model.serialize() == report.model.serialize());
}

TEST_CASE("SemEval layout round trip") {
    auto const splits = generate_keyphrase_fixture({.train = 4, .trial = 2, .test = 3});
    TempDir dir;
    write_semeval(splits, dir.path());
    auto const back = load_semeval(dir.path());
    REQUIRE(back.train.size() == 4);
    REQUIRE(back.validation.size() == 2);
    REQUIRE(back.test.size() == 3);
    CHECK(back.train[0].id == splits.train[0].id);
    CHECK(back.train[0].gold == splits.train[0].gold);
    CHECK_THROWS_AS(load_semeval(dir / "missing"), IoError);
}

TEST_CASE("proportional document split") {
    std::vector<KeyphraseDoc> docs(284);
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].id = std::to_string(i);
    auto const s = split_documents(docs, 1);
    CHECK(s.train.size() == 144);
    CHECK(s.validation.size() == 40);
    CHECK(s.test.size() == 100);
}

TEST_CASE("selection, statistics and popularity") {
    auto const model = constant_model(0.9);
    DocumentRecord doc;
    doc.id = 0;
    doc.source_id = "0";
    doc.title = "Malaria transmission in British Guiana";
    doc.abstract = "Malaria transmission rises. British Guiana reports malaria transmission each year.";
    doc.date = Date{1999};
    DocumentRecord undated = doc;
    undated.id = 1;
    undated.source_id = "1";
    undated.date = Date{0};

    KeyphraseSelection sel;
    auto const kps = document_keyphrases(doc, model, sel);
    REQUIRE_FALSE(kps.empty());
    CHECK(has_key(kps, "malaria transmission"));
    for (auto const& k : kps) CHECK(*k.p1 >= sel.threshold);
    CHECK(document_keyphrases(doc, constant_model(0.1), sel).empty());

    std::vector<DocumentRecord> const docs{doc, undated};
    auto const stats = corpus_keyphrase_stats(docs, model, sel);
    CHECK(stats.documents == 2);
    CHECK(stats.total == 2 * kps.size());
    CHECK(std::accumulate(stats.by_words.begin(), stats.by_words.end(), std::size_t{0}) == stats.total);
    auto const table = format_stats_table(stats);
    CHECK(table.rfind("Keywords summary\tCounts\n", 0) == 0);
    CHECK(table.find("Number of documents\t2\n") != std::string::npos);

    auto const pop = popularity_by_year(docs, model, sel);
    auto const it = pop.find(kps.front().phrase);
    REQUIRE(it != pop.end());
    CHECK(it->second.at("1999") == 1);
    CHECK(it->second.at("unknown") == 1);
}

TEST_CASE("prediction TSV format") {
    std::vector<PredictionRow> const rows{{"C-001", "british guiana", 0.2, 0.8, true, 1},
                                          {"C-001", "river", 0.75, 0.25, false, std::nullopt}};
    CHECK(format_predictions(rows) ==
          "document\tkeyword\tprobability\tprobability_tf\tlabel\n"
          "C-001\tbritish guiana\t[0.2,0.8]\ttrue\t1\n"
          "C-001\triver\t[0.75,0.25]\tfalse\t\n");
}
