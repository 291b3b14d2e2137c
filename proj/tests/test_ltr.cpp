#include <doctest.h>

#include <cmath>
#include <set>

#include "eileen/error.hpp"
#include "eileen/ltr.hpp"
#include "eileen/rng.hpp"
#include "support/tmpdir.hpp"

using namespace eileen;

namespace {

DocumentRecord make_doc(DocId id, std::string title, TopicVector topic) {
    DocumentRecord r;
    r.id = id;
    r.source_id = std::to_string(id);
    r.title = std::move(title);
    r.date = Date{2000 + static_cast<int>(id)};
    r.topic_norm = topic.normalized();
    r.topic = std::move(topic);
    return r;
}

Corpus small_corpus() {
    return Corpus(std::vector<DocumentRecord>{
        make_doc(0, "malaria vaccine efficacy", TopicVector{{1.0, 0.0, 0.0}}),
        make_doc(1, "malaria mosquito nets", TopicVector{{0.8, 0.6, 0.0}}),
        make_doc(2, "malaria in pregnancy", TopicVector{{0.6, 0.0, 0.8}}),
        make_doc(3, "vaccine adjuvants", TopicVector{{0.0, 1.0, 0.0}}),
        make_doc(4, "protein folding", TopicVector{{0.0, 0.0, 1.0}})});
}

std::vector<PreferenceEvent> search_events(std::string const& user, std::string const& query,
                                           std::vector<DocId> const& docs, std::int64_t ts) {
    std::vector<PreferenceEvent> out;
    for (DocId d : docs) out.push_back(PreferenceEvent{user, d, Action::search_shown, query, ts});
    return out;
}

FeatureRow synthetic_row(std::string user, double score, int label) {
    FeatureRow r;
    r.user_id = std::move(user);
    r.label = label;
    r.features[6] = score;
    r.features[11] = label == 1 ? 0.2 : 0.8;
    return r;
}

}  // namespace

TEST_CASE("twelve features of one pair against a hand-computed oracle") {
    DocumentRecord doc = make_doc(0, "Malaria vaccine trial", TopicVector{{0.6, 0.8}});
    doc.scientists = {"Ana Costa"};
    doc.venue = "Lancet";
    doc.abstract = "A trial of a malaria vaccine in children.";
    doc.date = Date{2011};
    TopicVector const library{{1.0, 0.0}};
    Tokenizer const tok;
    auto const f = extract_features("malaria vaccine", doc, 3.25, library, tok);

    CHECK(f[0] == 2);
    CHECK(f[1] == 3);
    CHECK(f[2] == 2);
    CHECK(f[3] == 1);
    CHECK(f[4] == 8);
    CHECK(f[5] == 2011);
    CHECK(f[6] == 3.25);
    // Five-field df: malaria 3, vaccin 3, trial 2, children 1; N = 5.
    double const a = std::log(5.0 / 4.0);
    double const t = std::log(5.0 / 3.0);
    double const c = std::log(5.0 / 2.0);
    double const cos_title = 2 * a * a / (std::sqrt(2 * a * a) * std::sqrt(2 * a * a + t * t));
    double const cos_abstract = 2 * a * a / (std::sqrt(2 * a * a) * std::sqrt(2 * a * a + t * t + c * c));
    CHECK(f[7] == doctest::Approx(1.0 - cos_title).epsilon(1e-12));
    CHECK(f[8] == 1.0);
    CHECK(f[9] == 1.0);
    CHECK(f[10] == doctest::Approx(1.0 - cos_abstract).epsilon(1e-12));
    CHECK(f[11] == doctest::Approx(0.4).epsilon(1e-12));

    // Without a library the last feature is maximal.
    auto const g = extract_features("malaria vaccine", doc, 3.25, TopicVector::zeros(2), tok);
    CHECK(g[11] == 1.0);
    for (double v : {g[7], g[8], g[9], g[10], g[11]}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("labels come from votes before the next search") {
    Corpus const corpus = small_corpus();
    Tokenizer const tok;
    auto const index = InvertedIndex::build(corpus.records(), tok);
    std::vector<PreferenceEvent> events = search_events("u", "malaria", {0, 1, 2}, 10);
    events.push_back({"u", 0, Action::vote_relevant, "", 11});
    events.push_back({"u", 1, Action::vote_irrelevant, "", 12});
    auto const second = search_events("u", "vaccine", {3, 1}, 20);
    events.insert(events.end(), second.begin(), second.end());
    events.push_back({"u", 3, Action::vote_relevant, "", 21});
    events.push_back({"u", 3, Action::vote_cleared, "", 22});

    auto const rows = build_dataset(events, corpus, index, tok);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].doc_id == 0);
    CHECK(rows[0].label == 1);
    CHECK(rows[1].doc_id == 2);
    CHECK(rows[1].label == 0);
    // The last state wins: doc 3 was voted and then cleared.
    CHECK(rows[2].doc_id == 3);
    CHECK(rows[2].label == 0);
    CHECK(rows[2].query == "vaccine");
    CHECK(rows[2].timestamp == 20);

    // Doc 0 was the only relevant doc, so leave-one-out leaves an empty library.
    CHECK(rows[0].features[11] == 1.0);
    // Doc 3 compares against the library {0} as it stood at search time.
    CHECK(rows[2].features[11] == doctest::Approx(1.0));
    CHECK(rows[1].features[11] == 1.0);

    std::vector<std::string> const terms{"malaria"};
    CHECK(rows[0].features[6] == bm25_score(terms, 0, index));

    FeatureOptions const with_self{.leave_one_out = false};
    auto const inclusive = build_dataset(events, corpus, index, tok, with_self);
    CHECK(inclusive[0].features[11] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("leave-one-out uses the other relevant documents") {
    Corpus const corpus = small_corpus();
    Tokenizer const tok;
    auto const index = InvertedIndex::build(corpus.records(), tok);
    std::vector<PreferenceEvent> events{{"u", 3, Action::vote_relevant, "", 1}};
    auto const s = search_events("u", "malaria", {0, 1}, 5);
    events.insert(events.end(), s.begin(), s.end());
    events.push_back({"u", 1, Action::vote_relevant, "", 6});
    auto const rows = build_dataset(events, corpus, index, tok);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].label == 1);
    // Library without doc 1 is {3} = (0, 1, 0); doc 1 is (0.8, 0.6, 0).
    CHECK(rows[1].features[11] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(rows[0].label == 0);
    CHECK(rows[0].features[11] == doctest::Approx(1.0));
}

TEST_CASE("unknown documents in the log are rejected") {
    Corpus const corpus = small_corpus();
    Tokenizer const tok;
    auto const index = InvertedIndex::build(corpus.records(), tok);
    auto const events = search_events("u", "malaria", {0, 42}, 1);
    CHECK_THROWS_AS(build_dataset(events, corpus, index, tok), ReferenceError);
}

TEST_CASE("user split sizes and errors") {
    auto rows_for = [](std::size_t users) {
        std::vector<FeatureRow> rows;
        for (std::size_t u = 0; u < users; ++u) {
            rows.push_back(synthetic_row("user" + std::to_string(u), 1.0, 1));
            rows.push_back(synthetic_row("user" + std::to_string(u), 0.0, 0));
        }
        return rows;
    };
    for (std::size_t n : {1, 3}) {
        auto const rows = rows_for(n);
        try {
            (void)split_users(rows, 1);
            FAIL("expected DomainError");
        } catch (DomainError const& e) {
            std::string const what = e.what();
            CHECK(what.find("need \xE2\x89\xA5 2 users for 4:1 split on each side") != std::string::npos);
            CHECK(what.find("found " + std::to_string(n) + " user") != std::string::npos);
        }
    }
    for (auto [n, expected_test] : std::vector<std::pair<std::size_t, std::size_t>>{{4, 2}, {10, 2}, {13, 3}, {40, 8}}) {
        auto const rows = rows_for(n);
        auto const split = split_users(rows, 7);
        CHECK(split.test_users.size() == expected_test);
        CHECK(split.train_users.size() == n - expected_test);
        std::set<std::string> all(split.train_users.begin(), split.train_users.end());
        for (auto const& u : split.test_users) CHECK(all.insert(u).second);
        CHECK(all.size() == n);
        CHECK(split_users(rows, 7).test_users == split.test_users);
    }
}

TEST_CASE("variants select the documented feature columns") {
    CHECK(variant_config(Variant::all12).features.size() == 12);
    auto const no_es = variant_config(Variant::no_es_score).features;
    CHECK(no_es.size() == 11);
    CHECK(std::find(no_es.begin(), no_es.end(), 6) == no_es.end());
    auto const no_lib = variant_config(Variant::no_library_cosine).features;
    CHECK(std::find(no_lib.begin(), no_lib.end(), 11) == no_lib.end());
    CHECK(variant_config(Variant::es_only).features == std::vector<std::size_t>{6});
    CHECK(variant_config(Variant::es_plus_library).features == std::vector<std::size_t>{6, 11});
    for (auto const& v : all_variants()) CHECK(parse_variant(v.name) == v.variant);
    CHECK_THROWS_AS(parse_variant("all13"), ConfigError);
}

TEST_CASE("a separable library feature is learned") {
    Rng rng(4);
    std::vector<FeatureRow> rows;
    for (int u = 0; u < 10; ++u) {
        for (int i = 0; i < 30; ++i) {
            int const label = rng.bernoulli(0.3) ? 1 : 0;
            FeatureRow r = synthetic_row("u" + std::to_string(u), rng.uniform(), label);
            r.features[11] = label == 1 ? rng.uniform(0.0, 0.4) : rng.uniform(0.5, 1.0);
            rows.push_back(r);
        }
    }
    auto const reports = evaluate_variants(rows, 3, {.n_trees = 30});
    REQUIRE(reports.size() == 5);
    for (auto const& r : reports) {
        if (r.variant == "all12" || r.variant == "es_plus_library") CHECK(r.auc >= 0.95);
        if (r.variant == "es_only") CHECK(r.auc < 0.75);
        CHECK(r.test_users == 2);
        CHECK(r.train_rows + r.test_rows == rows.size());
    }
    CHECK(format_ltr_report(reports).find("es_plus_library") != std::string::npos);
    CHECK(format_importance_csv(reports).rfind("variant,feature,importance", 0) == 0);
}

TEST_CASE("dataset TSV round trip") {
    Rng rng(5);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 20; ++i) {
        FeatureRow r;
        for (double& v : r.features) v = rng.normal() * 1e3;
        r.label = i % 2;
        r.user_id = "sim-user-" + std::to_string(i % 3);
        r.query = "malaria vaccine " + std::to_string(i);
        r.doc_id = i * 7;
        r.timestamp = 1'600'000'000'000 + i;
        rows.push_back(r);
    }
    auto const text = format_dataset(rows);
    CHECK(text.find("query_length") != std::string::npos);
    CHECK(parse_dataset(text) == rows);
    TempDir dir;
    save_dataset(rows, dir / "d.tsv");
    CHECK(load_dataset(dir / "d.tsv") == rows);
    CHECK_THROWS_AS(parse_dataset("not\ta\tdataset\n"), FormatError);
}

TEST_CASE("rerank_search checks the model width") {
    Corpus const corpus = small_corpus();
    Tokenizer const tok;
    auto const index = InvertedIndex::build(corpus.records(), tok);
    auto const hits = search("malaria", index, tok);
    std::vector<FeatureRow> rows;
    for (int u = 0; u < 5; ++u) {
        rows.push_back(synthetic_row("u" + std::to_string(u), 1.0, 1));
        rows.push_back(synthetic_row("u" + std::to_string(u), 0.0, 0));
    }
    auto const model = train_and_evaluate(rows, Variant::es_only, 1, {.n_trees = 5}).model;
    auto const reranked = rerank_search(hits, model, Variant::es_only, "malaria", corpus, TopicVector::zeros(3), tok);
    CHECK(reranked.size() == hits.size());
    CHECK_THROWS_AS(rerank_search(hits, model, Variant::all12, "malaria", corpus, TopicVector::zeros(3), tok),
                    ValidationError);
}
