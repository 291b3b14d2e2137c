#include <doctest.h>

#include <algorithm>

#include "eileen/error.hpp"
#include "eileen/relevance.hpp"
#include "eileen/rng.hpp"
#include "support/tmpdir.hpp"

using namespace eileen;

namespace {

constexpr std::size_t kDim = 8;
constexpr std::uint32_t kPlanes = 16;
constexpr std::uint64_t kLshSeed = 5;

DocumentRecord topic_doc(DocId id, TopicVector topic) {
    DocumentRecord r;
    r.id = id;
    r.source_id = std::to_string(id);
    r.title = "doc " + std::to_string(id);
    r.topic_norm = topic.normalized();
    r.topic = std::move(topic);
    r.buckets = lsh_signature(*r.topic_norm, kPlanes, kLshSeed);
    return r;
}

/// Docs 0..59 sit around e0, docs 60..119 around e4; doc 120 has no topic.
Corpus planted_corpus() {
    Rng rng(21);
    std::vector<DocumentRecord> docs;
    for (DocId id = 0; id < 120; ++id) {
        TopicVector t = TopicVector::zeros(kDim);
        t.values[id < 60 ? 0 : 4] = 1.0;
        for (double& v : t.values) v += 0.2 * rng.normal();
        docs.push_back(topic_doc(id, t));
    }
    docs.push_back(topic_doc(120, TopicVector::zeros(kDim)));
    return Corpus(std::move(docs));
}

PreferenceEvent vote(DocId doc, Action action, std::int64_t ts = 0) {
    return PreferenceEvent{"u", doc, action, "", ts};
}

PreferenceEvent shown(std::string query, std::optional<DocId> doc = std::nullopt, std::int64_t ts = 0) {
    return PreferenceEvent{"u", doc, Action::search_shown, std::move(query), ts};
}

}  // namespace

TEST_CASE("votes move documents between the relevant and irrelevant sets") {
    Corpus const corpus = planted_corpus();
    LibraryState s = replay({}, "u", corpus);
    CHECK(s.library_topic == TopicVector::zeros(kDim));
    s = apply_event(s, vote(3, Action::vote_relevant), corpus);
    s = apply_event(s, vote(4, Action::vote_irrelevant), corpus);
    CHECK(s.relevant == std::set<DocId>{3});
    CHECK(s.irrelevant == std::set<DocId>{4});
    CHECK(s.library_topic == *corpus.at(3).topic_norm);
    s = apply_event(s, vote(3, Action::vote_irrelevant), corpus);
    CHECK(s.relevant.empty());
    CHECK(s.irrelevant == std::set<DocId>{3, 4});
    CHECK(s.library_topic.is_zero());
    s = apply_event(s, vote(4, Action::vote_cleared), corpus);
    CHECK(s.irrelevant == std::set<DocId>{3});
    CHECK_THROWS_AS(apply_event(s, vote(999, Action::vote_relevant), corpus), ReferenceError);
    CHECK_THROWS_AS(apply_event(s, PreferenceEvent{"u", std::nullopt, Action::vote_relevant, "", 0}, corpus),
                    ValidationError);
}

TEST_CASE("library topic is the mean of the relevant normalised topics") {
    Corpus const corpus = planted_corpus();
    LibraryState s;
    for (DocId id : {1, 2, 65}) s = apply_event(s, vote(id, Action::vote_relevant), corpus);
    for (std::size_t i = 0; i < kDim; ++i) {
        double const expected = (corpus.at(1).topic_norm->values[i] + corpus.at(2).topic_norm->values[i] +
                                 corpus.at(65).topic_norm->values[i]) / 3.0;
        CHECK(s.library_topic.values[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("query window keeps the most recent distinct searches") {
    Corpus const corpus = planted_corpus();
    std::vector<PreferenceEvent> events;
    for (std::string q : {"a", "b", "b", "c", "d", "e", "f"}) {
        events.push_back(shown(q, 1));
        events.push_back(shown(q, 2));
    }
    events.push_back(shown("g"));  // no hits, still counts
    events.push_back(PreferenceEvent{"other", 1, Action::search_shown, "zzz", 0});
    auto const s = replay(events, "u", corpus);
    CHECK(std::vector<std::string>(s.recent_queries.begin(), s.recent_queries.end()) ==
          std::vector<std::string>{"c", "d", "e", "f", "g"});
    CHECK(s.relevant.empty());
}

TEST_CASE("Rocchio with a = 0 returns the relevant centroid exactly") {
    Corpus const corpus = planted_corpus();
    LibraryState s;
    s = apply_event(s, vote(7, Action::vote_relevant), corpus);
    TopicVector q_o = TopicVector::zeros(kDim);
    q_o.values[5] = 3.0;
    auto const q_m = rocchio(q_o, s, corpus, {.a = 0.0, .b = 1.0, .c = 0.0});
    CHECK(q_m == *corpus.at(7).topic_norm);
}

TEST_CASE("Rocchio default weights add the query and the centroid") {
    Corpus const corpus = planted_corpus();
    LibraryState s;
    s = apply_event(s, vote(7, Action::vote_relevant), corpus);
    TopicVector q_o = TopicVector::zeros(kDim);
    q_o.values[5] = 3.0;
    auto const q_m = rocchio(q_o, s, corpus);
    for (std::size_t i = 0; i < kDim; ++i) {
        CHECK(q_m.values[i] == doctest::Approx(q_o.values[i] + corpus.at(7).topic_norm->values[i]));
    }
    TopicVector bad = q_o;
    bad.values[0] = std::nan("");
    CHECK_THROWS_AS(rocchio(bad, s, corpus), DomainError);
}

TEST_CASE("with c = 0 irrelevant votes do not change recommendations") {
    Corpus const corpus = planted_corpus();
    LibraryState base;
    for (DocId id : {1, 2, 3}) base = apply_event(base, vote(id, Action::vote_relevant), corpus);
    LibraryState with_irrelevant = base;
    for (DocId id : {10, 11, 70, 71}) {
        with_irrelevant = apply_event(with_irrelevant, vote(id, Action::vote_irrelevant), corpus);
    }
    auto const zero = TopicVector::zeros(kDim);
    auto const a = recommend(base, zero, corpus);
    auto const b = recommend(with_irrelevant, zero, corpus);
    CHECK(a.docs == b.docs);
    CHECK(rocchio(zero, base, corpus) == rocchio(zero, with_irrelevant, corpus));
}

TEST_CASE("recommendations come from the planted cluster of the library") {
    Corpus const corpus = planted_corpus();
    for (DocId seed_doc : {0, 61}) {
        LibraryState s;
        s = apply_event(s, vote(seed_doc, Action::vote_relevant), corpus);
        s = apply_event(s, vote(seed_doc + 1, Action::vote_relevant), corpus);
        auto const rec = recommend(s, TopicVector::zeros(kDim), corpus, {.top_k = 10});
        REQUIRE(rec.docs.size() == 10);
        bool const cluster_a = seed_doc < 60;
        for (std::size_t i = 0; i < rec.docs.size(); ++i) {
            auto const id = rec.docs[i].doc_id;
            CHECK((id < 60) == cluster_a);
            CHECK(id != 120);
            CHECK(s.relevant.count(id) == 0);
            if (i > 0) CHECK(rec.docs[i - 1].distance <= rec.docs[i].distance);
        }
    }
}

TEST_CASE("LSH candidates agree with the full scan on a clustered corpus") {
    Corpus const corpus = planted_corpus();
    LibraryState s;
    s = apply_event(s, vote(5, Action::vote_relevant), corpus);
    auto const zero = TopicVector::zeros(kDim);
    auto const lsh = recommend(s, zero, corpus, {.top_k = 10});
    auto const full = recommend(s, zero, corpus, {.top_k = 10, .full_scan = true});
    CHECK(lsh.docs == full.docs);
}

TEST_CASE("relevant and zero-topic documents are never recommended") {
    Corpus const corpus = planted_corpus();
    LibraryState s;
    for (DocId id = 0; id < 55; ++id) s = apply_event(s, vote(id, Action::vote_relevant), corpus);
    auto const rec = recommend(s, TopicVector::zeros(kDim), corpus, {.top_k = 200, .full_scan = true});
    CHECK(rec.docs.size() == 65);  // 121 docs - 55 relevant - 1 without topic
    for (auto const& d : rec.docs) {
        CHECK(d.doc_id >= 55);
        CHECK(d.doc_id != 120);
    }
}

TEST_CASE("an empty library with no query context is a precondition failure") {
    Corpus const corpus = planted_corpus();
    CHECK_THROWS_AS(recommend(LibraryState{}, TopicVector::zeros(kDim), corpus), PreconditionError);
    TopicVector q_o = TopicVector::zeros(kDim);
    q_o.values[4] = 1.0;
    auto const rec = recommend(LibraryState{}, q_o, corpus);
    REQUIRE_FALSE(rec.docs.empty());
    CHECK(rec.docs.front().doc_id >= 60);
}

TEST_CASE("rerank orders by cosine distance with id tie-break") {
    std::vector<DocumentRecord> docs{topic_doc(0, TopicVector{{1, 0}}), topic_doc(1, TopicVector{{0, 1}}),
                                     topic_doc(2, TopicVector{{1, 0}}), topic_doc(3, TopicVector{{0, 0}})};
    Corpus const corpus(std::move(docs));
    std::vector<DocId> const candidates{3, 2, 1, 0};
    auto const r = rerank_by_cosine(candidates, TopicVector{{2, 0}}, corpus);
    CHECK_FALSE(r.warning.has_value());
    std::vector<DocId> order;
    for (auto const& d : r.ranked) order.push_back(d.doc_id);
    CHECK(order == std::vector<DocId>{0, 2, 1, 3});
    CHECK(r.ranked[0].distance == doctest::Approx(0.0));
    CHECK(r.ranked[2].distance == doctest::Approx(1.0));

    auto const zero = rerank_by_cosine(candidates, TopicVector{{0, 0}}, corpus);
    REQUIRE(zero.warning.has_value());
    CHECK(zero.ranked.front().doc_id == 3);
}

TEST_CASE("event log persists, reloads and rejects time travel") {
    TempDir dir;
    auto const path = dir / "events.jsonl";
    {
        EventLog log(path);
        log.append(shown("malaria", 1, 100));
        log.append(vote(1, Action::vote_relevant, 200));
        log.append(PreferenceEvent{"other", 2, Action::vote_irrelevant, "", 50});
        CHECK_THROWS_AS(log.append(vote(2, Action::vote_relevant, 150)), ValidationError);
        CHECK(log.size() == 3);
    }
    EventLog reopened(path);
    CHECK(reopened.size() == 3);
    CHECK(reopened.events_for("u").size() == 2);
    CHECK(reopened.events()[0] == shown("malaria", 1, 100));
    CHECK(reopened.events()[1].doc_id == 1);
    reopened.append(vote(1, Action::vote_cleared, 200));
    CHECK(load_events(path).size() == 4);

    std::vector<PreferenceEvent> const batch{shown("x", std::nullopt, 1), vote(3, Action::vote_irrelevant, 2)};
    save_events(batch, dir / "copy.jsonl");
    CHECK(load_events(dir / "copy.jsonl") == batch);
}

TEST_CASE("action tags") {
    for (auto a : {Action::search_shown, Action::vote_relevant, Action::vote_irrelevant, Action::vote_cleared}) {
        CHECK(parse_action(to_string(a)) == a);
    }
    CHECK_THROWS_AS(parse_action("vote_maybe"), FormatError);
}
