#include <doctest.h>

#include "eileen/error.hpp"
#include "eileen/searchidx.hpp"
#include "support/tmpdir.hpp"

using namespace eileen;

namespace {

DocumentRecord doc(DocId id, std::string title) {
    DocumentRecord r;
    r.id = id;
    r.source_id = std::to_string(id);
    r.title = std::move(title);
    return r;
}

std::vector<DocumentRecord> three_docs() {
    return {doc(0, "malaria malaria vaccine"), doc(1, "malaria control"), doc(2, "vaccine trial")};
}

}  // namespace

TEST_CASE("BM25 on a three-document title index matches hand computation") {
    // Title lengths 3, 2, 2 (avg 7/3); df(malaria) = df(vaccin) = 2 of N = 3;
    // idf = ln(1 + 1.5 / 2.5); title weight 2; other fields empty.
    Tokenizer const tok;
    auto const index = InvertedIndex::build(three_docs(), tok);
    std::vector<std::string> const malaria{"malaria"};
    std::vector<std::string> const both{"malaria", "vaccin"};
    CHECK(std::abs(bm25_score(malaria, 0, index) - 1.1963728744436908) < 1e-9);
    CHECK(std::abs(bm25_score(malaria, 1, index) - 0.9983525366047352) < 1e-9);
    CHECK(bm25_score(malaria, 2, index) == 0.0);
    CHECK(std::abs(bm25_score(both, 0, index) - 2.0380072803023337) < 1e-9);
    CHECK(std::abs(bm25_score(both, 2, index) - 0.9983525366047352) < 1e-9);
    // Repeated query terms count once.
    std::vector<std::string> const twice{"malaria", "malaria"};
    CHECK(bm25_score(twice, 0, index) == bm25_score(malaria, 0, index));
    CHECK_THROWS_AS((void)bm25_score(malaria, 9, index), ReferenceError);
}

TEST_CASE("search ranks by score then doc id") {
    Tokenizer const tok;
    auto const index = InvertedIndex::build(three_docs(), tok);
    auto const hits = search("malaria vaccines", index, tok);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].doc_id == 0);
    CHECK(hits[0].rank == 1);
    // Docs 1 and 2 tie; the lower id wins.
    CHECK(hits[1].doc_id == 1);
    CHECK(hits[2].doc_id == 2);
    CHECK(hits[1].score == hits[2].score);
    CHECK(search("the of and", index, tok).empty());
    CHECK(search("", index, tok).empty());
}

TEST_CASE("a page holds at most page_size hits") {
    std::vector<DocumentRecord> docs;
    for (DocId i = 0; i < 15; ++i) docs.push_back(doc(i, "malaria study number " + std::string(static_cast<std::size_t>(i) + 1, 'x')));
    docs.push_back(doc(15, "unrelated genomics"));
    Tokenizer const tok;
    auto const index = InvertedIndex::build(docs, tok);
    auto const hits = search("malaria", index, tok);
    REQUIRE(hits.size() == 10);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].rank == i + 1);
        if (i > 0) CHECK(hits[i - 1].score >= hits[i].score);
    }
    // Shorter titles score higher under length normalisation.
    CHECK(hits[0].doc_id == 0);
    CHECK(search("malaria", index, tok, 20).size() == 15);
}

TEST_CASE("fields are indexed separately with their own frequencies") {
    DocumentRecord d = doc(0, "Malaria");
    d.abstract = "malaria in children";
    d.venue = "Malaria Journal";
    d.scientists = {"Ronald Ross"};
    Tokenizer const tok;
    auto const index = InvertedIndex::build(std::vector<DocumentRecord>{d, doc(1, "other")}, tok);
    auto const* p = index.posting("malaria", 0);
    REQUIRE(p != nullptr);
    CHECK(p->tf == FieldCounts{1, 1, 1, 0});
    CHECK(index.field_df("malaria") == FieldCounts{1, 1, 1, 0});
    CHECK(index.posting("ross", 0)->tf == FieldCounts{0, 0, 0, 1});
    CHECK(index.field_lengths(0) == FieldCounts{1, 2, 2, 2});
    CHECK(index.avg_field_length(Field::abstract) == 1.0);
    index.check_consistency();
}

TEST_CASE("index artifact round trip and validation") {
    Tokenizer const tok;
    auto const index = InvertedIndex::build(three_docs(), tok);
    TempDir dir;
    index.save(dir / "index.json");
    auto const back = InvertedIndex::load(dir / "index.json");
    CHECK(back == index);
    CHECK(back.serialize() == index.serialize());
    CHECK(back.avg_field_length(Field::title) == doctest::Approx(7.0 / 3.0));
    CHECK_THROWS_AS(InvertedIndex::build({}, tok), DomainError);
}
