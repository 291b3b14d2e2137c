#include <doctest.h>

#include <fstream>

#include "eileen/corpus.hpp"
#include "eileen/error.hpp"
#include "eileen/rng.hpp"
#include "eileen/synth.hpp"
#include "support/tmpdir.hpp"

using namespace eileen;

namespace {

void write_lines(std::filesystem::path const& path, std::initializer_list<std::string> lines) {
    std::ofstream out(path);
    for (auto const& l : lines) out << l << '\n';
}

DocumentRecord full_record() {
    DocumentRecord r;
    r.id = 7;
    r.source = Source::federal_exporter;
    r.source_id = "R01-000007";
    r.doc_type = DocType::grant;
    r.title = "Vector ecology of malaria";
    r.venue = "NIH";
    r.abstract = "We study the ecology of anopheles mosquitoes.";
    r.scientists = {"Ana Costa", "Jun Ito"};
    r.organizations = {"Institute of Tropical Medicine"};
    r.date = Date{2010, 4, 1};
    r.content = "full text kept verbatim";
    r.end_date = Date{2013, 3, 31};
    r.city = "Antwerp";
    r.country = "Belgium";
    r.other_ids = {{"doi", "10.1/xyz"}, {"pmid", "123"}};
    r.tfidf = SparseVector({{0, 0.5}, {3, 1.25}});
    r.topic = TopicVector{{3.0, 4.0}};
    r.topic_norm = TopicVector{{0.6, 0.8}};
    r.buckets = LshSignature{0b10, 2, 99};
    return r;
}

}  // namespace

TEST_CASE("grant lines map end dates and agencies") {
    TempDir dir;
    write_lines(dir / "grants.jsonl",
                {R"({"project_number":"R01-1","project_title":"Mosquito control","agency":"NIH",)"
                 R"("abstract_text":"Bed nets.","pi_names":"Ana Costa; Jun Ito","org_name":"ITM",)"
                 R"("project_start":"04/01/2010","project_end":"2013-03-31"})"});
    auto const parsed = parse_source(dir / "grants.jsonl", Source::federal_exporter);
    REQUIRE(parsed.records.size() == 1);
    auto const& r = parsed.records[0];
    CHECK(r.doc_type == DocType::grant);
    REQUIRE(r.end_date.has_value());
    CHECK(r.end_date->to_iso() == "2013-03-31");
    CHECK(r.date.to_iso() == "2010-04-01");
    CHECK(r.venue == "NIH");
    CHECK(r.scientists == std::vector<std::string>{"Ana Costa", "Jun Ito"});
    CHECK(r.organizations == std::vector<std::string>{"ITM"});
}

TEST_CASE("publication without a journal gets an empty venue") {
    TempDir dir;
    write_lines(dir / "pub.jsonl", {R"({"pmid":"1","title":"A title","pub_date":"2001"})"});
    auto const parsed = parse_source(dir / "pub.jsonl", Source::pubmed);
    REQUIRE(parsed.records.size() == 1);
    CHECK(parsed.records[0].venue.empty());
    CHECK(parsed.records[0].date.to_iso() == "2001");
    CHECK_FALSE(parsed.records[0].end_date.has_value());
}

TEST_CASE("one corrupt line out of three is skipped and counted") {
    TempDir dir;
    write_lines(dir / "pub.jsonl", {R"({"pmid":"1","title":"First","pub_date":"2001-02-03"})",
                                    R"({"pmid":"2","title":"Second", "pub_date": )",
                                    R"({"pmid":"3","title":"Third","pub_date":"2002"})"});
    auto const parsed = parse_source(dir / "pub.jsonl", Source::pubmed, 10);
    REQUIRE(parsed.records.size() == 2);
    CHECK(parsed.skipped == 1);
    CHECK(parsed.records[0].id == 10);
    CHECK(parsed.records[1].id == 11);
    CHECK(parsed.records[1].title == "Third");
}

TEST_CASE("mostly malformed input signals the wrong adapter") {
    TempDir dir;
    write_lines(dir / "x.jsonl", {R"({"pmid":"1","title":"ok","pub_date":"2001"})", "not json", "{}"});
    CHECK_THROWS_AS(parse_source(dir / "x.jsonl", Source::pubmed), FormatError);
    CHECK_THROWS_AS(parse_source(dir / "missing.jsonl", Source::pubmed), IoError);
    CHECK_THROWS_AS(parse_source_kind("medline"), ConfigError);
}

TEST_CASE("parsing is deterministic") {
    TempDir dir;
    write_source_files(generate_corpus({.n_docs = 30}), dir.path());
    auto const a = parse_source(dir / "pubmed.jsonl", Source::pubmed);
    auto const b = parse_source(dir / "pubmed.jsonl", Source::pubmed);
    CHECK(a.records == b.records);
}

TEST_CASE("markup is stripped from titles and abstracts") {
    CHECK(strip_markup("in crucian carp (<i>Carassius auratus gibelio</i>)") == "in crucian carp (Carassius auratus gibelio)");
    CHECK(strip_markup("p &lt; 0.01 &amp; more") == "p < 0.01 & more");
    CHECK(strip_markup("  two   spaces ") == "two spaces");
    CHECK(strip_markup("$P < 0.01$ observed").find('$') == std::string::npos);
}

TEST_CASE("dates accept ISO and US forms") {
    CHECK(Date::parse("2014").to_iso() == "2014");
    CHECK(Date::parse("2014-07").to_iso() == "2014-07");
    CHECK(Date::parse("2014-07-09T10:00:00").to_iso() == "2014-07-09");
    CHECK(Date::parse("7/9/2014").to_iso() == "2014-07-09");
    CHECK_THROWS_AS(Date::parse("July 2014"), FormatError);
    CHECK_THROWS_AS(Date::parse("2014-13"), FormatError);
}

TEST_CASE("save and load round trip") {
    TempDir dir;
    SUBCASE("empty corpus") {
        save_corpus({}, dir / "c.jsonl");
        CHECK(std::filesystem::file_size(dir / "c.jsonl") == 0);
        CHECK(load_corpus(dir / "c.jsonl").empty());
    }
    SUBCASE("every field populated") {
        std::vector<DocumentRecord> const records{full_record()};
        save_corpus(records, dir / "c.jsonl");
        CHECK(load_corpus(dir / "c.jsonl") == records);
    }
    SUBCASE("unicode and stripped markup survive byte for byte") {
        DocumentRecord r = full_record();
        r.title = strip_markup("Interleukin 11 in crucian carp (<i>Carassius auratus gibelio</i>) \xE2\x80\x94 \xC3\xA9tude");
        r.abstract = "Zebrafish \xCE\xB1-helix \xE6\xB5\x8B\xE8\xAF\x95";
        save_corpus(std::vector<DocumentRecord>{r}, dir / "c.jsonl");
        auto const back = load_corpus(dir / "c.jsonl");
        REQUIRE(back.size() == 1);
        CHECK(back[0].title == r.title);
        CHECK(back[0].abstract == r.abstract);
    }
}

TEST_CASE("round trip holds for generated corpora") {
    TempDir dir;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto generated = generate_corpus({.n_docs = 25, .seed = seed});
        Rng rng(seed);
        for (auto& d : generated.docs) {
            if (rng.bernoulli(0.5)) d.content = "content " + std::to_string(rng.below(1000));
            if (rng.bernoulli(0.3)) d.city.reset();
            if (rng.bernoulli(0.5)) {
                d.topic = TopicVector{{rng.normal(), rng.normal(), rng.normal()}};
                d.topic_norm = d.topic->normalized();
            }
        }
        save_corpus(generated.docs, dir / "c.jsonl");
        CHECK(load_corpus(dir / "c.jsonl") == generated.docs);
    }
}

TEST_CASE("saving rejects invariant violations with the offending ids") {
    TempDir dir;
    DocumentRecord a = full_record();
    DocumentRecord b = full_record();
    b.id = 8;
    b.source_id = "other";
    b.doc_type = DocType::publication;  // end_date on a publication
    DocumentRecord c = full_record();
    c.id = 9;
    c.source_id = "third";
    c.topic_norm = TopicVector{{1.0, 1.0}};
    try {
        save_corpus(std::vector<DocumentRecord>{a, b, c}, dir / "c.jsonl");
        FAIL("expected ValidationError");
    } catch (ValidationError const& e) {
        std::string const what = e.what();
        CHECK(what.find("id 8") != std::string::npos);
        CHECK(what.find("id 9") != std::string::npos);
        CHECK(what.find("id 7") == std::string::npos);
    }
    DocumentRecord dup = full_record();
    dup.source_id = "different";
    CHECK_THROWS_AS(validate_records(std::vector<DocumentRecord>{a, dup}), ValidationError);
}

TEST_CASE("zero topic_norm is a valid empty document") {
    DocumentRecord r = full_record();
    r.topic_norm = TopicVector::zeros(2);
    CHECK_FALSE(check_invariants(r).has_value());
}

TEST_CASE("corpus lookup") {
    Corpus const corpus(std::vector<DocumentRecord>{full_record()});
    CHECK(corpus.contains(7));
    CHECK(corpus.find(8) == nullptr);
    CHECK(corpus.at(7).title == "Vector ecology of malaria");
    CHECK_THROWS_AS((void)corpus.at(8), ReferenceError);
}
