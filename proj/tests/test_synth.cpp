#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "eileen/engine.hpp"
#include "eileen/error.hpp"
#include "eileen/synth.hpp"
#include "eileen/util.hpp"
#include "support/tmpdir.hpp"

using namespace eileen;

namespace {

std::size_t count_occurrences(std::string const& haystack, std::string const& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("corpus generation is seeded") {
    auto const a = generate_corpus({.n_docs = 60});
    auto const b = generate_corpus({.n_docs = 60});
    auto const c = generate_corpus({.n_docs = 60, .seed = 8});
    CHECK(a.docs == b.docs);
    CHECK(a.topics == b.topics);
    CHECK(a.docs != c.docs);
    REQUIRE(a.docs.size() == 60);
    std::set<std::size_t> topics(a.topics.begin(), a.topics.end());
    CHECK(topics.size() == synth_topic_count());
    std::size_t grants = 0;
    for (std::size_t i = 0; i < a.docs.size(); ++i) {
        CHECK(a.docs[i].id == static_cast<DocId>(i));
        if (a.docs[i].doc_type == DocType::grant) {
            ++grants;
            CHECK(a.docs[i].end_date.has_value());
        } else {
            CHECK(grants == 0);  // publications first, then grants
        }
    }
    CHECK(grants >= 5);
    CHECK(grants <= 30);
    validate_records(a.docs);
}

TEST_CASE("source files ingest back to the generated documents") {
    auto const generated = generate_corpus({.n_docs = 40, .seed = 3});
    TempDir dir;
    write_source_files(generated, dir.path());
    std::vector<SourceInput> const inputs{{dir / "pubmed.jsonl", Source::pubmed},
                                          {dir / "federal_exporter.jsonl", Source::federal_exporter}};
    auto const report = ingest_sources(inputs);
    CHECK(report.skipped == std::vector<std::size_t>{0, 0});
    CHECK(report.records == generated.docs);
}

TEST_CASE("committed fixtures equal a fresh generation") {
    TempDir dir;
    write_source_files(generate_corpus({}), dir / "corpus");
    write_semeval(generate_keyphrase_fixture({}), dir / "keyphrase");
    std::filesystem::path const committed = EILEEN_SOURCE_DIR "/data/fixtures";
    std::size_t compared = 0;
    for (auto const& entry : std::filesystem::recursive_directory_iterator(dir.path())) {
        if (!entry.is_regular_file()) continue;
        auto const rel = std::filesystem::relative(entry.path(), dir.path());
        INFO(rel.string());
        REQUIRE(std::filesystem::exists(committed / rel));
        CHECK(read_text_file(entry.path()) == read_text_file(committed / rel));
        ++compared;
    }
    CHECK(compared > 70);
}

TEST_CASE("keyphrase fixture plants the occurrence rule") {
    auto const splits = generate_keyphrase_fixture({.train = 5, .trial = 2, .test = 3});
    CHECK(splits.train.size() == 5);
    CHECK(splits.validation.size() == 2);
    CHECK(splits.test.size() == 3);
    for (auto const& doc : splits.train) {
        REQUIRE(doc.gold.size() == 4);
        for (auto const& g : doc.gold) {
            auto const n = count_occurrences(doc.text, g);
            CHECK(n >= 4);
            CHECK(n <= 6);
        }
    }
    CHECK(splits.train[0].id.rfind("C-", 0) == 0);
    CHECK(splits.validation[0].id.rfind("T-", 0) == 0);
    CHECK(splits.test[0].id.rfind("X-", 0) == 0);
}

TEST_CASE("simulated users are reproducible and well formed") {
    TempDir dir;
    auto generated = generate_corpus({.n_docs = 120});
    EngineConfig config;
    config.lsa_k = 20;
    auto model = fit_semantics(std::move(generated.docs), config);
    Corpus const corpus(model.docs);
    Tokenizer const tok;
    auto const index = InvertedIndex::build(corpus.records(), tok);
    SimulationOptions const options{.n_users = 6, .searches_per_user = 4};
    auto const events = simulate_users(corpus, index, tok, options);
    CHECK(events == simulate_users(corpus, index, tok, options));

    std::set<std::string> users;
    std::map<std::string, std::int64_t> last;
    std::map<std::pair<std::string, std::int64_t>, std::set<std::string>> queries_at;
    std::size_t votes = 0;
    for (auto const& e : events) {
        users.insert(e.user_id);
        CHECK(e.timestamp >= last[e.user_id]);
        last[e.user_id] = e.timestamp;
        if (e.action == Action::search_shown) {
            queries_at[{e.user_id, e.timestamp}].insert(e.query);
        } else {
            ++votes;
            REQUIRE(e.doc_id.has_value());
            CHECK(corpus.contains(*e.doc_id));
        }
    }
    CHECK(users.size() == 6);
    CHECK(votes > 0);
    // One query per timestamp: every hit of a search shares it.
    for (auto const& [_, qs] : queries_at) CHECK(qs.size() == 1);
    CHECK(queries_at.size() == 6 * 4);

    std::vector<DocumentRecord> bare = model.docs;
    for (auto& d : bare) {
        d.topic.reset();
        d.topic_norm.reset();
    }
    CHECK_THROWS_AS(simulate_users(Corpus(bare), index, tok, options), PreconditionError);
}
