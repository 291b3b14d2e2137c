#include "eileen/engine.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"
#include "eileen/rng.hpp"
#include "eileen/util.hpp"

namespace eileen {

using nlohmann::json;

namespace {

std::string_view svd_name(SvdMethod m) {
    switch (m) {
        case SvdMethod::dense: return "dense";
        case SvdMethod::randomized: return "randomized";
        case SvdMethod::automatic: break;
    }
    return "automatic";
}

SvdMethod parse_svd(std::string const& name) {
    if (name == "automatic") return SvdMethod::automatic;
    if (name == "dense") return SvdMethod::dense;
    if (name == "randomized") return SvdMethod::randomized;
    throw ConfigError("svd must be automatic, dense or randomized, got '" + name + "'");
}

void reject_unknown(json const& j, std::string const& where, std::set<std::string> const& known) {
    if (!j.is_object()) throw ConfigError("config key '" + where + "' must be an object");
    for (auto const& [key, _] : j.items()) {
        if (known.count(key) == 0) throw ConfigError("unknown config key '" + where + "." + key + "'");
    }
}

template <typename T>
void read_key(json const& j, char const* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (json::exception const& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

bool parse_bool(std::string_view v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("expected a boolean, got '" + std::string(v) + "'");
}

template <typename T>
T parse_unsigned(char const* name, std::string_view v) {
    try {
        std::size_t used = 0;
        auto const n = std::stoull(std::string(v), &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return static_cast<T>(n);
    } catch (std::exception const&) {
        throw ConfigError(std::string(name) + " must be a non-negative integer, got '" + std::string(v) + "'");
    }
}

}  // namespace

EngineConfig EngineConfig::from_json(json const& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static std::set<std::string> const known = {
        "seed", "vocabulary", "lsa_k", "lsh_planes", "svd", "bm25", "page_size", "query_window",
        "max_hamming", "use_ltr", "ltr_variant", "ltr_trees", "keyphrase_trees", "host", "port",
        "artifact_dir", "snapshot_every"};
    for (auto const& [key, _] : j.items()) {
        if (known.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
    }
    EngineConfig c;
    read_key(j, "seed", c.seed);
    if (j.contains("vocabulary")) {
        auto const& v = j.at("vocabulary");
        reject_unknown(v, "vocabulary", {"min_term_count", "max_df_ratio"});
        read_key(v, "min_term_count", c.vocabulary.min_term_count);
        read_key(v, "max_df_ratio", c.vocabulary.max_df_ratio);
    }
    read_key(j, "lsa_k", c.lsa_k);
    read_key(j, "lsh_planes", c.lsh_planes);
    if (j.contains("svd")) c.svd = parse_svd(j.at("svd").get<std::string>());
    if (j.contains("bm25")) {
        auto const& b = j.at("bm25");
        reject_unknown(b, "bm25", {"k1", "b", "field_weights"});
        read_key(b, "k1", c.bm25.k1);
        read_key(b, "b", c.bm25.b);
        read_key(b, "field_weights", c.bm25.field_weights);
    }
    read_key(j, "page_size", c.page_size);
    read_key(j, "query_window", c.query_window);
    read_key(j, "max_hamming", c.max_hamming);
    read_key(j, "use_ltr", c.use_ltr);
    if (j.contains("ltr_variant")) c.ltr_variant = parse_variant(j.at("ltr_variant").get<std::string>());
    read_key(j, "ltr_trees", c.ltr_trees);
    read_key(j, "keyphrase_trees", c.keyphrase_trees);
    read_key(j, "host", c.host);
    read_key(j, "port", c.port);
    if (j.contains("artifact_dir")) c.artifact_dir = j.at("artifact_dir").get<std::string>();
    read_key(j, "snapshot_every", c.snapshot_every);

    if (c.lsa_k == 0) throw ConfigError("lsa_k must be positive");
    if (c.lsh_planes == 0 || c.lsh_planes > 64) throw ConfigError("lsh_planes must be in [1, 64]");
    if (c.page_size == 0) throw ConfigError("page_size must be positive");
    if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range");
    if (c.ltr_trees == 0 || c.keyphrase_trees == 0) throw ConfigError("tree counts must be positive");
    if (!(c.vocabulary.max_df_ratio > 0.0 && c.vocabulary.max_df_ratio <= 1.0)) {
        throw ConfigError("vocabulary.max_df_ratio must be in (0, 1]");
    }
    return c;
}

json EngineConfig::to_json() const {
    return json{{"seed", seed},
                {"vocabulary", {{"min_term_count", vocabulary.min_term_count}, {"max_df_ratio", vocabulary.max_df_ratio}}},
                {"lsa_k", lsa_k},
                {"lsh_planes", lsh_planes},
                {"svd", svd_name(svd)},
                {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}, {"field_weights", bm25.field_weights}}},
                {"page_size", page_size},
                {"query_window", query_window},
                {"max_hamming", max_hamming},
                {"use_ltr", use_ltr},
                {"ltr_variant", variant_config(ltr_variant).name},
                {"ltr_trees", ltr_trees},
                {"keyphrase_trees", keyphrase_trees},
                {"host", host},
                {"port", port},
                {"artifact_dir", artifact_dir.string()},
                {"snapshot_every", snapshot_every}};
}

EngineConfig EngineConfig::load(std::filesystem::path const& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (json::exception const& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

void EngineConfig::apply_env(std::function<char const*(char const*)> const& getenv) {
    if (char const* v = getenv("EILEEN_HOST"); v && *v) host = v;
    if (char const* v = getenv("EILEEN_PORT"); v && *v) {
        port = parse_unsigned<int>("EILEEN_PORT", v);
        if (port > 65535) throw ConfigError("EILEEN_PORT out of range");
    }
    if (char const* v = getenv("EILEEN_ARTIFACT_DIR"); v && *v) artifact_dir = v;
    if (char const* v = getenv("EILEEN_PAGE_SIZE"); v && *v) {
        page_size = parse_unsigned<std::size_t>("EILEEN_PAGE_SIZE", v);
        if (page_size == 0) throw ConfigError("EILEEN_PAGE_SIZE must be positive");
    }
    if (char const* v = getenv("EILEEN_USE_LTR"); v && *v) use_ltr = parse_bool(v);
    if (char const* v = getenv("EILEEN_SEED"); v && *v) seed = parse_unsigned<std::uint64_t>("EILEEN_SEED", v);
}

// ---------------------------------------------------------------------------

IngestReport ingest_sources(std::span<SourceInput const> inputs) {
    IngestReport report;
    DocId next = 0;
    for (auto const& input : inputs) {
        auto parsed = parse_source(input.path, input.kind, next);
        next += static_cast<DocId>(parsed.records.size());
        report.skipped.push_back(parsed.skipped);
        for (auto& r : parsed.records) report.records.push_back(std::move(r));
    }
    validate_records(report.records);
    return report;
}

SemanticModel fit_semantics(std::vector<DocumentRecord> docs, EngineConfig const& config, Tokenizer const& tokenizer) {
    if (docs.empty()) throw DomainError("cannot fit semantics on an empty corpus");
    SemanticModel out;
    out.vocabulary = build_vocabulary(docs, tokenizer, config.vocabulary);
    if (out.vocabulary.size() == 0) {
        throw DomainError("vocabulary is empty; lower vocabulary.min_term_count or add documents");
    }
    std::uint64_t const fp = out.vocabulary.fingerprint();
    std::vector<SparseVector> rows;
    rows.reserve(docs.size());
    for (auto const& d : docs) rows.push_back(vectorize(d, out.vocabulary, tokenizer));

    std::size_t const k = std::min({config.lsa_k, docs.size(), out.vocabulary.size()});
    LsaOptions options;
    options.method = config.svd;
    options.seed = Rng::derive(config.seed, 2);
    out.lsa = fit_lsa(rows, out.vocabulary.size(), k, fp, options);
    out.lsa.lsh_planes = config.lsh_planes;
    out.lsa.lsh_seed = Rng::derive(config.seed, 3);

    LshFamily const family(k, out.lsa.lsh_planes, out.lsa.lsh_seed);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto& d = docs[i];
        TopicVector topic = project(rows[i], out.lsa, fp, false);
        d.topic_norm = topic.normalized();
        d.topic = std::move(topic);
        d.buckets = family.sign(*d.topic_norm);
        d.tfidf = std::move(rows[i]);
    }
    out.docs = std::move(docs);
    return out;
}

std::map<std::string, LibraryState> replay_all(std::span<PreferenceEvent const> events, Corpus const& corpus,
                                               std::size_t query_window) {
    std::map<std::string, LibraryState> out;
    std::size_t const k = topic_dimension(corpus);
    for (auto const& e : events) {
        auto [it, inserted] = out.try_emplace(e.user_id);
        if (inserted) it->second.library_topic = TopicVector::zeros(k);
        it->second = apply_event(std::move(it->second), e, corpus, query_window);
    }
    return out;
}

// ---------------------------------------------------------------------------

void save_snapshot(LibrarySnapshot const& snapshot, std::filesystem::path const& path) {
    json libs = json::object();
    for (auto const& [user, state] : snapshot.libraries) {
        libs[user] = {{"relevant", state.relevant},
                      {"irrelevant", state.irrelevant},
                      {"recent_queries", std::vector<std::string>(state.recent_queries.begin(), state.recent_queries.end())}};
    }
    json const j{{"format", "eileen-libraries"}, {"version", 1}, {"event_count", snapshot.event_count}, {"libraries", libs}};
    write_text_file(path, j.dump() + "\n");
}

LibrarySnapshot load_snapshot(std::filesystem::path const& path, Corpus const& corpus) {
    LibrarySnapshot s;
    try {
        json const j = json::parse(read_text_file(path));
        if (j.at("format") != "eileen-libraries" || j.at("version") != 1) {
            throw FormatError(path.string() + " is not a library snapshot");
        }
        s.event_count = j.at("event_count").get<std::size_t>();
        std::size_t const k = topic_dimension(corpus);
        for (auto const& [user, lib] : j.at("libraries").items()) {
            LibraryState state;
            state.relevant = lib.at("relevant").get<std::set<DocId>>();
            state.irrelevant = lib.at("irrelevant").get<std::set<DocId>>();
            for (auto const& q : lib.at("recent_queries")) state.recent_queries.push_back(q.get<std::string>());
            state.library_topic = mean_topic(state.relevant, corpus, k);
            s.libraries.emplace(user, std::move(state));
        }
    } catch (json::exception const& e) {
        throw FormatError("malformed snapshot " + path.string() + ": " + e.what());
    }
    return s;
}

json library_json(LibraryState const& state) {
    return json{{"relevant", state.relevant.size()},
                {"irrelevant", state.irrelevant.size()},
                {"relevant_ids", state.relevant},
                {"irrelevant_ids", state.irrelevant},
                {"recent_queries", std::vector<std::string>(state.recent_queries.begin(), state.recent_queries.end())}};
}

// ---------------------------------------------------------------------------

Engine::Engine(Corpus corpus, Vocabulary vocabulary, LsaModel lsa, InvertedIndex index, EngineConfig config)
    : corpus_(std::move(corpus)),
      vocabulary_(std::move(vocabulary)),
      lsa_(std::move(lsa)),
      index_(std::move(index)),
      config_(std::move(config)) {
    if (lsa_.vocab_fingerprint != vocabulary_.fingerprint()) {
        throw IncompatibleError("LSA model was fitted on a different vocabulary; rerun fit-lsa");
    }
    for (auto const& d : corpus_.records()) {
        if (!d.topic_norm) throw IncompatibleError("corpus lacks topic vectors; run fit-lsa");
        if (d.topic_norm->size() != lsa_.k) throw IncompatibleError("corpus topic dimension differs from the LSA model");
        if (!index_.contains(d.id)) throw IncompatibleError("index is missing document " + std::to_string(d.id) + "; rerun build-index");
    }
    if (index_.n_docs() != corpus_.size()) throw IncompatibleError("index and corpus sizes differ; rerun build-index");
}

Engine Engine::load(EngineConfig const& config) {
    ArtifactPaths const paths{config.artifact_dir};
    for (auto const& p : {paths.corpus(), paths.vocabulary(), paths.lsa(), paths.index()}) {
        if (!std::filesystem::exists(p)) throw IoError("missing artifact " + p.string());
    }
    Engine engine(Corpus(load_corpus(paths.corpus())), Vocabulary::load(paths.vocabulary()), LsaModel::load(paths.lsa()),
                  InvertedIndex::load(paths.index()), config);
    if (std::filesystem::exists(paths.ltr_model())) engine.set_ltr_model(ForestModel::load(paths.ltr_model()));
    if (std::filesystem::exists(paths.keyphrase_model())) {
        engine.set_keyphrase_model(ForestModel::load(paths.keyphrase_model()));
    }
    return engine;
}

std::vector<SearchHit> Engine::search(std::string_view query, LibraryState const& library) const {
    auto hits = eileen::search(query, index_, tokenizer_, config_.page_size, config_.bm25);
    if (!config_.use_ltr || !ltr_ || hits.empty()) return hits;
    TopicVector const library_topic =
        library.library_topic.size() == lsa_.k ? library.library_topic : TopicVector::zeros(lsa_.k);
    auto const reranked = rerank_search(hits, *ltr_, config_.ltr_variant, query, corpus_, library_topic, tokenizer_);
    std::vector<SearchHit> out;
    out.reserve(reranked.size());
    for (auto const& r : reranked) {
        SearchHit h = r.hit;
        h.rank = out.size() + 1;
        out.push_back(h);
    }
    return out;
}

Recommendation Engine::recommend(LibraryState const& library, std::size_t top_k) const {
    TopicVector const q_o = query_topic(library.recent_queries, vocabulary_, tokenizer_, lsa_);
    RecommendOptions options;
    options.top_k = top_k;
    options.max_hamming = config_.max_hamming;
    return eileen::recommend(library, q_o, corpus_, options);
}

Popularity Engine::popularity(LibraryState const& library) const {
    if (!keyphrase_ || library.relevant.empty()) return {};
    std::vector<DocumentRecord> docs;
    for (DocId id : library.relevant) docs.push_back(corpus_.at(id));
    return popularity_by_year(docs, *keyphrase_);
}

std::vector<std::string> Engine::autocomplete(LibraryState const& library, std::string_view prefix,
                                              std::size_t limit) const {
    std::string p;
    for (char c : prefix) p += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<std::pair<std::size_t, std::string>> scored;
    for (auto const& [phrase, years] : popularity(library)) {
        if (phrase.compare(0, p.size(), p) != 0) continue;
        std::size_t total = 0;
        for (auto const& [_, n] : years) total += n;
        scored.emplace_back(total, phrase);
    }
    std::sort(scored.begin(), scored.end(), [](auto const& a, auto const& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::string> out;
    for (auto const& [_, phrase] : scored) {
        if (out.size() == limit) break;
        out.push_back(phrase);
    }
    return out;
}

}  // namespace eileen
