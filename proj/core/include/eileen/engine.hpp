#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eileen/corpus.hpp"
#include "eileen/forest.hpp"
#include "eileen/keyphrase.hpp"
#include "eileen/ltr.hpp"
#include "eileen/relevance.hpp"
#include "eileen/searchidx.hpp"
#include "eileen/semantics.hpp"
#include "eileen/textpipe.hpp"

namespace eileen {

/// Settings shared by the CLI and the service. Read from a JSON file whose
/// keys mirror the member names; unknown keys are rejected.
struct EngineConfig {
    std::uint64_t seed = 0;
    VocabularyConfig vocabulary;
    std::size_t lsa_k = 100;
    std::uint32_t lsh_planes = 16;
    SvdMethod svd = SvdMethod::automatic;
    Bm25Params bm25;
    std::size_t page_size = 10;
    std::size_t query_window = 5;
    int max_hamming = 2;
    /// Rerank search pages with the LTR model when one is present.
    bool use_ltr = false;
    Variant ltr_variant = Variant::all12;
    std::size_t ltr_trees = 500;
    std::size_t keyphrase_trees = 500;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path artifact_dir = "artifacts";
    /// Library snapshot written every this many appended events (0 = never).
    std::size_t snapshot_every = 200;

    /// Throws ConfigError or IoError.
    static EngineConfig load(std::filesystem::path const& path);
    static EngineConfig from_json(nlohmann::json const& j);
    [[nodiscard]] nlohmann::json to_json() const;

    /// EILEEN_HOST, EILEEN_PORT, EILEEN_ARTIFACT_DIR, EILEEN_PAGE_SIZE,
    /// EILEEN_USE_LTR and EILEEN_SEED override the matching settings.
    void apply_env(std::function<char const*(char const*)> const& getenv);
};

/// File names inside an artifact directory.
struct ArtifactPaths {
    std::filesystem::path dir;

    [[nodiscard]] std::filesystem::path corpus() const { return dir / "corpus.jsonl"; }
    [[nodiscard]] std::filesystem::path vocabulary() const { return dir / "vocabulary.json"; }
    [[nodiscard]] std::filesystem::path lsa() const { return dir / "lsa.bin"; }
    [[nodiscard]] std::filesystem::path index() const { return dir / "index.json"; }
    [[nodiscard]] std::filesystem::path events() const { return dir / "events.jsonl"; }
    [[nodiscard]] std::filesystem::path snapshot() const { return dir / "libraries.json"; }
    [[nodiscard]] std::filesystem::path users() const { return dir / "users.jsonl"; }
    [[nodiscard]] std::filesystem::path ltr_dataset() const { return dir / "ltr_dataset.tsv"; }
    [[nodiscard]] std::filesystem::path ltr_model() const { return dir / "ltr_model.json"; }
    [[nodiscard]] std::filesystem::path keyphrase_model() const { return dir / "keyphrase_model.json"; }
};

struct SourceInput {
    std::filesystem::path path;
    Source kind = Source::other;
};

struct IngestReport {
    std::vector<DocumentRecord> records;
    /// Malformed lines per input, parallel to the inputs.
    std::vector<std::size_t> skipped;
};

/// Parses each input in order with consecutive ids across files and
/// validates the result. Throws ValidationError on duplicates.
IngestReport ingest_sources(std::span<SourceInput const> inputs);

struct SemanticModel {
    std::vector<DocumentRecord> docs;
    Vocabulary vocabulary;
    LsaModel lsa;
};

/// Vocabulary, tf-idf, LSA and LSH fields for every document. k is lowered
/// to the rank limit min(#docs, #terms) of small corpora. Throws DomainError
/// when no document has an in-vocabulary term.
SemanticModel fit_semantics(std::vector<DocumentRecord> docs, EngineConfig const& config,
                            Tokenizer const& tokenizer = Tokenizer());

/// Library states of every user appearing in the events.
std::map<std::string, LibraryState> replay_all(std::span<PreferenceEvent const> events, Corpus const& corpus,
                                               std::size_t query_window);

/// Snapshot of library states after the first `event_count` log entries.
struct LibrarySnapshot {
    std::size_t event_count = 0;
    std::map<std::string, LibraryState> libraries;
};

void save_snapshot(LibrarySnapshot const& snapshot, std::filesystem::path const& path);
/// Library topics are recomputed from the corpus. Throws FormatError.
LibrarySnapshot load_snapshot(std::filesystem::path const& path, Corpus const& corpus);

/// Summary counts and ids of a library.
nlohmann::json library_json(LibraryState const& state);

/// Read-only bundle of fitted artifacts used to answer queries.
class Engine {
  public:
    Engine(Corpus corpus, Vocabulary vocabulary, LsaModel lsa, InvertedIndex index, EngineConfig config);

    /// Requires corpus (with topic vectors), vocabulary, LSA and index
    /// artifacts; the LTR and keyphrase models are optional.
    static Engine load(EngineConfig const& config);

    [[nodiscard]] Corpus const& corpus() const noexcept { return corpus_; }
    [[nodiscard]] Vocabulary const& vocabulary() const noexcept { return vocabulary_; }
    [[nodiscard]] LsaModel const& lsa() const noexcept { return lsa_; }
    [[nodiscard]] InvertedIndex const& index() const noexcept { return index_; }
    [[nodiscard]] Tokenizer const& tokenizer() const noexcept { return tokenizer_; }
    [[nodiscard]] EngineConfig const& config() const noexcept { return config_; }

    void set_ltr_model(ForestModel model) { ltr_ = std::move(model); }
    void set_keyphrase_model(ForestModel model) { keyphrase_ = std::move(model); }
    [[nodiscard]] ForestModel const* ltr_model() const noexcept { return ltr_ ? &*ltr_ : nullptr; }
    [[nodiscard]] ForestModel const* keyphrase_model() const noexcept { return keyphrase_ ? &*keyphrase_ : nullptr; }

    /// First BM25 page, reranked by the LTR model when enabled. `score`
    /// stays the BM25 score; `rank` is the displayed position.
    [[nodiscard]] std::vector<SearchHit> search(std::string_view query, LibraryState const& library) const;

    /// Rocchio over the user's recent queries and relevant documents.
    [[nodiscard]] Recommendation recommend(LibraryState const& library, std::size_t top_k) const;

    /// Keyphrase popularity over the library's relevant documents; empty
    /// without a keyphrase model.
    [[nodiscard]] Popularity popularity(LibraryState const& library) const;

    /// Keyphrases of the library's documents starting with `prefix`, most
    /// frequent first.
    [[nodiscard]] std::vector<std::string> autocomplete(LibraryState const& library, std::string_view prefix,
                                                        std::size_t limit) const;

  private:
    Corpus corpus_;
    Vocabulary vocabulary_;
    LsaModel lsa_;
    InvertedIndex index_;
    Tokenizer tokenizer_;
    EngineConfig config_;
    std::optional<ForestModel> ltr_;
    std::optional<ForestModel> keyphrase_;
};

}  // namespace eileen
