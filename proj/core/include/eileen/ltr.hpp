#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eileen/corpus.hpp"
#include "eileen/forest.hpp"
#include "eileen/relevance.hpp"
#include "eileen/searchidx.hpp"
#include "eileen/textpipe.hpp"

namespace eileen {

inline constexpr std::size_t kLtrFeatureCount = 12;
inline constexpr std::array<std::string_view, kLtrFeatureCount> kLtrFeatureNames = {
    "query_length",     "title_length",      "authors_length",      "venue_length",
    "abstract_length",  "year",              "search_score",        "cos_query_title",
    "cos_query_authors", "cos_query_venue",  "cos_query_abstract",  "cos_doc_library"};

struct FeatureRow {
    std::array<double, kLtrFeatureCount> features{};
    int label = 0;
    std::string user_id;
    std::string query;
    DocId doc_id = 0;
    std::int64_t timestamp = 0;

    friend bool operator==(FeatureRow const&, FeatureRow const&) = default;
};

enum class Variant { all12, no_es_score, no_library_cosine, es_only, es_plus_library };

struct VariantConfig {
    Variant variant;
    std::string_view name;
    /// Zero-based indices into FeatureRow::features.
    std::vector<std::size_t> features;
};

VariantConfig variant_config(Variant v);
std::vector<VariantConfig> all_variants();
/// Throws ConfigError.
Variant parse_variant(std::string_view name);

struct FeatureOptions {
    /// Relevant rows compare against the library without their own document.
    bool leave_one_out = true;
    /// f8-f11 use corpus-level document frequencies instead of fitting on
    /// the five fields of the (query, document) pair.
    bool corpus_idf = false;
};

/// The twelve features of one (query, document) pair. `library` is the
/// relevant-document set to compare against; the caller decides whether it
/// includes the document itself. Cosine distances are clamped to [0, 1].
std::array<double, kLtrFeatureCount> extract_features(std::string_view query, DocumentRecord const& doc,
                                                      double search_score, TopicVector const& library_topic,
                                                      Tokenizer const& tokenizer,
                                                      Vocabulary const* corpus_vocab = nullptr);

/// Cosine distance of the tf-idf vectors of two of five fields, with
/// document frequencies fitted on the five fields only.
std::array<double, 4> pair_field_distances(std::string_view query, DocumentRecord const& doc,
                                           Tokenizer const& tokenizer);

/// One row per document shown by each logged search (at most page_size),
/// labelled by the user's votes before their next search: relevant -> 1,
/// unvoted -> 0, irrelevant -> no row. f12 uses the library at search time.
/// Throws ReferenceError for unknown documents.
std::vector<FeatureRow> build_dataset(std::span<PreferenceEvent const> events, Corpus const& corpus,
                                      InvertedIndex const& index, Tokenizer const& tokenizer,
                                      FeatureOptions const& options = {}, std::size_t page_size = 10,
                                      Vocabulary const* corpus_vocab = nullptr);

struct UserSplit {
    std::vector<std::string> train_users;
    std::vector<std::string> test_users;
};

/// Shuffled 4:1 split by user; the test side gets max(2, round(n / 5))
/// users. Throws DomainError with fewer than 4 users.
UserSplit split_users(std::span<FeatureRow const> rows, std::uint64_t seed);

struct LtrReport {
    std::string variant;
    double auc = 0.0;
    /// (feature name, importance) for the variant's features.
    std::vector<std::pair<std::string, double>> importances;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t train_users = 0;
    std::size_t test_users = 0;
    std::vector<RocPoint> roc;
    ForestModel model;
};

/// Trains the variant's forest on the train users and reports test AUC.
/// Throws DomainError if a side lacks a class.
LtrReport train_and_evaluate(std::span<FeatureRow const> rows, Variant variant, std::uint64_t seed,
                             ForestConfig const& forest = {});
LtrReport train_and_evaluate(std::span<FeatureRow const> rows, Variant variant, UserSplit const& split,
                             std::uint64_t seed, ForestConfig const& forest = {});

/// All five variants on one shared split.
std::vector<LtrReport> evaluate_variants(std::span<FeatureRow const> rows, std::uint64_t seed,
                                         ForestConfig const& forest = {});

FeatureMatrix variant_matrix(std::span<FeatureRow const> rows, VariantConfig const& variant);

struct RerankedHit {
    SearchHit hit;
    double p1 = 0.0;
};

/// Hits by predicted p1 descending, ties by original rank. Throws
/// ValidationError when the model does not match the variant's width.
std::vector<RerankedHit> rerank_search(std::span<SearchHit const> hits, ForestModel const& model,
                                       Variant variant, std::string_view query, Corpus const& corpus,
                                       TopicVector const& library_topic, Tokenizer const& tokenizer);

/// Tab-separated export with a header naming every column.
std::string format_dataset(std::span<FeatureRow const> rows);
std::vector<FeatureRow> parse_dataset(std::string const& text);
void save_dataset(std::span<FeatureRow const> rows, std::filesystem::path const& path);
std::vector<FeatureRow> load_dataset(std::filesystem::path const& path);

/// Variant AUC table followed by per-variant importance tables.
std::string format_ltr_report(std::span<LtrReport const> reports);
/// variant,feature,importance rows for plotting.
std::string format_importance_csv(std::span<LtrReport const> reports);
nlohmann::json ltr_report_json(std::span<LtrReport const> reports);

}  // namespace eileen
