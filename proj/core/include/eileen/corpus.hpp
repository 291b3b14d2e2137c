#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eileen/vectors.hpp"

namespace eileen {

enum class Source { pubmed, arxiv, federal_exporter, nber, other };
enum class DocType { publication, grant };

std::string_view to_string(Source source) noexcept;
std::string_view to_string(DocType type) noexcept;
/// Throws ConfigError for unknown tags.
Source parse_source_kind(std::string_view tag);
DocType parse_doc_type(std::string_view tag);

/// Calendar date with mandatory year. Serialised as ISO-8601 "YYYY",
/// "YYYY-MM" or "YYYY-MM-DD".
struct Date {
    int year = 0;
    std::optional<int> month;
    std::optional<int> day;

    [[nodiscard]] std::string to_iso() const;
    /// Accepts ISO dates (optionally followed by a time part) and the US
    /// "MM/DD/YYYY" form used by grant exports. Throws FormatError.
    static Date parse(std::string_view text);

    friend bool operator==(Date const&, Date const&) = default;
};

/// Unified publication/grant record.
struct DocumentRecord {
    DocId id = 0;
    Source source = Source::other;
    std::string source_id;
    DocType doc_type = DocType::publication;
    std::string title;
    std::string venue;
    std::string abstract;
    std::vector<std::string> scientists;
    std::vector<std::string> organizations;
    Date date;
    /// Full text; kept verbatim and never processed.
    std::string content;
    std::optional<Date> end_date;
    std::optional<std::string> city;
    std::optional<std::string> country;
    std::map<std::string, std::string> other_ids;
    std::optional<SparseVector> tfidf;
    std::optional<TopicVector> topic;
    std::optional<TopicVector> topic_norm;
    std::optional<LshSignature> buckets;

    friend bool operator==(DocumentRecord const&, DocumentRecord const&) = default;
};

void to_json(nlohmann::json& j, DocumentRecord const& record);
void from_json(nlohmann::json const& j, DocumentRecord& record);

/// Empty when the record is valid, otherwise a description of the violation.
std::optional<std::string> check_invariants(DocumentRecord const& record);

/// Throws ValidationError naming every offending id (including duplicate ids
/// and duplicate (source, source_id) pairs).
void validate_records(std::span<DocumentRecord const> records);

/// Removes HTML tags, decodes common entities and drops LaTeX markup
/// (math delimiters, commands, braces), then collapses whitespace.
std::string strip_markup(std::string_view text);

struct ParseResult {
    std::vector<DocumentRecord> records;
    std::size_t skipped = 0;
};

/// Reads a line-delimited JSON export with the adapter for `kind`.
/// Records get consecutive ids starting at `first_id`. Malformed lines are
/// skipped and counted; more than half malformed raises FormatError.
ParseResult parse_source(std::filesystem::path const& path, Source kind, DocId first_id = 0);

/// Immutable set of records with id lookup.
class Corpus {
  public:
    Corpus() = default;
    explicit Corpus(std::vector<DocumentRecord> records);

    [[nodiscard]] std::span<DocumentRecord const> records() const noexcept { return records_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] DocumentRecord const* find(DocId id) const noexcept;
    /// Throws ReferenceError.
    [[nodiscard]] DocumentRecord const& at(DocId id) const;
    [[nodiscard]] bool contains(DocId id) const noexcept { return find(id) != nullptr; }

  private:
    std::vector<DocumentRecord> records_;
    std::unordered_map<DocId, std::size_t> by_id_;
};

void save_corpus(std::span<DocumentRecord const> records, std::filesystem::path const& path);
std::vector<DocumentRecord> load_corpus(std::filesystem::path const& path);

}  // namespace eileen
