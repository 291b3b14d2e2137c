#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eileen/corpus.hpp"
#include "eileen/textpipe.hpp"

namespace eileen {

enum class Field : std::uint8_t { title = 0, abstract = 1, venue = 2, scientists = 3 };
inline constexpr std::size_t kFieldCount = 4;
using FieldCounts = std::array<std::uint32_t, kFieldCount>;

std::string_view to_string(Field field) noexcept;

/// Lucene-style BM25 summed over fields with per-field weights.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    std::array<double, kFieldCount> field_weights{2.0, 1.0, 0.5, 0.5};
};

struct Posting {
    DocId doc = 0;
    FieldCounts tf{};

    friend bool operator==(Posting const&, Posting const&) = default;
};

class InvertedIndex {
  public:
    InvertedIndex() = default;

    /// Throws DomainError on an empty corpus.
    static InvertedIndex build(std::span<DocumentRecord const> docs, Tokenizer const& tokenizer);

    [[nodiscard]] std::span<Posting const> postings(std::string_view term) const;
    [[nodiscard]] Posting const* posting(std::string_view term, DocId doc) const;
    [[nodiscard]] FieldCounts const& field_df(std::string_view term) const;
    [[nodiscard]] FieldCounts const& field_lengths(DocId doc) const;
    [[nodiscard]] double avg_field_length(Field field) const noexcept {
        return avg_lengths_[static_cast<std::size_t>(field)];
    }
    [[nodiscard]] std::uint64_t n_docs() const noexcept { return lengths_.size(); }
    [[nodiscard]] bool contains(DocId doc) const noexcept { return lengths_.count(doc) != 0; }
    [[nodiscard]] std::size_t term_count() const noexcept { return postings_.size(); }

    /// Postings sorted by doc id and per-doc field lengths equal to the sum
    /// of that doc's term frequencies. Throws ValidationError otherwise.
    void check_consistency() const;

    void save(std::filesystem::path const& path) const;
    static InvertedIndex load(std::filesystem::path const& path);
    [[nodiscard]] std::string serialize() const;

    friend bool operator==(InvertedIndex const& a, InvertedIndex const& b) {
        return a.postings_ == b.postings_ && a.lengths_ == b.lengths_;
    }

  private:
    void finalize();

    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    std::map<std::string, FieldCounts, std::less<>> df_;
    std::map<DocId, FieldCounts> lengths_;
    std::array<double, kFieldCount> avg_lengths_{};
};

/// Index-side tokens of one field of a document.
std::vector<std::string> field_tokens(DocumentRecord const& doc, Field field, Tokenizer const& tokenizer);

/// BM25 weight of one field: idf * tf (k1 + 1) / (tf + k1 (1 - b + b len / avg)),
/// idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_term_field(double tf, double df, double n_docs, double field_len, double avg_len,
                       double k1, double b);

/// Sum over the distinct query terms and all fields; 0 when nothing matches.
/// Throws ReferenceError when the document is not indexed.
double bm25_score(std::span<std::string const> query_terms, DocId doc, InvertedIndex const& index,
                  Bm25Params const& params = {});

struct SearchHit {
    DocId doc_id = 0;
    double score = 0.0;
    std::size_t rank = 0;

    friend bool operator==(SearchHit const&, SearchHit const&) = default;
};

/// Top page_size documents by BM25, ties by ascending doc id, ranks from 1.
std::vector<SearchHit> search(std::string_view query, InvertedIndex const& index,
                              Tokenizer const& tokenizer, std::size_t page_size = 10,
                              Bm25Params const& params = {});

}  // namespace eileen
