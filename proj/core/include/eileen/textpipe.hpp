#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eileen/corpus.hpp"
#include "eileen/vectors.hpp"

namespace eileen {

/// English stopword list, one lowercase word per line on disk.
class StopwordList {
  public:
    StopwordList() = default;
    explicit StopwordList(std::vector<std::string> words);

    /// The bundled list shared by tokenization and keyphrase extraction.
    static StopwordList const& builtin();
    static StopwordList load(std::filesystem::path const& path);

    [[nodiscard]] bool contains(std::string_view word) const;
    [[nodiscard]] std::size_t size() const noexcept { return words_.size(); }

  private:
    std::unordered_set<std::string> words_;
};

/// Lowercases, splits on non-alphanumeric ASCII, drops pure numbers and
/// stopwords, and Porter-stems what remains.
class Tokenizer {
  public:
    Tokenizer() : Tokenizer(StopwordList::builtin()) {}
    explicit Tokenizer(StopwordList const& stopwords) : stopwords_(&stopwords) {}

    [[nodiscard]] std::vector<std::string> tokenize(std::string_view text) const;

    /// Unigrams followed by space-joined bigrams of adjacent unigrams.
    [[nodiscard]] std::vector<std::string> terms(std::string_view text) const;

    /// Terms of title and abstract; bigrams never span the two fields.
    [[nodiscard]] std::vector<std::string> document_terms(DocumentRecord const& doc) const;

    [[nodiscard]] StopwordList const& stopwords() const noexcept { return *stopwords_; }

  private:
    StopwordList const* stopwords_;
};

/// Raw alphanumeric word count without stopword removal or stemming.
std::size_t word_count(std::string_view text);

/// (1 + ln f_ij) * ln(N / (f_i + 1)), clamped at zero; 0 when f_ij = 0.
/// Throws DomainError unless 1 <= f_i <= N.
double tfidf_weight(std::uint64_t term_freq, std::uint64_t doc_freq, std::uint64_t n_docs);

struct VocabularyConfig {
    std::uint32_t min_term_count = 3;
    double max_df_ratio = 0.8;
};

class Vocabulary {
  public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> df, std::uint64_t n_docs,
               VocabularyConfig config);

    [[nodiscard]] std::span<std::string const> terms() const noexcept { return terms_; }
    [[nodiscard]] std::span<std::uint32_t const> df() const noexcept { return df_; }
    [[nodiscard]] std::uint64_t n_docs() const noexcept { return n_docs_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] VocabularyConfig const& config() const noexcept { return config_; }
    [[nodiscard]] std::optional<TermId> find(std::string_view term) const;
    /// FNV-1a over terms, document frequencies and N.
    [[nodiscard]] std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    void save(std::filesystem::path const& path) const;
    static Vocabulary load(std::filesystem::path const& path);

  private:
    std::vector<std::string> terms_;
    std::vector<std::uint32_t> df_;
    std::uint64_t n_docs_ = 0;
    VocabularyConfig config_;
    std::unordered_map<std::string, TermId> index_;
    std::uint64_t fingerprint_ = 0;
};

/// Stemmed unigrams and bigrams of title+abstract with
/// min_term_count <= df <= max_df_ratio * N. Throws DomainError on an empty corpus.
Vocabulary build_vocabulary(std::span<DocumentRecord const> docs, Tokenizer const& tokenizer,
                            VocabularyConfig config = {});

/// tf-idf vector over the vocabulary; out-of-vocabulary terms are ignored.
SparseVector vectorize_terms(std::span<std::string const> terms, Vocabulary const& vocab);
SparseVector vectorize(DocumentRecord const& doc, Vocabulary const& vocab, Tokenizer const& tokenizer);
SparseVector vectorize_text(std::string_view text, Vocabulary const& vocab, Tokenizer const& tokenizer);

}  // namespace eileen
