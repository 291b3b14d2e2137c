#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eileen/corpus.hpp"
#include "eileen/forest.hpp"
#include "eileen/textpipe.hpp"

namespace eileen {

struct RakeParams {
    std::size_t min_char_len = 3;
    std::size_t max_words = 4;
    std::size_t min_occurrences = 2;

    /// Thresholds used when extracting from the document corpus.
    static RakeParams extraction() { return {3, 4, 2}; }
    /// Thresholds used when building reranker training data.
    static RakeParams training() { return {3, 5, 3}; }

    /// Throws ConfigError when a threshold is 0.
    void validate() const;
};

inline constexpr std::size_t kCandidateFeatureCount = 7;
inline constexpr std::array<std::string_view, kCandidateFeatureCount> kCandidateFeatureNames = {
    "term_count", "term_length", "max_word_length", "spread",
    "lexical_cohesion", "first_occurrence", "last_occurrence"};

struct CandidateFeatures {
    double term_count = 0;
    double term_length = 0;
    double max_word_length = 0;
    /// Token offset of the last occurrence minus that of the first.
    double spread = 0;
    /// term_length * freq(phrase) / sum of freq(word) over the phrase's words.
    double lexical_cohesion = 0;
    /// Occurrence offsets divided by the document's token count.
    double first_occurrence = 0;
    double last_occurrence = 0;

    [[nodiscard]] std::array<double, kCandidateFeatureCount> to_array() const {
        return {term_count, term_length, max_word_length, spread, lexical_cohesion, first_occurrence,
                last_occurrence};
    }
};

struct KeyphraseCandidate {
    /// Lowercase content words joined by single spaces, in text order.
    std::string phrase;
    double rake_score = 0.0;
    CandidateFeatures features;
    bool from_rake = false;
    bool from_textrank = false;
    std::optional<int> label;
    std::optional<double> p1;
};

/// Lowercased word tokens of a text. Hyphens and apostrophes inside a word
/// keep it whole; `boundary_before` marks punctuation preceding the word.
struct WordToken {
    std::string text;
    bool boundary_before = false;
};
std::vector<WordToken> word_tokens(std::string_view text);

/// RAKE: runs of content words between punctuation, stopwords, numbers and
/// words shorter than min_char_len. Runs longer than max_words are dropped,
/// word score is degree / frequency over the remaining runs (degree counts
/// the word itself), and runs seen fewer than min_occurrences times are
/// discarded. Sorted by score descending, then phrase.
std::vector<KeyphraseCandidate> rake_candidates(std::string_view text, RakeParams const& params,
                                                StopwordList const& stopwords = StopwordList::builtin());

struct TextRankParams {
    double damping = 0.85;
    std::size_t window = 2;
    double tol = 1e-6;
    std::size_t max_iter = 100;
    /// Share of ranked words kept as keywords before merging.
    double keep_fraction = 1.0 / 3.0;
    std::size_t min_char_len = 3;
    std::size_t max_words = 4;
};

struct TextRankResult {
    /// Words by descending score, ties alphabetical.
    std::vector<std::pair<std::string, double>> ranked;
    /// Maximal runs of adjacent keywords, first-seen order.
    std::vector<std::string> phrases;
    std::size_t iterations = 0;
    bool converged = true;
    std::optional<std::string> warning;
};

/// Co-occurrence graph over content words (window over the content-word
/// sequence), S(v) = (1 - d) + d * sum S(u) / deg(u) iterated until the max
/// change drops below tol.
TextRankResult textrank(std::string_view text, TextRankParams const& params = {},
                        StopwordList const& stopwords = StopwordList::builtin());

/// Stemmed, lowercased, whitespace-normalised key used for matching.
std::string phrase_key(std::string_view phrase);

/// Features of a phrase from its contiguous occurrences in the text.
CandidateFeatures candidate_features(std::string_view phrase, std::span<WordToken const> tokens);

/// Union of RAKE and (optionally) TextRank candidates, deduplicated by
/// phrase_key with the RAKE entry winning. TextRank phrases are not subject
/// to min_occurrences.
std::vector<KeyphraseCandidate> candidate_pool(std::string_view text, RakeParams const& rake,
                                               bool with_textrank, TextRankParams const& tr = {},
                                               StopwordList const& stopwords = StopwordList::builtin());

struct LabelResult {
    std::size_t positives = 0;
    /// Gold phrases no candidate matched.
    std::vector<std::string> unmatched_gold;
};

/// Sets label 1 when phrase_key matches a gold phrase's key, else 0.
LabelResult label_candidates(std::span<KeyphraseCandidate> candidates, std::span<std::string const> gold);

/// A document with gold keyphrases. Gold entries may hold alternatives
/// separated by '+', as in SemEval-2010 key files.
struct KeyphraseDoc {
    std::string id;
    std::string text;
    std::vector<std::string> gold;
};

struct KeyphraseSplits {
    std::vector<KeyphraseDoc> train;
    std::vector<KeyphraseDoc> validation;
    std::vector<KeyphraseDoc> test;
};

/// Reads a SemEval-2010 style directory: train/, trial/ (validation) and
/// test/ holding <ID>.txt or <ID>.txt.final files plus a key file
/// <split>.combined.final with lines "ID : kp1,kp2+alt,...". Throws IoError
/// or FormatError.
KeyphraseSplits load_semeval(std::filesystem::path const& dir);
std::vector<KeyphraseDoc> load_semeval_split(std::filesystem::path const& dir, std::string const& split);

/// Shuffles and splits proportionally to train:validation:test weights.
KeyphraseSplits split_documents(std::vector<KeyphraseDoc> docs, std::uint64_t seed,
                                std::array<double, 3> weights = {144, 40, 100});

struct RerankerOptions {
    RakeParams rake = RakeParams::training();
    bool with_textrank = false;
    ForestConfig forest;
    /// Candidate (max_depth, min_samples_leaf) settings chosen by validation AUC.
    std::vector<std::pair<std::size_t, std::size_t>> grid{{0, 1}, {0, 5}, {8, 1}, {8, 5}};
    std::uint64_t seed = 0;
};

struct RerankerReport {
    ForestModel model;
    std::optional<double> validation_auc;
    std::optional<double> test_auc;
    std::size_t train_docs = 0;
    std::size_t validation_docs = 0;
    std::size_t test_docs = 0;
    std::size_t train_rows = 0;
    std::size_t validation_rows = 0;
    std::size_t test_rows = 0;
    /// Gold phrases matched by some candidate over all gold phrases (test split).
    double test_gold_recall = 0.0;
    std::vector<double> test_scores;
    std::vector<int> test_labels;
    std::optional<std::string> warning;
};

/// Labeled candidate rows of a document set.
struct CandidateRows {
    FeatureMatrix x{kCandidateFeatureCount};
    std::vector<int> y;
    std::size_t gold_total = 0;
    std::size_t gold_matched = 0;
};
CandidateRows candidate_rows(std::span<KeyphraseDoc const> docs, RakeParams const& rake, bool with_textrank);

/// Forest over the seven candidate features. Throws DomainError when the
/// training rows are empty.
RerankerReport train_reranker(KeyphraseSplits const& splits, RerankerOptions const& options);

struct KeyphraseSelection {
    std::size_t top_n = 10;
    /// Cut-off for the probability_tf flag and for counting a keyphrase.
    double threshold = 0.25;
    RakeParams rake = RakeParams::extraction();
    bool with_textrank = true;
};

/// Candidates scored by the model, sorted by p1 desc, rake_score desc, phrase.
std::vector<KeyphraseCandidate> extract_keyphrases(std::string_view text, ForestModel const& model,
                                                   std::size_t top_n, KeyphraseSelection const& sel = {});

/// Title and abstract joined as one text.
std::string keyphrase_text(DocumentRecord const& doc);

/// Extracted keyphrases with p1 >= threshold, at most top_n.
std::vector<KeyphraseCandidate> document_keyphrases(DocumentRecord const& doc, ForestModel const& model,
                                                    KeyphraseSelection const& sel = {});

struct KeyphraseStats {
    std::size_t documents = 0;
    std::size_t total = 0;
    /// by_words[n] counts keyphrases with n words, n = 1..5; index 6 is "more than five".
    std::array<std::size_t, 7> by_words{};
    /// Runs longer than max_words removed before counting.
    std::size_t filtered_long = 0;

    [[nodiscard]] double average() const noexcept {
        return documents == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(documents);
    }
};

KeyphraseStats corpus_keyphrase_stats(std::span<DocumentRecord const> docs, ForestModel const& model,
                                      KeyphraseSelection const& sel = {});

/// Two-column "Keywords summary / Counts" table.
std::string format_stats_table(KeyphraseStats const& stats);

/// keyphrase -> (year or "unknown" -> count).
using Popularity = std::map<std::string, std::map<std::string, std::size_t>>;
Popularity popularity_by_year(std::span<DocumentRecord const> docs, ForestModel const& model,
                              KeyphraseSelection const& sel = {});

struct PredictionRow {
    std::string document;
    std::string keyword;
    double p0 = 0.0;
    double p1 = 0.0;
    bool probability_tf = false;
    std::optional<int> label;
};

/// Tab-separated "document keyword probability probability_tf label" with
/// rows in the given order and probabilities as "[p0,p1]".
std::string format_predictions(std::span<PredictionRow const> rows);

}  // namespace eileen
