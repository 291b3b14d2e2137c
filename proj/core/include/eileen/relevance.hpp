#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eileen/corpus.hpp"
#include "eileen/semantics.hpp"
#include "eileen/textpipe.hpp"
#include "eileen/vectors.hpp"

namespace eileen {

enum class Action { search_shown, vote_relevant, vote_irrelevant, vote_cleared };

std::string_view to_string(Action action) noexcept;
/// Throws FormatError.
Action parse_action(std::string_view tag);

/// One tracked interaction. A search emits one search_shown event per hit
/// (all sharing query and timestamp); a search with no hits emits a single
/// search_shown event without doc_id so the query still counts.
struct PreferenceEvent {
    std::string user_id;
    std::optional<DocId> doc_id;
    Action action = Action::search_shown;
    std::string query;
    /// Milliseconds since the Unix epoch.
    std::int64_t timestamp = 0;

    friend bool operator==(PreferenceEvent const&, PreferenceEvent const&) = default;
};

void to_json(nlohmann::json& j, PreferenceEvent const& e);
void from_json(nlohmann::json const& j, PreferenceEvent& e);

struct LibraryState {
    std::set<DocId> relevant;
    std::set<DocId> irrelevant;
    /// Mean of the relevant documents' normalised topic vectors.
    TopicVector library_topic;
    /// Most recent search queries, oldest first; consecutive repeats collapse.
    std::deque<std::string> recent_queries;

    friend bool operator==(LibraryState const&, LibraryState const&) = default;
};

/// Mean topic_norm of the given documents, summed in ascending id order.
/// Zero vector of dimension k when the set is empty.
TopicVector mean_topic(std::set<DocId> const& docs, Corpus const& corpus, std::size_t k);

/// Topic dimension of the corpus (0 when no document carries a topic).
std::size_t topic_dimension(Corpus const& corpus);

/// Throws ReferenceError for an unknown doc, ValidationError for a vote
/// without doc_id and IncompatibleError when the doc has no topic vector.
LibraryState apply_event(LibraryState state, PreferenceEvent const& e, Corpus const& corpus,
                         std::size_t query_window = 5);

/// Fold of apply_event over the events of one user.
LibraryState replay(std::span<PreferenceEvent const> events, std::string_view user_id,
                    Corpus const& corpus, std::size_t query_window = 5);

struct RocchioParams {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;
};

/// q_m = a q_o + b mean(D_r) - c mean(D_nr); an empty set contributes zero.
/// Throws DomainError on non-finite input.
TopicVector rocchio(TopicVector const& q_o, LibraryState const& state, Corpus const& corpus,
                    RocchioParams const& params = {});

/// Q_o: mean of the normalised topic projections of the queries.
TopicVector query_topic(std::span<std::string const> queries, Vocabulary const& vocab,
                        Tokenizer const& tokenizer, LsaModel const& model);
TopicVector query_topic(std::deque<std::string> const& queries, Vocabulary const& vocab,
                        Tokenizer const& tokenizer, LsaModel const& model);

struct RankedDoc {
    DocId doc_id = 0;
    double distance = 1.0;

    friend bool operator==(RankedDoc const&, RankedDoc const&) = default;
};

struct RerankResult {
    std::vector<RankedDoc> ranked;
    std::optional<std::string> warning;
};

/// Ascending 1 - cos(topic_norm, q_m / |q_m|), ties by doc id, docs with a
/// zero topic last. A zero q_m keeps the input order and sets a warning.
RerankResult rerank_by_cosine(std::span<DocId const> candidates, TopicVector const& q_m,
                              Corpus const& corpus);

struct RecommendOptions {
    RocchioParams rocchio;
    std::size_t top_k = 10;
    /// Initial Hamming radius; widened until at least max(top_k,
    /// min_candidates) candidates are found.
    int max_hamming = 2;
    std::size_t min_candidates = 50;
    /// Skip LSH and rank every document.
    bool full_scan = false;
};

struct Recommendation {
    std::vector<RankedDoc> docs;
    std::optional<std::string> warning;
};

/// rocchio -> LSH candidates -> rerank_by_cosine, excluding D_r and
/// documents whose topic vector is zero.
/// Throws PreconditionError when both the library and q_o are empty.
Recommendation recommend(LibraryState const& state, TopicVector const& q_o, Corpus const& corpus,
                         RecommendOptions const& options = {});

/// Append-only, line-delimited event log. Appends are serialised and
/// flushed; timestamps must not decrease per user.
class EventLog {
  public:
    EventLog() = default;
    /// Loads existing events (if the file exists) and appends to it.
    explicit EventLog(std::filesystem::path path);

    /// Throws ValidationError if the timestamp precedes the user's last one.
    void append(PreferenceEvent const& e);
    void append(std::span<PreferenceEvent const> events);

    [[nodiscard]] std::vector<PreferenceEvent> events() const;
    [[nodiscard]] std::vector<PreferenceEvent> events_for(std::string_view user_id) const;
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::optional<std::filesystem::path> const& path() const noexcept { return path_; }

  private:
    void check(PreferenceEvent const& e) const;
    void write(PreferenceEvent const& e);

    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> path_;
    std::vector<PreferenceEvent> events_;
    std::map<std::string, std::int64_t, std::less<>> last_timestamp_;
};

std::vector<PreferenceEvent> load_events(std::filesystem::path const& path);
void save_events(std::span<PreferenceEvent const> events, std::filesystem::path const& path);

}  // namespace eileen
