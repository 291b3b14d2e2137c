#include "eileen/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"

namespace eileen {

using nlohmann::json;

std::string_view to_string(Action action) noexcept {
    switch (action) {
        case Action::search_shown: return "search_shown";
        case Action::vote_relevant: return "vote_relevant";
        case Action::vote_irrelevant: return "vote_irrelevant";
        case Action::vote_cleared: return "vote_cleared";
    }
    return "search_shown";
}

Action parse_action(std::string_view tag) {
    if (tag == "search_shown") return Action::search_shown;
    if (tag == "vote_relevant") return Action::vote_relevant;
    if (tag == "vote_irrelevant") return Action::vote_irrelevant;
    if (tag == "vote_cleared") return Action::vote_cleared;
    throw FormatError("unknown event action '" + std::string(tag) + "'");
}

void to_json(json& j, PreferenceEvent const& e) {
    j = json{{"user_id", e.user_id},
             {"doc_id", e.doc_id ? json(*e.doc_id) : json(nullptr)},
             {"action", to_string(e.action)},
             {"query", e.query},
             {"timestamp", e.timestamp}};
}

void from_json(json const& j, PreferenceEvent& e) {
    e.user_id = j.at("user_id").get<std::string>();
    auto const& doc = j.at("doc_id");
    e.doc_id = doc.is_null() ? std::nullopt : std::optional<DocId>(doc.get<DocId>());
    e.action = parse_action(j.at("action").get<std::string>());
    e.query = j.value("query", "");
    e.timestamp = j.at("timestamp").get<std::int64_t>();
    if (e.user_id.empty()) throw FormatError("event without user_id");
    if (!e.doc_id && e.action != Action::search_shown) throw FormatError("vote event without doc_id");
}

// ---------------------------------------------------------------------------

std::size_t topic_dimension(Corpus const& corpus) {
    for (auto const& d : corpus.records()) {
        if (d.topic_norm) return d.topic_norm->size();
    }
    return 0;
}

namespace {

TopicVector const& topic_of(Corpus const& corpus, DocId id) {
    auto const& doc = corpus.at(id);
    if (!doc.topic_norm) {
        throw IncompatibleError("document " + std::to_string(id) + " has no topic vector; run fit-lsa");
    }
    return *doc.topic_norm;
}

void require_finite(TopicVector const& t, char const* what) {
    if (!t.is_finite()) throw DomainError(std::string(what) + " contains non-finite values");
}

}  // namespace

TopicVector mean_topic(std::set<DocId> const& docs, Corpus const& corpus, std::size_t k) {
    TopicVector sum = TopicVector::zeros(k);
    if (docs.empty()) return sum;
    for (DocId id : docs) {
        auto const& t = topic_of(corpus, id);
        if (t.size() != k) throw IncompatibleError("topic dimension mismatch in library");
        for (std::size_t i = 0; i < k; ++i) sum.values[i] += t.values[i];
    }
    double const n = static_cast<double>(docs.size());
    for (double& v : sum.values) v /= n;
    return sum;
}

LibraryState apply_event(LibraryState state, PreferenceEvent const& e, Corpus const& corpus,
                         std::size_t query_window) {
    if (e.doc_id && !corpus.contains(*e.doc_id)) {
        throw ReferenceError("event references unknown document " + std::to_string(*e.doc_id));
    }
    if (!e.doc_id && e.action != Action::search_shown) {
        throw ValidationError(std::string(to_string(e.action)) + " event without doc_id");
    }
    switch (e.action) {
        case Action::search_shown: {
            if (e.query.empty() || query_window == 0) return state;
            // One search produces several search_shown events; count it once.
            if (!state.recent_queries.empty() && state.recent_queries.back() == e.query) return state;
            state.recent_queries.push_back(e.query);
            while (state.recent_queries.size() > query_window) state.recent_queries.pop_front();
            return state;
        }
        case Action::vote_relevant:
            topic_of(corpus, *e.doc_id);
            state.irrelevant.erase(*e.doc_id);
            state.relevant.insert(*e.doc_id);
            break;
        case Action::vote_irrelevant:
            state.relevant.erase(*e.doc_id);
            state.irrelevant.insert(*e.doc_id);
            break;
        case Action::vote_cleared:
            state.relevant.erase(*e.doc_id);
            state.irrelevant.erase(*e.doc_id);
            break;
    }
    state.library_topic = mean_topic(state.relevant, corpus, topic_dimension(corpus));
    return state;
}

LibraryState replay(std::span<PreferenceEvent const> events, std::string_view user_id,
                    Corpus const& corpus, std::size_t query_window) {
    LibraryState state;
    state.library_topic = TopicVector::zeros(topic_dimension(corpus));
    for (auto const& e : events) {
        if (e.user_id == user_id) state = apply_event(std::move(state), e, corpus, query_window);
    }
    return state;
}

TopicVector rocchio(TopicVector const& q_o, LibraryState const& state, Corpus const& corpus,
                    RocchioParams const& params) {
    if (!std::isfinite(params.a) || !std::isfinite(params.b) || !std::isfinite(params.c)) {
        throw DomainError("Rocchio weights must be finite");
    }
    require_finite(q_o, "query vector");
    std::size_t const k = q_o.size();
    TopicVector out = TopicVector::zeros(k);
    if (params.a != 0.0) {
        for (std::size_t i = 0; i < k; ++i) out.values[i] += params.a * q_o.values[i];
    }
    if (params.b != 0.0 && !state.relevant.empty()) {
        TopicVector const rel = mean_topic(state.relevant, corpus, k);
        require_finite(rel, "relevant centroid");
        for (std::size_t i = 0; i < k; ++i) out.values[i] += params.b * rel.values[i];
    }
    if (params.c != 0.0 && !state.irrelevant.empty()) {
        TopicVector const irr = mean_topic(state.irrelevant, corpus, k);
        require_finite(irr, "irrelevant centroid");
        for (std::size_t i = 0; i < k; ++i) out.values[i] -= params.c * irr.values[i];
    }
    return out;
}

TopicVector query_topic(std::span<std::string const> queries, Vocabulary const& vocab,
                        Tokenizer const& tokenizer, LsaModel const& model) {
    TopicVector sum = TopicVector::zeros(model.k);
    if (queries.empty()) return sum;
    for (auto const& q : queries) {
        TopicVector const t = project(vectorize_text(q, vocab, tokenizer), model, vocab.fingerprint(), true);
        for (std::size_t i = 0; i < model.k; ++i) sum.values[i] += t.values[i];
    }
    for (double& v : sum.values) v /= static_cast<double>(queries.size());
    return sum;
}

TopicVector query_topic(std::deque<std::string> const& queries, Vocabulary const& vocab,
                        Tokenizer const& tokenizer, LsaModel const& model) {
    std::vector<std::string> const list(queries.begin(), queries.end());
    return query_topic(std::span<std::string const>(list), vocab, tokenizer, model);
}

RerankResult rerank_by_cosine(std::span<DocId const> candidates, TopicVector const& q_m,
                              Corpus const& corpus) {
    RerankResult result;
    require_finite(q_m, "preference vector");
    if (q_m.is_zero()) {
        for (DocId id : candidates) result.ranked.push_back(RankedDoc{id, 1.0});
        result.warning = "preference vector is zero; candidates left in input order";
        return result;
    }
    TopicVector const unit = q_m.normalized();
    struct Scored {
        DocId id;
        double distance;
        bool zero;
    };
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (DocId id : candidates) {
        auto const& t = topic_of(corpus, id);
        if (t.size() != unit.size()) throw IncompatibleError("topic dimension mismatch");
        scored.push_back(Scored{id, cosine_distance(t, unit), t.is_zero()});
    }
    std::sort(scored.begin(), scored.end(), [](Scored const& a, Scored const& b) {
        if (a.zero != b.zero) return !a.zero;
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    for (auto const& s : scored) result.ranked.push_back(RankedDoc{s.id, s.distance});
    return result;
}

Recommendation recommend(LibraryState const& state, TopicVector const& q_o, Corpus const& corpus,
                         RecommendOptions const& options) {
    if (state.relevant.empty() && q_o.is_zero()) {
        throw PreconditionError(
            "nothing to recommend from: vote at least one document relevant or run a search first");
    }
    TopicVector q = q_o;
    if (q.size() == 0) q = TopicVector::zeros(topic_dimension(corpus));
    TopicVector const q_m = rocchio(q, state, corpus, options.rocchio);

    std::vector<DocId> pool;
    for (auto const& d : corpus.records()) {
        // Documents with an empty topic (no usable text) are never recommended.
        if (state.relevant.count(d.id) == 0 && !(d.topic_norm && d.topic_norm->is_zero())) pool.push_back(d.id);
    }

    std::vector<DocId> candidates;
    bool const use_lsh = !options.full_scan && !q_m.is_zero() && !corpus.empty() &&
                         corpus.records().front().buckets.has_value();
    if (use_lsh) {
        auto const& first = *corpus.records().front().buckets;
        LshSignature const query = lsh_signature(q_m.normalized(), first.n_planes, first.seed);
        std::vector<std::pair<int, DocId>> by_distance;
        for (DocId id : pool) {
            auto const& doc = corpus.at(id);
            if (!doc.buckets || doc.buckets->seed != first.seed || doc.buckets->n_planes != first.n_planes) {
                throw IncompatibleError("document " + std::to_string(id) +
                                        " lacks a compatible LSH signature");
            }
            by_distance.emplace_back(hamming_distance(*doc.buckets, query), id);
        }
        // Widen the radius until the candidate floor is met.
        std::size_t const floor = std::min(pool.size(), std::max(options.top_k, options.min_candidates));
        int radius = std::max(0, options.max_hamming);
        for (;;) {
            candidates.clear();
            for (auto const& [dist, id] : by_distance) {
                if (dist <= radius) candidates.push_back(id);
            }
            if (candidates.size() >= floor || radius >= static_cast<int>(first.n_planes)) break;
            ++radius;
        }
    } else {
        candidates = pool;
    }

    RerankResult ranked = rerank_by_cosine(candidates, q_m, corpus);
    Recommendation out;
    out.warning = std::move(ranked.warning);
    if (ranked.ranked.size() > options.top_k) ranked.ranked.resize(options.top_k);
    out.docs = std::move(ranked.ranked);
    return out;
}

// ---------------------------------------------------------------------------

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) {
        for (auto& e : load_events(*path_)) {
            check(e);
            last_timestamp_[e.user_id] = e.timestamp;
            events_.push_back(std::move(e));
        }
    }
}

void EventLog::check(PreferenceEvent const& e) const {
    auto it = last_timestamp_.find(e.user_id);
    if (it != last_timestamp_.end() && e.timestamp < it->second) {
        throw ValidationError("event for user '" + e.user_id + "' goes back in time");
    }
}

void EventLog::write(PreferenceEvent const& e) {
    if (!path_) return;
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to event log " + path_->string());
    out << json(e).dump() << '\n';
    out.flush();
    if (!out) throw IoError("write to event log failed");
}

void EventLog::append(PreferenceEvent const& e) {
    std::lock_guard lock(mutex_);
    check(e);
    write(e);
    last_timestamp_[e.user_id] = e.timestamp;
    events_.push_back(e);
}

void EventLog::append(std::span<PreferenceEvent const> events) {
    std::lock_guard lock(mutex_);
    std::map<std::string, std::int64_t, std::less<>> last = last_timestamp_;
    for (auto const& e : events) {
        auto it = last.find(e.user_id);
        if (it != last.end() && e.timestamp < it->second) {
            throw ValidationError("event for user '" + e.user_id + "' goes back in time");
        }
        last[e.user_id] = e.timestamp;
    }
    for (auto const& e : events) {
        write(e);
        events_.push_back(e);
    }
    last_timestamp_ = std::move(last);
}

std::vector<PreferenceEvent> EventLog::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::vector<PreferenceEvent> EventLog::events_for(std::string_view user_id) const {
    std::lock_guard lock(mutex_);
    std::vector<PreferenceEvent> out;
    for (auto const& e : events_) {
        if (e.user_id == user_id) out.push_back(e);
    }
    return out;
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

std::vector<PreferenceEvent> load_events(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read event log " + path.string());
    std::vector<PreferenceEvent> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line).get<PreferenceEvent>());
        } catch (json::exception const& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_events(std::span<PreferenceEvent const> events, std::filesystem::path const& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write event log " + path.string());
    for (auto const& e : events) out << json(e).dump() << '\n';
}

}  // namespace eileen
