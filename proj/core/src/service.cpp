#include "eileen/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>

#include "eileen/error.hpp"
#include "eileen/util.hpp"

namespace eileen {

using nlohmann::json;

std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string random_token() {
    std::random_device device;
    std::string out;
    for (int i = 0; i < 4; ++i) {
        char buf[9];
        std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(device()));
        out += buf;
    }
    return out;
}

namespace {

ApiResponse error(int status, std::string message) {
    return ApiResponse{status, json{{"error", {{"status", status}, {"message", std::move(message)}}}}};
}

json parse_body(ApiRequest const& request) {
    if (request.body.empty()) return json::object();
    json j = json::parse(request.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw FormatError("request body must be a JSON object");
    return j;
}

std::size_t parse_count(std::map<std::string, std::string> const& query, char const* key, std::size_t fallback,
                        std::size_t max) {
    auto const it = query.find(key);
    if (it == query.end()) return fallback;
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(it->second, &used);
    } catch (std::exception const&) {
        used = 0;
    }
    if (used == 0 || used != it->second.size() || n == 0 || n > max) {
        throw ValidationError(std::string(key) + " must be an integer in [1, " + std::to_string(max) + "]");
    }
    return static_cast<std::size_t>(n);
}

json doc_summary(DocumentRecord const& d) {
    return json{{"doc_id", d.id}, {"title", d.title}, {"venue", d.venue}, {"year", d.date.year}};
}

std::vector<UserAccount> load_users(std::filesystem::path const& path) {
    std::vector<UserAccount> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json const j = json::parse(line);
            out.push_back(UserAccount{j.at("user_id"), j.at("display_name"), j.at("token"), j.at("created_at")});
        } catch (json::exception const& e) {
            throw FormatError("malformed user record in " + path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

Service::Service(Engine engine, Clock clock, std::function<std::string()> token_source)
    : engine_(std::move(engine)),
      paths_{engine_.config().artifact_dir},
      clock_(std::move(clock)),
      token_source_(std::move(token_source)),
      log_(paths_.events()) {
    for (auto& u : load_users(paths_.users())) {
        token_by_user_[u.user_id] = u.token;
        users_by_token_[u.token] = std::move(u);
    }
    auto const events = log_.events();
    std::size_t start = 0;
    if (std::filesystem::exists(paths_.snapshot())) {
        try {
            auto snap = load_snapshot(paths_.snapshot(), engine_.corpus());
            if (snap.event_count <= events.size()) {
                libraries_ = std::move(snap.libraries);
                start = snap.event_count;
            }
        } catch (Error const&) {
            libraries_.clear();
            start = 0;
        }
    }
    std::size_t const k = engine_.lsa().k;
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto const& e = events[i];
        last_timestamp_[e.user_id] = std::max(last_timestamp_[e.user_id], e.timestamp);
        if (i < start) continue;
        auto [it, inserted] = libraries_.try_emplace(e.user_id);
        if (inserted) it->second.library_topic = TopicVector::zeros(k);
        it->second = apply_event(std::move(it->second), e, engine_.corpus(), engine_.config().query_window);
    }
}

std::map<std::string, LibraryState> Service::libraries() const {
    std::lock_guard lock(mutex_);
    return libraries_;
}

std::vector<PreferenceEvent> Service::events() const { return log_.events(); }

std::vector<UserAccount> Service::users() const {
    std::lock_guard lock(mutex_);
    std::vector<UserAccount> out;
    for (auto const& [_, u] : users_by_token_) out.push_back(u);
    std::sort(out.begin(), out.end(), [](auto const& a, auto const& b) { return a.user_id < b.user_id; });
    return out;
}

void Service::snapshot() {
    std::lock_guard lock(mutex_);
    snapshot_locked();
}

void Service::snapshot_locked() {
    save_snapshot(LibrarySnapshot{log_.size(), libraries_}, paths_.snapshot());
    since_snapshot_ = 0;
}

std::optional<UserAccount> Service::authenticate(ApiRequest const& request) const {
    if (!request.bearer) return std::nullopt;
    std::lock_guard lock(mutex_);
    auto const it = users_by_token_.find(*request.bearer);
    if (it == users_by_token_.end()) return std::nullopt;
    return it->second;
}

LibraryState Service::library_of(std::string const& user_id) const {
    auto const it = libraries_.find(user_id);
    if (it != libraries_.end()) return it->second;
    LibraryState empty;
    empty.library_topic = TopicVector::zeros(engine_.lsa().k);
    return empty;
}

void Service::record(std::vector<PreferenceEvent> events) {
    // One reading per batch so that the hits of a search share a timestamp.
    std::int64_t const now = clock_();
    for (auto& e : events) {
        auto& last = last_timestamp_[e.user_id];
        e.timestamp = std::max(now, last);
        // Validate against the corpus before the event becomes permanent.
        LibraryState next = apply_event(library_of(e.user_id), e, engine_.corpus(), engine_.config().query_window);
        log_.append(e);
        last = e.timestamp;
        libraries_[e.user_id] = std::move(next);
        ++since_snapshot_;
    }
    auto const every = engine_.config().snapshot_every;
    if (every > 0 && since_snapshot_ >= every) snapshot_locked();
}

ApiResponse Service::handle(ApiRequest const& request) {
    try {
        auto const& p = request.path;
        auto const& m = request.method;
        bool const known = p == "/users" || p == "/search" || p == "/vote" || p == "/recommendations" ||
                           p == "/keyphrases/popularity" || p == "/library" || p == "/autocomplete" || p == "/health";
        if (!known) return error(404, "no route " + p);
        bool const post = p == "/users" || p == "/search" || p == "/vote";
        if ((post && m != "POST") || (!post && m != "GET")) return error(405, m + " not allowed on " + p);

        if (p == "/health") return health();
        if (p == "/users") return create_user(request);

        auto const user = authenticate(request);
        if (!user) return error(401, "missing or unknown bearer token; create one with POST /users");
        if (p == "/search") return search(*user, request);
        if (p == "/vote") return vote(*user, request);
        if (p == "/recommendations") return recommendations(*user, request);
        if (p == "/keyphrases/popularity") return popularity(*user);
        if (p == "/library") return library(*user);
        return autocomplete(*user, request);
    } catch (FormatError const& e) {
        return error(400, e.what());
    } catch (ValidationError const& e) {
        return error(400, e.what());
    } catch (ReferenceError const& e) {
        return error(404, e.what());
    } catch (PreconditionError const& e) {
        return error(409, e.what());
    } catch (std::exception const& e) {
        return error(500, e.what());
    }
}

ApiResponse Service::create_user(ApiRequest const& request) {
    json const body = parse_body(request);
    auto const it = body.find("display_name");
    if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
        return error(400, "display_name must be a non-empty string");
    }
    std::lock_guard lock(mutex_);
    UserAccount u;
    char id[32];
    std::snprintf(id, sizeof(id), "user-%04zu", users_by_token_.size() + 1);
    u.user_id = id;
    u.display_name = *it;
    do {
        u.token = token_source_();
    } while (users_by_token_.count(u.token) != 0);
    u.created_at = clock_();
    json const j{{"user_id", u.user_id}, {"display_name", u.display_name}, {"token", u.token}, {"created_at", u.created_at}};
    {
        std::ofstream out(paths_.users(), std::ios::app);
        if (!out) throw IoError("cannot write " + paths_.users().string());
        out << j.dump() << '\n';
    }
    token_by_user_[u.user_id] = u.token;
    users_by_token_[u.token] = u;
    return ApiResponse{201, j};
}

ApiResponse Service::search(UserAccount const& user, ApiRequest const& request) {
    json const body = parse_body(request);
    auto const it = body.find("query");
    if (it == body.end() || !it->is_string()) return error(400, "query must be a string");
    std::string const query = *it;
    if (query.find_first_not_of(" \t\r\n") == std::string::npos) return error(400, "query is empty");

    std::lock_guard lock(mutex_);
    auto const hits = engine_.search(query, library_of(user.user_id));
    json out = json::array();
    std::vector<PreferenceEvent> shown;
    for (auto const& h : hits) {
        json item = doc_summary(engine_.corpus().at(h.doc_id));
        item["score"] = h.score;
        item["rank"] = h.rank;
        out.push_back(std::move(item));
        shown.push_back(PreferenceEvent{user.user_id, h.doc_id, Action::search_shown, query, 0});
    }
    // A search without hits still counts as query context.
    if (shown.empty()) shown.push_back(PreferenceEvent{user.user_id, std::nullopt, Action::search_shown, query, 0});
    record(std::move(shown));
    return ApiResponse{200, json{{"hits", out}}};
}

ApiResponse Service::vote(UserAccount const& user, ApiRequest const& request) {
    json const body = parse_body(request);
    auto const doc = body.find("doc_id");
    auto const v = body.find("vote");
    if (doc == body.end() || !doc->is_number_integer()) return error(400, "doc_id must be an integer");
    if (v == body.end() || !v->is_string()) return error(400, "vote must be relevant, irrelevant or clear");
    Action action;
    if (*v == "relevant") {
        action = Action::vote_relevant;
    } else if (*v == "irrelevant") {
        action = Action::vote_irrelevant;
    } else if (*v == "clear") {
        action = Action::vote_cleared;
    } else {
        return error(400, "vote must be relevant, irrelevant or clear");
    }
    DocId const id = doc->get<DocId>();
    if (!engine_.corpus().contains(id)) return error(404, "unknown document " + std::to_string(id));

    std::lock_guard lock(mutex_);
    record({PreferenceEvent{user.user_id, id, action, "", 0}});
    return ApiResponse{200, json{{"library", library_json(library_of(user.user_id))}}};
}

ApiResponse Service::recommendations(UserAccount const& user, ApiRequest const& request) {
    std::size_t const top_k = parse_count(request.query, "top_k", 10, 1000);
    LibraryState state;
    {
        std::lock_guard lock(mutex_);
        state = library_of(user.user_id);
    }
    Recommendation rec;
    try {
        rec = engine_.recommend(state, top_k);
    } catch (PreconditionError const&) {
        return error(409, "no preference signal yet: vote a document relevant or run a search first");
    }
    json docs = json::array();
    std::size_t rank = 1;
    for (auto const& r : rec.docs) {
        json item = doc_summary(engine_.corpus().at(r.doc_id));
        item["distance"] = r.distance;
        item["rank"] = rank++;
        docs.push_back(std::move(item));
    }
    json out{{"recommendations", docs}};
    if (rec.warning) out["warning"] = *rec.warning;
    return ApiResponse{200, out};
}

ApiResponse Service::popularity(UserAccount const& user) {
    LibraryState state;
    {
        std::lock_guard lock(mutex_);
        state = library_of(user.user_id);
    }
    json out = json::object();
    for (auto const& [phrase, years] : engine_.popularity(state)) out[phrase] = years;
    return ApiResponse{200, out};
}

ApiResponse Service::library(UserAccount const& user) {
    std::lock_guard lock(mutex_);
    return ApiResponse{200, json{{"library", library_json(library_of(user.user_id))}}};
}

ApiResponse Service::autocomplete(UserAccount const& user, ApiRequest const& request) {
    auto const it = request.query.find("prefix");
    std::string const prefix = it == request.query.end() ? "" : it->second;
    std::size_t const limit = parse_count(request.query, "limit", 10, 100);
    LibraryState state;
    {
        std::lock_guard lock(mutex_);
        state = library_of(user.user_id);
    }
    return ApiResponse{200, json{{"suggestions", engine_.autocomplete(state, prefix, limit)}}};
}

ApiResponse Service::health() const {
    return ApiResponse{200, json{{"status", "ok"},
                                 {"documents", engine_.corpus().size()},
                                 {"events", log_.size()},
                                 {"ltr_model", engine_.ltr_model() != nullptr},
                                 {"keyphrase_model", engine_.keyphrase_model() != nullptr}}};
}

}  // namespace eileen
