#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "eileen/engine.hpp"
#include "eileen/relevance.hpp"

namespace eileen {

/// Milliseconds since the Unix epoch, UTC.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

/// 128 random bits from std::random_device, hex encoded.
std::string random_token();

struct UserAccount {
    std::string user_id;
    std::string display_name;
    std::string token;
    std::int64_t created_at = 0;
};

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    /// Value of "Authorization: Bearer <token>", if present.
    std::optional<std::string> bearer;
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// Transport-independent JSON API. State lives in the engine's artifact
/// directory: users.jsonl, the append-only events.jsonl and a periodic
/// libraries.json snapshot; construction replays them.
class Service {
  public:
    explicit Service(Engine engine, Clock clock = system_clock_ms,
                     std::function<std::string()> token_source = random_token);

    ApiResponse handle(ApiRequest const& request);

    [[nodiscard]] Engine const& engine() const noexcept { return engine_; }
    /// Copies, taken under the state lock.
    [[nodiscard]] std::map<std::string, LibraryState> libraries() const;
    [[nodiscard]] std::vector<PreferenceEvent> events() const;
    [[nodiscard]] std::vector<UserAccount> users() const;

    /// Writes the library snapshot now.
    void snapshot();

  private:
    ApiResponse create_user(ApiRequest const& request);
    ApiResponse search(UserAccount const& user, ApiRequest const& request);
    ApiResponse vote(UserAccount const& user, ApiRequest const& request);
    ApiResponse recommendations(UserAccount const& user, ApiRequest const& request);
    ApiResponse popularity(UserAccount const& user);
    ApiResponse library(UserAccount const& user);
    ApiResponse autocomplete(UserAccount const& user, ApiRequest const& request);
    ApiResponse health() const;

    std::optional<UserAccount> authenticate(ApiRequest const& request) const;
    LibraryState library_of(std::string const& user_id) const;
    /// Appends and applies events with server timestamps; caller holds the lock.
    void record(std::vector<PreferenceEvent> events);
    void snapshot_locked();

    Engine engine_;
    ArtifactPaths paths_;
    Clock clock_;
    std::function<std::string()> token_source_;

    mutable std::mutex mutex_;
    EventLog log_;
    std::map<std::string, UserAccount> users_by_token_;
    std::map<std::string, std::string> token_by_user_;
    std::map<std::string, LibraryState> libraries_;
    std::map<std::string, std::int64_t> last_timestamp_;
    std::size_t since_snapshot_ = 0;
};

/// HTTP transport for a Service.
class HttpServer {
  public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(HttpServer const&) = delete;
    HttpServer& operator=(HttpServer const&) = delete;

    /// Binds and returns the bound port (port 0 picks a free one). Throws IoError.
    int bind(std::string const& host, int port);
    /// Serves until stop(); call after bind().
    void run();
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace eileen
