#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "iocdecay/lifecycle.hpp"

namespace httplib {
class Server;
}

namespace iocdecay {

using Clock = std::function<Timestamp()>;

Timestamp system_now();

struct ApiConfig {
    std::string bind_address = "127.0.0.1:8080";
    std::optional<std::filesystem::path> store_path;  // persisted on shutdown when set
    bool readonly = false;
};

// Host and port of "host:port". Error{invalid_parameter} when malformed.
std::pair<std::string, int> split_bind_address(const std::string& bind);

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Request handling independent of the transport. Reads run against an
// immutable Store snapshot; sighting posts are serialized and publish a new one.
class ScoreService {
public:
    ScoreService(Store store, ApiConfig config, Clock clock = system_now);

    ApiResponse get_score(const std::string& attribute_id, const std::optional<std::string>& at) const;
    ApiResponse get_expired(const std::optional<std::string>& at) const;
    ApiResponse post_sighting(const std::string& body);
    ApiResponse health() const;

    std::shared_ptr<const Store> snapshot() const;
    const ApiConfig& config() const noexcept { return config_; }
    void persist() const;

private:
    std::optional<Timestamp> parse_at(const std::optional<std::string>& at) const;

    ApiConfig config_;
    Clock clock_;
    std::mutex writer_;
    mutable std::mutex publish_;
    std::shared_ptr<const Store> current_;
};

class HttpServer {
public:
    explicit HttpServer(ScoreService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Blocks until stop().
    bool listen(const std::string& host, int port);
    // Binds an ephemeral port and returns it; follow with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    ScoreService& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace iocdecay
