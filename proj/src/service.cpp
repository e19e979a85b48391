#include "iocdecay/service.hpp"

#include "iocdecay/error.hpp"

#include <httplib.h>

namespace iocdecay {

namespace {

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
    return {status, {{"error", code}, {"message", message}}};
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::unknown_attribute: return 404;
        case ErrorCode::parse_error:
        case ErrorCode::validation_error:
        case ErrorCode::unknown_kind:
        case ErrorCode::negative_tau:
        case ErrorCode::clock_skew:
        case ErrorCode::invalid_parameter: return 400;
        default: return 500;
    }
}

}  // namespace

Timestamp system_now() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::pair<std::string, int> split_bind_address(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
        throw Error(ErrorCode::invalid_parameter, "bind address must be host:port, got '" + bind + "'");
    }
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(bind.substr(colon + 1), &used);
        if (used != bind.size() - colon - 1) {
            throw std::invalid_argument("trailing");
        }
    } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_parameter, "invalid port in '" + bind + "'");
    }
    if (port < 0 || port > 65535) {
        throw Error(ErrorCode::invalid_parameter, "port out of range in '" + bind + "'");
    }
    return {bind.substr(0, colon), port};
}

ScoreService::ScoreService(Store store, ApiConfig config, Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      current_(std::make_shared<const Store>(std::move(store))) {}

std::shared_ptr<const Store> ScoreService::snapshot() const {
    std::scoped_lock lock(publish_);
    return current_;
}

std::optional<Timestamp> ScoreService::parse_at(const std::optional<std::string>& at) const {
    if (!at) {
        return clock_();
    }
    try {
        return parse_rfc3339(*at);
    } catch (const Error&) {
        return std::nullopt;
    }
}

ApiResponse ScoreService::get_score(const std::string& attribute_id,
                                    const std::optional<std::string>& at) const {
    const auto now = parse_at(at);
    if (!now) {
        return error_response(400, "bad_request", "malformed 'at' timestamp: " + *at);
    }
    const auto store = snapshot();
    try {
        return {200, score_document(attribute_id, store->score(attribute_id, *now))};
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    }
}

ApiResponse ScoreService::get_expired(const std::optional<std::string>& at) const {
    const auto now = parse_at(at);
    if (!now) {
        return error_response(400, "bad_request", "malformed 'at' timestamp: " + *at);
    }
    const auto store = snapshot();
    try {
        return {200,
                {{"evaluated_at", format_rfc3339(*now)}, {"expired", list_expired(*store, *now)}}};
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    }
}

ApiResponse ScoreService::post_sighting(const std::string& body) {
    if (config_.readonly) {
        return error_response(409, "readonly", "server is read-only; sightings are rejected");
    }
    Sighting sighting;
    try {
        sighting = sighting_from_json(nlohmann::json::parse(body));
    } catch (const nlohmann::json::parse_error& e) {
        return error_response(400, "bad_request", e.what());
    } catch (const Error& e) {
        return error_response(400, to_string(e.code()), e.what());
    }

    std::scoped_lock writer(writer_);
    Store next = *snapshot();
    try {
        next.record_sighting(sighting);
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    }
    const AttributeRecord* record = next.find(sighting.attribute_id);
    nlohmann::json ack{{"status", "ok"},
                       {"attribute_id", sighting.attribute_id},
                       {"kind", to_string(sighting.kind)},
                       {"last_reference",
                        format_rfc3339(reference_time(record->attribute, record->state))}};
    {
        std::scoped_lock lock(publish_);
        current_ = std::make_shared<const Store>(std::move(next));
    }
    return {200, std::move(ack)};
}

ApiResponse ScoreService::health() const {
    const auto store = snapshot();
    return {200, {{"status", "ok"}, {"attributes", store->attributes().size()}}};
}

void ScoreService::persist() const {
    if (config_.store_path && !config_.readonly) {
        snapshot()->save(*config_.store_path);
    }
}

HttpServer::HttpServer(ScoreService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    const auto reply = [](httplib::Response& res, const ApiResponse& api) {
        res.status = api.status;
        res.set_content(api.body.dump(), "application/json");
    };
    const auto at_param = [](const httplib::Request& req) -> std::optional<std::string> {
        if (req.has_param("at")) {
            return req.get_param_value("at");
        }
        return std::nullopt;
    };

    server_->Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.health());
    });
    server_->Get("/v1/attributes/expired",
                 [this, reply, at_param](const httplib::Request& req, httplib::Response& res) {
                     reply(res, service_.get_expired(at_param(req)));
                 });
    server_->Get(R"(/v1/attributes/([^/]+)/score)",
                 [this, reply, at_param](const httplib::Request& req, httplib::Response& res) {
                     reply(res, service_.get_score(req.matches[1].str(), at_param(req)));
                 });
    server_->Post("/v1/sightings",
                  [this, reply](const httplib::Request& req, httplib::Response& res) {
                      reply(res, service_.post_sighting(req.body));
                  });
}

HttpServer::~HttpServer() {
    stop();
}

bool HttpServer::listen(const std::string& host, int port) {
    return server_->listen(host, port);
}

int HttpServer::bind_to_any_port(const std::string& host) {
    return server_->bind_to_any_port(host);
}

bool HttpServer::listen_after_bind() {
    return server_->listen_after_bind();
}

void HttpServer::wait_until_ready() const {
    server_->wait_until_ready();
}

void HttpServer::stop() {
    if (server_ && server_->is_running()) {
        server_->stop();
    }
}

}  // namespace iocdecay
