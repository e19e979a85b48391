#include "iocdecay/cli.hpp"

#include "iocdecay/error.hpp"
#include "iocdecay/ingestion.hpp"
#include "iocdecay/service.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>

namespace iocdecay {

namespace {

// Flag problems detected after parsing; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalFlags {
    std::string config;
    std::string now;
    std::string store;
};

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::optional<std::filesystem::path> config_path(const GlobalFlags& g) {
    if (!g.config.empty()) {
        return std::filesystem::path(g.config);
    }
    if (const char* env = std::getenv("IOC_DECAY_CONFIG"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::nullopt;
}

EngineConfig require_config(const GlobalFlags& g) {
    const auto path = config_path(g);
    if (!path) {
        throw UsageError("no configuration: pass --config or set IOC_DECAY_CONFIG");
    }
    return EngineConfig::load(*path);
}

std::filesystem::path store_path(const GlobalFlags& g) {
    if (!g.store.empty()) {
        return g.store;
    }
    return require_config(g).store_path;
}

Timestamp parse_flag_time(const std::string& text, const char* flag) {
    try {
        return parse_rfc3339(text);
    } catch (const Error& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

// --at/--until, falling back to --now, then the wall clock.
Timestamp evaluation_time(const GlobalFlags& g, const std::string& explicit_time, const char* flag) {
    if (!explicit_time.empty()) {
        return parse_flag_time(explicit_time, flag);
    }
    if (!g.now.empty()) {
        return parse_flag_time(g.now, "--now");
    }
    return system_now();
}

struct ModelFlags {
    std::string model;
    double tau = 0.0;
    double delta = 0.0;
    std::string unit = "h";
    std::string convention = "reciprocal";

    void attach(CLI::App& cmd, bool required) {
        auto* m = cmd.add_option("--model", model, "linear | exp | poly")
                      ->check(CLI::IsMember({"linear", "exp", "exponential", "poly", "polynomial"}));
        if (required) {
            m->required();
        }
        cmd.add_option("--tau", tau, "End time (polynomial), in --unit");
        cmd.add_option("--delta", delta, "Decay rate");
        cmd.add_option("--unit", unit, "Time unit: s, h or d")->capture_default_str();
        cmd.add_option("--exponent-convention", convention, "reciprocal | direct")
            ->check(CLI::IsMember({"reciprocal", "direct"}))
            ->capture_default_str();
    }

    DecayModel build() const {
        nlohmann::json doc{{"model", model}, {"delta", delta}, {"unit", unit},
                           {"exponent_convention", convention}};
        if (model == "poly" || model == "polynomial") {
            doc["tau"] = tau;
        }
        try {
            return decay_model_from_json(doc);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
};

int cmd_import(const GlobalFlags& g, std::ostream& out, std::ostream& err) {
    const EngineConfig config = require_config(g);
    ImportResult result = import_all(config);
    for (const auto& warning : result.warnings) {
        err << "warning: " << warning << '\n';
    }
    const auto target = g.store.empty() ? config.store_path : std::filesystem::path(g.store);
    result.store.save(target);
    out << result.report.to_json().dump(2) << '\n';
    return kExitOk;
}

int cmd_score(const GlobalFlags& g, const std::string& id, const std::string& at,
              std::ostream& out) {
    const Timestamp now = evaluation_time(g, at, "--at");
    const Store store = Store::load(store_path(g));
    out << score_document(id, store.score(id, now)).dump(2) << '\n';
    return kExitOk;
}

int cmd_expired(const GlobalFlags& g, const std::string& at, std::ostream& out) {
    const Timestamp now = evaluation_time(g, at, "--at");
    const Store store = Store::load(store_path(g));
    for (const auto& id : list_expired(store, now)) {
        out << id << '\n';
    }
    return kExitOk;
}

struct CurveFlags {
    ModelFlags model;
    double base = 0.0;
    double horizon = 0.0;
    double step = 0.0;
    std::string out;
};

int cmd_curve(const CurveFlags& f, std::ostream& out, std::ostream& err) {
    const DecayModel model = f.model.build();
    if (!(f.step > 0.0)) {
        throw UsageError("--step must be > 0");
    }
    if (!(f.horizon >= f.step)) {
        throw UsageError("--horizon must be >= --step");
    }
    if (!(f.base >= 0.0 && f.base <= 100.0)) {
        throw UsageError("--base must lie in [0,100]");
    }
    const auto points = emit_curve(f.base, model, f.horizon, f.step);
    const auto hl = half_life(model, f.base);
    const std::string half =
        "half_life: " + (hl ? format_number(hl->value) + " " + unit_symbol(model.unit) : "none");

    if (f.out.empty()) {
        write_curve_csv(out, points, model.unit);
        err << half << '\n';
    } else {
        std::ofstream file(f.out, std::ios::binary | std::ios::trunc);
        if (!file) {
            throw Error(ErrorCode::io_error, "cannot write " + f.out);
        }
        write_curve_csv(file, points, model.unit);
        out << half << '\n';
    }
    return kExitOk;
}

struct ReplayFlags {
    std::string sightings;
    std::string id;
    std::string until;
    ModelFlags model;
};

int cmd_replay(const GlobalFlags& g, const ReplayFlags& f, std::ostream& out) {
    std::optional<DecayModel> override_model;
    if (!f.model.model.empty()) {
        override_model = f.model.build();
    }
    const Timestamp until = evaluation_time(g, f.until, "--until");
    const Store store = Store::load(store_path(g));
    const AttributeRecord* record = store.find(f.id);
    if (record == nullptr) {
        throw Error(ErrorCode::unknown_attribute, "unknown attribute '" + f.id + "'");
    }
    const Attribute& attr = record->attribute;
    const DecayModel model = override_model.value_or(store.models.resolve(attr.type));
    const ScoringInputs inputs{*store.registry, store.source_for(attr), store.scoring};

    SightingState state;
    for (const auto& s : load_sightings(f.sightings)) {
        if (s.attribute_id != f.id) {
            continue;
        }
        const double before = current_score(attr, state, model, inputs, s.timestamp).current_score;
        state = record_sighting(state, attr, s);
        const double after = current_score(attr, state, model, inputs, s.timestamp).current_score;
        out << format_rfc3339(s.timestamp) << ' ' << to_string(s.kind) << ' ' << fixed6(before)
            << ' ' << fixed6(after) << '\n';
    }
    const ScoreResult final_score = current_score(attr, state, model, inputs, until);
    out << format_rfc3339(until) << " until " << fixed6(final_score.current_score)
        << (final_score.expired ? " expired" : "") << '\n';
    return kExitOk;
}

struct FitFlags {
    std::string sightings;
    std::string id;
    double c = 2.0;
    double quantile = 0.95;
    std::string unit = "h";
};

int cmd_fit(const FitFlags& f, std::ostream& out) {
    TimeUnit unit;
    try {
        unit = parse_time_unit(f.unit);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (!(f.c > 0.0) || !(f.quantile > 0.0 && f.quantile <= 1.0)) {
        throw UsageError("--c must be > 0 and --quantile in (0,1]");
    }
    std::vector<Sighting> history;
    for (auto& s : load_sightings(f.sightings)) {
        if (s.attribute_id == f.id) {
            history.push_back(std::move(s));
        }
    }
    const ElapsedTime tau = estimate_tau(history, TauEstimator{f.c, f.quantile}, unit);

    std::vector<double> gaps = inter_sighting_gaps(history);
    std::sort(gaps.begin(), gaps.end());
    const auto in_unit = [&](double secs) {
        return format_number(ElapsedTime::from_seconds(secs, unit).value);
    };
    const std::size_t n = gaps.size();
    const double median = n % 2 == 1 ? gaps[n / 2] : (gaps[n / 2 - 1] + gaps[n / 2]) / 2.0;
    out << "tau: " << format_number(tau.value) << ' ' << unit_symbol(unit) << '\n';
    out << "gaps: n=" << n << " min=" << in_unit(gaps.front()) << " median=" << in_unit(median)
        << " max=" << in_unit(gaps.back()) << ' ' << unit_symbol(unit) << '\n';
    return kExitOk;
}

int cmd_serve(const GlobalFlags& g, const std::string& bind_flag, bool readonly_flag,
              std::ostream& err) {
    const EngineConfig config = require_config(g);
    const std::string bind = bind_flag.empty() ? config.bind_address : bind_flag;
    std::pair<std::string, int> address;
    try {
        address = split_bind_address(bind);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto path = g.store.empty() ? config.store_path : std::filesystem::path(g.store);

    Clock clock = system_now;
    if (!g.now.empty()) {
        const Timestamp fixed = parse_flag_time(g.now, "--now");
        clock = [fixed] { return fixed; };
    }
    ApiConfig api{bind, path, config.readonly || readonly_flag};
    ScoreService service(Store::load(path), api, clock);
    HttpServer server(service);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    bool listened = true;
    std::thread worker([&] { listened = server.listen(address.first, address.second); });
    server.wait_until_ready();
    err << "listening on " << bind << (api.readonly ? " (read-only)" : "") << std::endl;

    std::thread waiter([&] {
        int received = 0;
        sigwait(&signals, &received);
        server.stop();
    });
    worker.join();
    if (!listened) {
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
        throw Error(ErrorCode::io_error, "cannot listen on " + bind);
    }
    waiter.join();
    service.persist();
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decaying indicator-of-compromise scores", "ioc-decay"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--config", g.config, "Engine configuration file (or IOC_DECAY_CONFIG)");
    app.add_option("--now", g.now, "Evaluation clock, RFC 3339");
    app.add_option("--store", g.store, "Store snapshot path (overrides the configuration)");

    auto* import_cmd = app.add_subcommand("import", "Import events, sources and sightings");

    std::string score_id;
    std::string score_at;
    auto* score_cmd = app.add_subcommand("score", "Print the current score of an attribute");
    score_cmd->add_option("--id", score_id, "Attribute id")->required();
    score_cmd->add_option("--at", score_at, "Evaluation time, RFC 3339");

    CurveFlags curve;
    auto* curve_cmd = app.add_subcommand("curve", "Emit a decay curve as CSV");
    curve.model.attach(*curve_cmd, true);
    curve_cmd->add_option("--base", curve.base, "Base score")->required();
    curve_cmd->add_option("--horizon", curve.horizon, "Last sample time, in --unit")->required();
    curve_cmd->add_option("--step", curve.step, "Sampling step, in --unit")->required();
    curve_cmd->add_option("--out", curve.out, "Output CSV file (default: stdout)");

    ReplayFlags replay;
    auto* replay_cmd = app.add_subcommand("replay", "Trace scores across a sighting feed");
    replay_cmd->add_option("--sightings", replay.sightings, "Sighting feed")->required();
    replay_cmd->add_option("--id", replay.id, "Attribute id")->required();
    replay_cmd->add_option("--until", replay.until, "Final evaluation time, RFC 3339");
    replay.model.attach(*replay_cmd, false);

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate the end time from regular sightings");
    fit_cmd->add_option("--sightings", fit.sightings, "Sighting feed")->required();
    fit_cmd->add_option("--id", fit.id, "Attribute id")->required();
    fit_cmd->add_option("--c", fit.c, "Quantile multiplier")->capture_default_str();
    fit_cmd->add_option("--quantile", fit.quantile, "Gap quantile")->capture_default_str();
    fit_cmd->add_option("--unit", fit.unit, "Output unit: s, h or d")->capture_default_str();

    std::string expired_at;
    auto* expired_cmd = app.add_subcommand("expired", "List attributes whose score reached 0");
    expired_cmd->add_option("--at", expired_at, "Evaluation time, RFC 3339");

    std::string bind;
    bool readonly = false;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("--bind", bind, "host:port (overrides bind_address)");
    serve_cmd->add_flag("--readonly", readonly, "Reject sighting posts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*import_cmd) return cmd_import(g, out, err);
        if (*score_cmd) return cmd_score(g, score_id, score_at, out);
        if (*curve_cmd) return cmd_curve(curve, out, err);
        if (*replay_cmd) return cmd_replay(g, replay, out);
        if (*fit_cmd) return cmd_fit(fit, out);
        if (*expired_cmd) return cmd_expired(g, expired_at, out);
        if (*serve_cmd) return cmd_serve(g, bind, readonly, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitDomainError;
    }
    return kExitUsage;
}

}  // namespace iocdecay
