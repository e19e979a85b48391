#include "iocdecay/ingestion.hpp"

#include "iocdecay/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace iocdecay {

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, std::string("cannot read ") + what + " " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

class Violations {
public:
    void add(std::string where, std::string what) {
        items_.push_back(std::move(where) + ": " + std::move(what));
    }
    bool empty() const { return items_.empty(); }

    [[noreturn]] void raise(const std::string& origin) const {
        std::string message = origin + ": " + std::to_string(items_.size()) + " validation error(s)";
        for (const auto& item : items_) {
            message += "\n  " + item;
        }
        throw Error(ErrorCode::validation_error, message);
    }

private:
    std::vector<std::string> items_;
};

std::optional<std::string> string_field(const nlohmann::json& obj, const char* field,
                                        const std::string& where, Violations& errors) {
    if (!obj.contains(field) || !obj[field].is_string()) {
        errors.add(where, std::string("missing string field '") + field + "'");
        return std::nullopt;
    }
    return obj[field].get<std::string>();
}

std::optional<Timestamp> time_field(const nlohmann::json& obj, const char* field,
                                    const std::string& where, Violations& errors) {
    const auto text = string_field(obj, field, where, errors);
    if (!text) {
        return std::nullopt;
    }
    try {
        return parse_rfc3339(*text);
    } catch (const Error& e) {
        errors.add(where, e.what());
        return std::nullopt;
    }
}

std::vector<MachineTag> tag_list(const nlohmann::json& obj, const std::string& where,
                                 Violations& errors) {
    std::vector<MachineTag> tags;
    if (!obj.contains("tags")) {
        return tags;
    }
    if (!obj["tags"].is_array()) {
        errors.add(where, "'tags' must be a list of strings");
        return tags;
    }
    for (const auto& raw : obj["tags"]) {
        if (!raw.is_string()) {
            errors.add(where, "tag entries must be strings");
            continue;
        }
        try {
            tags.push_back(parse_machine_tag(raw.get<std::string>()));
        } catch (const Error& e) {
            errors.add(where, e.what());
        }
    }
    return tags;
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& text) {
    const std::filesystem::path p(text);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

std::vector<Event> parse_events(const std::string& text, const std::string& origin) {
    if (blank(text)) {
        return {};
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorCode::parse_error, origin + ":" + std::to_string(line) + ":" +
                                                std::to_string(column) + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw Error(ErrorCode::validation_error, origin + ": top level must be a list of events");
    }

    Violations errors;
    std::vector<Event> events;
    std::set<std::string> attribute_ids;
    std::size_t index = 0;
    for (const auto& item : doc) {
        const std::string where = "event[" + std::to_string(index++) + "]";
        if (!item.is_object()) {
            errors.add(where, "must be an object");
            continue;
        }
        Event event;
        event.id = string_field(item, "id", where, errors).value_or("");
        event.info = item.contains("info") && item["info"].is_string()
                         ? item["info"].get<std::string>()
                         : std::string();
        if (auto ts = time_field(item, "published_at", where, errors)) {
            event.published_at = *ts;
        }
        event.event_tags = tag_list(item, where, errors);

        if (item.contains("attributes") && !item["attributes"].is_array()) {
            errors.add(where, "'attributes' must be a list");
        } else if (item.contains("attributes")) {
            std::size_t attr_index = 0;
            for (const auto& raw : item["attributes"]) {
                const std::string at = where + ".attributes[" + std::to_string(attr_index++) + "]";
                if (!raw.is_object()) {
                    errors.add(at, "must be an object");
                    continue;
                }
                Attribute attr;
                attr.id = string_field(raw, "id", at, errors).value_or("");
                attr.category = string_field(raw, "category", at, errors).value_or("");
                attr.type = string_field(raw, "type", at, errors).value_or("");
                attr.value = string_field(raw, "value", at, errors).value_or("");
                attr.source_id = string_field(raw, "source_id", at, errors).value_or("");
                if (auto ts = time_field(raw, "created_at", at, errors)) {
                    attr.created_at = *ts;
                }
                if (!attr.id.empty() && !attribute_ids.insert(attr.id).second) {
                    errors.add(at, "duplicate attribute id '" + attr.id + "'");
                }
                // Event tags first so attribute tags win on (namespace, predicate).
                std::vector<MachineTag> merged = event.event_tags;
                const auto own = tag_list(raw, at, errors);
                merged.insert(merged.end(), own.begin(), own.end());
                attr.tags = resolve_tag_conflicts(merged);
                event.attributes.push_back(std::move(attr));
            }
        }
        events.push_back(std::move(event));
    }
    if (!errors.empty()) {
        errors.raise(origin);
    }
    return events;
}

std::vector<Event> load_events(const std::filesystem::path& path) {
    return parse_events(read_file(path, "events file"), path.string());
}

std::vector<Sighting> parse_sightings(const std::string& text, const std::string& origin) {
    std::vector<Sighting> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        const std::string where = origin + ":" + std::to_string(line_no);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::parse_error, where + ":" + std::to_string(e.byte) + ": " + e.what());
        }
        try {
            records.push_back(sighting_from_json(doc));
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
    }

    std::stable_sort(records.begin(), records.end(),
                     [](const Sighting& a, const Sighting& b) { return a.timestamp < b.timestamp; });
    std::set<std::tuple<std::string, Timestamp, SightingKind, std::string>> seen;
    std::vector<Sighting> unique;
    for (auto& s : records) {
        if (seen.emplace(s.attribute_id, s.timestamp, s.kind, s.source_id).second) {
            unique.push_back(std::move(s));
        }
    }
    return unique;
}

std::vector<Sighting> load_sightings(const std::filesystem::path& path) {
    return parse_sightings(read_file(path, "sightings feed"), path.string());
}

EngineConfig EngineConfig::from_json(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::validation_error, "configuration must be an object");
    }
    try {
        EngineConfig config;
        const auto path_of = [&](const char* key) {
            return resolve_path(base_dir, doc.at(key).get<std::string>());
        };
        if (doc.contains("taxonomy_dir")) config.taxonomy_dir = path_of("taxonomy_dir");
        if (doc.contains("events")) config.events_path = path_of("events");
        if (doc.contains("sources")) config.sources_path = path_of("sources");
        if (doc.contains("sightings")) config.sightings_path = path_of("sightings");
        if (doc.contains("store_path")) config.store_path = path_of("store_path");
        else config.store_path = base_dir / "store.json";
        config.bind_address = doc.value("bind_address", config.bind_address);
        config.readonly = doc.value("readonly", config.readonly);
        config.weight_x = doc.value("weight_x", config.weight_x);
        config.default_predicate_weight =
            doc.value("default_predicate_weight", config.default_predicate_weight);
        config.default_source_confidence =
            doc.value("default_source_confidence", config.default_source_confidence);
        if (doc.contains("tau_estimator")) {
            const auto& est = doc["tau_estimator"];
            config.tau_estimator.multiplier = est.value("c", config.tau_estimator.multiplier);
            config.tau_estimator.quantile = est.value("quantile", config.tau_estimator.quantile);
        }
        if (doc.contains("models")) {
            config.models = ModelTable::from_json(doc["models"]);
        }
        ScoringConfig::with_weight_x(config.weight_x);
        if (!(config.default_source_confidence >= 0.0 && config.default_source_confidence <= 1.0)) {
            throw Error(ErrorCode::validation_error, "default_source_confidence outside [0,1]");
        }
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::validation_error, std::string("configuration: ") + e.what());
    }
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
    const std::string text = read_file(path, "configuration");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
    return from_json(doc, path.parent_path());
}

nlohmann::json ImportReport::to_json() const {
    return {{"events", events},
            {"attributes", attributes},
            {"tags_resolved", tags_resolved},
            {"tags_unresolved", tags_unresolved},
            {"sightings", sightings}};
}

ImportResult import_all(const EngineConfig& config) {
    ImportResult result;
    Store& store = result.store;

    store.registry = std::make_shared<TaxonomyRegistry>(
        TaxonomyRegistry::load_directory(config.taxonomy_dir, config.default_predicate_weight));
    store.sources = SourceDirectory::load(config.sources_path);
    store.scoring = ScoringConfig::with_weight_x(config.weight_x);
    store.models = config.models;
    store.default_source_confidence = config.default_source_confidence;

    const auto events = load_events(config.events_path);
    result.report.events = events.size();
    std::set<std::string> warned_sources;
    std::set<std::string> warned_types;
    for (const auto& event : events) {
        for (const auto& attr : event.attributes) {
            for (const auto& tag : attr.tags) {
                if (std::holds_alternative<NotFound>(store.registry->resolve(tag))) {
                    ++result.report.tags_unresolved;
                } else {
                    ++result.report.tags_resolved;
                }
            }
            if (!store.sources.find(attr.source_id) && warned_sources.insert(attr.source_id).second) {
                result.warnings.push_back("source '" + attr.source_id +
                                          "' is not in the sources file; using source_confidence " +
                                          format_number(config.default_source_confidence));
            }
            if (!store.models.contains(attr.type) && warned_types.insert(attr.type).second) {
                result.warnings.push_back("attribute type '" + attr.type +
                                          "' has no decay model; using default " +
                                          to_json(store.models.fallback()).dump());
            }
            store.add_attribute(attr);
            ++result.report.attributes;
        }
    }

    if (config.sightings_path) {
        Violations errors;
        for (const auto& s : load_sightings(*config.sightings_path)) {
            try {
                store.record_sighting(s);
                ++result.report.sightings;
            } catch (const Error& e) {
                errors.add(format_rfc3339(s.timestamp) + " " + s.attribute_id, e.what());
            }
        }
        if (!errors.empty()) {
            errors.raise(config.sightings_path->string());
        }
    }
    return result;
}

}  // namespace iocdecay
