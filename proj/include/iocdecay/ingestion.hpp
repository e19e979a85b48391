#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iocdecay/decay.hpp"
#include "iocdecay/lifecycle.hpp"
#include "iocdecay/taxonomy.hpp"

namespace iocdecay {

struct Event {
    std::string id;
    std::string info;
    Timestamp published_at{};
    std::vector<MachineTag> event_tags;
    std::vector<Attribute> attributes;  // tags already merged with event_tags
};

// Engine configuration file. Relative paths resolve against the file's directory.
struct EngineConfig {
    std::filesystem::path taxonomy_dir;
    std::filesystem::path events_path;
    std::filesystem::path sources_path;
    std::optional<std::filesystem::path> sightings_path;
    std::filesystem::path store_path = "store.json";
    std::string bind_address = "127.0.0.1:8080";
    bool readonly = false;
    int weight_x = 50;
    int default_predicate_weight = kDefaultPredicateWeight;
    double default_source_confidence = kDefaultSourceConfidence;
    TauEstimator tau_estimator;
    ModelTable models;

    static EngineConfig load(const std::filesystem::path& path);
    static EngineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
};

// Error{parse_error} carries line and column; Error{validation_error} lists
// every problem found, one per line.
std::vector<Event> load_events(const std::filesystem::path& path);
std::vector<Event> parse_events(const std::string& text, const std::string& origin = "<events>");

// Newline-delimited sighting records, sorted by timestamp with exact duplicates dropped.
std::vector<Sighting> load_sightings(const std::filesystem::path& path);
std::vector<Sighting> parse_sightings(const std::string& text,
                                      const std::string& origin = "<sightings>");

struct ImportReport {
    std::size_t events = 0;
    std::size_t attributes = 0;
    std::size_t tags_resolved = 0;
    std::size_t tags_unresolved = 0;
    std::size_t sightings = 0;

    nlohmann::json to_json() const;
};

struct ImportResult {
    Store store;
    ImportReport report;
    std::vector<std::string> warnings;
};

ImportResult import_all(const EngineConfig& config);

}  // namespace iocdecay
