#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iocdecay/decay.hpp"
#include "iocdecay/scoring.hpp"
#include "iocdecay/taxonomy.hpp"
#include "iocdecay/time.hpp"

namespace iocdecay {

struct Attribute {
    std::string id;
    std::string category;
    std::string type;
    std::string value;
    std::string source_id;
    Timestamp created_at{};
    std::vector<MachineTag> tags;
};

enum class SightingKind { positive, false_positive, expiration };

// Wire names: "positive", "false_positive", "expiration".
const char* to_string(SightingKind kind) noexcept;
SightingKind parse_sighting_kind(std::string_view text);  // Error{unknown_kind}

struct Sighting {
    std::string attribute_id;
    Timestamp timestamp{};
    SightingKind kind = SightingKind::positive;
    std::string source_id;

    friend bool operator==(const Sighting&, const Sighting&) = default;
};

nlohmann::json to_json(const Sighting& s);
Sighting sighting_from_json(const nlohmann::json& doc);  // Error{validation_error, unknown_kind}

struct SightingState {
    std::optional<Timestamp> last_positive;
    std::optional<ElapsedTime> tau_override;
    bool false_positive = false;
    std::vector<Sighting> history;  // by timestamp, ties in arrival order
};

// Inserts `s` by timestamp and applies its effect:
//  positive        -> last_positive = latest positive timestamp
//  false_positive  -> sticky false_positive flag
//  expiration      -> tau_override = s.timestamp - reference time
SightingState record_sighting(const SightingState& state, const Attribute& attr, const Sighting& s);

// Administrative reset of the false-positive flag.
SightingState clear_false_positive(const SightingState& state);

// last_positive, or created_at for attributes never sighted.
Timestamp reference_time(const Attribute& attr, const SightingState& state);

// now - reference_time; Error{clock_skew} when now precedes it.
ElapsedTime effective_elapsed(const Attribute& attr, const SightingState& state, Timestamp now,
                              TimeUnit unit = TimeUnit::seconds);

struct ScoringInputs {
    const TaxonomyRegistry& registry;
    SourceProfile source;
    ScoringConfig config;
};

double compute_base_score(const Attribute& attr, const ScoringInputs& inputs);

struct ScoreResult {
    double base_score = 0.0;
    double current_score = 0.0;
    bool expired = false;
    Timestamp evaluated_at{};
    Timestamp last_reference{};
    DecayModel model;  // effective model, with tau_override applied
};

ScoreResult current_score(const Attribute& attr, const SightingState& state,
                          const DecayModel& model, const ScoringInputs& inputs, Timestamp now);

struct TauEstimator {
    double multiplier = 2.0;
    double quantile = 0.95;
};

// Successive gaps between positive sightings, in seconds, in time order.
std::vector<double> inter_sighting_gaps(std::span<const Sighting> history);

// multiplier * nearest-rank quantile of the positive inter-sighting gaps.
// Error{insufficient_history} below three positive sightings.
ElapsedTime estimate_tau(std::span<const Sighting> history, const TauEstimator& estimator = {},
                         TimeUnit unit = TimeUnit::hours);

struct AttributeRecord {
    Attribute attribute;
    SightingState state;
};

// Attributes plus everything needed to score them. Copyable; the service
// publishes immutable copies as read snapshots.
class Store {
public:
    Store();

    std::shared_ptr<const TaxonomyRegistry> registry;
    SourceDirectory sources;
    ScoringConfig scoring;
    ModelTable models;
    double default_source_confidence = kDefaultSourceConfidence;

    void add_attribute(Attribute attr);  // Error{validation_error} on duplicate id
    const AttributeRecord* find(const std::string& id) const;
    const std::map<std::string, AttributeRecord>& attributes() const noexcept { return records_; }

    void record_sighting(const Sighting& s);  // Error{unknown_attribute}
    void clear_false_positive(const std::string& id);

    SourceProfile source_for(const Attribute& attr) const;
    ScoreResult score(const std::string& id, Timestamp now) const;

    nlohmann::json snapshot() const;
    static Store from_snapshot(const nlohmann::json& doc);
    void save(const std::filesystem::path& path) const;
    static Store load(const std::filesystem::path& path);

private:
    std::map<std::string, AttributeRecord> records_;
};

inline constexpr int kSnapshotSchemaVersion = 1;

// Ids whose current score is 0 at `now`, ascending. Attributes created after
// `now` are not expired.
std::vector<std::string> list_expired(const Store& store, Timestamp now);

// Canonical text for score documents shared by the CLI and the HTTP API.
nlohmann::json score_document(const std::string& attribute_id, const ScoreResult& result);

}  // namespace iocdecay
