#include "iocdecay/lifecycle.hpp"

#include "iocdecay/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace iocdecay {

const char* to_string(SightingKind kind) noexcept {
    switch (kind) {
        case SightingKind::positive: return "positive";
        case SightingKind::false_positive: return "false_positive";
        case SightingKind::expiration: return "expiration";
    }
    return "positive";
}

SightingKind parse_sighting_kind(std::string_view text) {
    if (text == "positive") return SightingKind::positive;
    if (text == "false_positive") return SightingKind::false_positive;
    if (text == "expiration") return SightingKind::expiration;
    throw Error(ErrorCode::unknown_kind, "unknown sighting kind '" + std::string(text) + "'");
}

nlohmann::json to_json(const Sighting& s) {
    return {{"attribute_id", s.attribute_id},
            {"timestamp", format_rfc3339(s.timestamp)},
            {"kind", to_string(s.kind)},
            {"source_id", s.source_id}};
}

Sighting sighting_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::validation_error, "sighting must be an object");
    }
    for (const char* field : {"attribute_id", "timestamp", "kind", "source_id"}) {
        if (!doc.contains(field) || !doc[field].is_string()) {
            throw Error(ErrorCode::validation_error,
                        std::string("sighting field '") + field + "' must be a string");
        }
    }
    Sighting s;
    s.attribute_id = doc["attribute_id"].get<std::string>();
    s.timestamp = parse_rfc3339(doc["timestamp"].get<std::string>());
    s.kind = parse_sighting_kind(doc["kind"].get<std::string>());
    s.source_id = doc["source_id"].get<std::string>();
    if (s.attribute_id.empty()) {
        throw Error(ErrorCode::validation_error, "sighting attribute_id must not be empty");
    }
    return s;
}

Timestamp reference_time(const Attribute& attr, const SightingState& state) {
    return state.last_positive.value_or(attr.created_at);
}

SightingState record_sighting(const SightingState& state, const Attribute& attr,
                              const Sighting& s) {
    if (s.attribute_id != attr.id) {
        throw Error(ErrorCode::unknown_attribute,
                    "sighting for '" + s.attribute_id + "' applied to attribute '" + attr.id + "'");
    }
    if (s.timestamp < attr.created_at) {
        throw Error(ErrorCode::validation_error, "sighting at " + format_rfc3339(s.timestamp) +
                                                     " predates creation of '" + attr.id + "'");
    }

    SightingState next = state;
    switch (s.kind) {
        case SightingKind::positive:
            if (!next.last_positive || s.timestamp > *next.last_positive) {
                next.last_positive = s.timestamp;
            }
            break;
        case SightingKind::false_positive:
            next.false_positive = true;
            break;
        case SightingKind::expiration: {
            const Timestamp reference = reference_time(attr, state);
            if (s.timestamp <= reference) {
                throw Error(ErrorCode::negative_tau,
                            "expiration at " + format_rfc3339(s.timestamp) +
                                " does not follow reference time " + format_rfc3339(reference));
            }
            next.tau_override = ElapsedTime::between(reference, s.timestamp, TimeUnit::seconds);
            break;
        }
    }

    const auto pos = std::upper_bound(
        next.history.begin(), next.history.end(), s.timestamp,
        [](Timestamp ts, const Sighting& existing) { return ts < existing.timestamp; });
    next.history.insert(pos, s);
    return next;
}

SightingState clear_false_positive(const SightingState& state) {
    SightingState next = state;
    next.false_positive = false;
    return next;
}

ElapsedTime effective_elapsed(const Attribute& attr, const SightingState& state, Timestamp now,
                              TimeUnit unit) {
    const Timestamp reference = reference_time(attr, state);
    if (now < reference) {
        throw Error(ErrorCode::clock_skew, "evaluation time " + format_rfc3339(now) +
                                               " precedes reference " + format_rfc3339(reference));
    }
    return ElapsedTime::between(reference, now, unit);
}

double compute_base_score(const Attribute& attr, const ScoringInputs& inputs) {
    const auto tags = resolve_tag_conflicts(attr.tags);
    return base_score(tags_score(tags, inputs.registry), inputs.source, inputs.config);
}

ScoreResult current_score(const Attribute& attr, const SightingState& state,
                          const DecayModel& model, const ScoringInputs& inputs, Timestamp now) {
    ScoreResult result;
    result.base_score = compute_base_score(attr, inputs);
    result.evaluated_at = now;
    result.last_reference = reference_time(attr, state);
    result.model = model;

    if (state.false_positive) {
        result.current_score = 0.0;
        result.expired = true;
        return result;
    }

    const ElapsedTime elapsed = effective_elapsed(attr, state, now, model.unit);
    bool past_end = false;
    if (state.tau_override) {
        const double tau = state.tau_override->to(model.unit).value;
        if (auto* poly = std::get_if<PolynomialDecay>(&result.model.shape)) {
            poly->tau = tau;
        } else {
            // Linear and exponential have no end time; the expiration acts as a cutoff.
            past_end = elapsed.seconds() >= state.tau_override->seconds();
        }
    }

    const DecayedScore decayed = evaluate(result.base_score, result.model, elapsed);
    result.current_score = past_end ? 0.0 : decayed.current_score;
    result.expired = result.current_score == 0.0;
    return result;
}

std::vector<double> inter_sighting_gaps(std::span<const Sighting> history) {
    std::vector<Timestamp> positives;
    for (const auto& s : history) {
        if (s.kind == SightingKind::positive) {
            positives.push_back(s.timestamp);
        }
    }
    std::sort(positives.begin(), positives.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < positives.size(); ++i) {
        gaps.push_back(static_cast<double>((positives[i] - positives[i - 1]).count()));
    }
    return gaps;
}

ElapsedTime estimate_tau(std::span<const Sighting> history, const TauEstimator& estimator,
                         TimeUnit unit) {
    if (!(estimator.multiplier > 0.0) || !std::isfinite(estimator.multiplier)) {
        throw Error(ErrorCode::invalid_parameter, "tau multiplier must be > 0");
    }
    if (!(estimator.quantile > 0.0 && estimator.quantile <= 1.0)) {
        throw Error(ErrorCode::invalid_parameter, "tau quantile must lie in (0,1]");
    }
    std::vector<double> gaps = inter_sighting_gaps(history);
    if (gaps.size() < 2) {
        throw Error(ErrorCode::insufficient_history,
                    "at least 3 positive sightings are needed to estimate tau");
    }
    std::sort(gaps.begin(), gaps.end());
    const double n = static_cast<double>(gaps.size());
    auto rank = static_cast<std::size_t>(std::ceil(estimator.quantile * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, gaps.size());
    return ElapsedTime::from_seconds(estimator.multiplier * gaps[rank - 1], unit);
}

Store::Store() : registry(std::make_shared<TaxonomyRegistry>()) {}

void Store::add_attribute(Attribute attr) {
    if (attr.id.empty()) {
        throw Error(ErrorCode::validation_error, "attribute id must not be empty");
    }
    const std::string id = attr.id;
    const auto [it, inserted] = records_.emplace(id, AttributeRecord{std::move(attr), {}});
    if (!inserted) {
        throw Error(ErrorCode::validation_error, "duplicate attribute id '" + id + "'");
    }
}

const AttributeRecord* Store::find(const std::string& id) const {
    const auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

void Store::record_sighting(const Sighting& s) {
    const auto it = records_.find(s.attribute_id);
    if (it == records_.end()) {
        throw Error(ErrorCode::unknown_attribute, "unknown attribute '" + s.attribute_id + "'");
    }
    it->second.state = iocdecay::record_sighting(it->second.state, it->second.attribute, s);
}

void Store::clear_false_positive(const std::string& id) {
    const auto it = records_.find(id);
    if (it == records_.end()) {
        throw Error(ErrorCode::unknown_attribute, "unknown attribute '" + id + "'");
    }
    it->second.state = iocdecay::clear_false_positive(it->second.state);
}

SourceProfile Store::source_for(const Attribute& attr) const {
    if (auto found = sources.find(attr.source_id)) {
        return *found;
    }
    return SourceProfile{attr.source_id, default_source_confidence};
}

ScoreResult Store::score(const std::string& id, Timestamp now) const {
    const AttributeRecord* record = find(id);
    if (record == nullptr) {
        throw Error(ErrorCode::unknown_attribute, "unknown attribute '" + id + "'");
    }
    const ScoringInputs inputs{*registry, source_for(record->attribute), scoring};
    return current_score(record->attribute, record->state, models.resolve(record->attribute.type),
                         inputs, now);
}

namespace {

nlohmann::json state_to_json(const SightingState& state) {
    nlohmann::json doc;
    doc["last_positive"] =
        state.last_positive ? nlohmann::json(format_rfc3339(*state.last_positive)) : nlohmann::json(nullptr);
    doc["tau_override_seconds"] =
        state.tau_override ? nlohmann::json(state.tau_override->seconds()) : nlohmann::json(nullptr);
    doc["false_positive"] = state.false_positive;
    doc["history"] = nlohmann::json::array();
    for (const auto& s : state.history) {
        doc["history"].push_back(to_json(s));
    }
    return doc;
}

SightingState state_from_json(const nlohmann::json& doc) {
    SightingState state;
    if (const auto& lp = doc.at("last_positive"); !lp.is_null()) {
        state.last_positive = parse_rfc3339(lp.get<std::string>());
    }
    if (const auto& tau = doc.at("tau_override_seconds"); !tau.is_null()) {
        state.tau_override = ElapsedTime{tau.get<double>(), TimeUnit::seconds};
    }
    state.false_positive = doc.at("false_positive").get<bool>();
    for (const auto& s : doc.at("history")) {
        state.history.push_back(sighting_from_json(s));
    }
    return state;
}

}  // namespace

nlohmann::json Store::snapshot() const {
    nlohmann::json doc;
    doc["schema_version"] = kSnapshotSchemaVersion;
    doc["scoring"] = {{"weight_x", scoring.weight_x}, {"omega_sc", scoring.omega_sc}};
    doc["default_source_confidence"] = default_source_confidence;
    doc["taxonomies"] = registry->to_json();
    doc["sources"] = sources.to_json();
    doc["models"] = models.to_json();
    auto& list = doc["attributes"] = nlohmann::json::array();
    for (const auto& [id, record] : records_) {
        const Attribute& a = record.attribute;
        nlohmann::json item{{"id", a.id},
                            {"category", a.category},
                            {"type", a.type},
                            {"value", a.value},
                            {"source_id", a.source_id},
                            {"created_at", format_rfc3339(a.created_at)}};
        item["tags"] = nlohmann::json::array();
        for (const auto& tag : a.tags) {
            item["tags"].push_back(to_string(tag));
        }
        item["sightings"] = state_to_json(record.state);
        list.push_back(std::move(item));
    }
    return doc;
}

Store Store::from_snapshot(const nlohmann::json& doc) {
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kSnapshotSchemaVersion) {
            throw Error(ErrorCode::load_error,
                        "unsupported snapshot schema_version " + std::to_string(version));
        }
        Store store;
        store.scoring = ScoringConfig{doc.at("scoring").at("weight_x").get<int>(),
                                      doc.at("scoring").at("omega_sc").get<int>()};
        store.scoring.validate();
        store.default_source_confidence = doc.at("default_source_confidence").get<double>();
        store.registry =
            std::make_shared<TaxonomyRegistry>(TaxonomyRegistry::from_json(doc.at("taxonomies")));
        store.sources = SourceDirectory::from_json(doc.at("sources"));
        store.models = ModelTable::from_json(doc.at("models"));
        for (const auto& item : doc.at("attributes")) {
            Attribute a;
            a.id = item.at("id").get<std::string>();
            a.category = item.at("category").get<std::string>();
            a.type = item.at("type").get<std::string>();
            a.value = item.at("value").get<std::string>();
            a.source_id = item.at("source_id").get<std::string>();
            a.created_at = parse_rfc3339(item.at("created_at").get<std::string>());
            for (const auto& tag : item.at("tags")) {
                a.tags.push_back(parse_machine_tag(tag.get<std::string>()));
            }
            const std::string id = a.id;
            store.add_attribute(std::move(a));
            store.records_.at(id).state = state_from_json(item.at("sightings"));
        }
        return store;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, std::string("malformed snapshot: ") + e.what());
    }
}

void Store::save(const std::filesystem::path& path) const {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::io_error, "cannot write snapshot " + tmp.string());
        }
        out << snapshot().dump(2) << '\n';
        if (!out) {
            throw Error(ErrorCode::io_error, "failed writing snapshot " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::io_error, "cannot move snapshot into place: " + ec.message());
    }
}

Store Store::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot read snapshot " + path.string());
    }
    try {
        return from_snapshot(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
}

std::vector<std::string> list_expired(const Store& store, Timestamp now) {
    std::vector<std::string> ids;
    for (const auto& [id, record] : store.attributes()) {
        if (now < record.attribute.created_at) {
            continue;
        }
        try {
            if (store.score(id, now).expired) {
                ids.push_back(id);
            }
        } catch (const Error& e) {
            // A sighting later than `now` cannot have expired the attribute yet.
            if (e.code() != ErrorCode::clock_skew) {
                throw;
            }
        }
    }
    return ids;
}

nlohmann::json score_document(const std::string& attribute_id, const ScoreResult& result) {
    nlohmann::json model;
    model["variant"] = result.model.variant_name();
    model["delta"] = result.model.delta();
    model["unit"] = unit_symbol(result.model.unit);
    if (const auto tau = result.model.tau()) {
        model["tau"] = *tau;
    } else {
        model["tau"] = nullptr;
    }
    return {{"attribute_id", attribute_id},
            {"base_score", result.base_score},
            {"current_score", result.current_score},
            {"expired", result.expired},
            {"model", model},
            {"last_reference", format_rfc3339(result.last_reference)},
            {"evaluated_at", format_rfc3339(result.evaluated_at)}};
}

}  // namespace iocdecay
