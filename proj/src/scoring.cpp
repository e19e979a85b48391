#include "iocdecay/scoring.hpp"

#include "iocdecay/error.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>

namespace iocdecay {

ScoringConfig ScoringConfig::with_weight_x(int weight_x) {
    ScoringConfig config{weight_x, 100 - weight_x};
    config.validate();
    return config;
}

void ScoringConfig::validate() const {
    if (weight_x < 0 || weight_x > 100 || omega_sc < 0 || omega_sc > 100) {
        throw Error(ErrorCode::invalid_parameter, "weight_x and omega_sc must lie in [0,100]");
    }
    if (weight_x + omega_sc != 100) {
        throw Error(ErrorCode::invalid_parameter, "weight_x + omega_sc must equal 100");
    }
}

void SourceDirectory::add(SourceProfile profile) {
    if (profile.source_id.empty()) {
        throw Error(ErrorCode::validation_error, "source_id must not be empty");
    }
    if (!(profile.source_confidence >= 0.0 && profile.source_confidence <= 1.0)) {
        throw Error(ErrorCode::validation_error,
                    "source_confidence of '" + profile.source_id + "' outside [0,1]");
    }
    sources_[profile.source_id] = profile.source_confidence;
}

std::optional<SourceProfile> SourceDirectory::find(const std::string& source_id) const {
    const auto it = sources_.find(source_id);
    if (it == sources_.end()) {
        return std::nullopt;
    }
    return SourceProfile{it->first, it->second};
}

SourceDirectory SourceDirectory::from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) {
        throw Error(ErrorCode::validation_error, "sources document must be a list");
    }
    SourceDirectory dir;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("source_id") || !item["source_id"].is_string() ||
            !item.contains("source_confidence") || !item["source_confidence"].is_number()) {
            throw Error(ErrorCode::validation_error,
                        "source entries need 'source_id' and numeric 'source_confidence'");
        }
        dir.add({item["source_id"].get<std::string>(), item["source_confidence"].get<double>()});
    }
    return dir;
}

SourceDirectory SourceDirectory::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot read sources file " + path.string());
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
}

nlohmann::json SourceDirectory::to_json() const {
    auto out = nlohmann::json::array();
    for (const auto& [id, confidence] : sources_) {
        out.push_back({{"source_id", id}, {"source_confidence", confidence}});
    }
    return out;
}

TagsScore tags_score(std::span<const MachineTag> tags, const TaxonomyRegistry& registry) {
    // Integer sums keep the result independent of tag order.
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;
    for (const auto& tag : tags) {
        const Resolution r = registry.resolve(tag);
        const auto* n = std::get_if<Numeric>(&r);
        if (n == nullptr) {
            continue;
        }
        const int weight = registry.predicate_weight(tag.ns, tag.predicate);
        numerator += static_cast<std::int64_t>(n->value) * weight;
        denominator += 100 * static_cast<std::int64_t>(weight);
    }
    if (denominator == 0) {
        return std::nullopt;
    }
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

double base_score(TagsScore tags, const SourceProfile& source, const ScoringConfig& config) {
    config.validate();
    const double sc = source.source_confidence;
    if (!(sc >= 0.0 && sc <= 1.0)) {
        throw Error(ErrorCode::invalid_parameter, "source_confidence outside [0,1]");
    }
    if (!tags) {
        return 100.0 * sc;
    }
    if (!(*tags >= 0.0 && *tags <= 1.0)) {
        throw Error(ErrorCode::invalid_parameter, "tags score outside [0,1]");
    }
    const double score = config.weight_x * *tags + config.omega_sc * sc;
    return std::clamp(score, 0.0, 100.0);
}

std::vector<MachineTag> resolve_tag_conflicts(std::span<const MachineTag> tags) {
    std::vector<MachineTag> kept;
    std::set<std::string> seen;
    for (auto it = tags.rbegin(); it != tags.rend(); ++it) {
        if (seen.insert(conflict_key(*it)).second) {
            kept.push_back(*it);
        }
    }
    std::reverse(kept.begin(), kept.end());
    return kept;
}

}  // namespace iocdecay
