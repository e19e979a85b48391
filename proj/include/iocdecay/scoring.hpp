#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iocdecay/taxonomy.hpp"

namespace iocdecay {

// weight_x weighs the tags term, omega_sc the source confidence; they sum to 100.
struct ScoringConfig {
    int weight_x = 50;
    int omega_sc = 50;

    static ScoringConfig with_weight_x(int weight_x);
    void validate() const;
};

struct SourceProfile {
    std::string source_id;
    double source_confidence = 0.5;
};

inline constexpr double kDefaultSourceConfidence = 0.5;

class SourceDirectory {
public:
    void add(SourceProfile profile);
    std::optional<SourceProfile> find(const std::string& source_id) const;
    std::size_t size() const noexcept { return sources_.size(); }

    // [{"source_id": ..., "source_confidence": ...}, ...]
    static SourceDirectory load(const std::filesystem::path& path);
    static SourceDirectory from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

private:
    std::map<std::string, double> sources_;
};

// nullopt means no tag contributed (Absent).
using TagsScore = std::optional<double>;

// Weighted mean of the numerical values of every tag that resolves to a number,
// normalized to [0,1]. Undefined and NotFound tags are skipped entirely.
TagsScore tags_score(std::span<const MachineTag> tags, const TaxonomyRegistry& registry);

// weight_x * tags + omega_sc * source_confidence; 100 * source_confidence if tags is Absent.
double base_score(TagsScore tags, const SourceProfile& source, const ScoringConfig& config);

// Keeps only the last-attached tag per (namespace, predicate), preserving order.
std::vector<MachineTag> resolve_tag_conflicts(std::span<const MachineTag> tags);

}  // namespace iocdecay
