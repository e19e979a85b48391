#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace iocdecay {

// namespace:predicate[="value"]
struct MachineTag {
    std::string ns;
    std::string predicate;
    std::optional<std::string> value;

    friend bool operator==(const MachineTag&, const MachineTag&) = default;
};

MachineTag parse_machine_tag(std::string_view raw);
std::string to_string(const MachineTag& tag);

// Lowercased "namespace:predicate", the identity used for matching and conflicts.
std::string conflict_key(const MachineTag& tag);

struct Numeric {
    int value = 0;
    friend bool operator==(const Numeric&, const Numeric&) = default;
};
struct Undefined {
    friend bool operator==(const Undefined&, const Undefined&) = default;
};
struct NotFound {
    friend bool operator==(const NotFound&, const NotFound&) = default;
};

using NumericalValue = std::variant<Numeric, Undefined>;
using Resolution = std::variant<Numeric, Undefined, NotFound>;

struct TaxonomyEntry {
    std::string predicate;
    std::optional<std::string> value;  // absent: attaches to the bare predicate
    std::optional<NumericalValue> numerical_value;  // absent: resolves to NotFound
};

struct TaxonomyNamespace {
    std::string name;
    std::map<std::string, int> predicate_weights;  // only explicitly configured weights
    std::vector<TaxonomyEntry> entries;
};

inline constexpr int kDefaultPredicateWeight = 50;

class TaxonomyRegistry {
public:
    explicit TaxonomyRegistry(int default_predicate_weight = kDefaultPredicateWeight);

    // Validates weights and values; throws Error{load_error}.
    void add(TaxonomyNamespace ns);

    Resolution resolve(const MachineTag& tag) const;
    int predicate_weight(std::string_view ns, std::string_view predicate) const;
    bool has_namespace(std::string_view ns) const;

    int default_predicate_weight() const noexcept { return default_weight_; }
    std::size_t namespace_count() const noexcept { return namespaces_.size(); }

    // Every *.json file in `dir`, in filename order.
    static TaxonomyRegistry load_directory(const std::filesystem::path& dir,
                                           int default_predicate_weight = kDefaultPredicateWeight);

    nlohmann::json to_json() const;
    static TaxonomyRegistry from_json(const nlohmann::json& doc);

private:
    struct Namespace {
        TaxonomyNamespace source;
        std::map<std::string, int> weights;               // lowercased predicate
        std::map<std::string, std::optional<NumericalValue>> values;  // entry key
    };

    const Namespace* find(std::string_view ns) const;

    int default_weight_;
    std::map<std::string, Namespace> namespaces_;  // lowercased namespace
};

// Parses one taxonomy definition document; throws Error{load_error}.
TaxonomyNamespace parse_taxonomy_document(const nlohmann::json& doc);

Resolution resolve_numerical_value(const MachineTag& tag, const TaxonomyRegistry& registry);
int predicate_weight(std::string_view ns, std::string_view predicate,
                     const TaxonomyRegistry& registry);

// Shared registry that can be replaced wholesale while readers hold the old one.
class RegistryHandle {
public:
    explicit RegistryHandle(std::shared_ptr<const TaxonomyRegistry> initial);

    std::shared_ptr<const TaxonomyRegistry> get() const;
    void reload(std::shared_ptr<const TaxonomyRegistry> next);

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const TaxonomyRegistry> current_;
};

}  // namespace iocdecay
