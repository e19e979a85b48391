#include "iocdecay/taxonomy.hpp"

#include "iocdecay/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace iocdecay {

namespace {

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view text) {
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    return text;
}

bool valid_identifier(std::string_view id) {
    if (id.empty()) {
        return false;
    }
    return std::none_of(id.begin(), id.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == '=' || c == '"';
    });
}

[[noreturn]] void malformed(std::string_view raw, const char* why) {
    throw Error(ErrorCode::malformed_tag,
                "malformed machine-tag '" + std::string(raw) + "': " + why);
}

std::string entry_key(std::string_view predicate, const std::optional<std::string>& value) {
    std::string key = lower(predicate);
    if (value) {
        key += '=';
        key += *value;
    }
    return key;
}

[[noreturn]] void load_failure(const std::string& ns, const std::string& what) {
    throw Error(ErrorCode::load_error, "taxonomy '" + ns + "': " + what);
}

}  // namespace

MachineTag parse_machine_tag(std::string_view raw) {
    const std::string_view text = trim(raw);
    if (text.empty()) {
        malformed(raw, "empty tag");
    }
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        malformed(raw, "missing ':' separator");
    }

    MachineTag tag;
    const std::string_view ns = text.substr(0, colon);
    const std::string_view rest = text.substr(colon + 1);
    const auto eq = rest.find('=');
    const std::string_view predicate = rest.substr(0, eq);

    if (!valid_identifier(ns)) {
        malformed(raw, "invalid namespace");
    }
    if (!valid_identifier(predicate)) {
        malformed(raw, "invalid predicate");
    }
    tag.ns = std::string(ns);
    tag.predicate = std::string(predicate);

    if (eq != std::string_view::npos) {
        std::string_view value = rest.substr(eq + 1);
        if (!value.empty() && value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') {
                malformed(raw, "unbalanced quotes");
            }
            value = value.substr(1, value.size() - 2);
        } else if (value.empty()) {
            malformed(raw, "empty value");
        }
        if (value.find('"') != std::string_view::npos) {
            malformed(raw, "unbalanced quotes");
        }
        tag.value = std::string(value);
    }
    return tag;
}

std::string to_string(const MachineTag& tag) {
    std::string out = tag.ns + ':' + tag.predicate;
    if (tag.value) {
        out += "=\"" + *tag.value + '"';
    }
    return out;
}

std::string conflict_key(const MachineTag& tag) {
    return lower(tag.ns) + ':' + lower(tag.predicate);
}

TaxonomyRegistry::TaxonomyRegistry(int default_predicate_weight)
    : default_weight_(default_predicate_weight) {
    if (default_predicate_weight < 0 || default_predicate_weight > 100) {
        throw Error(ErrorCode::load_error, "default predicate weight must lie in [0,100]");
    }
}

void TaxonomyRegistry::add(TaxonomyNamespace ns) {
    if (!valid_identifier(ns.name)) {
        load_failure(ns.name, "invalid namespace name");
    }
    const std::string key = lower(ns.name);
    if (namespaces_.count(key) != 0) {
        load_failure(ns.name, "namespace defined twice");
    }

    Namespace compiled;
    for (const auto& [predicate, weight] : ns.predicate_weights) {
        if (!valid_identifier(predicate)) {
            load_failure(ns.name, "invalid predicate name '" + predicate + "'");
        }
        if (weight < 0 || weight > 100) {
            load_failure(ns.name, "weight of '" + predicate + "' outside [0,100]");
        }
        compiled.weights[lower(predicate)] = weight;
    }
    for (const auto& entry : ns.entries) {
        if (!valid_identifier(entry.predicate)) {
            load_failure(ns.name, "invalid predicate name '" + entry.predicate + "'");
        }
        if (entry.numerical_value) {
            if (const auto* n = std::get_if<Numeric>(&*entry.numerical_value);
                n != nullptr && (n->value < 0 || n->value > 100)) {
                load_failure(ns.name, "numerical value outside [0,100] for '" +
                                          entry_key(entry.predicate, entry.value) + "'");
            }
        }
        const auto [it, inserted] =
            compiled.values.emplace(entry_key(entry.predicate, entry.value), entry.numerical_value);
        if (!inserted) {
            load_failure(ns.name, "duplicate entry '" + it->first + "'");
        }
        // Predicates only referenced by entries take the default weight.
        compiled.weights.emplace(lower(entry.predicate), default_weight_);
    }
    compiled.source = std::move(ns);
    namespaces_.emplace(key, std::move(compiled));
}

const TaxonomyRegistry::Namespace* TaxonomyRegistry::find(std::string_view ns) const {
    const auto it = namespaces_.find(lower(ns));
    return it == namespaces_.end() ? nullptr : &it->second;
}

bool TaxonomyRegistry::has_namespace(std::string_view ns) const {
    return find(ns) != nullptr;
}

Resolution TaxonomyRegistry::resolve(const MachineTag& tag) const {
    const Namespace* ns = find(tag.ns);
    if (ns == nullptr) {
        return NotFound{};
    }
    const auto it = ns->values.find(entry_key(tag.predicate, tag.value));
    if (it == ns->values.end() || !it->second) {
        return NotFound{};
    }
    return std::visit([](auto v) -> Resolution { return v; }, *it->second);
}

int TaxonomyRegistry::predicate_weight(std::string_view ns, std::string_view predicate) const {
    const Namespace* found = find(ns);
    if (found == nullptr) {
        throw Error(ErrorCode::unknown_namespace, "unknown namespace '" + std::string(ns) + "'");
    }
    const auto it = found->weights.find(lower(predicate));
    return it == found->weights.end() ? default_weight_ : it->second;
}

TaxonomyNamespace parse_taxonomy_document(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("namespace") || !doc["namespace"].is_string()) {
        throw Error(ErrorCode::load_error, "taxonomy document lacks a 'namespace' string");
    }
    TaxonomyNamespace ns;
    ns.name = doc["namespace"].get<std::string>();

    if (doc.contains("predicates")) {
        if (!doc["predicates"].is_array()) {
            load_failure(ns.name, "'predicates' must be a list");
        }
        for (const auto& p : doc["predicates"]) {
            if (!p.is_object() || !p.contains("name") || !p["name"].is_string()) {
                load_failure(ns.name, "predicate without a 'name'");
            }
            const auto name = p["name"].get<std::string>();
            if (p.contains("weight")) {
                const auto& w = p["weight"];
                if (!w.is_number_integer()) {
                    load_failure(ns.name, "weight of '" + name + "' must be an integer");
                }
                ns.predicate_weights[name] = w.get<int>();
            }
        }
    }

    if (doc.contains("values")) {
        if (!doc["values"].is_array()) {
            load_failure(ns.name, "'values' must be a list");
        }
        for (const auto& v : doc["values"]) {
            if (!v.is_object() || !v.contains("predicate") || !v["predicate"].is_string()) {
                load_failure(ns.name, "value without a 'predicate'");
            }
            TaxonomyEntry entry;
            entry.predicate = v["predicate"].get<std::string>();
            if (v.contains("entry") && !v["entry"].is_null()) {
                if (!v["entry"].is_string()) {
                    load_failure(ns.name, "'entry' must be a string");
                }
                entry.value = v["entry"].get<std::string>();
            }
            if (v.contains("numerical_value") && !v["numerical_value"].is_null()) {
                const auto& nv = v["numerical_value"];
                if (nv.is_string() && nv.get<std::string>() == "undefined") {
                    entry.numerical_value = Undefined{};
                } else if (nv.is_number_integer()) {
                    const auto n = nv.get<long long>();
                    if (n < 0 || n > 100) {
                        load_failure(ns.name, "numerical value " + std::to_string(n) +
                                                  " is not on the 0-100 scale");
                    }
                    entry.numerical_value = Numeric{static_cast<int>(n)};
                } else {
                    load_failure(ns.name, "numerical_value must be an integer in [0,100] or "
                                          "\"undefined\"");
                }
            }
            ns.entries.push_back(std::move(entry));
        }
    }
    return ns;
}

TaxonomyRegistry TaxonomyRegistry::load_directory(const std::filesystem::path& dir,
                                                  int default_predicate_weight) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error(ErrorCode::io_error, "taxonomy directory not found: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& item : fs::directory_iterator(dir)) {
        if (item.is_regular_file() && item.path().extension() == ".json") {
            files.push_back(item.path());
        }
    }
    std::sort(files.begin(), files.end());

    TaxonomyRegistry registry(default_predicate_weight);
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) {
            throw Error(ErrorCode::io_error, "cannot read " + file.string());
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::parse_error, file.string() + ": " + e.what());
        }
        try {
            registry.add(parse_taxonomy_document(doc));
        } catch (const Error& e) {
            throw Error(e.code(), file.string() + ": " + e.what());
        }
    }
    return registry;
}

nlohmann::json TaxonomyRegistry::to_json() const {
    nlohmann::json out;
    out["default_predicate_weight"] = default_weight_;
    auto& list = out["namespaces"] = nlohmann::json::array();
    for (const auto& [key, ns] : namespaces_) {
        nlohmann::json doc;
        doc["namespace"] = ns.source.name;
        doc["predicates"] = nlohmann::json::array();
        for (const auto& [name, weight] : ns.source.predicate_weights) {
            doc["predicates"].push_back({{"name", name}, {"weight", weight}});
        }
        doc["values"] = nlohmann::json::array();
        for (const auto& entry : ns.source.entries) {
            nlohmann::json v{{"predicate", entry.predicate}};
            if (entry.value) {
                v["entry"] = *entry.value;
            }
            if (entry.numerical_value) {
                if (const auto* n = std::get_if<Numeric>(&*entry.numerical_value)) {
                    v["numerical_value"] = n->value;
                } else {
                    v["numerical_value"] = "undefined";
                }
            }
            doc["values"].push_back(std::move(v));
        }
        list.push_back(std::move(doc));
    }
    return out;
}

TaxonomyRegistry TaxonomyRegistry::from_json(const nlohmann::json& doc) {
    TaxonomyRegistry registry(doc.value("default_predicate_weight", kDefaultPredicateWeight));
    for (const auto& ns : doc.at("namespaces")) {
        registry.add(parse_taxonomy_document(ns));
    }
    return registry;
}

Resolution resolve_numerical_value(const MachineTag& tag, const TaxonomyRegistry& registry) {
    return registry.resolve(tag);
}

int predicate_weight(std::string_view ns, std::string_view predicate,
                     const TaxonomyRegistry& registry) {
    return registry.predicate_weight(ns, predicate);
}

RegistryHandle::RegistryHandle(std::shared_ptr<const TaxonomyRegistry> initial)
    : current_(std::move(initial)) {}

std::shared_ptr<const TaxonomyRegistry> RegistryHandle::get() const {
    std::scoped_lock lock(mutex_);
    return current_;
}

void RegistryHandle::reload(std::shared_ptr<const TaxonomyRegistry> next) {
    std::scoped_lock lock(mutex_);
    current_ = std::move(next);
}

}  // namespace iocdecay
