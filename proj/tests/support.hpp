#pragma once

// Shared fixtures and independent oracles for the test binaries. The oracles
// deliberately avoid the library's code paths.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace testsupport {

inline std::filesystem::path data_dir() { return IOCDECAY_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return IOCDECAY_FIXTURE_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("iocdecay-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Closed-form decay curves in long double, written directly from the formulas.
namespace oracle {

inline long double linear(long double base, long double delta, long double t) {
    const long double s = base - delta * t;
    return s < 0 ? 0.0L : s;
}

inline long double exponential(long double base, long double delta, long double t) {
    return base * expl(-delta * t);
}

// (t/tau)^(1/delta) computed as exp(log(t/tau) / delta).
inline long double polynomial(long double base, long double tau, long double delta, long double t) {
    if (t <= 0) return base;
    if (t >= tau) return 0.0L;
    return base * (1.0L - expl(logl(t / tau) / delta));
}

struct TagContribution {
    std::string group;  // namespace
    int value = 0;      // 0..100
    int weight = 0;     // 0..100
};

// Literal double sum over groups and the tags of each group.
inline std::pair<bool, long double> tags_double_sum(const std::vector<TagContribution>& tags) {
    std::map<std::string, std::vector<TagContribution>> groups;
    for (const auto& t : tags) groups[t.group].push_back(t);
    long double num = 0;
    long double den = 0;
    for (const auto& [group, members] : groups) {
        for (const auto& t : members) {
            num += static_cast<long double>(t.value) * t.weight;
            den += 100.0L * t.weight;
        }
    }
    if (den == 0) return {false, 0.0L};
    return {true, num / den};
}

// Nearest-rank quantile by enumeration: the smallest sample x such that at
// least q*n samples are <= x.
inline double nearest_rank(const std::vector<double>& samples, double q) {
    double best = INFINITY;
    for (double candidate : samples) {
        std::size_t at_most = 0;
        for (double s : samples) {
            if (s <= candidate) ++at_most;
        }
        if (static_cast<double>(at_most) >= q * static_cast<double>(samples.size()) - 1e-9 &&
            candidate < best) {
            best = candidate;
        }
    }
    return best;
}

}  // namespace oracle

// Values frozen from 40-digit evaluations (mpmath) of the closed forms.
namespace frozen {
inline constexpr double kExample2At48Days = 41.976104275044115;   // 80(1-0.8^(1/0.3))
inline constexpr double kExample1At48Hours = 71.79883856328551;  // 80(1-(48/168)^(1/0.55))
inline constexpr double kExample1HalfLifeHours = 114.74738156736922;  // 168*0.5^0.55
inline constexpr double kExample2HalfLifeDays = 48.735143781374134;   // 60*0.5^0.3
inline constexpr double kExample1DirectHalfLifeHours = 47.64112593220943;  // 168*0.5^(1/0.55)
inline constexpr double kExp100At1 = 36.787944117144235;  // 100/e
}  // namespace frozen

// Minimal JSON-schema subset: type, required, properties, items, enum.
inline bool conforms(const nlohmann::json& value, const nlohmann::json& schema, std::string& why,
                     const std::string& path = "$") {
    if (schema.contains("type")) {
        std::vector<std::string> types;
        if (schema["type"].is_array()) {
            for (const auto& t : schema["type"]) types.push_back(t.get<std::string>());
        } else {
            types.push_back(schema["type"].get<std::string>());
        }
        bool ok = false;
        for (const auto& t : types) {
            ok = ok || (t == "object" && value.is_object()) || (t == "array" && value.is_array()) ||
                 (t == "string" && value.is_string()) || (t == "number" && value.is_number()) ||
                 (t == "integer" && value.is_number_integer()) ||
                 (t == "boolean" && value.is_boolean()) || (t == "null" && value.is_null());
        }
        if (!ok) {
            why = path + ": type mismatch";
            return false;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == value;
        if (!found) {
            why = path + ": not in enum";
            return false;
        }
    }
    if (value.is_object()) {
        for (const auto& r : schema.value("required", nlohmann::json::array())) {
            if (!value.contains(r.get<std::string>())) {
                why = path + ": missing " + r.get<std::string>();
                return false;
            }
        }
        if (schema.contains("properties")) {
            for (const auto& [key, sub] : schema["properties"].items()) {
                if (value.contains(key) && !conforms(value[key], sub, why, path + "." + key)) {
                    return false;
                }
            }
            if (schema.value("additionalProperties", true) == false) {
                for (const auto& [key, v] : value.items()) {
                    if (!schema["properties"].contains(key)) {
                        why = path + ": unexpected " + key;
                        return false;
                    }
                }
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (!conforms(value[i], schema["items"], why, path + "[" + std::to_string(i) + "]")) {
                return false;
            }
        }
    }
    return true;
}

inline nlohmann::json load_schema(const std::string& name) {
    return nlohmann::json::parse(read_text(std::filesystem::path(IOCDECAY_SCHEMA_DIR) / name));
}

}  // namespace testsupport
