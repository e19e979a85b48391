#pragma once

// Randomized invariant checks shared by test_properties and the acceptance
// suite. Each property runs a fixed number of cases from a fixed seed and
// reports the first counterexample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iocdecay/decay.hpp"
#include "iocdecay/lifecycle.hpp"
#include "iocdecay/scoring.hpp"
#include "iocdecay/taxonomy.hpp"

namespace props {

using namespace iocdecay;

inline constexpr std::uint64_t kSeed = 0x10C0FFEEULL;
inline constexpr int kCases = 10000;

struct Outcome {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string counterexample;

    bool ok() const { return failures == 0 && cases > 0; }
};

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }
    std::mt19937_64& engine() { return rng_; }

    DecayModel model() {
        const TimeUnit unit = static_cast<TimeUnit>(integer(0, 2));
        switch (integer(0, 2)) {
            case 0: return DecayModel::linear(real(0.01, 10), unit);
            case 1: return DecayModel::exponential(real(0.001, 2), unit);
            default:
                return DecayModel::polynomial(real(1, 500), real(0.05, 5), unit,
                                              coin() ? ExponentConvention::reciprocal
                                                     : ExponentConvention::direct);
        }
    }

private:
    std::mt19937_64 rng_;
};

template <typename Body>
Outcome run_property(const std::string& name, int cases, std::uint64_t salt, Body body) {
    Outcome outcome{name, 0, 0, {}};
    Gen gen(kSeed ^ (salt * 0x9E3779B97F4A7C15ULL));
    for (int i = 0; i < cases; ++i) {
        std::ostringstream why;
        ++outcome.cases;
        if (!body(gen, why)) {
            if (outcome.failures++ == 0) {
                outcome.counterexample = "case " + std::to_string(i) + ": " + why.str();
            }
        }
    }
    return outcome;
}

// Random registry: namespaces p0..p3, each with predicates q0..q3 and entries
// v0..v7 that are numeric, Undefined, or without a numerical value.
inline TaxonomyRegistry random_registry(Gen& gen) {
    TaxonomyRegistry registry(gen.integer(0, 100));
    for (int n = 0; n < 4; ++n) {
        TaxonomyNamespace ns;
        ns.name = "p" + std::to_string(n);
        for (int p = 0; p < 4; ++p) {
            const std::string predicate = "q" + std::to_string(p);
            if (gen.coin()) ns.predicate_weights[predicate] = gen.integer(0, 100);
            for (int v = 0; v < 8; ++v) {
                TaxonomyEntry entry{predicate, "v" + std::to_string(v), std::nullopt};
                const int kind = gen.integer(0, 9);
                if (kind < 7) entry.numerical_value = Numeric{gen.integer(0, 100)};
                else if (kind < 9) entry.numerical_value = Undefined{};
                ns.entries.push_back(entry);
            }
        }
        registry.add(ns);
    }
    return registry;
}

inline MachineTag random_tag(Gen& gen) {
    // Namespace p4 is unknown to the registry; v8 is never defined.
    return MachineTag{"p" + std::to_string(gen.integer(0, 4)), "q" + std::to_string(gen.integer(0, 3)),
                      "v" + std::to_string(gen.integer(0, 8))};
}

inline std::vector<MachineTag> random_tags(Gen& gen, int max_count) {
    std::vector<MachineTag> tags(gen.integer(0, max_count));
    for (auto& t : tags) t = random_tag(gen);
    return tags;
}

inline Outcome tags_score_bounded(int cases = kCases) {
    return run_property("tags_score in [0,1]", cases, 1, [](Gen& gen, std::ostream& why) {
        const auto registry = random_registry(gen);
        const auto tags = random_tags(gen, 12);
        const auto score = tags_score(tags, registry);
        if (score && !(*score >= 0.0 && *score <= 1.0)) {
            why << "tags_score=" << *score;
            return false;
        }
        return true;
    });
}

inline Outcome base_score_bounded(int cases = kCases) {
    return run_property("base_score in [0,100]", cases, 2, [](Gen& gen, std::ostream& why) {
        const TagsScore tags = gen.integer(0, 4) == 0 ? TagsScore{} : TagsScore{gen.real(0, 1)};
        const double sc = gen.integer(0, 9) == 0 ? static_cast<double>(gen.integer(0, 1)) : gen.real(0, 1);
        const auto config = ScoringConfig::with_weight_x(gen.integer(0, 100));
        const double b = base_score(tags, SourceProfile{"s", sc}, config);
        if (!(b >= 0.0 && b <= 100.0)) {
            why << "base_score=" << b;
            return false;
        }
        return true;
    });
}

inline Outcome decay_monotone_from_base(int cases = kCases) {
    return run_property("decay non-increasing in t, base at t=0", cases, 3,
                        [](Gen& gen, std::ostream& why) {
        const auto model = gen.model();
        const double base = gen.real(0, 100);
        const double at_zero = evaluate(base, model, ElapsedTime{0, model.unit}).current_score;
        if (at_zero != base) {
            why << model.variant_name() << " score(0)=" << at_zero << " base=" << base;
            return false;
        }
        double t = 0;
        double previous = at_zero;
        for (int step = 0; step < 20; ++step) {
            t += gen.real(0, 30);
            const double s = evaluate(base, model, ElapsedTime{t, model.unit}).current_score;
            if (s > previous || s < 0.0 || s > base) {
                why << model.variant_name() << " delta=" << model.delta() << " t=" << t << " s=" << s
                    << " prev=" << previous;
                return false;
            }
            previous = s;
        }
        return true;
    });
}

inline Outcome polynomial_decreasing_in_delta(int cases = kCases) {
    return run_property("polynomial strictly decreasing in delta", cases, 4,
                        [](Gen& gen, std::ostream& why) {
        const double base = gen.real(1, 100);
        const double tau = gen.real(1, 1000);
        const double t = tau * gen.real(0.01, 0.99);
        const double d1 = gen.real(0.1, 3.0);
        const double d2 = d1 + gen.real(0.01, 2.0);
        const double s1 = score_polynomial(base, tau, d1, t);
        const double s2 = score_polynomial(base, tau, d2, t);
        if (!(s2 < s1)) {
            why << "tau=" << tau << " t=" << t << " d1=" << d1 << " s1=" << s1 << " d2=" << d2
                << " s2=" << s2;
            return false;
        }
        return true;
    });
}

inline Outcome ignored_tags_are_neutral(int cases = kCases) {
    return run_property("Undefined/NotFound tags leave tags_score unchanged", cases, 5,
                        [](Gen& gen, std::ostream& why) {
        const auto registry = random_registry(gen);
        auto tags = random_tags(gen, 8);
        const auto before = tags_score(tags, registry);
        // Draw tags until one does not resolve to a number, then insert it anywhere.
        for (int tries = 0; tries < 200; ++tries) {
            MachineTag extra = random_tag(gen);
            if (std::holds_alternative<Numeric>(registry.resolve(extra))) continue;
            tags.insert(tags.begin() + gen.integer(0, static_cast<int>(tags.size())), extra);
            const auto after = tags_score(tags, registry);
            if (before != after) {
                why << "adding " << to_string(extra) << " changed tags_score";
                return false;
            }
            return true;
        }
        return true;
    });
}

inline Outcome sighting_reset_restores_base(int cases = kCases) {
    static const TaxonomyRegistry registry = [] {
        TaxonomyRegistry r;
        TaxonomyNamespace ns{"conf", {{"level", 60}}, {}};
        for (int v = 0; v <= 100; v += 10) {
            ns.entries.push_back({"level", std::to_string(v), Numeric{v}});
        }
        r.add(ns);
        return r;
    }();
    return run_property("positive sighting restores base exactly", cases, 6,
                        [](Gen& gen, std::ostream& why) {
        const Timestamp created = parse_rfc3339("2018-01-01T00:00:00Z") +
                                  std::chrono::seconds(gen.integer(0, 10'000'000));
        Attribute attr{"a", "c", "t", "v", "s", created, {}};
        if (gen.coin()) {
            attr.tags.push_back(MachineTag{"conf", "level", std::to_string(10 * gen.integer(0, 10))});
        }
        const ScoringInputs inputs{registry, SourceProfile{"s", gen.real(0, 1)},
                                   ScoringConfig::with_weight_x(gen.integer(0, 100))};
        const auto model = gen.model();

        SightingState state;
        Timestamp t = created;
        for (int i = 0, n = gen.integer(1, 5); i < n; ++i) {
            t += std::chrono::seconds(gen.integer(0, 3'000'000));
            state = record_sighting(state, attr, Sighting{"a", t, SightingKind::positive, "s"});
            const auto r = current_score(attr, state, model, inputs, t);
            if (r.current_score != r.base_score || r.expired != (r.base_score == 0.0)) {
                why << model.variant_name() << " base=" << r.base_score << " current=" << r.current_score;
                return false;
            }
        }
        return true;
    });
}

inline std::vector<Outcome> acceptance_properties() {
    return {tags_score_bounded(),          base_score_bounded(),
            decay_monotone_from_base(),    polynomial_decreasing_in_delta(),
            ignored_tags_are_neutral(),    sighting_reset_restores_base()};
}

}  // namespace props
