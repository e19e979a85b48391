#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "properties.hpp"
#include "support.hpp"

using namespace iocdecay;
using props::Gen;
using props::Outcome;
using props::run_property;

namespace {

void require_ok(const Outcome& outcome) {
    INFO(outcome.name << ": " << outcome.counterexample);
    CHECK(outcome.ok());
}

}  // namespace

TEST_CASE("acceptance properties") {
    for (const auto& outcome : props::acceptance_properties()) {
        require_ok(outcome);
    }
}

TEST_CASE("tags_score is invariant under permutation") {
    require_ok(run_property("permutation", 2000, 11, [](Gen& gen, std::ostream& why) {
        const auto registry = props::random_registry(gen);
        const auto resolved = resolve_tag_conflicts(props::random_tags(gen, 12));
        auto shuffled = resolved;
        std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());
        if (tags_score(resolved, registry) != tags_score(shuffled, registry)) {
            why << "order changed the score";
            return false;
        }
        return true;
    }));
}

TEST_CASE("tags_score is monotone in contributing values") {
    require_ok(run_property("monotone", 2000, 12, [](Gen& gen, std::ostream& why) {
        // One namespace, fixed weights; raise one contributing value.
        TaxonomyNamespace ns{"m", {}, {}};
        std::vector<MachineTag> tags;
        std::vector<int> values;
        const int n = gen.integer(1, 6);
        for (int i = 0; i < n; ++i) {
            const std::string p = "p" + std::to_string(i);
            ns.predicate_weights[p] = gen.integer(0, 100);
            values.push_back(gen.integer(0, 100));
            tags.push_back(MachineTag{"m", p, "x"});
        }
        auto build = [&](const std::vector<int>& vals) {
            TaxonomyRegistry r;
            TaxonomyNamespace copy = ns;
            for (int i = 0; i < n; ++i) copy.entries.push_back({"p" + std::to_string(i), "x", Numeric{vals[i]}});
            r.add(copy);
            return r;
        };
        const auto before = tags_score(tags, build(values));
        const int k = gen.integer(0, n - 1);
        values[k] = gen.integer(values[k], 100);
        const auto after = tags_score(tags, build(values));
        if (before.has_value() != after.has_value() || (before && *after < *before)) {
            why << "raising a value lowered the score";
            return false;
        }
        return true;
    }));
}

TEST_CASE("extreme weight_x settings") {
    require_ok(run_property("weight_x extremes", 5000, 13, [](Gen& gen, std::ostream& why) {
        const double tags = gen.real(0, 1);
        const double sc1 = gen.real(0, 1);
        const double sc2 = gen.real(0, 1);
        const auto all_tags = ScoringConfig::with_weight_x(100);
        const auto all_source = ScoringConfig::with_weight_x(0);
        if (base_score(tags, {"a", sc1}, all_tags) != base_score(tags, {"b", sc2}, all_tags)) {
            why << "weight_x=100 depends on source confidence";
            return false;
        }
        if (base_score(tags, {"a", sc1}, all_source) != 100.0 * sc1) {
            why << "weight_x=0 is not 100*sc";
            return false;
        }
        return true;
    }));
}

TEST_CASE("decay matches the closed-form oracles") {
    require_ok(run_property("oracle agreement", 5000, 14, [](Gen& gen, std::ostream& why) {
        const double base = gen.real(0, 100);
        const double delta = gen.real(0.05, 5);
        const double tau = gen.real(1, 500);
        const double t = gen.real(0, 600);
        const double lin = score_linear(base, delta, t);
        const double exp = score_exponential(base, std::min(delta, 1.0), t);
        const double poly = score_polynomial(base, tau, delta, t);
        namespace o = testsupport::oracle;
        const double tol = 1e-9;
        if (std::abs(lin - static_cast<double>(o::linear(base, delta, t))) > tol ||
            std::abs(exp - static_cast<double>(o::exponential(base, std::min(delta, 1.0), t))) > tol ||
            std::abs(poly - static_cast<double>(o::polynomial(base, tau, delta, t))) > tol) {
            why << "base=" << base << " delta=" << delta << " tau=" << tau << " t=" << t;
            return false;
        }
        return true;
    }));
}

TEST_CASE("polynomial score reaches zero at tau for every rate") {
    for (double delta : {0.1, 0.3, 0.55, 1.0, 2.0, 3.0}) {
        for (auto convention : {ExponentConvention::reciprocal, ExponentConvention::direct}) {
            CHECK(score_polynomial(80, 168, delta, 168, convention) == 0.0);
        }
    }
}

TEST_CASE("polynomial curvature follows the decay rate") {
    require_ok(run_property("curvature", 2000, 15, [](Gen& gen, std::ostream& why) {
        const bool slow_start = gen.coin();
        const double delta = slow_start ? gen.real(0.1, 0.9) : gen.real(1.2, 3.0);
        const double tau = gen.real(10, 500);
        const auto curve = emit_curve(80, DecayModel::polynomial(tau, delta), tau, tau / 50);
        for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
            const double second = curve[i - 1].score - 2 * curve[i].score + curve[i + 1].score;
            if (slow_start ? !(second < 0) : !(second > 0)) {
                why << "delta=" << delta << " i=" << i << " second difference " << second;
                return false;
            }
        }
        return true;
    }));
}

TEST_CASE("linear zero crossing and exponential positivity") {
    require_ok(run_property("linear crossing", 5000, 16, [](Gen& gen, std::ostream& why) {
        const double base = gen.real(1, 100);
        const double delta = gen.real(0.01, 10);
        const double crossing = base / delta;
        if (score_linear(base, delta, crossing) != 0.0 ||
            !(score_linear(base, delta, crossing * (1 - 1e-9)) > 0.0)) {
            why << "base=" << base << " delta=" << delta;
            return false;
        }
        const double t = gen.real(0, 1e7);
        if (!(score_exponential(base, gen.real(0.001, 5), t) > 0.0)) {
            why << "exponential reached zero at t=" << t;
            return false;
        }
        return true;
    }));
}

TEST_CASE("scores never rise between positive sightings") {
    const TaxonomyRegistry registry;
    require_ok(run_property("no hidden resets", 2000, 17, [&](Gen& gen, std::ostream& why) {
        const Timestamp created = parse_rfc3339("2019-06-01T00:00:00Z");
        const Attribute attr{"a", "c", "t", "v", "s", created, {}};
        const ScoringInputs inputs{registry, {"s", gen.real(0, 1)}, ScoringConfig{}};
        const auto model = gen.model();
        SightingState state;
        Timestamp t = created;
        if (gen.coin()) {
            state = record_sighting(state, attr, {"a", t + std::chrono::hours(gen.integer(1, 500)),
                                                  SightingKind::expiration, "s"});
        }
        double previous = 101;
        for (int i = 0; i < 30; ++i) {
            const auto r = current_score(attr, state, model, inputs, t);
            if (r.current_score > previous) {
                why << model.variant_name() << " rose at step " << i;
                return false;
            }
            previous = r.current_score;
            t += std::chrono::minutes(gen.integer(0, 3000));
        }
        return true;
    }));
}

TEST_CASE("tau_override takes precedence over the model tau") {
    require_ok(run_property("override precedence", 2000, 18, [](Gen& gen, std::ostream& why) {
        const TaxonomyRegistry registry;
        const Timestamp created = parse_rfc3339("2019-06-01T00:00:00Z");
        const Attribute attr{"a", "c", "t", "v", "s", created, {}};
        const ScoringInputs inputs{registry, {"s", 0.8}, ScoringConfig{}};
        const auto model = DecayModel::polynomial(gen.real(1, 1000), gen.real(0.1, 3));
        const int override_hours = gen.integer(1, 2000);
        const auto state = record_sighting(
            {}, attr, {"a", created + std::chrono::hours(override_hours), SightingKind::expiration, "s"});
        const auto now = created + std::chrono::hours(gen.integer(0, 3000));
        const double expected = score_polynomial(
            80, override_hours, model.delta(),
            ElapsedTime::between(created, now, TimeUnit::hours).value);
        const auto r = current_score(attr, state, model, inputs, now);
        if (std::abs(r.current_score - expected) > 1e-9) {
            why << "override " << override_hours << "h ignored";
            return false;
        }
        return true;
    }));
}

TEST_CASE("estimate_tau under time shift and dilation") {
    require_ok(run_property("shift/dilation", 2000, 19, [](Gen& gen, std::ostream& why) {
        const Timestamp origin = parse_rfc3339("2020-01-01T00:00:00Z");
        std::vector<Sighting> history;
        std::int64_t offset = 0;
        for (int i = 0, n = gen.integer(3, 25); i < n; ++i) {
            offset += gen.integer(1, 100000);
            history.push_back({"a", origin + std::chrono::seconds(offset), SightingKind::positive, "s"});
        }
        const auto shift = std::chrono::seconds(gen.integer(-1000000, 1000000));
        const int factor = gen.integer(2, 7);
        auto shifted = history;
        auto dilated = history;
        for (auto& s : shifted) s.timestamp += shift;
        for (auto& s : dilated) s.timestamp = origin + (s.timestamp - origin) * factor;
        const TauEstimator est{gen.real(0.5, 4), gen.real(0.05, 1.0)};
        const double base = estimate_tau(history, est, TimeUnit::seconds).value;
        if (estimate_tau(shifted, est, TimeUnit::seconds).value != base) {
            why << "shift changed tau";
            return false;
        }
        if (std::abs(estimate_tau(dilated, est, TimeUnit::seconds).value - factor * base) > 1e-6 * base) {
            why << "dilation by " << factor << " did not scale tau";
            return false;
        }
        return true;
    }));
}
