#include "iocdecay/decay.hpp"

#include "iocdecay/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace iocdecay {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorCode::invalid_parameter, what);
    }
}

void check_common(double base, double delta, double t) {
    require(std::isfinite(base) && base >= 0.0 && base <= 100.0, "base score must lie in [0,100]");
    require(std::isfinite(delta) && delta > 0.0, "decay rate delta must be > 0");
    require(!std::isnan(t) && t >= 0.0, "elapsed time must be >= 0");
}

double polynomial_exponent(double delta, ExponentConvention convention) {
    return convention == ExponentConvention::reciprocal ? 1.0 / delta : delta;
}

const char* convention_name(ExponentConvention c) {
    return c == ExponentConvention::reciprocal ? "reciprocal" : "direct";
}

}  // namespace

DecayModel DecayModel::linear(double delta, TimeUnit unit) {
    return DecayModel{LinearDecay{delta}, unit};
}

DecayModel DecayModel::exponential(double delta, TimeUnit unit) {
    return DecayModel{ExponentialDecay{delta}, unit};
}

DecayModel DecayModel::polynomial(double tau, double delta, TimeUnit unit,
                                  ExponentConvention convention) {
    return DecayModel{PolynomialDecay{tau, delta, convention}, unit};
}

const char* DecayModel::variant_name() const noexcept {
    switch (shape.index()) {
        case 0: return "linear";
        case 1: return "exponential";
        default: return "polynomial";
    }
}

double DecayModel::delta() const noexcept {
    return std::visit([](const auto& s) { return s.delta; }, shape);
}

std::optional<double> DecayModel::tau() const noexcept {
    if (const auto* p = std::get_if<PolynomialDecay>(&shape)) {
        return p->tau;
    }
    return std::nullopt;
}

void DecayModel::validate() const {
    const double d = delta();
    require(std::isfinite(d) && d > 0.0, "decay rate delta must be > 0");
    if (const auto t = tau()) {
        require(std::isfinite(*t) && *t > 0.0, "end time tau must be > 0");
    }
}

double score_linear(double base, double delta, double t) {
    check_common(base, delta, t);
    if (delta > 0 && t >= base / delta) return 0.0;
    return std::max(0.0, base - delta * t);
}

double score_exponential(double base, double delta, double t) {
    check_common(base, delta, t);
    const double score = base * std::exp(-delta * t);
    // Underflow rounds up: the exponential model never reaches zero for finite t.
    if (score == 0.0 && base > 0.0 && std::isfinite(t)) {
        return std::numeric_limits<double>::denorm_min();
    }
    return score;
}

double score_polynomial(double base, double tau, double delta, double t,
                        ExponentConvention convention) {
    check_common(base, delta, t);
    require(std::isfinite(tau) && tau > 0.0, "end time tau must be > 0");
    if (t >= tau) {
        return 0.0;
    }
    const double fraction = std::pow(t / tau, polynomial_exponent(delta, convention));
    return std::max(0.0, base * (1.0 - fraction));
}

DecayedScore evaluate(double base, const DecayModel& model, ElapsedTime t) {
    model.validate();
    const double elapsed = t.to(model.unit).value;
    const double current = std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LinearDecay>) {
                return score_linear(base, s.delta, elapsed);
            } else if constexpr (std::is_same_v<S, ExponentialDecay>) {
                return score_exponential(base, s.delta, elapsed);
            } else {
                return score_polynomial(base, s.tau, s.delta, elapsed, s.convention);
            }
        },
        model.shape);
    return DecayedScore{base, current, current == 0.0};
}

std::optional<ElapsedTime> half_life(const DecayModel& model, std::optional<double> base) {
    model.validate();
    return std::visit(
        [&](const auto& s) -> std::optional<ElapsedTime> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LinearDecay>) {
                if (!base) {
                    return std::nullopt;
                }
                return ElapsedTime{*base / (2.0 * s.delta), model.unit};
            } else if constexpr (std::is_same_v<S, ExponentialDecay>) {
                return ElapsedTime{std::numbers::ln2 / s.delta, model.unit};
            } else {
                // (t/tau)^k = 1/2  =>  t = tau * 0.5^(1/k)
                const double k = polynomial_exponent(s.delta, s.convention);
                return ElapsedTime{s.tau * std::pow(0.5, 1.0 / k), model.unit};
            }
        },
        model.shape);
}

std::vector<CurvePoint> emit_curve(double base, const DecayModel& model, double horizon,
                                   double step) {
    require(std::isfinite(step) && step > 0.0, "curve step must be > 0");
    require(std::isfinite(horizon) && horizon >= step, "curve horizon must be >= step");
    model.validate();

    // Tolerate representation error in horizon/step (e.g. 0.3 / 0.1).
    const double ratio = horizon / step;
    const auto count = static_cast<std::size_t>(std::floor(ratio + ratio * 1e-12)) + 1;

    std::vector<CurvePoint> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * step;
        points.push_back({t, evaluate(base, model, ElapsedTime{t, model.unit}).current_score});
    }
    return points;
}

std::string format_number(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points, TimeUnit unit) {
    out << "t,unit,score\n";
    char score[64];
    for (const auto& p : points) {
        std::snprintf(score, sizeof(score), "%.6f", p.score);
        out << format_number(p.t) << ',' << unit_symbol(unit) << ',' << score << '\n';
    }
}

nlohmann::json to_json(const DecayModel& model) {
    nlohmann::json doc;
    doc["model"] = model.variant_name();
    doc["delta"] = model.delta();
    doc["unit"] = unit_symbol(model.unit);
    if (const auto* p = std::get_if<PolynomialDecay>(&model.shape)) {
        doc["tau"] = p->tau;
        doc["exponent_convention"] = convention_name(p->convention);
    }
    return doc;
}

DecayModel decay_model_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("model") || !doc["model"].is_string()) {
        throw Error(ErrorCode::invalid_parameter, "decay model needs a 'model' name");
    }
    const auto name = doc["model"].get<std::string>();
    const TimeUnit unit = parse_time_unit(doc.value("unit", std::string("h")));
    if (!doc.contains("delta") || !doc["delta"].is_number()) {
        throw Error(ErrorCode::invalid_parameter, "decay model needs a numeric 'delta'");
    }
    const double delta = doc["delta"].get<double>();

    DecayModel model;
    if (name == "linear") {
        model = DecayModel::linear(delta, unit);
    } else if (name == "exponential" || name == "exp") {
        model = DecayModel::exponential(delta, unit);
    } else if (name == "polynomial" || name == "poly") {
        if (!doc.contains("tau") || !doc["tau"].is_number()) {
            throw Error(ErrorCode::invalid_parameter, "polynomial model needs a numeric 'tau'");
        }
        const auto convention_text = doc.value("exponent_convention", std::string("reciprocal"));
        ExponentConvention convention;
        if (convention_text == "reciprocal") {
            convention = ExponentConvention::reciprocal;
        } else if (convention_text == "direct") {
            convention = ExponentConvention::direct;
        } else {
            throw Error(ErrorCode::invalid_parameter,
                        "exponent_convention must be 'reciprocal' or 'direct'");
        }
        model = DecayModel::polynomial(doc["tau"].get<double>(), delta, unit, convention);
    } else {
        throw Error(ErrorCode::invalid_parameter, "unknown decay model '" + name + "'");
    }
    model.validate();
    return model;
}

ModelTable::ModelTable()
    : fallback_(DecayModel::polynomial(30.0, 0.3, TimeUnit::days)) {
    models_["ip-dest"] = DecayModel::polynomial(168.0, 0.55, TimeUnit::hours);
    models_["file-hash"] = DecayModel::polynomial(60.0, 0.3, TimeUnit::days);
}

void ModelTable::set(const std::string& attribute_type, DecayModel model) {
    model.validate();
    models_[attribute_type] = std::move(model);
}

void ModelTable::set_fallback(DecayModel model) {
    model.validate();
    fallback_ = std::move(model);
}

const DecayModel& ModelTable::resolve(const std::string& attribute_type) const {
    const auto it = models_.find(attribute_type);
    return it == models_.end() ? fallback_ : it->second;
}

bool ModelTable::contains(const std::string& attribute_type) const {
    return models_.count(attribute_type) != 0;
}

nlohmann::json ModelTable::to_json() const {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [type, model] : models_) {
        doc[type] = iocdecay::to_json(model);
    }
    doc["default"] = iocdecay::to_json(fallback_);
    return doc;
}

ModelTable ModelTable::from_json(const nlohmann::json& doc) {
    ModelTable table;
    if (doc.is_null()) {
        return table;
    }
    if (!doc.is_object()) {
        throw Error(ErrorCode::invalid_parameter, "model table must be an object");
    }
    for (const auto& [type, model] : doc.items()) {
        if (type == "default") {
            table.set_fallback(decay_model_from_json(model));
        } else {
            table.set(type, decay_model_from_json(model));
        }
    }
    return table;
}

}  // namespace iocdecay
