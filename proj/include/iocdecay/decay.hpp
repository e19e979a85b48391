#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "iocdecay/time.hpp"

namespace iocdecay {

// How the polynomial model's decay rate enters the exponent of t/tau.
// reciprocal: (t/tau)^(1/delta), the published form. direct: (t/tau)^delta.
enum class ExponentConvention { reciprocal, direct };

struct LinearDecay {
    double delta = 0.0;
};

struct ExponentialDecay {
    double delta = 0.0;
};

struct PolynomialDecay {
    double tau = 0.0;
    double delta = 0.0;
    ExponentConvention convention = ExponentConvention::reciprocal;
};

// Rates and end times are expressed per `unit`.
struct DecayModel {
    std::variant<LinearDecay, ExponentialDecay, PolynomialDecay> shape;
    TimeUnit unit = TimeUnit::hours;

    static DecayModel linear(double delta, TimeUnit unit = TimeUnit::hours);
    static DecayModel exponential(double delta, TimeUnit unit = TimeUnit::hours);
    static DecayModel polynomial(double tau, double delta, TimeUnit unit = TimeUnit::hours,
                                 ExponentConvention convention = ExponentConvention::reciprocal);

    const char* variant_name() const noexcept;
    double delta() const noexcept;
    std::optional<double> tau() const noexcept;

    // Throws Error{invalid_parameter} unless delta > 0 and tau > 0.
    void validate() const;
};

// t is measured in the same unit as delta (and tau).
double score_linear(double base, double delta, double t);
double score_exponential(double base, double delta, double t);
double score_polynomial(double base, double tau, double delta, double t,
                        ExponentConvention convention = ExponentConvention::reciprocal);

struct DecayedScore {
    double base_score = 0.0;
    double current_score = 0.0;
    bool expired = false;
};

DecayedScore evaluate(double base, const DecayModel& model, ElapsedTime t);

// Elapsed time at which the score reaches base/2. Linear needs the base score
// and yields nullopt without it.
std::optional<ElapsedTime> half_life(const DecayModel& model,
                                     std::optional<double> base = std::nullopt);

struct CurvePoint {
    double t = 0.0;
    double score = 0.0;
};

// floor(horizon/step) + 1 samples at t = i * step, in the model's unit.
std::vector<CurvePoint> emit_curve(double base, const DecayModel& model, double horizon,
                                   double step);

// Header `t,unit,score`; each row `<t>,<unit>,<score with 6 decimals>`.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points, TimeUnit unit);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

nlohmann::json to_json(const DecayModel& model);
DecayModel decay_model_from_json(const nlohmann::json& doc);

// Attribute type -> decay model, with a fallback for unlisted types.
class ModelTable {
public:
    ModelTable();  // seeded with the ip-dest and file-hash defaults

    void set(const std::string& attribute_type, DecayModel model);
    void set_fallback(DecayModel model);

    const DecayModel& resolve(const std::string& attribute_type) const;
    bool contains(const std::string& attribute_type) const;
    const DecayModel& fallback() const noexcept { return fallback_; }

    nlohmann::json to_json() const;
    // Entries in `doc` override (or extend) the seeded defaults; "default" sets the fallback.
    static ModelTable from_json(const nlohmann::json& doc);

private:
    std::map<std::string, DecayModel> models_;
    DecayModel fallback_;
};

}  // namespace iocdecay
