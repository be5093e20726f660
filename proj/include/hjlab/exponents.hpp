#pragma once

#include <optional>
#include <string_view>

#include <json.hpp>

namespace hjlab {

/// Dimension and exponents of  u_t - div(|u_r|^{p-2} u_r) + |u_r|^q = 0.
struct ProblemParams {
    int N = 1;
    double p = 2.0;
    double q = 0.5;
};

enum class Regime {
    SinglePointRange,         // 0 < q < p-1
    CompleteExtinctionRange,  // p-1 <= q < p/2, empty for p = 2
    NoFiniteExtinction,       // q >= p/2
    OutOfScope,
};

std::string_view to_string(Regime regime);

/// 2N/(N+1): lower end of the admissible diffusion exponents.
double critical_exponent(int N);

/// Throws Error(NonIntegerDimension | ExponentOutOfRange) naming the violated bound.
ProblemParams validate_params(double N, double p, double q);

Regime classify_regime(const ProblemParams& params);

/// Closed-form constants of the problem. A field is empty when the regime
/// does not define it (for instance the barrier needs q < p-1).
struct DerivedConstants {
    double critical_p = 0.0;

    // Stationary barrier  amplitude * r^exponent  (exponent also used by the
    // shrinking supersolution as its outer power).
    std::optional<double> barrier_amplitude;
    std::optional<double> barrier_exponent;

    // Positivity-set inclusion exponents: inner ball ~ tau^inner, outer ~ tau^outer.
    std::optional<double> inner_support_exponent;
    std::optional<double> outer_support_exponent;

    // Self-similar scaling  tau^amplitude f(r tau^space).
    std::optional<double> selfsim_amplitude_exponent;
    std::optional<double> selfsim_space_exponent;

    // Shrinking supersolution: outer power and admissible tail-exponent interval.
    std::optional<double> shrink_power;
    std::optional<double> shrink_tail_min;
    std::optional<double> shrink_tail_max;

    // Tail subsolution (T-t)^{1/(1-q)} (a + b r^power)^{-decay}, b < slope_max.
    std::optional<double> tail_sub_power;
    std::optional<double> tail_sub_decay;
    std::optional<double> tail_sub_slope_max;

    // Self-similar supersolution profile A (1+y^2)^{-decay}.
    std::optional<double> selfsim_profile_decay;

    std::optional<double> decay_threshold;  // q/(1-q)
    std::optional<double> rate_lower;       // 1/(1-q)
    std::optional<double> rate_upper_p2;    // (2-q)/(2-2q)

    // Gradient lower-bound functional  r^{N-1}|u_r|^{p-2}u_r + delta r^radial u^field.
    std::optional<double> j_radial_power;
    std::optional<double> j_field_power;
};

/// Requires SinglePointRange or CompleteExtinctionRange, else Error(RegimeMismatch).
DerivedConstants derive_constants(const ProblemParams& params);

/// Unwraps an optional constant or throws Error(RegimeMismatch) naming it.
double require(const std::optional<double>& value, std::string_view name);

nlohmann::json to_json(const ProblemParams& params);
nlohmann::json to_json(const DerivedConstants& constants);

}  // namespace hjlab
