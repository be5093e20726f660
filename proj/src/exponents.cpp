#include "hjlab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjlab/error.hpp"

namespace hjlab {

std::string_view to_string(Regime regime) {
    switch (regime) {
        case Regime::SinglePointRange: return "SinglePointRange";
        case Regime::CompleteExtinctionRange: return "CompleteExtinctionRange";
        case Regime::NoFiniteExtinction: return "NoFiniteExtinction";
        case Regime::OutOfScope: return "OutOfScope";
    }
    return "OutOfScope";
}

double critical_exponent(int N) { return 2.0 * N / (N + 1.0); }

ProblemParams validate_params(double N, double p, double q) {
    if (!std::isfinite(N) || N != std::floor(N)) {
        std::ostringstream msg;
        msg << "N = " << N << " is not an integer";
        throw Error(ErrorCode::NonIntegerDimension, msg.str());
    }
    if (N < 1.0) {
        std::ostringstream msg;
        msg << "N = " << N << " outside admissible interval [1, inf)";
        throw Error(ErrorCode::ExponentOutOfRange, msg.str());
    }
    const int dim = static_cast<int>(N);
    const double pc = critical_exponent(dim);
    if (!std::isfinite(p) || p <= 1.0 || p > 2.0) {
        std::ostringstream msg;
        msg << "p = " << p << " outside admissible interval (1, 2]";
        throw Error(ErrorCode::ExponentOutOfRange, msg.str());
    }
    if (p <= pc) {
        std::ostringstream msg;
        msg << "p = " << p << " <= p_c = " << pc << "; admissible interval (" << pc << ", 2]";
        throw Error(ErrorCode::ExponentOutOfRange, msg.str());
    }
    if (!std::isfinite(q) || q <= 0.0) {
        std::ostringstream msg;
        msg << "q = " << q << " must be > 0; admissible interval (0, inf)";
        throw Error(ErrorCode::ExponentOutOfRange, msg.str());
    }
    return ProblemParams{dim, p, q};
}

Regime classify_regime(const ProblemParams& params) {
    const auto [N, p, q] = params;
    if (N < 1 || !(p > 1.0) || p > 2.0 || !(q > 0.0)) return Regime::OutOfScope;
    if (p <= critical_exponent(N)) return Regime::OutOfScope;
    if (q < p - 1.0) return Regime::SinglePointRange;
    if (q < p / 2.0) return Regime::CompleteExtinctionRange;
    return Regime::NoFiniteExtinction;
}

DerivedConstants derive_constants(const ProblemParams& params) {
    const Regime regime = classify_regime(params);
    if (regime != Regime::SinglePointRange && regime != Regime::CompleteExtinctionRange) {
        throw Error(ErrorCode::RegimeMismatch,
                    "derived constants need 0 < q < p/2 and p_c < p <= 2, regime is " +
                        std::string(to_string(regime)));
    }
    const double N = params.N;
    const double p = params.p;
    const double q = params.q;

    DerivedConstants c;
    c.critical_p = critical_exponent(params.N);

    c.selfsim_amplitude_exponent = (p - q) / (p - 2.0 * q);
    c.selfsim_space_exponent = (q - p + 1.0) / (p - 2.0 * q);
    c.selfsim_profile_decay = q / (2.0 * (1.0 - q));
    c.decay_threshold = q / (1.0 - q);
    c.rate_lower = 1.0 / (1.0 - q);
    if (p == 2.0) c.rate_upper_p2 = (2.0 - q) / (2.0 - 2.0 * q);

    if (regime != Regime::SinglePointRange) return c;

    const double gap = p - 1.0 - q;  // > 0 in this range
    const double power = (p - q) / gap;

    c.barrier_amplitude = (gap / (p - q)) * std::pow((p - 1.0) / gap + N - 1.0, -1.0 / gap);
    c.barrier_exponent = power;
    c.inner_support_exponent = gap / ((p - q) * (1.0 - q));
    c.outer_support_exponent = p * gap * gap / (2.0 * (p - q) * (p - 2.0 * q));

    c.shrink_power = power;
    c.shrink_tail_min = q / (power * (1.0 - q));
    const double denom = power * (1.0 - q) - 1.0;
    c.shrink_tail_max = denom > 0.0 ? std::min(q / denom, 1.0) : 1.0;

    const double theta = p / (p - 1.0);
    const double decay = q * (p - 1.0) / (p * (1.0 - q));
    c.tail_sub_power = theta;
    c.tail_sub_decay = decay;
    c.tail_sub_slope_max = std::pow(2.0 * (1.0 - q) * std::pow(decay * theta, q), -theta / q);

    c.j_radial_power = N + q / gap;
    c.j_field_power = (p - 1.0) / (p - q);
    return c;
}

double require(const std::optional<double>& value, std::string_view name) {
    if (!value) {
        throw Error(ErrorCode::RegimeMismatch,
                    std::string(name) + " is undefined for this (N, p, q)");
    }
    return *value;
}

nlohmann::json to_json(const ProblemParams& params) {
    return {{"N", params.N}, {"p", params.p}, {"q", params.q}};
}

nlohmann::json to_json(const DerivedConstants& c) {
    nlohmann::json j;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    j["critical_p"] = c.critical_p;
    put("barrier_amplitude", c.barrier_amplitude);
    put("barrier_exponent", c.barrier_exponent);
    put("inner_support_exponent", c.inner_support_exponent);
    put("outer_support_exponent", c.outer_support_exponent);
    put("selfsim_amplitude_exponent", c.selfsim_amplitude_exponent);
    put("selfsim_space_exponent", c.selfsim_space_exponent);
    put("shrink_power", c.shrink_power);
    put("shrink_tail_min", c.shrink_tail_min);
    put("shrink_tail_max", c.shrink_tail_max);
    put("tail_sub_power", c.tail_sub_power);
    put("tail_sub_decay", c.tail_sub_decay);
    put("tail_sub_slope_max", c.tail_sub_slope_max);
    put("selfsim_profile_decay", c.selfsim_profile_decay);
    put("decay_threshold", c.decay_threshold);
    put("rate_lower", c.rate_lower);
    put("rate_upper_p2", c.rate_upper_p2);
    put("j_radial_power", c.j_radial_power);
    put("j_field_power", c.j_field_power);
    return j;
}

}  // namespace hjlab
