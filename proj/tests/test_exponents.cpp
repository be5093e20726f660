#include <doctest.h>

#include <cmath>
#include <random>

#include "hjlab/error.hpp"
#include "hjlab/exponents.hpp"
#include "hjlab/sampling.hpp"

using namespace hjlab;

namespace {

ErrorCode code_of(double N, double p, double q) {
    try {
        validate_params(N, p, q);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a validation error");
    return ErrorCode::Config;
}

}  // namespace

TEST_CASE("validate_params accepts the reference triple") {
    const ProblemParams pp = validate_params(1, 2.0, 0.5);
    CHECK(pp.N == 1);
    CHECK(critical_exponent(pp.N) == 1.0);
}

TEST_CASE("validate_params reports the violated bound") {
    CHECK(code_of(2, 1.2, 0.1) == ErrorCode::ExponentOutOfRange);
    CHECK(code_of(1, 2.0, 0.0) == ErrorCode::ExponentOutOfRange);
    CHECK(code_of(1.5, 2.0, 0.5) == ErrorCode::NonIntegerDimension);
    CHECK(code_of(1, 2.5, 0.5) == ErrorCode::ExponentOutOfRange);
    try {
        validate_params(2, 1.2, 0.1);
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("p = 1.2") != std::string::npos);
        CHECK(msg.find("1.33333") != std::string::npos);
    }
}

TEST_CASE("classify_regime examples") {
    CHECK(classify_regime({1, 2.0, 0.5}) == Regime::SinglePointRange);
    CHECK(classify_regime({2, 1.8, 0.85}) == Regime::CompleteExtinctionRange);
    CHECK(classify_regime({2, 1.8, 0.95}) == Regime::NoFiniteExtinction);
    CHECK(classify_regime({2, 1.2, 0.1}) == Regime::OutOfScope);
}

TEST_CASE("complete-extinction range is empty at p = 2") {
    for (double q = 0.01; q < 2.0; q += 0.01) {
        CHECK(classify_regime({3, 2.0, q}) != Regime::CompleteExtinctionRange);
    }
}

TEST_CASE("regime tags partition the admissible square") {
    for (int N = 1; N <= 4; ++N) {
        const double pc = critical_exponent(N);
        for (int i = 1; i <= 40; ++i) {
            const double p = pc + (2.0 - pc) * i / 40.0;
            for (int j = 1; j < 200; ++j) {
                const double q = 2.0 * j / 200.0;
                const Regime r = classify_regime({N, p, q});
                const bool single = q < p - 1.0;
                const bool complete = !single && q < p / 2.0;
                const bool none = q >= p / 2.0;
                CHECK(static_cast<int>(single) + static_cast<int>(complete) + static_cast<int>(none) == 1);
                if (single) CHECK(r == Regime::SinglePointRange);
                if (complete) CHECK(r == Regime::CompleteExtinctionRange);
                if (none) CHECK(r == Regime::NoFiniteExtinction);
            }
        }
    }
}

TEST_CASE("derived constants for N=1, p=2, q=0.5") {
    const DerivedConstants c = derive_constants({1, 2.0, 0.5});
    // Hand evaluation: kappa = (1/3) * 2^{-2}, b0 = (2 * 0.5 * 1^{0.5})^{-4}.
    CHECK(*c.barrier_amplitude == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(*c.barrier_exponent == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(*c.shrink_power == *c.barrier_exponent);
    CHECK(*c.inner_support_exponent == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(*c.outer_support_exponent == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(*c.selfsim_amplitude_exponent == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(*c.selfsim_space_exponent == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(*c.shrink_tail_min == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(*c.shrink_tail_max == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*c.tail_sub_power == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(*c.tail_sub_decay == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(*c.tail_sub_slope_max == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*c.decay_threshold == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*c.rate_lower == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(*c.rate_upper_p2 == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(*c.j_radial_power == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(*c.j_field_power == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(*c.selfsim_profile_decay == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("derived constants for N=2, p=1.8, q=0.6") {
    const DerivedConstants c = derive_constants({2, 1.8, 0.6});
    CHECK(*c.barrier_amplitude == doctest::Approx(std::pow(5.0, -5.0) / 6.0).epsilon(1e-13));
    CHECK(*c.barrier_amplitude == doctest::Approx(5.3333e-5).epsilon(1e-4));
    CHECK(*c.barrier_exponent == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(*c.inner_support_exponent == doctest::Approx(5.0 / 12.0).epsilon(1e-13));
    CHECK(*c.outer_support_exponent == doctest::Approx(0.05).epsilon(1e-13));
    CHECK(*c.selfsim_amplitude_exponent == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(*c.selfsim_space_exponent == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
    CHECK(*c.decay_threshold == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(*c.rate_lower == doctest::Approx(2.5).epsilon(1e-13));
    CHECK_FALSE(c.rate_upper_p2.has_value());
}

TEST_CASE("constants outside their regime are absent") {
    const DerivedConstants c = derive_constants({2, 1.8, 0.85});
    CHECK_FALSE(c.barrier_amplitude.has_value());
    CHECK_FALSE(c.inner_support_exponent.has_value());
    CHECK(c.selfsim_amplitude_exponent.has_value());
    CHECK_THROWS_AS(require(c.barrier_amplitude, "barrier_amplitude"), Error);
    CHECK_THROWS_AS(derive_constants({2, 1.8, 0.95}), Error);
}

TEST_CASE("random single-point triples satisfy the exponent identities") {
    std::mt19937_64 rng(20240611);
    for (int k = 0; k < 10000; ++k) {
        const ProblemParams pp = random_single_point(rng);
        REQUIRE(classify_regime(pp) == Regime::SinglePointRange);
        const DerivedConstants c = derive_constants(pp);
        const double q = pp.q;
        // Near q = p - 1 the amplitude underflows binary64; check its logarithm there.
        const double gap = pp.p - 1.0 - q;
        const double log_amp = std::log(gap / (pp.p - q)) - std::log((pp.p - 1.0) / gap + pp.N - 1.0) / gap;
        CHECK(std::isfinite(log_amp));
        if (log_amp > -700.0) CHECK(*c.barrier_amplitude > 0.0);
        CHECK(*c.barrier_exponent > 1.0);
        CHECK(*c.shrink_power > 1.0);
        CHECK(*c.barrier_exponent == *c.shrink_power);
        CHECK(*c.shrink_tail_min < std::min(*c.shrink_tail_max, 1.0));
        CHECK(*c.inner_support_exponent > *c.outer_support_exponent);
        CHECK(*c.outer_support_exponent > 0.0);
        const double product = *c.barrier_exponent * *c.shrink_tail_min;
        CHECK(std::abs(product - q / (1.0 - q)) <= 1e-12 * (q / (1.0 - q)));
        CHECK(std::abs(product - *c.decay_threshold) <= 1e-12 * *c.decay_threshold);
        const double a = *c.selfsim_amplitude_exponent;
        const double b = *c.selfsim_space_exponent;
        CHECK(b < 0.0);
        CHECK(a > 0.0);
        // Tolerance relative to the operand magnitudes: a - 1 cancels when q is small.
        const double lhs = a - 1.0;
        const double scale = 1.0 + std::abs(a) + std::abs(b);
        CHECK(std::abs(lhs - q * (a + b)) <= 1e-12 * scale);
        CHECK(std::abs(lhs - ((pp.p - 1.0) * (a + b) + b)) <= 1e-12 * scale);
    }
}

TEST_CASE("derive_constants is pure") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 200; ++k) {
        const ProblemParams pp = random_single_point(rng);
        CHECK(to_json(derive_constants(pp)).dump() == to_json(derive_constants(pp)).dump());
    }
}
