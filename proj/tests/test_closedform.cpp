#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hjlab/closedform.hpp"
#include "hjlab/error.hpp"
#include "hjlab/sampling.hpp"

using namespace hjlab;

namespace {

const ProblemParams kConfigA{1, 2.0, 0.5};
const ProblemParams kConfigB{2, 1.8, 0.6};

// Operator residual assembled from centred differences of the profile value
// only; shares nothing with the analytic derivative code.
double fd_operator(const ProblemParams& pp, const std::function<double(double, double)>& z, double t,
                   double r) {
    const double h = 1e-4 * r;
    const double ht = 1e-6;
    const double zr = (z(t, r + h) - z(t, r - h)) / (2 * h);
    const double zrr = (z(t, r + h) - 2 * z(t, r) + z(t, r - h)) / (h * h);
    const double zt = (z(t + ht, r) - z(t - ht, r)) / (2 * ht);
    const double w = std::pow(std::abs(zr), pp.p - 2.0);
    return zt - w * ((pp.p - 1.0) * zrr + (pp.N - 1.0) / r * zr) + std::pow(std::abs(zr), pp.q);
}

}  // namespace

TEST_CASE("barrier is an exact steady solution") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> logr(std::log(1e-3), std::log(1e3));
    for (int k = 0; k < 100; ++k) {
        const ProblemParams pp = random_single_point(rng, 0.05);
        const ComparisonProfile bar(pp, make_barrier(pp));
        const auto& b = std::get<BarrierParams>(bar.shape());
        for (int i = 0; i < 50; ++i) {
            const double r = std::exp(logr(rng));
            const double ref = std::pow(b.exponent * b.amplitude, pp.q) *
                               std::pow(r, pp.q * (b.exponent - 1.0));
            const OperatorValue v = apply_radial_operator(bar, 0.3, r);
            CHECK(std::abs(v.residual) <= 1e-12 * ref);
        }
    }
}

TEST_CASE("barrier residual vanishes at r = 0.5 for the reference triple") {
    const ComparisonProfile bar(kConfigA, make_barrier(kConfigA));
    CHECK(std::abs(apply_radial_operator(bar, 1.0, 0.5).residual) < 1e-15);
}

TEST_CASE("constant profile has zero residual at p = 2") {
    RadialJet constant;
    constant.value = 3.7;
    CHECK(radial_operator(kConfigA, constant, 0.8).residual == 0.0);
}

TEST_CASE("flat point with curvature is singular for p < 2") {
    RadialJet j;
    j.d_rr = 1.0;
    CHECK_THROWS_AS(radial_operator(kConfigB, j, 1.0), Error);
}

TEST_CASE("tail subsolution offset threshold matches the closed-form root") {
    // Closing inequality lead * a^e - 1/(2(1-q)) = 0 solved by hand.
    for (const ProblemParams& pp : {kConfigA, kConfigB, ProblemParams{3, 1.9, 0.3}}) {
        const double th = pp.p / (pp.p - 1.0);
        const double g = pp.q * (pp.p - 1.0) / (pp.p * (1.0 - pp.q));
        const double e = (pp.p - 1.0) * (2.0 * pp.q - pp.p) / (pp.p * (1.0 - pp.q));
        const double T = 1.3;
        const double b = 0.4 * std::pow(2.0 * (1.0 - pp.q) * std::pow(g * th, pp.q), -th / pp.q);
        const double lead = std::pow(g * th * b, pp.p - 1.0) *
                            std::pow(T, (pp.p - 1.0 - pp.q) / (1.0 - pp.q)) *
                            ((1.0 + g) * pp.p + pp.N - 1.0);
        const double oracle = std::pow(1.0 / (2.0 * (1.0 - pp.q) * lead), 1.0 / e);
        CHECK(tail_sub_offset_threshold(pp, T, b) == doctest::Approx(oracle).epsilon(1e-12));
    }
    CHECK(tail_sub_offset_threshold(kConfigA, 1.0, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("tail subsolution residual is negative at a sample point") {
    const double a = 2.0 * tail_sub_offset_threshold(kConfigA, 1.0, 0.5);
    const TailSubParams w = make_tail_sub(kConfigA, 1.0, 0.5, a);
    CHECK(w.bracket < 0.0);
    const ComparisonProfile prof(kConfigA, w);
    const double residual = apply_radial_operator(prof, 0.5, 1.0).residual;
    auto value = [](double t, double r) {
        return std::pow(1.0 - t, 2.0) / std::sqrt(3.0 + 0.5 * r * r);
    };
    CHECK(residual < 0.0);
    CHECK(residual == doctest::Approx(fd_operator(kConfigA, value, 0.5, 1.0)).epsilon(1e-6));
    CHECK(residual == doctest::Approx(-0.385446974544).epsilon(1e-10));
    CHECK_THROWS_AS(make_tail_sub(kConfigA, 1.0, 1.0, a), Error);
    CHECK_THROWS_AS(make_tail_sub(kConfigA, 1.0, 0.5, 1.0), Error);
}

TEST_CASE("shrinking supersolution parameter selection") {
    const ShrinkSuperParams s = make_shrink_super({1.0, 2.0}, kConfigA, 1.0);
    CHECK(s.tail_exponent == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(s.power == doctest::Approx(3.0));
    CHECK(s.inner_radius >= 1.0);
    CHECK(s.interior_slack > 0.0);
    CHECK(s.initial_slack > 0.0);
    CHECK(s.lateral_slack > 0.0);
    CHECK(s.eta_rate > 0.0);
    CHECK(s.eta_rate < 1.0);

    const ShrinkSuperParams clamped = make_shrink_super({1.0, 5.0}, kConfigA, 1.0);
    CHECK(clamped.tail_exponent > 1.0 / 3.0);
    CHECK(clamped.tail_exponent < 1.0);

    try {
        make_shrink_super({1.0, 0.9}, kConfigA, 1.0);
        FAIL("expected DecayTooSlow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DecayTooSlow);
    }
}

TEST_CASE("eta law solves its ODE with zero initial value") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const ProblemParams pp = random_single_point(rng, 0.05);
        const DerivedConstants c = derive_constants(pp);
        const double theta = 0.5 * (*c.decay_threshold + *c.shrink_power * *c.shrink_tail_max);
        const ShrinkSuperParams s = make_shrink_super({1.0, theta}, pp, 0.7);
        CHECK(s.eta(0.0) == 0.0);
        double prev = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double t = s.horizon * i / 20.0;
            const double h = 1e-6 * t;
            const double numeric = (s.eta(t + h) - s.eta(t - h)) / (2 * h);
            const double law = s.eta_coefficient * std::pow(s.eta(t), s.eta_rate);
            CHECK(std::abs(s.eta_dt(t) - law) <= 1e-10 * law);
            CHECK(numeric == doctest::Approx(law).epsilon(1e-6));
            CHECK(s.eta(t) >= prev);
            prev = s.eta(t);
        }
    }
}

TEST_CASE("analytic derivatives agree with centred differences") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double a = 2.0 * tail_sub_offset_threshold(kConfigA, 1.0, 0.5);
    const AmplitudeBound bound = find_A0(kConfigB);
    const std::vector<ComparisonProfile> profiles{
        ComparisonProfile(kConfigB, make_barrier(kConfigB)),
        ComparisonProfile(kConfigA, make_shrink_super({1.0, 2.0}, kConfigA, 1.0)),
        ComparisonProfile(kConfigA, make_tail_sub(kConfigA, 1.0, 0.5, a)),
        ComparisonProfile(kConfigB, make_selfsim_super(kConfigB, 2.0, 0.5 * bound.amplitude)),
    };
    for (const auto& prof : profiles) {
        int checked = 0;
        for (int k = 0; k < 1000; ++k) {
            const double t = 0.05 + 0.8 * unit(rng);
            const double r = 0.2 + 5.0 * unit(rng);
            if (!prof.smooth_at(t, r) || prof.value(t, r) == 0.0) continue;
            if (prof.family() == Family::ShrinkSuper && !prof.smooth_at(t, r * 1.01)) continue;
            const RadialJet j = prof.jet(t, r);
            const double h = 1e-5;
            const double dr = (prof.value(t, r + h) - prof.value(t, r - h)) / (2 * h);
            const double dt = (prof.value(t + h, r) - prof.value(t - h, r)) / (2 * h);
            const double hh = 1e-4;
            const double drr =
                (prof.value(t, r + hh) - 2 * j.value + prof.value(t, r - hh)) / (hh * hh);
            const double scale = std::abs(j.value) + std::abs(j.d_r) + std::abs(j.d_t) + std::abs(j.d_rr);
            CHECK(std::abs(dr - j.d_r) <= 1e-6 * scale);
            CHECK(std::abs(dt - j.d_t) <= 1e-6 * scale);
            CHECK(std::abs(drr - j.d_rr) <= 1e-5 * scale);
            ++checked;
        }
        CHECK(checked > 100);
    }
}

TEST_CASE("sign certificates of the constructed comparison functions") {
    const ShrinkSuperParams s = make_shrink_super({1.0, 2.0}, kConfigA, 1.0);
    const ComparisonProfile shrink(kConfigA, s);
    const SampleBox shrink_box{0.0, s.horizon, s.inner_radius, 4.0 * s.inner_radius};
    const CertReport rs = certify_sign(shrink, shrink_box, Sense::NonNegative);
    CHECK(rs.pass);
    CHECK(rs.min_margin > 0.0);

    const ComparisonProfile inverted(kConfigA, invert_eta_law(s, kConfigA));
    const CertReport ri = certify_sign(inverted, shrink_box, Sense::NonNegative);
    CHECK_FALSE(ri.pass);
    CHECK(ri.worst_r >= shrink_box.r_lo);
    CHECK(ri.worst_r <= shrink_box.r_hi);

    const double a = 2.0 * tail_sub_offset_threshold(kConfigA, 1.0, 0.5);
    const ComparisonProfile tail(kConfigA, make_tail_sub(kConfigA, 1.0, 0.5, a));
    const CertReport rt = certify_sign(tail, {0.0, 0.99, 0.01, 10.0}, Sense::NonPositive);
    CHECK(rt.pass);

    const AmplitudeBound bound = find_A0(kConfigB);
    const ComparisonProfile self(kConfigB, make_selfsim_super(kConfigB, 1.0, 0.5 * bound.amplitude));
    const CertReport rw = certify_sign(self, {0.0, 0.99, 1e-3, 10.0}, Sense::NonNegative);
    CHECK(rw.pass);

    const nlohmann::json j = to_json(rw);
    CHECK(j["family"] == "SelfSimSuper");
    CHECK(j.contains("worst_point"));
    CHECK(j["n_samples"].get<int>() == rw.n_samples);
}

TEST_CASE("self-similar amplitude bound") {
    const AmplitudeBound bound = find_A0(kConfigB);
    CHECK(bound.amplitude > 0.0);
    for (double v : bound.certificates) CHECK(v >= 0.0);

    // Independent oracle: each certificate is c_k A^{e_k} - d_k, so its root is explicit.
    const double p = 1.8, q = 0.6;
    const double al = (p - q) / (p - 2 * q), be = (q - p + 1) / (p - 2 * q);
    const double g = q / (2 * (1 - q));
    const double y0 = 1.0 / std::sqrt(4 * (g + 1));
    const double roots[4] = {
        std::pow((al - 2 * be * g) / (std::pow(2 * g, q) / 2), 1 / (q - 1)),
        std::pow(al / ((p - 1) * std::pow(2 * g, p - 1) / (2 * std::pow(y0, 2 - p))), 1 / (p - 2)),
        std::pow(al / (std::pow(2 * g, q) / 4 * y0 * y0), 1 / (q - 1)),
        std::pow(2 * (p - 1) * (g + 1) * std::pow((1 + y0 * y0) / (y0 * y0), (2 - p) * (g + 1)) /
                     (std::pow(2 * g, q - p + 1) / 4 * std::pow(y0, (p - 2 * q) / (1 - q))),
                 1 / (q - p + 1)),
    };
    const double oracle = *std::min_element(std::begin(roots), std::end(roots));
    CHECK(bound.amplitude == doctest::Approx(oracle).epsilon(1e-10));

    const auto half = selfsim_certificates(kConfigB, 0.5 * bound.amplitude);
    const auto quarter = selfsim_certificates(kConfigB, 0.25 * bound.amplitude);
    for (int k = 0; k < 4; ++k) {
        CHECK(half[static_cast<std::size_t>(k)] >= 0.0);
        CHECK(quarter[static_cast<std::size_t>(k)] >= half[static_cast<std::size_t>(k)]);
    }
    try {
        find_A0(kConfigA);
        FAIL("expected NotApplicable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotApplicable);
    }
}
