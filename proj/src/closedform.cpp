#include "hjlab/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjlab/error.hpp"

namespace hjlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Relative thickness of the layer next to the free boundary of the shrinking
// supersolution that is excluded from certification.
constexpr double kFreeBoundaryLayer = 1e-6;

RadialJet barrier_jet(const BarrierParams& b, double r) {
    const double d = r - b.center;
    const double s = std::abs(d);
    const double sign = d < 0.0 ? -1.0 : 1.0;
    RadialJet j;
    j.value = b.amplitude * std::pow(s, b.exponent);
    j.d_r = sign * b.amplitude * b.exponent * std::pow(s, b.exponent - 1.0);
    j.d_rr = b.amplitude * b.exponent * (b.exponent - 1.0) * std::pow(s, b.exponent - 2.0);
    return j;
}

double shrink_gap(const ShrinkSuperParams& s, double t, double r) {
    return s.amplitude / (1.0 + std::pow(r, s.tail_exponent)) - s.eta(t);
}

RadialJet shrink_jet(const ShrinkSuperParams& s, double t, double r) {
    RadialJet j;
    const double y = shrink_gap(s, t, r);
    if (y <= 0.0) return j;
    const double A = s.amplitude;
    const double a = s.tail_exponent;
    const double g = s.power;
    const double ra = std::pow(r, a);
    const double den = 1.0 + ra;
    const double yg1 = std::pow(y, g - 1.0);
    j.value = std::pow(y, g);
    j.d_t = -g * yg1 * s.eta_dt(t);
    j.d_r = -A * a * g * yg1 * std::pow(r, a - 1.0) / (den * den);
    j.d_rr = A * A * a * a * g * (g - 1.0) * std::pow(y, g - 2.0) * std::pow(r, 2.0 * a - 2.0) /
                 std::pow(den, 4) -
             A * a * g * yg1 * std::pow(r, a - 2.0) * (a - 1.0 - (a + 1.0) * ra) / std::pow(den, 3);
    return j;
}

RadialJet tail_sub_jet(const TailSubParams& w, const ProblemParams& params, double t, double r) {
    RadialJet j;
    const double tau = w.horizon - t;
    if (tau <= 0.0) return j;
    const double k = 1.0 / (1.0 - params.q);
    const double y = w.offset + w.slope * std::pow(r, w.power);
    const double g = w.decay;
    const double th = w.power;
    const double tk = std::pow(tau, k);
    j.value = tk * std::pow(y, -g);
    j.d_t = -k * std::pow(tau, k - 1.0) * std::pow(y, -g);
    j.d_r = -g * th * w.slope * tk * std::pow(r, th - 1.0) * std::pow(y, -g - 1.0);
    j.d_rr = -g * th * w.slope * tk * std::pow(y, -g - 2.0) * std::pow(r, th - 2.0) *
             ((th - 1.0) * y - (1.0 + g) * th * w.slope * std::pow(r, th));
    return j;
}

RadialJet selfsim_jet(const SelfSimSuperParams& W, double t, double r) {
    RadialJet j;
    const double tau = W.horizon - t;
    if (tau <= 0.0) return j;
    const double al = W.amplitude_exponent;
    const double be = W.space_exponent;
    const double g = W.decay;
    const double A = W.amplitude;
    const double y = r * std::pow(tau, be);
    const double base = 1.0 + y * y;
    const double f = A * std::pow(base, -g);
    const double fp = -2.0 * A * g * y * std::pow(base, -g - 1.0);
    const double fpp = -2.0 * A * g * std::pow(base, -g - 1.0) * (1.0 - 2.0 * (g + 1.0) * y * y / base);
    j.value = std::pow(tau, al) * f;
    j.d_r = std::pow(tau, al + be) * fp;
    j.d_rr = std::pow(tau, al + 2.0 * be) * fpp;
    j.d_t = -std::pow(tau, al - 1.0) * (al * f + be * y * fp);
    return j;
}

std::string describe(double value) {
    std::ostringstream os;
    os.precision(6);
    os << value;
    return os.str();
}

}  // namespace

OperatorValue radial_operator(const ProblemParams& params, const RadialJet& jet, double r) {
    const double p = params.p;
    const double q = params.q;
    const double grad = std::abs(jet.d_r);
    double weight;  // |z_r|^{p-2}
    if (p == 2.0) {
        weight = 1.0;
    } else if (grad == 0.0) {
        if (jet.d_rr != 0.0) {
            throw Error(ErrorCode::SingularPoint,
                        "z_r = 0 with z_rr != 0 at r = " + describe(r) + " and p < 2");
        }
        weight = 0.0;
    } else {
        weight = std::pow(grad, p - 2.0);
    }
    const double diffusion = weight * (p - 1.0) * jet.d_rr;
    const double drift = params.N > 1 ? weight * (params.N - 1.0) / r * jet.d_r : 0.0;
    const double absorption = grad == 0.0 ? 0.0 : std::pow(grad, q);
    OperatorValue out;
    out.residual = jet.d_t - diffusion - drift + absorption;
    out.scale = std::abs(jet.d_t) + std::abs(diffusion) + std::abs(drift) + absorption;
    return out;
}

std::string_view to_string(Family family) {
    switch (family) {
        case Family::Barrier: return "Barrier";
        case Family::ShrinkSuper: return "ShrinkSuper";
        case Family::TailSub: return "TailSub";
        case Family::SelfSimSuper: return "SelfSimSuper";
    }
    return "Barrier";
}

BarrierParams make_barrier(const ProblemParams& params, double center) {
    const DerivedConstants c = derive_constants(params);
    return BarrierParams{require(c.barrier_amplitude, "barrier_amplitude"),
                         require(c.barrier_exponent, "barrier_exponent"), center};
}

double ShrinkSuperParams::eta(double t) const {
    if (t <= 0.0) return 0.0;
    return std::pow(eta_coefficient * (1.0 - eta_rate) * t, 1.0 / (1.0 - eta_rate));
}

double ShrinkSuperParams::eta_dt(double t) const {
    if (t <= 0.0) return 0.0;
    return eta_coefficient * std::pow(eta(t), eta_rate);
}

ShrinkSuperParams make_shrink_super(const DecayEnvelope& envelope, const ProblemParams& params,
                                    double sup_norm) {
    const DerivedConstants c = derive_constants(params);
    const double threshold = require(c.decay_threshold, "decay_threshold");
    const double g = require(c.shrink_power, "shrink_power");
    const double tail_max = require(c.shrink_tail_max, "shrink_tail_max");
    if (!(envelope.exponent > threshold)) {
        throw Error(ErrorCode::DecayTooSlow, "decay exponent " + describe(envelope.exponent) +
                                                 " <= q/(1-q) = " + describe(threshold));
    }
    if (!(sup_norm > 0.0) || !(envelope.constant > 0.0)) {
        throw Error(ErrorCode::HypothesisViolated, "sup norm and envelope constant must be > 0");
    }
    const double p = params.p;
    const double q = params.q;

    // The envelope exponent is used as is when it lies below g*tail_max;
    // otherwise any exponent in (q/(1-q), g*tail_max) is admissible and the
    // midpoint is taken.
    const double upper = g * tail_max;
    const double used = envelope.exponent < upper ? envelope.exponent : 0.5 * (threshold + upper);
    const double a = used / g;

    const double ag = a * g;
    const double K = 2.0 * (p - 1.0) * (1.0 + ag) * std::pow(ag, p - 1.0 - q);
    const double level = std::pow(sup_norm, 1.0 / g);

    const double r1_pow = envelope.constant > 0.0
                              ? std::pow(envelope.constant, 1.0 / g) / (std::pow(2.0, a - 1.0) * level) - 1.0
                              : 0.0;
    const double r1 = r1_pow > 0.0 ? std::pow(r1_pow, 1.0 / a) : 0.0;

    // R^{a+1} > 2 K^{1/(p-q)} (1 + R^a) level, whose left-minus-right changes sign once.
    const double lead = 2.0 * std::pow(K, 1.0 / (p - q)) * level;
    auto excess = [&](double R) { return std::pow(R, a + 1.0) - lead * (1.0 + std::pow(R, a)); };
    double lo = 0.0;
    double hi = 1.0;
    while (excess(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? hi : lo) = mid;
    }
    const double R = std::max(1.0, 1.05 * std::max(r1, hi));

    ShrinkSuperParams s;
    s.tail_exponent = a;
    s.power = g;
    s.inner_radius = R;
    const double ra = std::pow(R, a);
    s.amplitude = 1.5 * (1.0 + ra) * level;
    s.eta_rate = (a * (1.0 + q * g - g) + q) / a;
    s.eta_coefficient = std::pow(ag, q) * std::pow(s.amplitude, -q / a) / (2.0 * g);

    const double eta_target = s.amplitude / (1.0 + ra) - level;
    const double t_equal =
        std::pow(eta_target, 1.0 - s.eta_rate) / (s.eta_coefficient * (1.0 - s.eta_rate));
    s.horizon = 0.99 * t_equal;

    s.interior_slack = std::pow(R, (a + 1.0) * (p - q)) / (K * std::pow(s.amplitude, p - q)) - 1.0;
    s.initial_slack =
        s.amplitude / (std::pow(envelope.constant, 1.0 / g) / std::pow(2.0, a - 1.0)) - 1.0;
    s.lateral_slack = std::pow(s.amplitude / (1.0 + ra) - s.eta(s.horizon), g) / sup_norm - 1.0;
    return s;
}

ShrinkSuperParams invert_eta_law(const ShrinkSuperParams& certified, const ProblemParams& params) {
    ShrinkSuperParams s = certified;
    s.eta_law = EtaLaw::Inverted;
    s.eta_coefficient *= std::pow(s.amplitude, 2.0 * params.q / s.tail_exponent);
    return s;
}

double tail_sub_offset_threshold(const ProblemParams& params, double horizon, double slope) {
    const DerivedConstants c = derive_constants(params);
    const double th = require(c.tail_sub_power, "tail_sub_power");
    const double g = require(c.tail_sub_decay, "tail_sub_decay");
    const double p = params.p;
    const double q = params.q;
    const double e = (2.0 - p) * g - p + 1.0;  // < 0
    const double lead = std::pow(g * th * slope, p - 1.0) *
                        std::pow(horizon, (p - 1.0 - q) / (1.0 - q)) *
                        ((1.0 + g) * p + params.N - 1.0);
    const double target = 1.0 / (2.0 * (1.0 - q));
    auto bracket = [&](double a) { return lead * std::pow(a, e) - target; };

    // bracket decreases in a; bisect in log space for the sign change.
    double lo = 1e-300;
    double hi = 1.0;
    while (bracket(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    if (lo == 1e-300) {
        while (bracket(hi * 0.5) < 0.0 && hi > 1e-300) hi *= 0.5;
        lo = hi * 0.5;
    }
    for (int it = 0; it < 300 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bracket(mid) < 0.0 ? hi : lo) = mid;
    }
    return hi;
}

TailSubParams make_tail_sub(const ProblemParams& params, double horizon, double slope,
                            double offset) {
    const DerivedConstants c = derive_constants(params);
    const double slope_max = require(c.tail_sub_slope_max, "tail_sub_slope_max");
    if (!(slope > 0.0 && slope < slope_max)) {
        throw Error(ErrorCode::HypothesisViolated,
                    "slope " + describe(slope) + " outside (0, " + describe(slope_max) + ")");
    }
    if (!(horizon > 0.0)) throw Error(ErrorCode::HypothesisViolated, "horizon must be > 0");
    const double threshold = tail_sub_offset_threshold(params, horizon, slope);
    if (!(offset >= threshold)) {
        throw Error(ErrorCode::HypothesisViolated,
                    "offset " + describe(offset) + " below threshold " + describe(threshold));
    }
    TailSubParams w;
    w.horizon = horizon;
    w.offset = offset;
    w.slope = slope;
    w.power = require(c.tail_sub_power, "tail_sub_power");
    w.decay = require(c.tail_sub_decay, "tail_sub_decay");
    w.offset_threshold = threshold;
    const double p = params.p;
    const double q = params.q;
    const double e = (2.0 - p) * w.decay - p + 1.0;
    w.bracket = std::pow(w.decay * w.power * slope, p - 1.0) *
                    std::pow(horizon, (p - 1.0 - q) / (1.0 - q)) * std::pow(offset, e) *
                    ((1.0 + w.decay) * p + params.N - 1.0) -
                1.0 / (2.0 * (1.0 - q));
    return w;
}

SelfSimSuperParams make_selfsim_super(const ProblemParams& params, double horizon,
                                      double amplitude) {
    const DerivedConstants c = derive_constants(params);
    SelfSimSuperParams W;
    W.horizon = horizon;
    W.amplitude = amplitude;
    W.amplitude_exponent = require(c.selfsim_amplitude_exponent, "selfsim_amplitude_exponent");
    W.space_exponent = require(c.selfsim_space_exponent, "selfsim_space_exponent");
    W.decay = require(c.selfsim_profile_decay, "selfsim_profile_decay");
    return W;
}

std::array<double, 4> selfsim_certificates(const ProblemParams& params, double A) {
    const DerivedConstants c = derive_constants(params);
    const double p = params.p;
    const double q = params.q;
    const double al = require(c.selfsim_amplitude_exponent, "selfsim_amplitude_exponent");
    const double be = require(c.selfsim_space_exponent, "selfsim_space_exponent");
    const double g = require(c.selfsim_profile_decay, "selfsim_profile_decay");
    const double y0 = 1.0 / std::sqrt(4.0 * (g + 1.0));
    const double y0sq = y0 * y0;
    return {
        std::pow(2.0 * g, q) / 2.0 * std::pow(A, q - 1.0) - (al - 2.0 * be * g),
        (p - 1.0) * std::pow(2.0 * g, p - 1.0) / (2.0 * std::pow(y0, 2.0 - p)) *
                std::pow(A, p - 2.0) - al,
        std::pow(2.0 * g, q) / 4.0 * y0sq * std::pow(A, q - 1.0) - al,
        std::pow(2.0 * g, q - p + 1.0) / 4.0 * std::pow(y0, (p - 2.0 * q) / (1.0 - q)) *
                std::pow(A, q - p + 1.0) -
            2.0 * (p - 1.0) * (g + 1.0) * std::pow((1.0 + y0sq) / y0sq, (2.0 - p) * (g + 1.0)),
    };
}

AmplitudeBound find_A0(const ProblemParams& params, const BisectionSettings& settings) {
    if (params.p >= 2.0) {
        throw Error(ErrorCode::NotApplicable,
                    "self-similar supersolution amplitude needs p < 2 (p = " + describe(params.p) + ")");
    }
    if (classify_regime(params) != Regime::SinglePointRange) {
        throw Error(ErrorCode::RegimeMismatch, "self-similar supersolution amplitude needs q < p - 1");
    }
    auto admissible = [&](double A) {
        const auto certs = selfsim_certificates(params, A);
        return std::all_of(certs.begin(), certs.end(), [](double v) { return v >= 0.0; });
    };
    double lo = 1.0;
    double hi = 1.0;
    while (!admissible(lo)) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300) throw Error(ErrorCode::NotApplicable, "no admissible amplitude found");
    }
    while (admissible(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw Error(ErrorCode::NotApplicable, "amplitude bound is unbounded");
    }
    for (int it = 0; it < settings.max_iter && hi - lo > settings.rel_tol * lo; ++it) {
        const double mid = 0.5 * (lo + hi);
        (admissible(mid) ? lo : hi) = mid;
    }
    return AmplitudeBound{lo, selfsim_certificates(params, lo)};
}

ComparisonProfile::ComparisonProfile(const ProblemParams& params, Shape shape)
    : params_(params), shape_(std::move(shape)) {}

Family ComparisonProfile::family() const {
    return std::visit(Overloaded{
                          [](const BarrierParams&) { return Family::Barrier; },
                          [](const ShrinkSuperParams&) { return Family::ShrinkSuper; },
                          [](const TailSubParams&) { return Family::TailSub; },
                          [](const SelfSimSuperParams&) { return Family::SelfSimSuper; },
                      },
                      shape_);
}

RadialJet ComparisonProfile::jet(double t, double r) const {
    return std::visit(Overloaded{
                          [&](const BarrierParams& b) { return barrier_jet(b, r); },
                          [&](const ShrinkSuperParams& s) { return shrink_jet(s, t, r); },
                          [&](const TailSubParams& w) { return tail_sub_jet(w, params_, t, r); },
                          [&](const SelfSimSuperParams& W) { return selfsim_jet(W, t, r); },
                      },
                      shape_);
}

bool ComparisonProfile::smooth_at(double t, double r) const {
    return std::visit(Overloaded{
                          [&](const BarrierParams& b) { return r != b.center; },
                          [&](const ShrinkSuperParams& s) {
                              const double y = shrink_gap(s, t, r);
                              return y <= 0.0 || y >= kFreeBoundaryLayer * s.amplitude;
                          },
                          [&](const TailSubParams& w) { return t < w.horizon; },
                          [&](const SelfSimSuperParams& W) { return t < W.horizon; },
                      },
                      shape_);
}

nlohmann::json ComparisonProfile::to_json() const {
    nlohmann::json j = std::visit(
        Overloaded{
            [](const BarrierParams& b) {
                return nlohmann::json{{"amplitude", b.amplitude}, {"exponent", b.exponent},
                                      {"center", b.center}};
            },
            [](const ShrinkSuperParams& s) {
                return nlohmann::json{{"amplitude", s.amplitude},
                                      {"tail_exponent", s.tail_exponent},
                                      {"power", s.power},
                                      {"inner_radius", s.inner_radius},
                                      {"horizon", s.horizon},
                                      {"eta_rate", s.eta_rate},
                                      {"eta_coefficient", s.eta_coefficient},
                                      {"eta_law", s.eta_law == EtaLaw::Certified ? "certified" : "inverted"},
                                      {"interior_slack", s.interior_slack},
                                      {"initial_slack", s.initial_slack},
                                      {"lateral_slack", s.lateral_slack}};
            },
            [](const TailSubParams& w) {
                return nlohmann::json{{"horizon", w.horizon},
                                      {"offset", w.offset},
                                      {"slope", w.slope},
                                      {"power", w.power},
                                      {"decay", w.decay},
                                      {"offset_threshold", w.offset_threshold},
                                      {"bracket", w.bracket}};
            },
            [](const SelfSimSuperParams& W) {
                return nlohmann::json{{"horizon", W.horizon},
                                      {"amplitude", W.amplitude},
                                      {"amplitude_exponent", W.amplitude_exponent},
                                      {"space_exponent", W.space_exponent},
                                      {"decay", W.decay}};
            },
        },
        shape_);
    j["problem"] = hjlab::to_json(params_);
    return j;
}

OperatorValue apply_radial_operator(const ComparisonProfile& profile, double t, double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::SingularPoint, "radius must be > 0");
    if (!profile.smooth_at(t, r)) {
        throw Error(ErrorCode::FreeBoundary,
                    "profile not smooth at (t, r) = (" + describe(t) + ", " + describe(r) + ")");
    }
    return radial_operator(profile.params(), profile.jet(t, r), r);
}

namespace {

std::vector<double> interior_samples(double lo, double hi, int n, bool logarithmic) {
    std::vector<double> out(static_cast<std::size_t>(n));
    const bool use_log = logarithmic && lo > 0.0;
    for (int k = 0; k < n; ++k) {
        const double s = (k + 1.0) / (n + 1.0);
        out[static_cast<std::size_t>(k)] =
            use_log ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s;
    }
    return out;
}

}  // namespace

CertReport certify_sign(const ComparisonProfile& profile, const SampleBox& box, Sense sense,
                        const Sampler& sampler) {
    CertReport rep;
    rep.family = profile.family();
    rep.params = profile.to_json();
    rep.box = box;
    rep.min_margin = std::numeric_limits<double>::infinity();
    rep.min_residual = std::numeric_limits<double>::infinity();
    rep.max_residual = -std::numeric_limits<double>::infinity();
    const double orient = sense == Sense::NonNegative ? 1.0 : -1.0;
    const auto ts = interior_samples(box.t_lo, box.t_hi, sampler.nt, false);
    const auto rs = interior_samples(box.r_lo, box.r_hi, sampler.nr, sampler.log_radius);
    for (double t : ts) {
        for (double r : rs) {
            if (!profile.smooth_at(t, r)) {
                ++rep.n_skipped;
                continue;
            }
            const OperatorValue v = apply_radial_operator(profile, t, r);
            ++rep.n_samples;
            rep.min_residual = std::min(rep.min_residual, v.residual);
            rep.max_residual = std::max(rep.max_residual, v.residual);
            const double signed_value = orient * v.residual;
            const double margin = v.scale > 0.0 ? signed_value / v.scale
                                                : (signed_value == 0.0 ? 0.0 : signed_value);
            if (margin < rep.min_margin) {
                rep.min_margin = margin;
                rep.worst_t = t;
                rep.worst_r = r;
            }
        }
    }
    rep.pass = rep.n_samples > 0 && rep.min_margin >= -sampler.tol_sign;
    return rep;
}

nlohmann::json to_json(const CertReport& report) {
    return {{"family", std::string(to_string(report.family))},
            {"params", report.params},
            {"box",
             {{"t", {report.box.t_lo, report.box.t_hi}}, {"r", {report.box.r_lo, report.box.r_hi}}}},
            {"n_samples", report.n_samples},
            {"n_skipped", report.n_skipped},
            {"min_margin", report.min_margin},
            {"min_residual", report.min_residual},
            {"max_residual", report.max_residual},
            {"worst_point", {{"t", report.worst_t}, {"r", report.worst_r}}},
            {"pass", report.pass}};
}

}  // namespace hjlab
