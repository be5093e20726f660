#pragma once

#include <array>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "hjlab/exponents.hpp"

namespace hjlab {

/// Value and analytic derivatives of a radial profile at one (t, r).
struct RadialJet {
    double value = 0.0;
    double d_t = 0.0;
    double d_r = 0.0;
    double d_rr = 0.0;
};

/// Residual of  z_t - |z_r|^{p-2}((p-1) z_rr + (N-1)/r z_r) + |z_r|^q  together
/// with the sum of the absolute values of its terms, used to normalise tolerances.
struct OperatorValue {
    double residual = 0.0;
    double scale = 0.0;
};

/// Throws Error(SingularPoint) when z_r = 0, z_rr != 0 and p < 2.
OperatorValue radial_operator(const ProblemParams& params, const RadialJet& jet, double r);

enum class Family { Barrier, ShrinkSuper, TailSub, SelfSimSuper };

std::string_view to_string(Family family);

/// amplitude * |r - center|^exponent with amplitude and exponent pinned by (N, p, q).
struct BarrierParams {
    double amplitude = 0.0;
    double exponent = 0.0;
    double center = 0.0;
};

BarrierParams make_barrier(const ProblemParams& params, double center = 0.0);

enum class EtaLaw {
    Certified,
    Inverted,  // flips the sign of the amplitude power in the eta coefficient; must fail
};

/// [A/(1+r^alpha) - eta(t)]_+^power with eta' = coefficient * eta^rate, eta(0) = 0.
struct ShrinkSuperParams {
    double amplitude = 0.0;
    double tail_exponent = 0.0;
    double power = 0.0;
    double inner_radius = 0.0;
    double horizon = 0.0;
    double eta_rate = 0.0;
    double eta_coefficient = 0.0;
    EtaLaw eta_law = EtaLaw::Certified;

    // Relative slack (lhs/rhs - 1) of the interior, initial and lateral conditions.
    double interior_slack = 0.0;
    double initial_slack = 0.0;
    double lateral_slack = 0.0;

    double eta(double t) const;
    double eta_dt(double t) const;
};

/// Envelope u0(r) <= constant * (1 + r)^{-exponent}.
struct DecayEnvelope {
    double constant = 1.0;
    double exponent = 0.0;
};

/// Throws Error(DecayTooSlow) if the envelope exponent is at or below q/(1-q).
ShrinkSuperParams make_shrink_super(const DecayEnvelope& envelope, const ProblemParams& params,
                                    double sup_norm);

/// Same construction with the amplitude power in the eta coefficient negated.
ShrinkSuperParams invert_eta_law(const ShrinkSuperParams& certified, const ProblemParams& params);

/// (T-t)^{1/(1-q)} (offset + slope r^power)^{-decay}.
struct TailSubParams {
    double horizon = 0.0;
    double offset = 0.0;
    double slope = 0.0;
    double power = 0.0;
    double decay = 0.0;
    double offset_threshold = 0.0;  // smallest admissible offset
    double bracket = 0.0;           // final proof inequality at the chosen offset, < 0
};

/// Smallest offset making the closing inequality of the subsolution proof negative.
double tail_sub_offset_threshold(const ProblemParams& params, double horizon, double slope);

/// Throws Error(HypothesisViolated) if slope is outside (0, slope_max) or offset too small.
TailSubParams make_tail_sub(const ProblemParams& params, double horizon, double slope,
                            double offset);

/// (T-t)^{amp_exp} A (1 + (r (T-t)^{space_exp})^2)^{-decay}.
struct SelfSimSuperParams {
    double horizon = 0.0;
    double amplitude = 0.0;
    double amplitude_exponent = 0.0;
    double space_exponent = 0.0;
    double decay = 0.0;
};

SelfSimSuperParams make_selfsim_super(const ProblemParams& params, double horizon,
                                      double amplitude);

/// The four amplitude certificates; all nonnegative means the profile is a supersolution.
std::array<double, 4> selfsim_certificates(const ProblemParams& params, double amplitude);

struct BisectionSettings {
    double rel_tol = 1e-12;
    int max_iter = 400;
};

struct AmplitudeBound {
    double amplitude = 0.0;
    std::array<double, 4> certificates{};
};

/// Largest amplitude keeping every certificate nonnegative. Needs p < 2 and q < p-1.
AmplitudeBound find_A0(const ProblemParams& params, const BisectionSettings& settings = {});

/// Immutable closed-form comparison function.
class ComparisonProfile {
public:
    using Shape = std::variant<BarrierParams, ShrinkSuperParams, TailSubParams, SelfSimSuperParams>;

    ComparisonProfile(const ProblemParams& params, Shape shape);

    Family family() const;
    const ProblemParams& params() const { return params_; }
    const Shape& shape() const { return shape_; }

    RadialJet jet(double t, double r) const;
    double value(double t, double r) const { return jet(t, r).value; }

    /// False on kinks and in the thin layer next to a free boundary.
    bool smooth_at(double t, double r) const;

    nlohmann::json to_json() const;

private:
    ProblemParams params_;
    Shape shape_;
};

/// Throws Error(FreeBoundary) at kinks, Error(SingularPoint) as radial_operator.
OperatorValue apply_radial_operator(const ComparisonProfile& profile, double t, double r);

enum class Sense { NonNegative, NonPositive };

struct SampleBox {
    double t_lo = 0.0;
    double t_hi = 1.0;
    double r_lo = 0.0;
    double r_hi = 1.0;
};

struct Sampler {
    int nt = 64;
    int nr = 256;
    double tol_sign = 1e-10;  // relative to the local operator scale
    bool log_radius = true;
};

struct CertReport {
    Family family = Family::Barrier;
    nlohmann::json params;
    SampleBox box;
    int n_samples = 0;
    int n_skipped = 0;  // samples on or next to a free boundary
    double min_margin = 0.0;
    double min_residual = 0.0;
    double max_residual = 0.0;
    double worst_t = 0.0;
    double worst_r = 0.0;
    bool pass = false;
};

CertReport certify_sign(const ComparisonProfile& profile, const SampleBox& box, Sense sense,
                        const Sampler& sampler = {});

nlohmann::json to_json(const CertReport& report);

}  // namespace hjlab
