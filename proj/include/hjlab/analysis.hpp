#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "hjlab/closedform.hpp"
#include "hjlab/exponents.hpp"
#include "hjlab/gridop.hpp"
#include "hjlab/solver.hpp"

namespace hjlab {

/// Largest cell centre with u > tol_pos, 0 if none.
double support_radius(const Field& field, double tol_pos);
double support_radius(const RadialGrid& grid, std::span<const double> u, double tol_pos);

// ---------------------------------------------------------------- fits

struct FitWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

/// Slope of log y against log(T_e - t).
struct ExponentFit {
    double exponent = 0.0;
    double intercept = 0.0;
    FitWindow window;
    double rms = 0.0;
    int points = 0;
};

/// Least squares over rows with t in [t_lo, t_hi]. Throws InsufficientPoints
/// (< 8 rows), NonPositiveValues, HypothesisViolated if T_e <= t_hi.
ExponentFit fit_exponent(std::span<const double> t, std::span<const double> y, double extinction_time,
                         const FitWindow& window);

/// [T_e - 0.4 (T_e - t_start), T_e - max(5 dt, T_e - t_floor)] where t_floor is
/// the first time max_u drops to 10 tol_ext.
FitWindow default_fit_window(std::span<const SeriesRow> series, double extinction_time, double tol_ext,
                             double dt, double t_start = 0.0);

ExponentFit fit_max_decay(std::span<const SeriesRow> series, double extinction_time, const FitWindow& window);

struct SupportFit {
    ExponentFit fit;
    double band_lo = 0.0;  // outer exponent - tol
    double band_hi = 0.0;  // inner exponent + tol
    bool pass = false;
    // min over the window of rho / (T_e - t)^inner: the lower-inclusion constant.
    double inner_constant = 0.0;
};

/// Support-radius exponent restricted to (T_e/2, T_e) within `window`.
/// Throws NotApplicable outside the single-point range.
SupportFit fit_support_exponents(std::span<const SeriesRow> series, double extinction_time,
                                 const ProblemParams& params, const FitWindow& window, double tol_exp = 0.1);

// ---------------------------------------------------------------- comparison

/// R0 + (sup_norm / barrier_amplitude)^{1/barrier_exponent}.
double localization_radius(double R0, double sup_norm, const ProblemParams& params);

enum class Side { Below, Above };  // u <= profile, u >= profile

struct DominationRegion {
    double t_lo = 0.0;
    double t_hi = std::numeric_limits<double>::infinity();
    double r_lo = 0.0;
    double r_hi = std::numeric_limits<double>::infinity();
};

struct DominationReport {
    Side side = Side::Below;
    double tol = 0.0;
    double max_violation = -std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    double worst_r = 0.0;
    long points = 0;
    long snapshots = 0;
    bool pass = false;
};

/// Streams snapshots and tracks the largest signed violation. The first
/// observation is the initial ordering: violating it throws InitialOrderingFails.
class DominationCheck {
public:
    DominationCheck(ComparisonProfile profile, Side side, double tol, DominationRegion region = {});

    void observe(double t, const RadialGrid& grid, std::span<const double> u);
    DominationReport report() const { return report_; }

private:
    ComparisonProfile profile_;
    DominationRegion region_;
    DominationReport report_;
};

DominationReport check_domination(const SimulationResult& result, const ComparisonProfile& profile, Side side,
                                  double tol, const DominationRegion& region = {});

// ---------------------------------------------------------------- gradient bound

enum class GradientForm {
    Proven,    // p = 2 only
    Template,  // same exponents evaluated for p < 2
};

struct GradientSample {
    double t;
    double gradient;  // max |d_r u^power|
    double constant;  // gradient / (1 + sup_norm^norm_power t^{-1/p})
};

struct GradientEnvelope {
    double power = 0.0;       // (p-q-1)/(p-q)
    double norm_power = 0.0;  // (p-2q)/(p(p-q))
    std::vector<GradientSample> samples;
    double sup_constant = 0.0;
    double t_at_sup = 0.0;
};

/// Throws WrongRegime for GradientForm::Proven when p != 2.
class GradientEstimate {
public:
    GradientEstimate(const ProblemParams& params, double sup_norm, GradientForm form = GradientForm::Proven);

    void observe(double t, const RadialGrid& grid, std::span<const double> u);
    const GradientEnvelope& envelope() const { return env_; }

private:
    ProblemParams params_;
    double sup_norm_;
    GradientEnvelope env_;
};

GradientEnvelope gradient_estimate_check(const SimulationResult& result, const ProblemParams& params,
                                         double sup_norm, GradientForm form = GradientForm::Proven);

/// |a / b - 1| <= rel for the two envelope suprema.
bool envelopes_stable(const GradientEnvelope& a, const GradientEnvelope& b, double rel = 0.2);

// ---------------------------------------------------------------- J functional

struct JSample {
    double t;
    double delta_emp;  // min over the probe cells of (|g| / (r^{1/(p-1-q)} u^{1/(p-q)}))^{p-1}
    double max_j;      // max of r^{N-1}|g|^{p-2}g + delta_probe r^lambda u^beta
    double scale;      // max of the absolute values of both terms
    int cells;
};

/// Cells with r in (2 dr, R0) and u > 10 tol_pos. Throws EmptySupport if none.
JSample j_snapshot(double t, const RadialGrid& grid, std::span<const double> u, const ProblemParams& params,
                   double R0, double tol_pos, double delta_probe);

/// Runs j_snapshot on every observation; the probe defaults to fraction * delta_emp(0).
class JDiagnostic {
public:
    JDiagnostic(const ProblemParams& params, double R0, double tol_pos, double probe_fraction = 0.5);

    void observe(double t, const RadialGrid& grid, std::span<const double> u);

    double delta_probe() const { return probe_; }
    const std::vector<JSample>& trace() const { return trace_; }
    long empty_snapshots() const { return empty_; }

    /// Infimum of delta_emp over t in (0, t_hi); max of max_j / scale over the same.
    double inf_delta(double t_hi) const;
    double max_relative_j(double t_hi) const;

private:
    ProblemParams params_;
    double R0_;
    double tol_pos_;
    double fraction_;
    double probe_ = 0.0;
    std::vector<JSample> trace_;
    long empty_ = 0;
};

/// Closed-form delta_emp(0) of Bump(m, R0) with exponent omega: (omega * 2 m^{1/omega} R0^{2-omega})^{p-1}.
double bump_delta_initial(double m, double R0, const ProblemParams& params);

// ---------------------------------------------------------------- reporting

nlohmann::json to_json(const FitWindow& w);
nlohmann::json to_json(const ExponentFit& fit);
nlohmann::json to_json(const SupportFit& fit);
nlohmann::json to_json(const DominationReport& report);
nlohmann::json to_json(const GradientEnvelope& env, bool include_samples = false);

}  // namespace hjlab
