#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hjlab/exponents.hpp"
#include "hjlab/gridop.hpp"

namespace hjlab {

enum class InitialKind { Bump, FastDecay, FatTail, Custom };

std::string_view to_string(InitialKind kind);
InitialKind initial_kind_from_string(std::string_view name);

/// Bump: amplitude * (radius^2 - r^2)_+^exponent (exponent defaults to the
/// barrier exponent). FastDecay / FatTail: amplitude * (1 + r^2)^{-decay/2}.
/// Custom: values given per cell.
struct InitialSpec {
    InitialKind kind = InitialKind::Bump;
    double amplitude = 1.0;
    double radius = 1.0;
    std::optional<double> exponent;
    double decay = 1.0;
    std::vector<double> values;
};

/// Barrier certificate of a bump whose exponent equals the barrier exponent.
struct BumpCertificate {
    double amplitude_max;   // barrier_amplitude * (2 R0)^{-exponent}
    double gradient_floor;  // 2 m^{1/exponent} R0^{2 - exponent}
};

struct InitialCondition {
    InitialSpec spec;
    Field field;
    std::function<double(double)> profile;  // empty for Custom
    std::optional<BumpCertificate> certificate;

    double sup_norm() const { return field.max(); }
};

/// Throws HypothesisViolated naming the failed constraint.
InitialCondition make_initial_condition(const InitialSpec& spec, const RadialGrid& grid,
                                        const ProblemParams& params);

enum class Scheme { Explicit, SemiImplicit };
enum class Termination { Extinct, HorizonReached, Diverged };

std::string_view to_string(Scheme scheme);
std::string_view to_string(Termination termination);

struct SolverConfig {
    Scheme scheme = Scheme::Explicit;
    double safety = 0.9;
    double t_end = 1.0;
    double snapshot_interval = 0.0;  // 0: initial and final snapshots only
    int series_stride = 1;
    Regularization reg;
    OperatorOptions op{HamiltonianStencil::Upwind};
    double tol_ext = 0.0;
    double tol_pos = 0.0;
    bool lift = false;
    std::optional<double> max_dt;  // cap, mainly for the semi-implicit scheme
};

/// Series row; all quantities measured on u minus the constant baseline.
struct SeriesRow {
    double t;
    double max_u;
    double support_radius;
    double mass;
};

struct Snapshot {
    double t;
    Field field;      // baseline removed
    double baseline;  // constant added by the lift (minus counterterm drift)
};

struct SimulationResult {
    std::vector<SeriesRow> series;
    std::vector<Snapshot> snapshots;
    std::optional<double> extinction_time;
    Termination termination = Termination::HorizonReached;
    long steps = 0;
    double last_dt = 0.0;
    double min_dt = 0.0;
};

/// Called after every accepted step (and once at t = 0) with baseline-removed values.
using StepObserver = std::function<void(double t, std::span<const double> u)>;

SimulationResult run(const InitialCondition& ic, const ProblemParams& params, const SolverConfig& cfg,
                     const StepObserver& observer = {});

/// First time max_u <= tol, interpolating log max_u linearly across the crossing.
/// A value exactly equal to tol returns that row's time.
std::optional<double> detect_extinction(std::span<const SeriesRow> series, double tol);

/// eps = relative * (largest initial face gradient, Dirichlet ghost included);
/// falls back to `relative` for a flat field.
double default_epsilon(const Field& initial, double relative = 1e-6);

/// Extinction / positivity threshold relative to the initial sup norm.
double default_tolerance(double sup_norm, double relative = 1e-7);

/// Explicit scheme, upwind Hamiltonian, counterterm on, eps and tolerances from
/// default_epsilon / default_tolerance of the initial data.
SolverConfig default_solver_config(const InitialCondition& ic, const ProblemParams& params);

/// Weighted mass sum r_i^{N-1} u_i dr.
double weighted_mass(const Field& field);

void write_series_csv(std::ostream& os, std::span<const SeriesRow> series);

nlohmann::json to_json(const SolverConfig& cfg);
nlohmann::json to_json(const InitialSpec& spec);

}  // namespace hjlab
