#include "hjlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <tuple>
#include <ostream>
#include <sstream>

#include "hjlab/analysis.hpp"
#include "hjlab/error.hpp"

namespace hjlab {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

[[noreturn]] void violated(const std::string& what) { throw Error(ErrorCode::HypothesisViolated, what); }

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) violated(std::string(name) + " must be positive and finite");
}

// Solves a tridiagonal system in place (Thomas algorithm); diag dominant by construction.
void solve_tridiagonal(std::span<const double> lower, std::span<double> diag, std::span<const double> upper,
                       std::span<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

std::string_view to_string(InitialKind kind) {
    switch (kind) {
        case InitialKind::Bump: return "Bump";
        case InitialKind::FastDecay: return "FastDecay";
        case InitialKind::FatTail: return "FatTail";
        case InitialKind::Custom: return "Custom";
    }
    return "?";
}

InitialKind initial_kind_from_string(std::string_view name) {
    for (InitialKind k : {InitialKind::Bump, InitialKind::FastDecay, InitialKind::FatTail, InitialKind::Custom}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorCode::Config, "ic.kind: unknown kind '" + std::string(name) + "'");
}

std::string_view to_string(Scheme scheme) {
    return scheme == Scheme::Explicit ? "explicit" : "semi-implicit";
}

std::string_view to_string(Termination termination) {
    switch (termination) {
        case Termination::Extinct: return "Extinct";
        case Termination::HorizonReached: return "HorizonReached";
        case Termination::Diverged: return "Diverged";
    }
    return "?";
}

InitialCondition make_initial_condition(const InitialSpec& spec, const RadialGrid& grid,
                                        const ProblemParams& params) {
    InitialCondition ic{spec, Field{grid, {}}, {}, std::nullopt};
    switch (spec.kind) {
        case InitialKind::Bump: {
            require_positive(spec.amplitude, "bump amplitude");
            require_positive(spec.radius, "bump radius");
            if (grid.r_max < 2.0 * spec.radius) {
                violated("grid.r_max = " + fmt(grid.r_max) + " must be at least twice the bump radius " +
                         fmt(spec.radius));
            }
            const bool single = classify_regime(params) == Regime::SinglePointRange;
            std::optional<double> omega;
            if (single) omega = *derive_constants(params).barrier_exponent;
            if (!spec.exponent && !omega) {
                violated("bump exponent must be given outside the single-point range (no barrier exponent)");
            }
            const double e = spec.exponent.value_or(omega.value_or(1.0));
            if (!(e >= 1.0)) violated("bump exponent " + fmt(e) + " < 1 gives a non-Lipschitz profile");
            ic.spec.exponent = e;
            if (omega && e == *omega) {
                const double kappa = *derive_constants(params).barrier_amplitude;
                const double m_max = kappa * std::pow(2.0 * spec.radius, -e);
                if (spec.amplitude > m_max * (1.0 + 1e-12)) {
                    violated("barrier bound: bump amplitude " + fmt(spec.amplitude) + " exceeds kappa (2 R0)^-omega = " +
                             fmt(m_max));
                }
                ic.certificate = BumpCertificate{
                    m_max, 2.0 * std::pow(spec.amplitude, 1.0 / e) * std::pow(spec.radius, 2.0 - e)};
            }
            const double m = spec.amplitude, r2 = spec.radius * spec.radius;
            ic.profile = [m, r2, e](double r) {
                const double s = r2 - r * r;
                return s > 0.0 ? m * std::pow(s, e) : 0.0;
            };
            break;
        }
        case InitialKind::FastDecay:
        case InitialKind::FatTail: {
            require_positive(spec.amplitude, "amplitude");
            if (!(params.q < 1.0)) violated("decay thresholds need q < 1");
            const double threshold = params.q / (1.0 - params.q);
            if (spec.kind == InitialKind::FastDecay && !(spec.decay > threshold)) {
                violated("decay threshold: FastDecay needs theta = " + fmt(spec.decay) + " > q/(1-q) = " +
                         fmt(threshold));
            }
            if (spec.kind == InitialKind::FatTail && !(spec.decay > 0.0 && spec.decay < threshold)) {
                violated("fat-tail threshold: FatTail needs 0 < rho = " + fmt(spec.decay) + " < q/(1-q) = " +
                         fmt(threshold));
            }
            const double c = spec.amplitude, h = -spec.decay / 2.0;
            ic.profile = [c, h](double r) { return c * std::pow(1.0 + r * r, h); };
            break;
        }
        case InitialKind::Custom: {
            if (spec.values.size() != static_cast<std::size_t>(grid.cells)) {
                violated("custom initial data has " + std::to_string(spec.values.size()) + " values for " +
                         std::to_string(grid.cells) + " cells");
            }
            double top = 0.0;
            for (double v : spec.values) {
                if (!std::isfinite(v) || v < 0.0) violated("custom initial data must be finite and nonnegative");
                top = std::max(top, v);
            }
            for (std::size_t i = 1; i < spec.values.size(); ++i) {
                if (spec.values[i] > spec.values[i - 1] + 1e-14 * top) {
                    violated("custom initial data must be radially non-increasing (cell " + std::to_string(i) + ")");
                }
            }
            ic.field.values = spec.values;
            return ic;
        }
    }
    ic.field = sample(grid, ic.profile);
    return ic;
}

double default_epsilon(const Field& initial, double relative) {
    const std::vector<double> g = face_gradient(initial, 0.0);
    double g_max = 0.0;
    for (double v : g) g_max = std::max(g_max, std::abs(v));
    return relative * (g_max > 0.0 ? g_max : 1.0);
}

double default_tolerance(double sup_norm, double relative) { return relative * sup_norm; }

SolverConfig default_solver_config(const InitialCondition& ic, const ProblemParams& params) {
    SolverConfig cfg;
    cfg.reg = Regularization::make(params, default_epsilon(ic.field));
    cfg.tol_ext = default_tolerance(ic.sup_norm());
    cfg.tol_pos = cfg.tol_ext;
    return cfg;
}

double weighted_mass(const Field& field) {
    const RadialGrid& g = field.grid;
    double mass = 0.0;
    for (int i = 0; i < g.cells; ++i) {
        mass += std::pow(g.center(i), g.dim - 1) * field.values[static_cast<std::size_t>(i)];
    }
    return mass * g.spacing();
}

std::optional<double> detect_extinction(std::span<const SeriesRow> series, double tol) {
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double y = series[k].max_u;
        if (y > tol) continue;
        if (k == 0 || y == tol) return series[k].t;
        const SeriesRow& a = series[k - 1];
        const SeriesRow& b = series[k];
        double s;
        if (y > 0.0 && tol > 0.0) {
            s = (std::log(tol) - std::log(a.max_u)) / (std::log(y) - std::log(a.max_u));
        } else {
            s = (a.max_u - tol) / (a.max_u - y);
        }
        return a.t + std::clamp(s, 0.0, 1.0) * (b.t - a.t);
    }
    return std::nullopt;
}

SimulationResult run(const InitialCondition& ic, const ProblemParams& params, const SolverConfig& cfg,
                     const StepObserver& observer) {
    if (!(cfg.t_end >= 0.0)) throw Error(ErrorCode::Config, "solver.t_end must be nonnegative");
    if (cfg.series_stride < 1) throw Error(ErrorCode::Config, "solver.series_stride must be >= 1");
    if (!(cfg.tol_ext >= 0.0) || !(cfg.tol_pos >= 0.0)) throw Error(ErrorCode::Config, "tolerances must be >= 0");

    const RadialGrid& grid = ic.field.grid;
    const std::size_t m = ic.field.values.size();
    const DiscreteOperator op(grid, params, cfg.reg, cfg.op);
    const double dr = grid.spacing();

    // The evolution commutes with adding constants once the ghost follows the
    // same constant, so the state carries baseline(t) and diagnostics remove it.
    const double lift = cfg.lift ? cfg.reg.lift() : 0.0;
    const double drift = (!cfg.reg.counterterm && cfg.op.absorption) ? std::pow(cfg.reg.eps, params.q) : 0.0;
    const auto baseline = [&](double t) { return lift - drift * t; };

    std::vector<double> u(ic.field.values);
    for (double& v : u) v += lift;
    std::vector<double> work(m), shifted(m);
    std::vector<double> weights(m);
    for (std::size_t i = 0; i < m; ++i) weights[i] = std::pow(grid.center(static_cast<int>(i)), grid.dim - 1) * dr;

    const double bound = 2.0 * ic.sup_norm();
    SimulationResult res;
    res.min_dt = std::numeric_limits<double>::infinity();

    const auto measure = [&](double t) {
        const double b = baseline(t);
        SeriesRow row{t, 0.0, 0.0, 0.0};
        bool finite = true;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = u[i] - b;
            shifted[i] = v;
            finite = finite && std::isfinite(v);
            row.max_u = std::max(row.max_u, v);
            row.mass += weights[i] * v;
        }
        row.support_radius = support_radius(grid, shifted, cfg.tol_pos);
        return std::pair{row, finite};
    };
    const auto snapshot = [&](double t) {
        res.snapshots.push_back(Snapshot{t, Field{grid, shifted}, baseline(t)});
    };

    double t = 0.0;
    auto [row, finite] = measure(t);
    res.series.push_back(row);
    snapshot(t);
    if (observer) observer(t, shifted);
    if (row.max_u <= cfg.tol_ext) {
        res.termination = Termination::Extinct;
        res.extinction_time = 0.0;
        return res;
    }

    double next_snapshot = cfg.snapshot_interval > 0.0 ? cfg.snapshot_interval : cfg.t_end;
    SeriesRow previous = row;
    bool previous_recorded = true;
    std::vector<double> lower(m), diag(m), upper(m), faces(m + 1);
    // Cheaper than the per-field bound and never larger than it.
    const std::optional<double> uniform_dt = op.uniform_stable_dt(cfg.safety);

    while (t < cfg.t_end) {
        const double ghost = baseline(t);
        double dt;
        if (cfg.scheme == Scheme::Explicit) {
            dt = uniform_dt ? *uniform_dt : op.stable_dt(u, ghost, cfg.safety);
        } else {
            const double rate = op.absorption_rate(u, ghost);
            dt = rate > 0.0 ? cfg.safety * dr / rate : cfg.t_end;
        }
        if (cfg.max_dt) dt = std::min(dt, *cfg.max_dt);
        const double stop = std::min(cfg.t_end, next_snapshot);
        bool at_stop = false;
        if (t + dt >= stop * (1.0 - 1e-15)) {
            dt = stop - t;
            at_stop = true;
        }

        if (cfg.scheme == Scheme::Explicit) {
            op.rhs(u, ghost, work);
            for (std::size_t i = 0; i < m; ++i) u[i] += dt * work[i];
        } else {
            // Diffusivity frozen at the old gradients; Hamiltonian explicit.
            op.face_gradient(u, ghost, faces);
            const double source = (cfg.reg.counterterm && cfg.op.absorption) ? std::pow(cfg.reg.eps, params.q) : 0.0;
            const double k = dt / (dr * dr);
            const double ghost_new = baseline(t + dt);
            for (std::size_t i = 0; i < m; ++i) {
                const int ii = static_cast<int>(i);
                const double ar = (i + 1 == m && cfg.op.outer == OuterBoundary::ZeroFlux)
                                      ? 0.0
                                      : op.weight_right(ii) * op.diffusivity(faces[i + 1]) * k;
                const double al = i == 0 ? 0.0 : op.weight_left(ii) * op.diffusivity(faces[i]) * k;
                lower[i] = -al;
                upper[i] = i + 1 < m ? -ar : 0.0;
                diag[i] = 1.0 + al + ar;
                double rhs = u[i];
                if (cfg.op.absorption) rhs += dt * (source - op.hamiltonian(op.hamiltonian_argument(faces[i], faces[i + 1])));
                if (i + 1 == m) rhs += ar * ghost_new;
                work[i] = rhs;
            }
            solve_tridiagonal(lower, diag, upper, work);
            u.swap(work);
        }
        t = at_stop ? stop : t + dt;
        ++res.steps;
        res.last_dt = dt;
        res.min_dt = std::min(res.min_dt, dt);

        std::tie(row, finite) = measure(t);
        if (observer) observer(t, shifted);
        const bool diverged = !finite || row.max_u > bound + 1e-12;
        const bool extinct = !diverged && row.max_u <= cfg.tol_ext;
        const bool terminal = diverged || extinct || t >= cfg.t_end;
        if (extinct && !previous_recorded) res.series.push_back(previous);
        if (terminal || res.steps % cfg.series_stride == 0) {
            res.series.push_back(row);
            previous_recorded = true;
        } else {
            previous_recorded = false;
        }
        previous = row;
        if (at_stop && t < cfg.t_end && !terminal) {
            snapshot(t);
            next_snapshot += cfg.snapshot_interval;
        }
        if (terminal) {
            snapshot(t);
            if (diverged) {
                res.termination = Termination::Diverged;
            } else if (extinct) {
                res.termination = Termination::Extinct;
                res.extinction_time = detect_extinction(res.series, cfg.tol_ext);
            } else {
                res.termination = Termination::HorizonReached;
            }
            return res;
        }
    }
    res.termination = Termination::HorizonReached;
    return res;
}

void write_series_csv(std::ostream& os, std::span<const SeriesRow> series) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "t,max_u,support_radius,mass\n" << std::setprecision(17);
    for (const SeriesRow& r : series) os << r.t << ',' << r.max_u << ',' << r.support_radius << ',' << r.mass << '\n';
    os.flags(flags);
    os.precision(prec);
}

nlohmann::json to_json(const SolverConfig& cfg) {
    nlohmann::json j;
    j["scheme"] = std::string(to_string(cfg.scheme));
    j["safety"] = cfg.safety;
    j["t_end"] = cfg.t_end;
    j["snapshot_interval"] = cfg.snapshot_interval;
    j["series_stride"] = cfg.series_stride;
    j["eps"] = cfg.reg.eps;
    j["lift_exponent"] = cfg.reg.lift_exponent;
    j["counterterm"] = cfg.reg.counterterm;
    j["hamiltonian"] = cfg.op.stencil == HamiltonianStencil::Centered ? "centered" : "upwind";
    j["tol_ext"] = cfg.tol_ext;
    j["tol_pos"] = cfg.tol_pos;
    j["lift"] = cfg.lift;
    j["max_dt"] = cfg.max_dt ? nlohmann::json(*cfg.max_dt) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const InitialSpec& spec) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(spec.kind));
    switch (spec.kind) {
        case InitialKind::Bump:
            j["amplitude"] = spec.amplitude;
            j["radius"] = spec.radius;
            j["exponent"] = spec.exponent ? nlohmann::json(*spec.exponent) : nlohmann::json(nullptr);
            break;
        case InitialKind::FastDecay:
        case InitialKind::FatTail:
            j["amplitude"] = spec.amplitude;
            j["decay"] = spec.decay;
            break;
        case InitialKind::Custom:
            j["values"] = spec.values;
            break;
    }
    return j;
}

}  // namespace hjlab
