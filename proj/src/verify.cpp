#include "hjlab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "hjlab/analysis.hpp"
#include "hjlab/closedform.hpp"
#include "hjlab/error.hpp"
#include "hjlab/exponents.hpp"
#include "hjlab/gridop.hpp"
#include "hjlab/sampling.hpp"
#include "hjlab/solver.hpp"

namespace hjlab {

namespace {

using nlohmann::json;

constexpr ProblemParams kRefA{1, 2.0, 0.5};
constexpr ProblemParams kRefB{2, 1.8, 0.6};
constexpr ProblemParams kRefC{2, 1.8, 0.85};

// Comparison checks use a tighter band than the extinction threshold would allow.
constexpr double kCompareRel = 1e-6;

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

struct Criterion {
    int id;
    const char* suite;
    const char* title;
};

constexpr Criterion kCriteria[] = {
    {1, "algebra", "exponent identities"},
    {2, "closedform", "barrier is a steady solution"},
    {3, "closedform", "comparison-function sign certificates"},
    {4, "scheme", "discrete comparison, maximum principle, monotonicity"},
    {5, "phenomena", "finite-time extinction and rate band"},
    {6, "phenomena", "single-point extinction"},
    {7, "phenomena", "no waiting time: support stays in the initial ball"},
    {8, "phenomena", "instantaneous shrinking of fast-decaying data"},
    {9, "phenomena", "fat tails do not go extinct"},
    {10, "phenomena", "complete extinction keeps full positivity"},
    {11, "phenomena", "gradient estimate envelope"},
    {12, "phenomena", "gradient lower-bound functional"},
    {13, "phenomena", "extinction before the self-similar horizon"},
};

const Criterion& criterion(int id) {
    for (const Criterion& c : kCriteria) {
        if (c.id == id) return c;
    }
    throw Error(ErrorCode::Config, "verify: unknown criterion " + std::to_string(id));
}

// Fires at t = 0 and then whenever `interval` has elapsed since the last firing.
class Throttle {
public:
    explicit Throttle(double interval) : interval_(interval) {}
    bool due(double t) {
        if (t < next_) return false;
        next_ = t + interval_;
        return true;
    }

private:
    double interval_;
    double next_ = 0.0;
};

struct Prepared {
    InitialCondition ic;
    SolverConfig cfg;
};

Prepared prepare(const ProblemParams& pp, const InitialSpec& spec, double r_max, int cells, Scheme scheme,
                 double t_end) {
    const RadialGrid grid = RadialGrid::make(pp.N, r_max, cells);
    InitialCondition ic = make_initial_condition(spec, grid, pp);
    SolverConfig cfg = default_solver_config(ic, pp);
    cfg.scheme = scheme;
    cfg.t_end = t_end;
    return {std::move(ic), cfg};
}

InitialSpec reference_bump(const ProblemParams& pp, double R0 = 1.0) {
    const DerivedConstants c = derive_constants(pp);
    InitialSpec spec;
    spec.kind = InitialKind::Bump;
    spec.radius = R0;
    spec.amplitude = *c.barrier_amplitude * std::pow(2.0 * R0, -*c.barrier_exponent);
    return spec;
}

// A simulation plus the streamed diagnostics that need per-step data.
struct BumpRun {
    Prepared setup;
    SimulationResult result;
    double seconds = 0.0;
    std::optional<GradientEnvelope> gradient;
    std::optional<JDiagnostic> j;

    double extinction_time() const { return result.extinction_time.value_or(result.series.back().t); }
};

json run_json(const BumpRun& run) {
    return {{"cells", run.setup.ic.field.grid.cells},
            {"termination", std::string(to_string(run.result.termination))},
            {"extinction_time", run.result.extinction_time ? json(*run.result.extinction_time) : json(nullptr)},
            {"steps", run.result.steps},
            {"eps", run.setup.cfg.reg.eps},
            {"tol_ext", run.setup.cfg.tol_ext},
            {"seconds", run.seconds}};
}

double since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- 1

CriterionResult check_identities(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    constexpr int kTrials = 10000;
    double worst_power = 0.0, worst_product = 0.0, worst_selfsim = 0.0;
    int failures = 0;
    for (int k = 0; k < kTrials; ++k) {
        const ProblemParams pp = random_single_point(rng);
        const DerivedConstants c = derive_constants(pp);
        const double q = pp.q;
        const double e1 = std::abs(*c.barrier_exponent - *c.shrink_power) / *c.barrier_exponent;
        const double target = q / (1.0 - q);
        const double e2 = std::abs(*c.barrier_exponent * *c.shrink_tail_min - target) / target;
        const double a = *c.selfsim_amplitude_exponent, b = *c.selfsim_space_exponent;
        // Relative to the operands: a - 1 cancels for small q.
        const double e3 = std::abs((a - 1.0) - q * (a + b)) / (1.0 + std::abs(a) + std::abs(b));
        worst_power = std::max(worst_power, e1);
        worst_product = std::max(worst_product, e2);
        worst_selfsim = std::max(worst_selfsim, e3);
        if (!(e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12)) ++failures;
    }
    CriterionResult r;
    r.pass = failures == 0;
    r.summary = std::to_string(kTrials - failures) + "/" + std::to_string(kTrials) +
                " triples, worst relative errors " + fmt(worst_power, 2) + ", " + fmt(worst_product, 2) + ", " +
                fmt(worst_selfsim, 2);
    r.detail = {{"trials", kTrials},
                {"failures", failures},
                {"tol", 1e-12},
                {"worst_outer_power", worst_power},
                {"worst_product", worst_product},
                {"worst_selfsim", worst_selfsim}};
    return r;
}

// ---------------------------------------------------------------- 2

CriterionResult check_barrier(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr int kSets = 100, kRadii = 50;
    double worst = 0.0;
    json worst_case;
    for (int k = 0; k < kSets; ++k) {
        // The gap keeps amplitude * r^exponent inside binary64 on [1e-3, 1e3].
        const ProblemParams pp = random_single_point(rng, 0.05);
        const ComparisonProfile bar(pp, make_barrier(pp));
        for (int i = 0; i < kRadii; ++i) {
            const double r = 1e-3 * std::pow(1e6, unit(rng));
            const OperatorValue v = apply_radial_operator(bar, 0.0, r);
            const double rel = std::abs(v.residual) / v.scale;
            if (!(rel <= worst)) {
                worst = rel;
                worst_case = {{"params", to_json(pp)}, {"r", r}, {"residual", v.residual}, {"scale", v.scale}};
            }
        }
    }
    CriterionResult r;
    r.pass = worst <= 1e-12;
    r.summary = std::to_string(kSets * kRadii) + " points, worst relative residual " + fmt(worst, 3);
    r.detail = {{"sets", kSets}, {"radii", kRadii}, {"tol", 1e-12}, {"worst", worst}, {"worst_case", worst_case}};
    return r;
}

// ---------------------------------------------------------------- 3

CriterionResult check_certificates() {
    const ProblemParams pp = kRefA;
    // (1+r^2)^{-3/2} <= 2^{3/2} (1+r)^{-3}.
    const ShrinkSuperParams shrink = make_shrink_super({std::pow(2.0, 1.5), 3.0}, pp, 1.0);
    const SampleBox shrink_box{0.0, shrink.horizon, shrink.inner_radius, 4.0 * shrink.inner_radius};
    const CertReport sigma = certify_sign(ComparisonProfile(pp, shrink), shrink_box, Sense::NonNegative);
    const CertReport control =
        certify_sign(ComparisonProfile(pp, invert_eta_law(shrink, pp)), shrink_box, Sense::NonNegative);

    const DerivedConstants c = derive_constants(pp);
    const double slope = 0.5 * *c.tail_sub_slope_max;
    const double offset = 2.0 * tail_sub_offset_threshold(pp, 1.0, slope);
    const CertReport tail = certify_sign(ComparisonProfile(pp, make_tail_sub(pp, 1.0, slope, offset)),
                                         {0.0, 0.99, 0.01, 10.0}, Sense::NonPositive);

    const AmplitudeBound bound = find_A0(kRefB);
    const CertReport selfsim =
        certify_sign(ComparisonProfile(kRefB, make_selfsim_super(kRefB, 1.0, 0.5 * bound.amplitude)),
                     {0.0, 0.99, 1e-3, 10.0}, Sense::NonNegative);

    CriterionResult r;
    r.pass = sigma.pass && !control.pass && tail.pass && selfsim.pass;
    r.summary = "shrinking super " + std::string(sigma.pass ? "ok" : "FAIL") + " (margin " +
                fmt(sigma.min_margin, 3) + "), inverted control " + (control.pass ? "PASSED (bad)" : "rejected") +
                ", tail sub " + (tail.pass ? "ok" : "FAIL") + ", self-similar super " +
                (selfsim.pass ? "ok" : "FAIL") + " (A0 = " + fmt(bound.amplitude, 4) + ")";
    r.detail = {{"shrink_super", to_json(sigma)},
                {"inverted_control", to_json(control)},
                {"tail_sub", to_json(tail)},
                {"selfsim_super", to_json(selfsim)},
                {"A0", bound.amplitude}};
    return r;
}

// ---------------------------------------------------------------- 4

struct SchemeTally {
    int trials = 0;
    int failures = 0;
    double worst = 0.0;  // largest violation; the fields are O(1) so the slack is absolute
    json worst_case;
    void record(double violation, const json& context) {
        ++trials;
        if (violation > 1e-10) ++failures;
        if (violation > worst) {
            worst = violation;
            worst_case = context;
        }
    }
    json to_json() const {
        return {{"trials", trials}, {"failures", failures}, {"worst", worst}, {"worst_case", worst_case}};
    }
};

CriterionResult check_scheme(std::uint64_t seed, int trials) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr int kCells = 256, kSteps = 20;
    SchemeTally comparison, step_order, max_explicit, max_semi, mono_explicit, mono_semi;

    for (int k = 0; k < trials; ++k) {
        const ProblemParams pp = random_single_point(rng, 0.05);
        const RadialGrid grid = RadialGrid::make(pp.N, 0.5 + 3.5 * unit(rng), kCells);
        std::vector<double> u(kCells), v(kCells), mono(kCells);
        for (int i = 0; i < kCells; ++i) {
            const std::size_t s = static_cast<std::size_t>(i);
            u[s] = unit(rng);
            v[s] = unit(rng) < 0.2 ? u[s] : u[s] + 0.5 * unit(rng);
            mono[s] = unit(rng);
        }
        std::sort(mono.begin(), mono.end(), std::greater<>());
        const double g_max = std::max(*std::max_element(u.begin(), u.end()), 1.0) / grid.spacing();
        const double eps = g_max * std::pow(10.0, -8.0 + 6.0 * unit(rng));
        const Regularization reg = Regularization::make(pp, eps);
        const DiscreteOperator op(grid, pp, reg, {HamiltonianStencil::Upwind});
        const json context{{"trial", k}, {"params", to_json(pp)}, {"r_max", grid.r_max}, {"eps", eps}};

        // One step with the field-dependent bound shared by both states.
        {
            const double dt = std::min(op.stable_dt(u, 0.0, 0.9), op.stable_dt(v, 0.0, 0.9));
            std::vector<double> fu(kCells), fv(kCells);
            op.rhs(u, 0.0, fu);
            op.rhs(v, 0.0, fv);
            double worst = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                worst = std::max(worst, (u[i] + dt * fu[i]) - (v[i] + dt * fv[i]));
            }
            step_order.record(worst, context);
        }

        // Repeated steps with the uniform bound: ordering is kept along the way.
        {
            const double dt = *op.uniform_stable_dt(0.9);
            std::vector<double> a = u, b = v, fa(kCells), fb(kCells);
            double worst = 0.0;
            for (int n = 0; n < kSteps; ++n) {
                op.rhs(a, 0.0, fa);
                op.rhs(b, 0.0, fb);
                for (std::size_t i = 0; i < a.size(); ++i) {
                    a[i] += dt * fa[i];
                    b[i] += dt * fb[i];
                    worst = std::max(worst, a[i] - b[i]);
                }
            }
            comparison.record(worst, context);
        }

        // Maximum principle and radial monotonicity for both schemes via the solver.
        for (Scheme scheme : {Scheme::Explicit, Scheme::SemiImplicit}) {
            SolverConfig cfg;
            cfg.scheme = scheme;
            cfg.reg = reg;
            cfg.t_end = kSteps * *op.uniform_stable_dt(0.9);
            cfg.max_dt = *op.uniform_stable_dt(0.9);
            for (bool monotone : {false, true}) {
                // Built directly: the unsorted field is not admissible Custom data.
                const std::vector<double>& values = monotone ? mono : u;
                const InitialCondition ic{InitialSpec{InitialKind::Custom, 1.0, 1.0, {}, 1.0, values},
                                          Field{grid, values}, {}, std::nullopt};
                const double top = ic.sup_norm();
                double worst = 0.0, worst_t = 0.0;
                std::size_t worst_cell = 0;
                run(ic, pp, cfg, [&](double t, std::span<const double> w) {
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        const double v = monotone ? (i > 0 ? w[i] - w[i - 1] : 0.0) : std::max(-w[i], w[i] - top);
                        if (v > worst) {
                            worst = v;
                            worst_t = t;
                            worst_cell = i;
                        }
                    }
                });
                SchemeTally& tally = monotone ? (scheme == Scheme::Explicit ? mono_explicit : mono_semi)
                                              : (scheme == Scheme::Explicit ? max_explicit : max_semi);
                tally.record(worst, {{"trial", context}, {"cell", worst_cell}, {"t", worst_t}});
            }
        }
    }
    CriterionResult r;
    const SchemeTally* all[] = {&comparison, &step_order, &max_explicit, &max_semi, &mono_explicit, &mono_semi};
    r.pass = std::all_of(std::begin(all), std::end(all), [](const SchemeTally* t) { return t->failures == 0; });
    int failures = 0;
    double worst = 0.0;
    for (const SchemeTally* t : all) {
        failures += t->failures;
        worst = std::max(worst, t->worst);
    }
    r.summary = std::to_string(trials) + " trials x 6 properties, " + std::to_string(failures) +
                " failures, worst violation " + fmt(worst, 3) + " (slack 1e-10)";
    r.detail = {{"cells", kCells},
                {"steps", kSteps},
                {"slack", 1e-10},
                {"comparison", comparison.to_json()},
                {"monotone_step", step_order.to_json()},
                {"max_principle_explicit", max_explicit.to_json()},
                {"max_principle_semi_implicit", max_semi.to_json()},
                {"radial_monotonicity_explicit", mono_explicit.to_json()},
                {"radial_monotonicity_semi_implicit", mono_semi.to_json()}};
    return r;
}

}  // namespace

// ---------------------------------------------------------------- cache

struct Verifier::Cache {
    std::map<std::string, BumpRun> runs;

    // Reference bump A: plain runs carry the gradient envelope, lifted runs the J trace.
    const BumpRun& config_a(int cells, bool lift) {
        const std::string key = std::string(lift ? "A-lift-" : "A-") + std::to_string(cells);
        if (auto it = runs.find(key); it != runs.end()) return it->second;
        BumpRun run;
        run.setup = prepare(kRefA, reference_bump(kRefA), 4.0, cells, Scheme::Explicit, 1.0);
        run.setup.cfg.lift = lift;
        Throttle every(5e-5);
        GradientEstimate grad(kRefA, run.setup.ic.sup_norm(), GradientForm::Proven);
        JDiagnostic j(kRefA, run.setup.ic.spec.radius, run.setup.cfg.tol_pos);
        const RadialGrid grid = run.setup.ic.field.grid;
        const auto start = std::chrono::steady_clock::now();
        run.result = hjlab::run(run.setup.ic, kRefA, run.setup.cfg, [&](double t, std::span<const double> u) {
            if (!every.due(t)) return;
            if (lift) {
                j.observe(t, grid, u);
            } else {
                grad.observe(t, grid, u);
            }
        });
        run.seconds = since(start);
        if (lift) {
            run.j = j;
        } else {
            run.gradient = grad.envelope();
        }
        return runs.emplace(key, std::move(run)).first->second;
    }

    const BumpRun& config_b(int cells) {
        const std::string key = "B-" + std::to_string(cells);
        if (auto it = runs.find(key); it != runs.end()) return it->second;
        BumpRun run;
        run.setup = prepare(kRefB, reference_bump(kRefB), 4.0, cells, Scheme::SemiImplicit, 1.0);
        Throttle every(2e-6);
        GradientEstimate grad(kRefB, run.setup.ic.sup_norm(), GradientForm::Template);
        const RadialGrid grid = run.setup.ic.field.grid;
        const auto start = std::chrono::steady_clock::now();
        run.result = hjlab::run(run.setup.ic, kRefB, run.setup.cfg, [&](double t, std::span<const double> u) {
            if (every.due(t)) grad.observe(t, grid, u);
        });
        run.seconds = since(start);
        run.gradient = grad.envelope();
        return runs.emplace(key, std::move(run)).first->second;
    }
};

namespace {

// ---------------------------------------------------------------- 5-7

CriterionResult check_extinction_rate(const BumpRun& coarse, const BumpRun& fine) {
    CriterionResult r;
    const DerivedConstants c = derive_constants(kRefA);
    const double lo = *c.rate_upper_p2 - 0.1, hi = *c.rate_lower + 0.1;
    r.detail = {{"coarse", run_json(coarse)}, {"fine", run_json(fine)}, {"band", {lo, hi}}};
    if (coarse.result.termination != Termination::Extinct || fine.result.termination != Termination::Extinct) {
        r.summary = "run did not go extinct";
        return r;
    }
    const double te = coarse.extinction_time();
    const FitWindow w = default_fit_window(coarse.result.series, te, coarse.setup.cfg.tol_ext, coarse.result.last_dt);
    const ExponentFit fit = fit_max_decay(coarse.result.series, te, w);
    const double change = std::abs(fine.extinction_time() / te - 1.0);
    r.pass = fit.exponent >= lo && fit.exponent <= hi && change <= 0.03;
    r.summary = "T_e = " + fmt(te, 6) + ", max_u exponent " + fmt(fit.exponent, 4) + " in [" + fmt(lo, 3) + ", " +
                fmt(hi, 3) + "], T_e change under refinement " + fmt(100.0 * change, 3) + "%";
    r.detail["fit"] = to_json(fit);
    r.detail["extinction_time_change"] = change;
    return r;
}

CriterionResult check_single_point(const BumpRun& run) {
    CriterionResult r;
    r.detail = {{"run", run_json(run)}};
    if (run.result.termination != Termination::Extinct) {
        r.summary = "run did not go extinct";
        return r;
    }
    const double te = run.extinction_time();
    const auto& series = run.result.series;
    const FitWindow w = default_fit_window(series, te, run.setup.cfg.tol_ext, run.result.last_dt);
    const SupportFit fit = fit_support_exponents(series, te, kRefA, w);
    // Last row still above the extinction threshold.
    double final_support = 0.0, final_t = 0.0;
    for (const SeriesRow& row : series) {
        if (row.max_u > run.setup.cfg.tol_ext) {
            final_support = row.support_radius;
            final_t = row.t;
        }
    }
    const double dr = run.setup.ic.field.grid.spacing();
    r.pass = fit.pass && final_support <= 5.0 * dr;
    r.summary = "support exponent " + fmt(fit.fit.exponent, 4) + " in [" + fmt(fit.band_lo, 3) + ", " +
                fmt(fit.band_hi, 3) + "], final support " + fmt(final_support, 3) + " (5 dr = " + fmt(5.0 * dr, 3) +
                ")";
    r.detail["fit"] = to_json(fit);
    r.detail["final_support"] = {{"t", final_t}, {"radius", final_support}, {"limit", 5.0 * dr}};
    return r;
}

CriterionResult check_localization(const BumpRun& run) {
    CriterionResult r;
    const double dr = run.setup.ic.field.grid.spacing();
    const double limit = run.setup.ic.spec.radius + 2.0 * dr;
    double widest = 0.0, at = 0.0;
    for (const SeriesRow& row : run.result.series) {
        if (row.support_radius > widest) {
            widest = row.support_radius;
            at = row.t;
        }
    }
    const double proven = localization_radius(run.setup.ic.spec.radius, run.setup.ic.sup_norm(), kRefA);
    r.pass = widest <= limit && run.result.series.size() == static_cast<std::size_t>(run.result.steps) + 1;
    r.summary = "widest support " + fmt(widest, 6) + " <= R0 + 2 dr = " + fmt(limit, 6) + " over " +
                std::to_string(run.result.series.size()) + " stored steps";
    r.detail = {{"run", run_json(run)},       {"widest", widest}, {"t_widest", at},
                {"limit", limit},             {"localization_radius", proven},
                {"rows", run.result.series.size()}};
    return r;
}

// ---------------------------------------------------------------- 8

CriterionResult check_shrinking() {
    const ProblemParams pp = kRefA;
    InitialSpec spec;
    spec.kind = InitialKind::FastDecay;
    spec.amplitude = 1.0;
    spec.decay = 3.0;
    constexpr double kProbe = 0.01;
    Prepared setup = prepare(pp, spec, 32.0, 2048, Scheme::Explicit, 2.0 * kProbe);
    const RadialGrid grid = setup.ic.field.grid;
    const double tol_pos = setup.cfg.tol_pos;

    const ShrinkSuperParams shrink = make_shrink_super({std::pow(2.0, 1.5), 3.0}, pp, setup.ic.sup_norm());
    const ComparisonProfile sigma(pp, shrink);
    DominationCheck dom(sigma, Side::Below, kCompareRel * setup.ic.sup_norm(),
                        {0.0, std::min(shrink.horizon, setup.cfg.t_end), shrink.inner_radius});
    Throttle every(1e-4);
    const auto start = std::chrono::steady_clock::now();
    const SimulationResult res = run(setup.ic, pp, setup.cfg, [&](double t, std::span<const double> u) {
        if (every.due(t)) dom.observe(t, grid, u);
    });
    const double seconds = since(start);

    const double min_u0 = *std::min_element(setup.ic.field.values.begin(), setup.ic.field.values.end());
    double support_at_probe = grid.r_max;
    double largest_increase = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    for (const SeriesRow& row : res.series) {
        if (row.t <= kProbe) support_at_probe = row.support_radius;
        if (row.t > 0.0) largest_increase = std::max(largest_increase, row.support_radius - previous);
        previous = row.support_radius;
    }
    const DominationReport report = dom.report();
    const bool shrunk = support_at_probe < 0.5 * grid.r_max;
    const bool decreasing = largest_increase <= 0.0;
    const bool positive = min_u0 > tol_pos;

    CriterionResult r;
    r.pass = shrunk && decreasing && positive && report.pass;
    r.summary = "support at t = 0.01 is " + fmt(support_at_probe, 4) + " (need < " + fmt(0.5 * grid.r_max, 3) +
                "), non-increasing " + (decreasing ? "yes" : "no") + ", min u0 " + fmt(min_u0, 3) +
                " > tol_pos, domination " + (report.pass ? "ok" : "FAIL");
    r.detail = {{"termination", std::string(to_string(res.termination))},
                {"steps", res.steps},
                {"seconds", seconds},
                {"eps", setup.cfg.reg.eps},
                {"tol_pos", tol_pos},
                {"support_at_probe", support_at_probe},
                {"largest_support_increase", largest_increase},
                {"min_initial", min_u0},
                {"shrink_super", sigma.to_json()},
                {"domination", to_json(report)}};
    return r;
}

// ---------------------------------------------------------------- 9

CriterionResult check_fat_tail() {
    const ProblemParams pp = kRefA;
    InitialSpec spec;
    spec.kind = InitialKind::FatTail;
    spec.amplitude = 1.0;
    spec.decay = 0.5;
    Prepared setup = prepare(pp, spec, 32.0, 2048, Scheme::Explicit, 1.0);
    const RadialGrid grid = setup.ic.field.grid;

    // Largest subsolution below the data: offset chosen cell by cell at t = 0.
    const DerivedConstants c = derive_constants(pp);
    const double horizon = 1.01 * setup.cfg.t_end;
    const double slope = 0.5 * *c.tail_sub_slope_max;
    const double power = *c.tail_sub_power, decay = *c.tail_sub_decay;
    const double lead = std::pow(horizon, 1.0 / (1.0 - pp.q));
    double offset = tail_sub_offset_threshold(pp, horizon, slope);
    for (int i = 0; i < grid.cells; ++i) {
        const double need = std::pow(lead / setup.ic.field.values[static_cast<std::size_t>(i)], 1.0 / decay) -
                            slope * std::pow(grid.center(i), power);
        offset = std::max(offset, need);
    }
    offset *= 1.0 + 1e-9;
    const ComparisonProfile tail(pp, make_tail_sub(pp, horizon, slope, offset));
    const double tol = 10.0 * std::pow(setup.cfg.reg.eps, pp.q);
    const double r_half = 0.5 * grid.r_max;
    DominationCheck dom(tail, Side::Above, tol, {0.0, setup.cfg.t_end, 0.0, r_half});
    Throttle every(1e-3);
    const auto start = std::chrono::steady_clock::now();
    const SimulationResult res = run(setup.ic, pp, setup.cfg, [&](double t, std::span<const double> u) {
        if (every.due(t) || t >= setup.cfg.t_end) dom.observe(t, grid, u);
    });
    const double seconds = since(start);

    const Field& last = res.snapshots.back().field;
    double min_half = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.cells && grid.center(i) <= r_half; ++i) {
        min_half = std::min(min_half, last.values[static_cast<std::size_t>(i)]);
    }
    const DominationReport report = dom.report();
    CriterionResult r;
    r.pass = res.termination == Termination::HorizonReached && report.pass && min_half > setup.cfg.tol_pos;
    r.summary = std::string(to_string(res.termination)) + " at t = " + fmt(res.snapshots.back().t, 4) +
                ", min over r <= " + fmt(r_half, 3) + " of u = " + fmt(min_half, 4) +
                ", tail subsolution violation " + fmt(report.max_violation, 3) + " (tol " + fmt(tol, 3) + ")";
    r.detail = {{"termination", std::string(to_string(res.termination))},
                {"steps", res.steps},
                {"seconds", seconds},
                {"eps", setup.cfg.reg.eps},
                {"min_half", min_half},
                {"tail_sub", tail.to_json()},
                {"domination", to_json(report)}};
    return r;
}

// ---------------------------------------------------------------- 10

CriterionResult check_complete_extinction() {
    const ProblemParams pp = kRefC;
    InitialSpec spec;
    spec.kind = InitialKind::Bump;
    // Support reaches r_max / 2 so the inner region starts positive; sup u0 = 1.
    spec.amplitude = 1.0 / 16.0;
    spec.radius = 2.0;
    spec.exponent = 2.0;
    Prepared setup = prepare(pp, spec, 4.0, 1024, Scheme::SemiImplicit, 20.0);
    const RadialGrid grid = setup.ic.field.grid;
    const double r_half = 0.5 * grid.r_max;
    const double alive = 1e3 * setup.cfg.tol_ext;
    double worst = std::numeric_limits<double>::infinity(), worst_t = 0.0;
    long checked = 0;
    const auto start = std::chrono::steady_clock::now();
    const SimulationResult res = run(setup.ic, pp, setup.cfg, [&](double t, std::span<const double> u) {
        if (*std::max_element(u.begin(), u.end()) <= alive) return;
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid.cells && grid.center(i) <= r_half; ++i) m = std::min(m, u[static_cast<std::size_t>(i)]);
        ++checked;
        if (m < worst) {
            worst = m;
            worst_t = t;
        }
    });
    const double seconds = since(start);
    CriterionResult r;
    r.pass = res.termination == Termination::Extinct && worst > setup.cfg.tol_pos;
    r.summary = std::string(to_string(res.termination)) +
                (res.extinction_time ? " at T_e = " + fmt(*res.extinction_time, 5) : std::string()) +
                ", min over r <= " + fmt(r_half, 3) + " while alive " + fmt(worst, 3) + " (tol_pos " +
                fmt(setup.cfg.tol_pos, 3) + ")";
    r.detail = {{"termination", std::string(to_string(res.termination))},
                {"extinction_time", res.extinction_time ? json(*res.extinction_time) : json(nullptr)},
                {"steps", res.steps},
                {"seconds", seconds},
                {"eps", setup.cfg.reg.eps},
                {"tol_pos", setup.cfg.tol_pos},
                {"min_inner", worst},
                {"t_min_inner", worst_t},
                {"steps_checked", checked}};
    return r;
}

// ---------------------------------------------------------------- 11, 12

CriterionResult check_gradient(const BumpRun& a1, const BumpRun& a2, const BumpRun& b1, const BumpRun& b2) {
    const GradientEnvelope &ga = *a1.gradient, &gb = *a2.gradient, &ta = *b1.gradient, &tb = *b2.gradient;
    const bool a_ok = envelopes_stable(ga, gb);
    const bool b_ok = envelopes_stable(ta, tb);
    CriterionResult r;
    r.pass = a_ok && b_ok;
    r.summary = "proven form C = " + fmt(ga.sup_constant, 4) + " / " + fmt(gb.sup_constant, 4) +
                " (M, 2M), template form C = " + fmt(ta.sup_constant, 4) + " / " + fmt(tb.sup_constant, 4);
    r.detail = {{"proven", {{"coarse", to_json(ga)}, {"fine", to_json(gb)}, {"stable", a_ok}}},
                {"template", {{"coarse", to_json(ta)}, {"fine", to_json(tb)}, {"stable", b_ok}}},
                {"runs", {run_json(a1), run_json(a2), run_json(b1), run_json(b2)}},
                {"rel", 0.2}};
    return r;
}

json j_json(const BumpRun& run, double inf_delta, double max_rel) {
    const JDiagnostic& j = *run.j;
    return {{"run", run_json(run)},
            {"delta_initial", j.trace().empty() ? json(nullptr) : json(j.trace().front().delta_emp)},
            {"delta_probe", j.delta_probe()},
            {"inf_delta", inf_delta},
            {"max_relative_j", max_rel},
            {"samples", j.trace().size()},
            {"empty_snapshots", j.empty_snapshots()}};
}

CriterionResult check_j_functional(const BumpRun& coarse, const BumpRun& fine) {
    CriterionResult r;
    const JDiagnostic &jc = *coarse.j, &jf = *fine.j;
    if (jc.trace().empty() || jf.trace().empty()) {
        r.summary = "no J samples";
        return r;
    }
    const double d0 = jc.trace().front().delta_emp;
    const double oracle = bump_delta_initial(coarse.setup.ic.spec.amplitude, coarse.setup.ic.spec.radius, kRefA);
    const double inf_c = jc.inf_delta(0.9 * coarse.extinction_time());
    const double inf_f = jf.inf_delta(0.9 * fine.extinction_time());
    const double j_c = jc.max_relative_j(std::numeric_limits<double>::infinity());
    const double j_f = jf.max_relative_j(std::numeric_limits<double>::infinity());
    const double tol_j = 10.0 * coarse.setup.cfg.tol_pos;
    const bool floor_ok = inf_c >= 0.5 * d0;
    const bool stable = std::abs(inf_f / inf_c - 1.0) <= 0.2;
    const bool j_ok = j_c <= tol_j && j_f <= 10.0 * fine.setup.cfg.tol_pos;
    r.pass = floor_ok && stable && j_ok;
    r.summary = "inf delta " + fmt(inf_c, 4) + " / " + fmt(inf_f, 4) + " (M, 2M) vs delta(0) = " + fmt(d0, 4) +
                ", max J / scale " + fmt(std::max(j_c, j_f), 3) + " (limit " + fmt(tol_j, 3) + ")";
    r.detail = {{"coarse", j_json(coarse, inf_c, j_c)},
                {"fine", j_json(fine, inf_f, j_f)},
                {"delta_initial_closed_form", oracle},
                {"floor_ok", floor_ok},
                {"stable", stable},
                {"j_ok", j_ok}};
    return r;
}

// ---------------------------------------------------------------- 13

CriterionResult check_selfsim_horizon() {
    const ProblemParams pp = kRefB;
    const DerivedConstants c = derive_constants(pp);
    const double amplitude = 0.5 * find_A0(pp).amplitude;
    constexpr double kHorizon = 1.0;
    const SelfSimSuperParams shape = make_selfsim_super(pp, kHorizon, amplitude);
    const ComparisonProfile W(pp, shape);

    // Decay exactly at the threshold; at t = 0 and T >= 1 the profile sits below W.
    const RadialGrid grid = RadialGrid::make(pp.N, 16.0, 1024);
    const double theta = *c.decay_threshold;
    const double C = 0.99 * amplitude * std::pow(kHorizon, shape.amplitude_exponent);
    InitialSpec spec;
    spec.kind = InitialKind::Custom;
    spec.values = sample(grid, [&](double r) { return C * std::pow(1.0 + r * r, -0.5 * theta); }).values;
    const InitialCondition ic = make_initial_condition(spec, grid, pp);
    SolverConfig cfg = default_solver_config(ic, pp);
    cfg.scheme = Scheme::SemiImplicit;
    cfg.t_end = kHorizon;

    DominationCheck dom(W, Side::Below, kCompareRel * ic.sup_norm(), {0.0, 0.999 * kHorizon});
    const auto start = std::chrono::steady_clock::now();
    const SimulationResult res =
        run(ic, pp, cfg, [&](double t, std::span<const double> u) { dom.observe(t, grid, u); });
    const double seconds = since(start);
    const DominationReport report = dom.report();
    CriterionResult r;
    r.pass = res.termination == Termination::Extinct && res.extinction_time && *res.extinction_time <= kHorizon &&
             report.pass;
    r.summary = std::string(to_string(res.termination)) +
                (res.extinction_time ? " at T_e = " + fmt(*res.extinction_time, 5) : std::string()) +
                " <= horizon " + fmt(kHorizon, 3) + ", domination violation " + fmt(report.max_violation, 3) +
                " (tol " + fmt(report.tol, 3) + ")";
    r.detail = {{"termination", std::string(to_string(res.termination))},
                {"extinction_time", res.extinction_time ? json(*res.extinction_time) : json(nullptr)},
                {"steps", res.steps},
                {"seconds", seconds},
                {"eps", cfg.reg.eps},
                {"initial_amplitude", C},
                {"decay", theta},
                {"selfsim_super", W.to_json()},
                {"domination", to_json(report)}};
    return r;
}

}  // namespace

// ---------------------------------------------------------------- public

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"algebra", "closedform", "scheme", "phenomena"};
    return names;
}

std::vector<int> suite_criteria(std::string_view suite) {
    std::vector<int> ids;
    for (const Criterion& c : kCriteria) {
        if (suite == "all" || suite == c.suite) ids.push_back(c.id);
    }
    if (ids.empty()) throw Error(ErrorCode::Config, "verify: unknown suite '" + std::string(suite) + "'");
    return ids;
}

Verifier::Verifier(VerifyOptions options) : options_(options), cache_(std::make_unique<Cache>()) {}
Verifier::~Verifier() = default;

CriterionResult Verifier::run(int id) {
    const Criterion& meta = criterion(id);
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        switch (id) {
            case 1: r = check_identities(options_.seed); break;
            case 2: r = check_barrier(options_.seed + 1); break;
            case 3: r = check_certificates(); break;
            case 4: r = check_scheme(options_.seed + 2, options_.trials); break;
            case 5: r = check_extinction_rate(cache_->config_a(2048, false), cache_->config_a(4096, false)); break;
            case 6: r = check_single_point(cache_->config_a(2048, false)); break;
            case 7: r = check_localization(cache_->config_a(2048, false)); break;
            case 8: r = check_shrinking(); break;
            case 9: r = check_fat_tail(); break;
            case 10: r = check_complete_extinction(); break;
            case 11:
                r = check_gradient(cache_->config_a(2048, false), cache_->config_a(4096, false),
                                   cache_->config_b(512), cache_->config_b(1024));
                break;
            case 12: r = check_j_functional(cache_->config_a(2048, true), cache_->config_a(4096, true)); break;
            case 13: r = check_selfsim_horizon(); break;
        }
    } catch (const Error& e) {
        r = CriterionResult{};
        r.summary = std::string("error: ") + e.what();
        r.detail = {{"error", e.what()}};
    }
    r.id = id;
    r.suite = meta.suite;
    r.title = meta.title;
    r.seconds = since(start);
    if (options_.progress) print_results(*options_.progress, {r});
    return r;
}

std::vector<CriterionResult> Verifier::run_suite(std::string_view suite) {
    std::vector<CriterionResult> out;
    for (int id : suite_criteria(suite)) out.push_back(run(id));
    return out;
}

nlohmann::json to_json(const CriterionResult& r) {
    return {{"id", r.id},           {"suite", r.suite},   {"title", r.title}, {"pass", r.pass},
            {"summary", r.summary}, {"detail", r.detail}, {"seconds", r.seconds}};
}

nlohmann::json suite_report(const std::vector<CriterionResult>& results) {
    json list = json::array();
    int passed = 0;
    for (const CriterionResult& r : results) {
        list.push_back(to_json(r));
        passed += r.pass ? 1 : 0;
    }
    const int failed = static_cast<int>(results.size()) - passed;
    return {{"criteria", list}, {"passed", passed}, {"failed", failed}, {"pass", failed == 0}};
}

void print_results(std::ostream& os, const std::vector<CriterionResult>& results) {
    for (const CriterionResult& r : results) {
        os << (r.pass ? "PASS" : "FAIL") << ' ' << std::setw(2) << r.id << "  " << r.title << ": " << r.summary
           << " [" << std::fixed << std::setprecision(1) << r.seconds << " s]" << std::defaultfloat << '\n';
    }
    os.flush();
}

}  // namespace hjlab
