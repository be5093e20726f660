#include "hjlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjlab/error.hpp"

namespace hjlab {

double support_radius(const RadialGrid& grid, std::span<const double> u, double tol_pos) {
    for (std::size_t i = u.size(); i-- > 0;) {
        if (u[i] > tol_pos) return grid.center(static_cast<int>(i));
    }
    return 0.0;
}

double support_radius(const Field& field, double tol_pos) {
    return support_radius(field.grid, field.values, tol_pos);
}

ExponentFit fit_exponent(std::span<const double> t, std::span<const double> y, double extinction_time,
                         const FitWindow& window) {
    if (!(extinction_time > window.t_hi)) {
        std::ostringstream msg;
        msg << "extinction time " << extinction_time << " must exceed the window end " << window.t_hi;
        throw Error(ErrorCode::HypothesisViolated, msg.str());
    }
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < window.t_lo || t[k] > window.t_hi) continue;
        if (!(y[k] > 0.0)) {
            std::ostringstream msg;
            msg << "value " << y[k] << " at t = " << t[k] << " inside the fit window";
            throw Error(ErrorCode::NonPositiveValues, msg.str());
        }
        xs.push_back(std::log(extinction_time - t[k]));
        ys.push_back(std::log(y[k]));
    }
    const int n = static_cast<int>(xs.size());
    if (n < 8) {
        throw Error(ErrorCode::InsufficientPoints, std::to_string(n) + " points in the fit window (need 8)");
    }
    double mx = 0.0, my = 0.0;
    for (int k = 0; k < n; ++k) {
        mx += xs[static_cast<std::size_t>(k)];
        my += ys[static_cast<std::size_t>(k)];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dx = xs[static_cast<std::size_t>(k)] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[static_cast<std::size_t>(k)] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientPoints, "fit window has no spread in time");
    ExponentFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    fit.window = window;
    fit.points = n;
    double ss = 0.0;
    for (int k = 0; k < n; ++k) {
        const double e = ys[static_cast<std::size_t>(k)] - (fit.intercept + fit.exponent * xs[static_cast<std::size_t>(k)]);
        ss += e * e;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

FitWindow default_fit_window(std::span<const SeriesRow> series, double extinction_time, double tol_ext, double dt,
                             double t_start) {
    double t_floor = extinction_time;
    for (const SeriesRow& row : series) {
        if (row.max_u <= 10.0 * tol_ext) {
            t_floor = row.t;
            break;
        }
    }
    return FitWindow{extinction_time - 0.4 * (extinction_time - t_start),
                     std::min(extinction_time - 5.0 * dt, t_floor)};
}

namespace {

ExponentFit fit_column(std::span<const SeriesRow> series, double extinction_time, const FitWindow& window,
                       double SeriesRow::*column) {
    std::vector<double> t, y;
    t.reserve(series.size());
    y.reserve(series.size());
    for (const SeriesRow& row : series) {
        t.push_back(row.t);
        y.push_back(row.*column);
    }
    return fit_exponent(t, y, extinction_time, window);
}

}  // namespace

ExponentFit fit_max_decay(std::span<const SeriesRow> series, double extinction_time, const FitWindow& window) {
    return fit_column(series, extinction_time, window, &SeriesRow::max_u);
}

SupportFit fit_support_exponents(std::span<const SeriesRow> series, double extinction_time,
                                 const ProblemParams& params, const FitWindow& window, double tol_exp) {
    if (classify_regime(params) != Regime::SinglePointRange) {
        throw Error(ErrorCode::NotApplicable,
                    "support exponents are defined only in the single-point range; the positivity set does not shrink");
    }
    const DerivedConstants c = derive_constants(params);
    const FitWindow w{std::max(window.t_lo, 0.5 * extinction_time), window.t_hi};
    SupportFit out;
    out.fit = fit_column(series, extinction_time, w, &SeriesRow::support_radius);
    out.band_lo = *c.outer_support_exponent - tol_exp;
    out.band_hi = *c.inner_support_exponent + tol_exp;
    out.pass = out.fit.exponent >= out.band_lo && out.fit.exponent <= out.band_hi;
    double k = std::numeric_limits<double>::infinity();
    for (const SeriesRow& row : series) {
        if (row.t < w.t_lo || row.t > w.t_hi) continue;
        k = std::min(k, row.support_radius / std::pow(extinction_time - row.t, *c.inner_support_exponent));
    }
    out.inner_constant = k;
    return out;
}

double localization_radius(double R0, double sup_norm, const ProblemParams& params) {
    const DerivedConstants c = derive_constants(params);
    const double amp = require(c.barrier_amplitude, "barrier_amplitude");
    const double omega = require(c.barrier_exponent, "barrier_exponent");
    return R0 + std::pow(sup_norm / amp, 1.0 / omega);
}

DominationCheck::DominationCheck(ComparisonProfile profile, Side side, double tol, DominationRegion region)
    : profile_(std::move(profile)), region_(region) {
    report_.side = side;
    report_.tol = tol;
}

void DominationCheck::observe(double t, const RadialGrid& grid, std::span<const double> u) {
    if (t < region_.t_lo || t > region_.t_hi) return;
    double worst = -std::numeric_limits<double>::infinity();
    double worst_r = 0.0;
    long points = 0;
    for (int i = 0; i < grid.cells; ++i) {
        const double r = grid.center(i);
        if (r < region_.r_lo || r > region_.r_hi) continue;
        const double w = profile_.value(t, r);
        const double ui = u[static_cast<std::size_t>(i)];
        const double v = report_.side == Side::Below ? ui - w : w - ui;
        ++points;
        if (v > worst) {
            worst = v;
            worst_r = r;
        }
    }
    if (points == 0) return;
    if (report_.snapshots == 0 && worst > report_.tol) {
        std::ostringstream msg;
        msg << "initial data violates the ordering by " << worst << " at r = " << worst_r << " (tol " << report_.tol
            << ")";
        throw Error(ErrorCode::InitialOrderingFails, msg.str());
    }
    ++report_.snapshots;
    report_.points += points;
    if (worst > report_.max_violation) {
        report_.max_violation = worst;
        report_.worst_t = t;
        report_.worst_r = worst_r;
    }
    report_.pass = report_.max_violation <= report_.tol;
}

DominationReport check_domination(const SimulationResult& result, const ComparisonProfile& profile, Side side,
                                  double tol, const DominationRegion& region) {
    DominationCheck check(profile, side, tol, region);
    for (const Snapshot& s : result.snapshots) check.observe(s.t, s.field.grid, s.field.values);
    return check.report();
}

GradientEstimate::GradientEstimate(const ProblemParams& params, double sup_norm, GradientForm form)
    : params_(params), sup_norm_(sup_norm) {
    if (form == GradientForm::Proven && params.p != 2.0) {
        throw Error(ErrorCode::WrongRegime, "the proven gradient estimate needs p = 2; use the template form");
    }
    const double p = params.p, q = params.q;
    env_.power = (p - q - 1.0) / (p - q);
    env_.norm_power = (p - 2.0 * q) / (p * (p - q));
}

void GradientEstimate::observe(double t, const RadialGrid& grid, std::span<const double> u) {
    if (!(t > 0.0)) return;
    const double inv_dr = 1.0 / grid.spacing();
    double g = 0.0;
    double prev = std::pow(std::max(u[0], 0.0), env_.power);
    for (std::size_t i = 1; i < u.size(); ++i) {
        const double cur = std::pow(std::max(u[i], 0.0), env_.power);
        g = std::max(g, std::abs(cur - prev) * inv_dr);
        prev = cur;
    }
    const double c = g / (1.0 + std::pow(sup_norm_, env_.norm_power) * std::pow(t, -1.0 / params_.p));
    env_.samples.push_back(GradientSample{t, g, c});
    if (c > env_.sup_constant) {
        env_.sup_constant = c;
        env_.t_at_sup = t;
    }
}

GradientEnvelope gradient_estimate_check(const SimulationResult& result, const ProblemParams& params,
                                         double sup_norm, GradientForm form) {
    GradientEstimate est(params, sup_norm, form);
    for (const Snapshot& s : result.snapshots) est.observe(s.t, s.field.grid, s.field.values);
    return est.envelope();
}

bool envelopes_stable(const GradientEnvelope& a, const GradientEnvelope& b, double rel) {
    if (!(a.sup_constant > 0.0) || !(b.sup_constant > 0.0)) return false;
    if (!std::isfinite(a.sup_constant) || !std::isfinite(b.sup_constant)) return false;
    return std::abs(a.sup_constant / b.sup_constant - 1.0) <= rel;
}

JSample j_snapshot(double t, const RadialGrid& grid, std::span<const double> u, const ProblemParams& params,
                   double R0, double tol_pos, double delta_probe) {
    const double p = params.p, q = params.q;
    const double gap = p - 1.0 - q;
    if (!(gap > 0.0)) throw Error(ErrorCode::RegimeMismatch, "the J functional needs q < p - 1");
    const double dr = grid.spacing();
    const double lambda = params.N + q / gap;
    const double beta = (p - 1.0) / (p - q);
    JSample s{t, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0, 0};
    // Centred cell gradients need both neighbours, hence i in [1, M-2].
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double r = grid.center(static_cast<int>(i));
        if (r <= 2.0 * dr || r >= R0) continue;
        const double ui = u[i];
        if (!(ui > 10.0 * tol_pos)) continue;
        const double g = (u[i + 1] - u[i - 1]) / (2.0 * dr);
        const double ratio = std::abs(g) / (std::pow(r, 1.0 / gap) * std::pow(ui, 1.0 / (p - q)));
        s.delta_emp = std::min(s.delta_emp, std::pow(ratio, p - 1.0));
        const double flux = std::pow(r, params.N - 1) * std::pow(std::abs(g), p - 1.0);
        const double source = delta_probe * std::pow(r, lambda) * std::pow(ui, beta);
        s.max_j = std::max(s.max_j, (g < 0.0 ? -flux : flux) + source);
        s.scale = std::max(s.scale, flux + source);
        ++s.cells;
    }
    if (s.cells == 0) {
        std::ostringstream msg;
        msg << "no cell with u > 10 tol_pos inside (2 dr, R0) at t = " << t;
        throw Error(ErrorCode::EmptySupport, msg.str());
    }
    return s;
}

JDiagnostic::JDiagnostic(const ProblemParams& params, double R0, double tol_pos, double probe_fraction)
    : params_(params), R0_(R0), tol_pos_(tol_pos), fraction_(probe_fraction) {}

void JDiagnostic::observe(double t, const RadialGrid& grid, std::span<const double> u) {
    try {
        if (trace_.empty()) {
            probe_ = fraction_ * j_snapshot(t, grid, u, params_, R0_, tol_pos_, 0.0).delta_emp;
        }
        trace_.push_back(j_snapshot(t, grid, u, params_, R0_, tol_pos_, probe_));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptySupport) throw;
        ++empty_;
    }
}

double JDiagnostic::inf_delta(double t_hi) const {
    double m = std::numeric_limits<double>::infinity();
    for (const JSample& s : trace_) {
        if (s.t > 0.0 && s.t < t_hi) m = std::min(m, s.delta_emp);
    }
    return m;
}

double JDiagnostic::max_relative_j(double t_hi) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const JSample& s : trace_) {
        if (s.t < t_hi && s.scale > 0.0) m = std::max(m, s.max_j / s.scale);
    }
    return m;
}

double bump_delta_initial(double m, double R0, const ProblemParams& params) {
    const double omega = require(derive_constants(params).barrier_exponent, "barrier_exponent");
    const double floor = 2.0 * std::pow(m, 1.0 / omega) * std::pow(R0, 2.0 - omega);
    return std::pow(omega * floor, params.p - 1.0);
}

nlohmann::json to_json(const FitWindow& w) { return {{"t_lo", w.t_lo}, {"t_hi", w.t_hi}}; }

nlohmann::json to_json(const ExponentFit& fit) {
    return {{"exponent", fit.exponent}, {"intercept", fit.intercept}, {"window", to_json(fit.window)},
            {"rms", fit.rms},           {"points", fit.points}};
}

nlohmann::json to_json(const SupportFit& fit) {
    nlohmann::json j = to_json(fit.fit);
    j["band"] = {fit.band_lo, fit.band_hi};
    j["verdict"] = fit.pass ? "pass" : "fail";
    j["inner_constant"] = fit.inner_constant;
    return j;
}

nlohmann::json to_json(const DominationReport& r) {
    return {{"side", r.side == Side::Below ? "below" : "above"},
            {"tol", r.tol},
            {"max_violation", r.max_violation},
            {"worst_point", {{"t", r.worst_t}, {"r", r.worst_r}}},
            {"points", r.points},
            {"snapshots", r.snapshots},
            {"pass", r.pass}};
}

nlohmann::json to_json(const GradientEnvelope& env, bool include_samples) {
    nlohmann::json j{{"power", env.power},
                     {"norm_power", env.norm_power},
                     {"sup_constant", env.sup_constant},
                     {"t_at_sup", env.t_at_sup},
                     {"samples", env.samples.size()}};
    if (include_samples) {
        nlohmann::json rows = nlohmann::json::array();
        for (const GradientSample& s : env.samples) rows.push_back({s.t, s.gradient, s.constant});
        j["rows"] = rows;
    }
    return j;
}

}  // namespace hjlab
