#include "hjlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "hjlab/error.hpp"

namespace hjlab {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::Config, key + ": " + what);
}

// Typed access to one JSON object; remembers which keys were read so that
// finish() can reject the rest.
class Section {
public:
    Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

    bool has(const std::string& name) {
        used_.insert(name);
        return doc_.contains(name) && !doc_.at(name).is_null();
    }

    Section child(const std::string& name) {
        used_.insert(name);
        static const json empty = json::object();
        return Section(doc_.contains(name) ? doc_.at(name) : empty, key(name));
    }

    double number(const std::string& name, double fallback) { return optional_number(name).value_or(fallback); }

    std::optional<double> optional_number(const std::string& name) {
        if (!has(name)) return std::nullopt;
        const json& v = doc_.at(name);
        if (!v.is_number()) config_error(key(name), "expected a number, got " + std::string(v.type_name()));
        const double d = v.get<double>();
        if (!std::isfinite(d)) config_error(key(name), "must be finite");
        return d;
    }

    long long integer(const std::string& name, long long fallback) {
        if (!has(name)) return fallback;
        const json& v = doc_.at(name);
        if (!v.is_number_integer()) config_error(key(name), "expected an integer, got " + std::string(v.type_name()));
        return v.get<long long>();
    }

    bool boolean(const std::string& name, bool fallback) {
        if (!has(name)) return fallback;
        const json& v = doc_.at(name);
        if (!v.is_boolean()) config_error(key(name), "expected true or false, got " + std::string(v.type_name()));
        return v.get<bool>();
    }

    std::string string(const std::string& name, const std::string& fallback) {
        if (!has(name)) return fallback;
        const json& v = doc_.at(name);
        if (!v.is_string()) config_error(key(name), "expected a string, got " + std::string(v.type_name()));
        return v.get<std::string>();
    }

    const json* raw(const std::string& name) {
        if (!has(name)) return nullptr;
        return &doc_.at(name);
    }

    void finish() const {
        for (const auto& item : doc_.items()) {
            if (!used_.count(item.key())) config_error(key(item.key()), "unknown key");
        }
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> used_;
};

Scheme scheme_from(const std::string& s, const std::string& key) {
    if (s == "explicit") return Scheme::Explicit;
    if (s == "semi-implicit") return Scheme::SemiImplicit;
    config_error(key, "expected 'explicit' or 'semi-implicit', got '" + s + "'");
}

HamiltonianStencil stencil_from(const std::string& s, const std::string& key) {
    if (s == "upwind") return HamiltonianStencil::Upwind;
    if (s == "centered") return HamiltonianStencil::Centered;
    config_error(key, "expected 'upwind' or 'centered', got '" + s + "'");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ExperimentConfig parse_experiment(const json& doc) {
    ExperimentConfig cfg;
    Section root(doc, "");

    Section problem = root.child("problem");
    cfg.problem.N = static_cast<int>(problem.integer("N", cfg.problem.N));
    cfg.problem.p = problem.number("p", cfg.problem.p);
    cfg.problem.q = problem.number("q", cfg.problem.q);
    problem.finish();

    Section ic = root.child("ic");
    const std::string kind = ic.string("kind", "Bump");
    try {
        cfg.ic.kind = initial_kind_from_string(kind);
    } catch (const Error&) {
        config_error(ic.key("kind"), "unknown kind '" + kind + "' (Bump, FastDecay, FatTail, Custom)");
    }
    switch (cfg.ic.kind) {
        case InitialKind::Bump:
            cfg.ic.amplitude = ic.number("amplitude", cfg.ic.amplitude);
            cfg.ic.radius = ic.number("radius", cfg.ic.radius);
            cfg.ic.exponent = ic.optional_number("exponent");
            break;
        case InitialKind::FastDecay:
        case InitialKind::FatTail:
            cfg.ic.amplitude = ic.number("amplitude", cfg.ic.amplitude);
            cfg.ic.decay = ic.number("decay", cfg.ic.decay);
            break;
        case InitialKind::Custom: {
            const json* values = ic.raw("values");
            if (!values || !values->is_array()) config_error(ic.key("values"), "expected an array of numbers");
            for (const json& v : *values) {
                if (!v.is_number()) config_error(ic.key("values"), "expected an array of numbers");
                cfg.ic.values.push_back(v.get<double>());
            }
            break;
        }
    }
    ic.finish();

    Section grid = root.child("grid");
    cfg.r_max = grid.number("r_max", cfg.r_max);
    const long long cells = grid.integer("M", cfg.cells);
    if (cells < 2 || cells > 1'000'000) config_error(grid.key("M"), "must be in [2, 1000000]");
    cfg.cells = static_cast<int>(cells);
    grid.finish();

    Section solver = root.child("solver");
    SolverSettings& s = cfg.solver;
    s.scheme = scheme_from(solver.string("scheme", "explicit"), solver.key("scheme"));
    s.safety = solver.number("safety", s.safety);
    s.t_end = solver.number("t_end", s.t_end);
    const long long stride = solver.integer("series_stride", s.series_stride);
    if (stride < 1) config_error(solver.key("series_stride"), "must be >= 1");
    s.series_stride = static_cast<int>(stride);
    s.eps = solver.optional_number("eps");
    s.eps_relative = solver.number("eps_relative", s.eps_relative);
    s.lift_exponent = solver.optional_number("lift_exponent");
    s.counterterm = solver.boolean("counterterm", s.counterterm);
    s.hamiltonian = stencil_from(solver.string("hamiltonian", "upwind"), solver.key("hamiltonian"));
    s.tol_ext = solver.optional_number("tol_ext");
    s.tol_pos = solver.optional_number("tol_pos");
    s.tol_relative = solver.number("tol_relative", s.tol_relative);
    s.lift = solver.boolean("lift", s.lift);
    s.max_dt = solver.optional_number("max_dt");
    if (!(s.safety > 0.0 && s.safety <= 1.0)) config_error(solver.key("safety"), "must be in (0, 1]");
    if (!(s.t_end >= 0.0)) config_error(solver.key("t_end"), "must be >= 0");
    if (!(s.eps_relative > 0.0)) config_error(solver.key("eps_relative"), "must be > 0");
    if (!(s.tol_relative >= 0.0)) config_error(solver.key("tol_relative"), "must be >= 0");
    if (s.max_dt && !(*s.max_dt > 0.0)) config_error(solver.key("max_dt"), "must be > 0");
    solver.finish();

    Section analysis = root.child("analysis");
    if (const json* w = analysis.raw("fit_window")) {
        Section window(*w, analysis.key("fit_window"));
        const auto lo = window.optional_number("t_lo");
        const auto hi = window.optional_number("t_hi");
        if (!lo || !hi || !(*lo < *hi)) config_error(analysis.key("fit_window"), "needs t_lo < t_hi");
        window.finish();
        cfg.fit_window = FitWindow{*lo, *hi};
    }
    if (const json* checks = analysis.raw("checks")) {
        static const std::set<std::string> known{"fits", "localization", "gradient", "j"};
        if (!checks->is_array()) config_error(analysis.key("checks"), "expected an array of names");
        cfg.checks.clear();
        for (const json& c : *checks) {
            if (!c.is_string() || !known.count(c.get<std::string>())) {
                config_error(analysis.key("checks"), "unknown check " + c.dump() + " (fits, localization, gradient, j)");
            }
            cfg.checks.push_back(c.get<std::string>());
        }
    }
    analysis.finish();

    Section output = root.child("output");
    cfg.output_directory = output.string("directory", cfg.output_directory);
    cfg.snapshot_interval = output.number("snapshot_interval", cfg.snapshot_interval);
    if (!(cfg.snapshot_interval >= 0.0)) config_error(output.key("snapshot_interval"), "must be >= 0");
    output.finish();

    const long long seed = root.integer("seed", 0);
    if (seed < 0) config_error("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    root.finish();
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, path.string() + ": " + e.what());
    }
    return parse_experiment(doc);
}

ResolvedExperiment resolve(const ExperimentConfig& config) {
    const ProblemParams pp = validate_params(config.problem.N, config.problem.p, config.problem.q);
    const Regime regime = classify_regime(pp);
    if (regime != Regime::SinglePointRange && regime != Regime::CompleteExtinctionRange) {
        throw Error(ErrorCode::RegimeMismatch,
                    "problem: regime " + std::string(to_string(regime)) + " is outside the simulated range");
    }
    const RadialGrid grid = RadialGrid::make(pp.N, config.r_max, config.cells);
    ResolvedExperiment out{config, make_initial_condition(config.ic, grid, pp), {}};
    out.config.problem = pp;
    out.config.ic = out.ic.spec;

    SolverSettings& s = out.config.solver;
    s.eps = s.eps.value_or(default_epsilon(out.ic.field, s.eps_relative));
    s.tol_ext = s.tol_ext.value_or(default_tolerance(out.ic.sup_norm(), s.tol_relative));
    s.tol_pos = s.tol_pos.value_or(*s.tol_ext);
    try {
        const Regularization reg = Regularization::make(pp, *s.eps, s.lift_exponent, s.counterterm);
        s.lift_exponent = reg.lift_exponent;
        out.solver.reg = reg;
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, std::string("solver: ") + e.what());
    }
    out.solver.scheme = s.scheme;
    out.solver.safety = s.safety;
    out.solver.t_end = s.t_end;
    out.solver.snapshot_interval = config.snapshot_interval;
    out.solver.series_stride = s.series_stride;
    out.solver.op.stencil = s.hamiltonian;
    out.solver.tol_ext = *s.tol_ext;
    out.solver.tol_pos = *s.tol_pos;
    out.solver.lift = s.lift;
    out.solver.max_dt = s.max_dt;
    return out;
}

json resolved_json(const ResolvedExperiment& e) {
    const ExperimentConfig& c = e.config;
    const SolverSettings& s = c.solver;
    json ic = to_json(c.ic);
    json doc;
    doc["problem"] = {{"N", c.problem.N}, {"p", c.problem.p}, {"q", c.problem.q}};
    doc["ic"] = ic;
    doc["grid"] = {{"r_max", c.r_max}, {"M", c.cells}};
    doc["solver"] = {{"scheme", std::string(to_string(s.scheme))},
                     {"safety", s.safety},
                     {"t_end", s.t_end},
                     {"series_stride", s.series_stride},
                     {"eps", optional_json(s.eps)},
                     {"eps_relative", s.eps_relative},
                     {"lift_exponent", optional_json(s.lift_exponent)},
                     {"counterterm", s.counterterm},
                     {"hamiltonian", s.hamiltonian == HamiltonianStencil::Upwind ? "upwind" : "centered"},
                     {"tol_ext", optional_json(s.tol_ext)},
                     {"tol_pos", optional_json(s.tol_pos)},
                     {"tol_relative", s.tol_relative},
                     {"lift", s.lift},
                     {"max_dt", optional_json(s.max_dt)}};
    doc["analysis"] = {{"fit_window", c.fit_window ? to_json(*c.fit_window) : json(nullptr)}, {"checks", c.checks}};
    doc["output"] = {{"directory", c.output_directory}, {"snapshot_interval", c.snapshot_interval}};
    doc["seed"] = c.seed;
    return doc;
}

json run_summary(const ResolvedExperiment& e, const SimulationResult& r) {
    return {{"termination", std::string(to_string(r.termination))},
            {"extinction_time", r.extinction_time ? json(*r.extinction_time) : json(nullptr)},
            {"final_time", r.series.back().t},
            {"steps", r.steps},
            {"last_dt", r.last_dt},
            {"min_dt", std::isfinite(r.min_dt) ? json(r.min_dt) : json(nullptr)},
            {"sup_norm", e.ic.sup_norm()},
            {"regime", std::string(to_string(classify_regime(e.config.problem)))},
            {"series_rows", r.series.size()},
            {"snapshots", r.snapshots.size()}};
}

void write_run_directory(const std::filesystem::path& dir, const ResolvedExperiment& e,
                         const SimulationResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "snapshots");
    const auto open = [](const fs::path& p) {
        std::ofstream out(p);
        if (!out) throw Error(ErrorCode::Config, "cannot write " + p.string());
        return out;
    };
    open(dir / "resolved-config.json") << resolved_json(e).dump(2) << '\n';
    {
        auto out = open(dir / "series.csv");
        write_series_csv(out, result.series);
    }
    auto index = open(dir / "snapshots" / "index.csv");
    index << "file,t,baseline\n" << std::setprecision(17);
    for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%05zu.csv", k);
        auto out = open(dir / "snapshots" / name);
        write_csv(out, result.snapshots[k].field);
        index << name << ',' << result.snapshots[k].t << ',' << result.snapshots[k].baseline << '\n';
    }
    open(dir / "summary.json") << run_summary(e, result).dump(2) << '\n';
}

namespace {

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, std::size_t columns) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorCode::Config, path.string() + ": bad number '" + cell + "'");
            }
        }
        if (row.size() != columns) throw Error(ErrorCode::Config, path.string() + ": expected " +
                                                                      std::to_string(columns) + " columns");
        rows.push_back(std::move(row));
    }
    return rows;
}

template <class F>
json guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return {{"error", e.what()}, {"code", std::string(to_string(e.code()))}};
    }
}

}  // namespace

json analyze_run_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const ResolvedExperiment e = resolve(load_experiment(dir / "resolved-config.json"));
    const ProblemParams& pp = e.config.problem;
    const json summary = json::parse(read_file(dir / "summary.json"));

    std::vector<SeriesRow> series;
    for (const auto& row : read_csv(dir / "series.csv", 4)) series.push_back({row[0], row[1], row[2], row[3]});
    std::vector<Snapshot> snapshots;
    {
        std::istringstream in(read_file(dir / "snapshots" / "index.csv"));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream fields(line);
            std::string file, t, base;
            std::getline(fields, file, ',');
            std::getline(fields, t, ',');
            std::getline(fields, base, ',');
            Field f{e.ic.field.grid, {}};
            for (const auto& row : read_csv(dir / "snapshots" / file, 2)) f.values.push_back(row[1]);
            if (f.values.size() != e.ic.field.values.size()) {
                throw Error(ErrorCode::Config, file + ": cell count does not match the grid");
            }
            snapshots.push_back(Snapshot{std::stod(t), std::move(f), std::stod(base)});
        }
    }
    const bool single = classify_regime(pp) == Regime::SinglePointRange;
    const bool extinct = summary.at("termination") == "Extinct";
    const double te = extinct ? summary.at("extinction_time").get<double>() : 0.0;
    const auto wants = [&](const char* name) {
        return std::find(e.config.checks.begin(), e.config.checks.end(), name) != e.config.checks.end();
    };

    json report;
    report["run"] = fs::absolute(dir).lexically_normal().string();
    report["termination"] = summary.at("termination");
    report["fits"] = json::array();
    if (wants("fits") && extinct) {
        const FitWindow w = e.config.fit_window.value_or(
            default_fit_window(series, te, e.solver.tol_ext, summary.at("last_dt").get<double>()));
        report["fits"].push_back(guarded([&] {
            json j = to_json(fit_max_decay(series, te, w));
            j["quantity"] = "max_u";
            return j;
        }));
        report["fits"].push_back(guarded([&] {
            json j = to_json(fit_support_exponents(series, te, pp, w));
            j["quantity"] = "support_radius";
            return j;
        }));
    }
    if (wants("localization") && single && e.config.ic.kind == InitialKind::Bump) {
        report["localization"] = guarded([&] {
            const double R = localization_radius(e.config.ic.radius, e.ic.sup_norm(), pp);
            double widest = 0.0;
            for (const SeriesRow& r : series) widest = std::max(widest, r.support_radius);
            const double dr = e.ic.field.grid.spacing();
            return json{{"radius", R},
                        {"initial_ball", e.config.ic.radius + 2.0 * dr},
                        {"widest_support", widest},
                        {"within_radius", widest <= R},
                        {"within_initial_ball", widest <= e.config.ic.radius + 2.0 * dr}};
        });
    }
    if (wants("gradient")) {
        report["gradient_estimate"] = guarded([&] {
            const GradientForm form = pp.p == 2.0 ? GradientForm::Proven : GradientForm::Template;
            json j = to_json(gradient_estimate_check(
                SimulationResult{series, snapshots, std::nullopt, Termination::HorizonReached, 0, 0.0, 0.0}, pp,
                e.ic.sup_norm(), form));
            j["form"] = form == GradientForm::Proven ? "proven" : "template";
            return j;
        });
    }
    if (wants("j") && single && e.config.ic.kind == InitialKind::Bump) {
        report["j_diagnostic"] = guarded([&] {
            JDiagnostic j(pp, e.config.ic.radius, e.solver.tol_pos);
            for (const Snapshot& s : snapshots) j.observe(s.t, s.field.grid, s.field.values);
            const double t_hi = extinct ? 0.9 * te : std::numeric_limits<double>::infinity();
            return json{{"delta_probe", j.delta_probe()},
                        {"inf_delta", j.inf_delta(t_hi)},
                        {"max_relative_j", j.max_relative_j(t_hi)},
                        {"samples", j.trace().size()},
                        {"empty_snapshots", j.empty_snapshots()}};
        });
    }
    return report;
}

}  // namespace hjlab
