// Command-line front end: derive, residual, simulate, analyze, verify.
// Exit codes: 0 pass, 1 verification failure, 2 usage or config error, 3 divergence.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hjlab/closedform.hpp"
#include "hjlab/config.hpp"
#include "hjlab/error.hpp"
#include "hjlab/exponents.hpp"
#include "hjlab/solver.hpp"
#include "hjlab/verify.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kPass = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;
constexpr int kDiverged = 3;

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw hjlab::Error(hjlab::ErrorCode::Config, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw hjlab::Error(hjlab::ErrorCode::Config, path.string() + ": " + e.what());
    }
}

void write_json(const std::string& path, const json& doc) {
    if (path.empty() || path == "-") {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw hjlab::Error(hjlab::ErrorCode::Config, "cannot write " + path);
    out << doc.dump(2) << '\n';
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    if (!j.at(key).is_number()) {
        throw hjlab::Error(hjlab::ErrorCode::Config, std::string("profile.") + key + ": expected a number");
    }
    return j.at(key).get<double>();
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> known) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) throw hjlab::Error(hjlab::ErrorCode::Config, path + "." + item.key() + ": unknown key");
    }
}

// {"problem": {...}, "profile": {"family": ..., ...}, "box": {"t": [lo, hi], "r": [lo, hi]},
//  "sampler": {"nt", "nr", "tol_sign"}}; the box defaults to the family's validity region.
int cmd_residual(const fs::path& config_path, const std::string& out_path) {
    using namespace hjlab;
    const json doc = read_json(config_path);
    reject_unknown(doc, "<root>", {"problem", "profile", "box", "sampler"});
    const json problem = doc.value("problem", json::object());
    reject_unknown(problem, "problem", {"N", "p", "q"});
    const ProblemParams pp = validate_params(number_or(problem, "N", 1.0), number_or(problem, "p", 2.0),
                                             number_or(problem, "q", 0.5));
    const json prof = doc.value("profile", json::object());
    const std::string family = prof.value("family", "Barrier");

    std::optional<ComparisonProfile> profile;
    SampleBox box;
    Sense sense = Sense::NonNegative;
    if (family == "Barrier") {
        reject_unknown(prof, "profile", {"family", "center"});
        profile.emplace(pp, make_barrier(pp, number_or(prof, "center", 0.0)));
        box = {0.0, 1.0, 1e-3, 1e3};
    } else if (family == "ShrinkSuper") {
        reject_unknown(prof, "profile", {"family", "envelope_constant", "envelope_exponent", "sup_norm", "eta_law"});
        ShrinkSuperParams s = make_shrink_super(
            {number_or(prof, "envelope_constant", 1.0), number_or(prof, "envelope_exponent", 2.0)}, pp,
            number_or(prof, "sup_norm", 1.0));
        const std::string law = prof.value("eta_law", "certified");
        if (law == "inverted") {
            s = invert_eta_law(s, pp);
        } else if (law != "certified") {
            throw Error(ErrorCode::Config, "profile.eta_law: expected 'certified' or 'inverted'");
        }
        box = {0.0, s.horizon, s.inner_radius, 4.0 * s.inner_radius};
        profile.emplace(pp, s);
    } else if (family == "TailSub") {
        reject_unknown(prof, "profile", {"family", "horizon", "slope", "offset"});
        const double horizon = number_or(prof, "horizon", 1.0);
        const double slope = number_or(prof, "slope", 0.5 * require(derive_constants(pp).tail_sub_slope_max,
                                                                    "tail_sub_slope_max"));
        const double offset = number_or(prof, "offset", 2.0 * tail_sub_offset_threshold(pp, horizon, slope));
        profile.emplace(pp, make_tail_sub(pp, horizon, slope, offset));
        box = {0.0, 0.99 * horizon, 0.01, 10.0};
        sense = Sense::NonPositive;
    } else if (family == "SelfSimSuper") {
        reject_unknown(prof, "profile", {"family", "horizon", "amplitude"});
        const double horizon = number_or(prof, "horizon", 1.0);
        const double amplitude = number_or(prof, "amplitude", 0.5 * find_A0(pp).amplitude);
        profile.emplace(pp, make_selfsim_super(pp, horizon, amplitude));
        box = {0.0, 0.99 * horizon, 1e-3, 10.0};
    } else {
        throw Error(ErrorCode::Config,
                    "profile.family: expected Barrier, ShrinkSuper, TailSub or SelfSimSuper, got '" + family + "'");
    }
    if (doc.contains("box")) {
        const json& b = doc.at("box");
        reject_unknown(b, "box", {"t", "r"});
        if (b.contains("t")) box.t_lo = b.at("t").at(0).get<double>(), box.t_hi = b.at("t").at(1).get<double>();
        if (b.contains("r")) box.r_lo = b.at("r").at(0).get<double>(), box.r_hi = b.at("r").at(1).get<double>();
    }
    Sampler sampler;
    if (doc.contains("sampler")) {
        const json& s = doc.at("sampler");
        reject_unknown(s, "sampler", {"nt", "nr", "tol_sign", "log_radius"});
        sampler.nt = s.value("nt", sampler.nt);
        sampler.nr = s.value("nr", sampler.nr);
        sampler.tol_sign = s.value("tol_sign", sampler.tol_sign);
        sampler.log_radius = s.value("log_radius", sampler.log_radius);
    }
    const CertReport report = certify_sign(*profile, box, sense, sampler);
    json out = to_json(report);
    out["sense"] = sense == Sense::NonNegative ? "supersolution" : "subsolution";
    write_json(out_path, out);
    std::cerr << (report.pass ? "pass" : "FAIL") << ": " << family << " min margin " << report.min_margin << '\n';
    return report.pass ? kPass : kVerifyFailed;
}

int cmd_simulate(const fs::path& config_path, const std::string& out_dir) {
    using namespace hjlab;
    ExperimentConfig cfg = load_experiment(config_path);
    if (!out_dir.empty()) cfg.output_directory = out_dir;
    const ResolvedExperiment e = resolve(cfg);
    const SimulationResult result = run(e.ic, e.config.problem, e.solver);
    write_run_directory(e.config.output_directory, e, result);
    std::cout << run_summary(e, result).dump(2) << '\n';
    return result.termination == Termination::Diverged ? kDiverged : kPass;
}

int cmd_analyze(const fs::path& dir, const std::string& out_path) {
    const json report = hjlab::analyze_run_directory(dir);
    write_json(out_path.empty() ? (dir / "analysis.json").string() : out_path, report);
    std::cout << report.dump(2) << '\n';
    return kPass;
}

int cmd_verify(const std::string& suite, const std::string& out_path, std::uint64_t seed, int trials) {
    hjlab::VerifyOptions options;
    options.seed = seed;
    options.trials = trials;
    options.progress = &std::cout;
    hjlab::Verifier verifier(options);
    const auto results = verifier.run_suite(suite);
    const json report = hjlab::suite_report(results);
    if (!out_path.empty()) write_json(out_path, report);
    std::cout << report.at("passed").get<int>() << " passed, " << report.at("failed").get<int>() << " failed\n";
    return report.at("pass").get<bool>() ? kPass : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial p-Laplacian with gradient absorption: constants, certificates, simulations"};
    app.require_subcommand(1);

    double N = 1, p = 2, q = 0.5;
    auto* derive = app.add_subcommand("derive", "print derived constants and regime as JSON");
    derive->add_option("--N", N, "space dimension")->required();
    derive->add_option("--p", p, "diffusion exponent")->required();
    derive->add_option("--q", q, "absorption exponent")->required();

    std::string config, out;
    auto* residual = app.add_subcommand("residual", "sign-certify a closed-form comparison function");
    residual->add_option("config", config, "JSON file selecting the profile and box")->required();
    residual->add_option("-o,--out", out, "report path (default: standard output)");

    auto* simulate = app.add_subcommand("simulate", "run one experiment into a run directory");
    simulate->add_option("config", config, "experiment JSON")->required();
    simulate->add_option("-o,--out", out, "run directory (overrides output.directory)");

    std::string dir;
    auto* analyze = app.add_subcommand("analyze", "re-run the analyses on a run directory");
    analyze->add_option("dir", dir, "run directory")->required();
    analyze->add_option("-o,--out", out, "report path (default: DIR/analysis.json)");

    std::string suite = "all";
    std::uint64_t seed = 20240611;
    int trials = 1000;
    auto* verify = app.add_subcommand("verify", "run an acceptance suite");
    verify->add_option("suite", suite, "algebra, closedform, scheme, phenomena or all")
        ->check(CLI::IsMember({"algebra", "closedform", "scheme", "phenomena", "all"}));
    verify->add_option("-o,--out", out, "JSON report path");
    verify->add_option("--seed", seed, "seed of the randomized checks");
    verify->add_option("--trials", trials, "randomized scheme trials")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (*derive) {
            const hjlab::ProblemParams pp = hjlab::validate_params(N, p, q);
            const hjlab::Regime regime = hjlab::classify_regime(pp);
            json doc{{"params", hjlab::to_json(pp)}, {"regime", std::string(hjlab::to_string(regime))}};
            if (regime == hjlab::Regime::SinglePointRange || regime == hjlab::Regime::CompleteExtinctionRange) {
                doc["constants"] = hjlab::to_json(hjlab::derive_constants(pp));
            }
            std::cout << doc.dump(2) << '\n';
            return kPass;
        }
        if (*residual) return cmd_residual(config, out);
        if (*simulate) return cmd_simulate(config, out);
        if (*analyze) return cmd_analyze(dir, out);
        if (*verify) return cmd_verify(suite, out, seed, trials);
    } catch (const hjlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
