#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjlab/analysis.hpp"
#include "hjlab/exponents.hpp"
#include "hjlab/solver.hpp"

namespace hjlab {

/// Solver settings as written in a config; empty optionals resolve from the initial data.
struct SolverSettings {
    Scheme scheme = Scheme::Explicit;
    double safety = 0.9;
    double t_end = 1.0;
    int series_stride = 1;
    std::optional<double> eps;
    double eps_relative = 1e-6;
    std::optional<double> lift_exponent;
    bool counterterm = true;
    HamiltonianStencil hamiltonian = HamiltonianStencil::Upwind;
    std::optional<double> tol_ext;
    std::optional<double> tol_pos;
    double tol_relative = 1e-7;
    bool lift = false;
    std::optional<double> max_dt;
};

struct ExperimentConfig {
    ProblemParams problem;
    InitialSpec ic;
    double r_max = 4.0;
    int cells = 1024;
    SolverSettings solver;
    std::optional<FitWindow> fit_window;
    std::vector<std::string> checks{"fits", "localization", "gradient", "j"};
    std::string output_directory = "run";
    double snapshot_interval = 0.0;
    std::uint64_t seed = 0;
};

/// Throws Error(Config) naming the offending key (for instance `grid.M`).
/// Unknown keys are rejected at every level.
ExperimentConfig parse_experiment(const nlohmann::json& doc);

/// Reads and parses a file; JSON syntax errors carry line and column.
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Config with every default filled in and the ready-to-run objects.
struct ResolvedExperiment {
    ExperimentConfig config;
    InitialCondition ic;
    SolverConfig solver;
};

/// Validates the problem, builds the grid and initial data and resolves eps and tolerances.
ResolvedExperiment resolve(const ExperimentConfig& config);

/// Fully explicit document; parsing it back reproduces the same run.
nlohmann::json resolved_json(const ResolvedExperiment& experiment);

/// Writes resolved-config.json, series.csv, snapshots/ and summary.json.
void write_run_directory(const std::filesystem::path& dir, const ResolvedExperiment& experiment,
                         const SimulationResult& result);

nlohmann::json run_summary(const ResolvedExperiment& experiment, const SimulationResult& result);

/// Re-runs the requested analyses on a run directory and returns the report.
nlohmann::json analyze_run_directory(const std::filesystem::path& dir);

}  // namespace hjlab
