#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hjlab/exponents.hpp"

namespace hjlab {

/// Cell-centred grid on [0, r_max]; cell i spans faces f = i and f = i + 1 at
/// radii f * dr, centre (i + 1/2) dr.
struct RadialGrid {
    int dim = 1;
    double r_max = 1.0;
    int cells = 2;

    static RadialGrid make(int dim, double r_max, int cells);

    double spacing() const { return r_max / cells; }
    double center(int i) const { return (i + 0.5) * spacing(); }
    double face(int f) const { return f * spacing(); }
    std::vector<double> centers() const;
};

struct Field {
    RadialGrid grid;
    std::vector<double> values;

    double max() const;
};

/// Samples f at every cell centre.
template <class F>
Field sample(const RadialGrid& grid, F&& f) {
    Field out{grid, std::vector<double>(static_cast<std::size_t>(grid.cells))};
    for (int i = 0; i < grid.cells; ++i) out.values[static_cast<std::size_t>(i)] = f(grid.center(i));
    return out;
}

/// Smoothing a(z) = (z + eps^2)^{(p-2)/2}, b(z) = (z + eps^2)^{q/2}; the optional
/// counterterm +eps^q makes constants steady.
struct Regularization {
    double eps = 1e-3;
    double lift_exponent = 0.1;
    bool counterterm = true;

    /// Supremum of admissible lift exponents: min(p/4, q/2, p-1, 1-q).
    static double lift_exponent_bound(const ProblemParams& params);

    /// Validates eps > 0 and the lift exponent range; default exponent is half the bound.
    static Regularization make(const ProblemParams& params, double eps,
                               std::optional<double> lift_exponent = std::nullopt,
                               bool counterterm = true);

    double lift() const;
};

/// eps = dr^{2/3}.
double resolution_epsilon(const RadialGrid& grid);

enum class HamiltonianStencil {
    Centered,  // |average of the two adjacent face gradients|
    Upwind,    // monotone upwind magnitude max(g_left^+, g_right^-)
};

enum class OuterBoundary { Dirichlet, ZeroFlux };

struct OperatorOptions {
    HamiltonianStencil stencil = HamiltonianStencil::Centered;
    bool absorption = true;
    OuterBoundary outer = OuterBoundary::Dirichlet;
};

/// Conservative discretisation of div(a(|u_r|^2) u_r) - b(|u_r|^2) (+ eps^q).
class DiscreteOperator {
public:
    DiscreteOperator(const RadialGrid& grid, const ProblemParams& params, const Regularization& reg,
                     const OperatorOptions& options = {});

    const RadialGrid& grid() const { return grid_; }
    const ProblemParams& params() const { return params_; }
    const Regularization& regularization() const { return reg_; }
    const OperatorOptions& options() const { return options_; }

    double diffusivity(double g) const;   // a(g^2)
    double hamiltonian(double g) const;   // b(g^2)
    double flux(double g) const { return diffusivity(g) * g; }

    /// M + 1 face values: face 0 is the symmetry face (0), face M uses the ghost.
    void face_gradient(std::span<const double> u, double ghost, std::span<double> out) const;

    /// Gradient magnitude fed to the Hamiltonian of cell i given its two faces.
    double hamiltonian_argument(double g_left, double g_right) const;

    void rhs(std::span<const double> u, double ghost, std::span<double> out) const;

    /// safety * dr^2 / (W max a + dr max q b/max(|g|, eps)). W is the largest
    /// weight sum w_right(i) + w_left(i) or w_right(i) + w_left(i+1); the second
    /// keeps non-increasing profiles non-increasing (2 for N = 1, 8/3 for N = 2).
    double stable_dt(std::span<const double> u, double ghost, double safety) const;

    /// Field-independent step: the bound above with its maxima replaced by suprema
    /// over all gradients, a(0) and q b(eps^2)/eps. Never exceeds stable_dt of any
    /// field. Empty when q >= 1 (then q b/|g| is unbounded).
    std::optional<double> uniform_stable_dt(double safety) const;

    /// Largest face diffusivity a(g^2) for the current field; includes g = 0.
    double max_diffusivity(std::span<const double> u, double ghost) const;

    /// Largest q b(g^2) / max(|g|, eps) over cells: bounds the Hamiltonian's slope.
    double absorption_rate(std::span<const double> u, double ghost) const;

    /// Geometric factors (r_face / r_i)^{N-1} for the right and left faces of cell i.
    double weight_right(int i) const { return w_right_[static_cast<std::size_t>(i)]; }
    double weight_left(int i) const { return w_left_[static_cast<std::size_t>(i)]; }
    double max_weight_sum() const { return max_weight_sum_; }

private:
    RadialGrid grid_;
    ProblemParams params_;
    Regularization reg_;
    OperatorOptions options_;
    double eps2_;
    double a_power_;
    double b_power_;
    double source_;
    std::vector<double> w_right_;
    std::vector<double> w_left_;
    double max_weight_sum_ = 2.0;
    mutable std::vector<double> faces_;
};

std::vector<double> face_gradient(const Field& field, double ghost = 0.0);

std::vector<double> discrete_rhs(const Field& field, const ProblemParams& params,
                                 const Regularization& reg, const OperatorOptions& options = {});

double stable_dt(const Field& field, const ProblemParams& params, const Regularization& reg,
                 double safety, const OperatorOptions& options = {});

/// Header `r,u`, one row per cell, 17 significant digits.
void write_csv(std::ostream& os, const Field& field);

}  // namespace hjlab
