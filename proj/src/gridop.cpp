#include "hjlab/gridop.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hjlab/error.hpp"

namespace hjlab {

namespace {

// pow specialised for the exponents that dominate the inner loop.
double power(double x, double e) {
    if (e == 0.0) return 1.0;
    if (e == 0.5) return std::sqrt(x);
    if (e == 0.25) return std::sqrt(std::sqrt(x));
    if (e == -0.5) return 1.0 / std::sqrt(x);
    return std::pow(x, e);
}

}  // namespace

RadialGrid RadialGrid::make(int dim, double r_max, int cells) {
    if (dim < 1) throw Error(ErrorCode::Config, "grid dimension must be >= 1");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw Error(ErrorCode::Config, "grid.r_max must be positive");
    if (cells < 2) throw Error(ErrorCode::Config, "grid.M must be >= 2");
    return RadialGrid{dim, r_max, cells};
}

std::vector<double> RadialGrid::centers() const {
    std::vector<double> r(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) r[static_cast<std::size_t>(i)] = center(i);
    return r;
}

double Field::max() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

double Regularization::lift_exponent_bound(const ProblemParams& params) {
    return std::min({params.p / 4.0, params.q / 2.0, params.p - 1.0, 1.0 - params.q});
}

Regularization Regularization::make(const ProblemParams& params, double eps, std::optional<double> lift_exponent,
                                    bool counterterm) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::Config, "reg.eps must be positive");
    const double bound = lift_exponent_bound(params);
    if (!(bound > 0.0)) {
        throw Error(ErrorCode::Config, "no admissible lift exponent for these parameters (needs q < 1)");
    }
    const double gamma = lift_exponent.value_or(0.5 * bound);
    if (!(gamma > 0.0 && gamma < bound)) {
        std::ostringstream msg;
        msg << "reg.lift_exponent = " << gamma << " outside (0, " << bound << ")";
        throw Error(ErrorCode::Config, msg.str());
    }
    return Regularization{eps, gamma, counterterm};
}

double Regularization::lift() const { return std::pow(eps, lift_exponent); }

double resolution_epsilon(const RadialGrid& grid) { return std::pow(grid.spacing(), 2.0 / 3.0); }

DiscreteOperator::DiscreteOperator(const RadialGrid& grid, const ProblemParams& params, const Regularization& reg,
                                   const OperatorOptions& options)
    : grid_(grid),
      params_(params),
      reg_(reg),
      options_(options),
      eps2_(reg.eps * reg.eps),
      a_power_((params.p - 2.0) / 2.0),
      b_power_(params.q / 2.0),
      source_(reg.counterterm && options.absorption ? std::pow(reg.eps, params.q) : 0.0),
      w_right_(static_cast<std::size_t>(grid.cells)),
      w_left_(static_cast<std::size_t>(grid.cells)),
      faces_(static_cast<std::size_t>(grid.cells) + 1) {
    const int k = grid.dim - 1;
    max_weight_sum_ = 0.0;
    for (int i = 0; i < grid.cells; ++i) {
        // Ratios of face to centre radius in units of dr avoid overflow of r^{N-1}.
        const double c = i + 0.5;
        const double wr = std::pow((i + 1.0) / c, k);
        const double wl = std::pow(i / c, k);
        w_right_[static_cast<std::size_t>(i)] = wr;
        w_left_[static_cast<std::size_t>(i)] = wl;
        max_weight_sum_ = std::max(max_weight_sum_, wr + wl);
    }
    // Keeping u_{i+1} <= u_i across a step also needs the pair w_right(i) + w_left(i+1).
    for (std::size_t i = 0; i + 1 < w_right_.size(); ++i) {
        max_weight_sum_ = std::max(max_weight_sum_, w_right_[i] + w_left_[i + 1]);
    }
}

double DiscreteOperator::diffusivity(double g) const {
    if (a_power_ == 0.0) return 1.0;
    return power(g * g + eps2_, a_power_);
}

double DiscreteOperator::hamiltonian(double g) const { return power(g * g + eps2_, b_power_); }

void DiscreteOperator::face_gradient(std::span<const double> u, double ghost, std::span<double> out) const {
    const std::size_t m = u.size();
    const double inv_dr = 1.0 / grid_.spacing();
    out[0] = 0.0;
    for (std::size_t f = 1; f < m; ++f) out[f] = (u[f] - u[f - 1]) * inv_dr;
    out[m] = options_.outer == OuterBoundary::ZeroFlux ? 0.0 : (ghost - u[m - 1]) * inv_dr;
}

double DiscreteOperator::hamiltonian_argument(double g_left, double g_right) const {
    if (options_.stencil == HamiltonianStencil::Centered) return 0.5 * (g_left + g_right);
    // Godunov magnitude for a Hamiltonian increasing in |g|.
    return std::max({g_left, -g_right, 0.0});
}

void DiscreteOperator::rhs(std::span<const double> u, double ghost, std::span<double> out) const {
    const std::size_t m = u.size();
    face_gradient(u, ghost, faces_);
    const double inv_dr = 1.0 / grid_.spacing();
    double flux_left = 0.0;  // symmetry face
    for (std::size_t i = 0; i < m; ++i) {
        const double g_right = faces_[i + 1];
        const double flux_right = flux(g_right);
        double value = (w_right_[i] * flux_right - w_left_[i] * flux_left) * inv_dr;
        if (options_.absorption) {
            value -= hamiltonian(hamiltonian_argument(faces_[i], g_right));
            value += source_;
        }
        out[i] = value;
        flux_left = flux_right;
    }
}

double DiscreteOperator::max_diffusivity(std::span<const double> u, double ghost) const {
    face_gradient(u, ghost, faces_);
    double a_max = 0.0;
    for (double g : faces_) a_max = std::max(a_max, diffusivity(g));
    return a_max;
}

double DiscreteOperator::absorption_rate(std::span<const double> u, double ghost) const {
    if (!options_.absorption) return 0.0;
    face_gradient(u, ghost, faces_);
    const double eps = reg_.eps;
    double rate = 0.0;
    for (std::size_t i = 0; i + 1 < faces_.size(); ++i) {
        const double g = std::abs(hamiltonian_argument(faces_[i], faces_[i + 1]));
        rate = std::max(rate, params_.q * hamiltonian(g) / std::max(g, eps));
    }
    return rate;
}

double DiscreteOperator::stable_dt(std::span<const double> u, double ghost, double safety) const {
    if (!(safety > 0.0 && safety <= 1.0)) throw Error(ErrorCode::Config, "solver.safety must lie in (0, 1]");
    const double dr = grid_.spacing();
    const double a_max = max_diffusivity(u, ghost);
    return safety * dr * dr / (max_weight_sum_ * a_max + dr * absorption_rate(u, ghost));
}

std::optional<double> DiscreteOperator::uniform_stable_dt(double safety) const {
    if (!(safety > 0.0 && safety <= 1.0)) throw Error(ErrorCode::Config, "solver.safety must lie in (0, 1]");
    if (options_.absorption && !(params_.q < 1.0)) return std::nullopt;
    const double dr = grid_.spacing();
    // a is non-increasing in |g| for p <= 2; q b(g^2)/max(|g|, eps) peaks at |g| = eps.
    const double rate = options_.absorption ? params_.q * hamiltonian(reg_.eps) / reg_.eps : 0.0;
    return safety * dr * dr / (max_weight_sum_ * diffusivity(0.0) + dr * rate);
}

std::vector<double> face_gradient(const Field& field, double ghost) {
    const Regularization reg{1.0, 0.1, true};
    const DiscreteOperator op(field.grid, ProblemParams{field.grid.dim, 2.0, 0.5}, reg);
    std::vector<double> g(field.values.size() + 1);
    op.face_gradient(field.values, ghost, g);
    return g;
}

std::vector<double> discrete_rhs(const Field& field, const ProblemParams& params, const Regularization& reg,
                                 const OperatorOptions& options) {
    const DiscreteOperator op(field.grid, params, reg, options);
    std::vector<double> out(field.values.size());
    op.rhs(field.values, 0.0, out);
    return out;
}

double stable_dt(const Field& field, const ProblemParams& params, const Regularization& reg, double safety,
                 const OperatorOptions& options) {
    const DiscreteOperator op(field.grid, params, reg, options);
    return op.stable_dt(field.values, 0.0, safety);
}

void write_csv(std::ostream& os, const Field& field) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "r,u\n" << std::setprecision(17);
    for (int i = 0; i < field.grid.cells; ++i) {
        os << field.grid.center(i) << ',' << field.values[static_cast<std::size_t>(i)] << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

}  // namespace hjlab
