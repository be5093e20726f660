#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "hjlab/error.hpp"
#include "hjlab/exponents.hpp"
#include "hjlab/gridop.hpp"
#include "hjlab/sampling.hpp"

using namespace hjlab;

namespace {

std::vector<double> euler_step(const DiscreteOperator& op, const std::vector<double>& u, double dt) {
    std::vector<double> k(u.size());
    op.rhs(u, 0.0, k);
    std::vector<double> out(u);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] += dt * k[i];
    return out;
}

// Random nonnegative field built from a few smooth bumps plus cell noise.
std::vector<double> random_field(std::mt19937_64& rng, const RadialGrid& grid, double noise) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(grid.cells));
    const double a = unit(rng), c = unit(rng) * grid.r_max, w = 0.05 + unit(rng) * grid.r_max;
    for (int i = 0; i < grid.cells; ++i) {
        const double r = grid.center(i);
        u[static_cast<std::size_t>(i)] = a * std::exp(-std::pow((r - c) / w, 2)) + noise * unit(rng);
    }
    return u;
}

}  // namespace

TEST_CASE("grid geometry") {
    const RadialGrid g = RadialGrid::make(2, 4.0, 8);
    CHECK(g.spacing() == 0.5);
    CHECK(g.center(0) == 0.25);
    CHECK(g.center(7) == 3.75);
    CHECK_THROWS_AS(RadialGrid::make(1, 1.0, 1), Error);
    CHECK_THROWS_AS(RadialGrid::make(1, -1.0, 4), Error);
}

TEST_CASE("face gradient examples") {
    const RadialGrid grid = RadialGrid::make(1, 1.0, 10);
    const Field lin = sample(grid, [](double r) { return 1.0 - r; });
    const auto g = face_gradient(lin, 0.0);
    REQUIRE(g.size() == 11);
    CHECK(g[0] == 0.0);
    for (int f = 1; f < 10; ++f) CHECK(g[static_cast<std::size_t>(f)] == doctest::Approx(-1.0).epsilon(1e-13));
    // Outer face uses the homogeneous Dirichlet ghost.
    CHECK(g[10] == doctest::Approx(-(1.0 - 0.95) / 0.1).epsilon(1e-13));

    const Field flat = sample(grid, [](double) { return 3.0; });
    const auto gf = face_gradient(flat, 3.0);
    for (double v : gf) CHECK(v == 0.0);

    const Field sq = sample(grid, [](double r) { return r * r; });
    const auto gs = face_gradient(sq);
    for (int f = 1; f < 10; ++f) {
        CHECK(gs[static_cast<std::size_t>(f)] ==
              doctest::Approx(grid.center(f - 1) + grid.center(f)).epsilon(1e-13));
    }
}

TEST_CASE("regularization validates the lift exponent") {
    const ProblemParams pp{1, 2.0, 0.5};
    CHECK(Regularization::lift_exponent_bound(pp) == doctest::Approx(0.25));
    const Regularization reg = Regularization::make(pp, 1e-3);
    CHECK(reg.lift_exponent == doctest::Approx(0.125));
    CHECK_THROWS_AS(Regularization::make(pp, 1e-3, 0.25), Error);
    CHECK_THROWS_AS(Regularization::make(pp, 1e-3, 0.0), Error);
    CHECK_THROWS_AS(Regularization::make(pp, 0.0), Error);
    CHECK_NOTHROW(Regularization::make(ProblemParams{2, 1.8, 0.6}, 1e-3, 0.29));
    CHECK_THROWS_AS(Regularization::make(ProblemParams{2, 1.8, 0.6}, 1e-3, 0.31), Error);
}

TEST_CASE("constants are steady with the counterterm and sink without it") {
    for (int N = 1; N <= 3; ++N) {
        const ProblemParams pp{N, 1.7, 0.4};
        const RadialGrid grid = RadialGrid::make(N, 2.0, 32);
        const Field c = sample(grid, [](double) { return 0.7; });
        const Regularization on = Regularization::make(pp, 1e-2);
        const DiscreteOperator op(grid, pp, on);
        std::vector<double> k(32);
        op.rhs(c.values, 0.7, k);
        for (double v : k) CHECK(std::abs(v) <= 1e-15);

        Regularization off = on;
        off.counterterm = false;
        const DiscreteOperator op_off(grid, pp, off);
        op_off.rhs(c.values, 0.7, k);
        for (double v : k) CHECK(v == doctest::Approx(-std::pow(1e-2, 0.4)).epsilon(1e-14));
    }
}

TEST_CASE("barrier residual converges at second order") {
    const ProblemParams pp{1, 2.0, 0.5};
    const double kappa = 1.0 / 12.0;
    const auto bar = [&](double r) { return kappa * r * r * r; };
    Regularization reg = Regularization::make(pp, 1e-6);
    reg.counterterm = false;

    std::vector<double> errs;
    for (double dr : {4e-3, 2e-3, 1e-3}) {
        const int m = static_cast<int>(std::lround(1.0 / dr));
        const RadialGrid grid = RadialGrid::make(1, 1.0, m);
        const Field u = sample(grid, bar);
        const DiscreteOperator op(grid, pp, reg);
        std::vector<double> k(u.values.size());
        op.rhs(u.values, bar(1.0 + 0.5 * dr), k);
        double e = 0.0;
        for (int i = 0; i < m; ++i) {
            const double r = grid.center(i);
            if (r >= 0.25 && r <= 0.9) e = std::max(e, std::abs(k[static_cast<std::size_t>(i)]));
        }
        errs.push_back(e);
    }
    CHECK(errs[2] < 1e-6);
    CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("stable time step examples") {
    const RadialGrid grid = RadialGrid::make(1, 1.0, 100);
    const Field zero = sample(grid, [](double) { return 0.0; });

    const ProblemParams p15{1, 1.5, 0.25};
    const Regularization reg = Regularization::make(p15, 1e-2);
    const double dt = stable_dt(zero, p15, reg, 1.0);
    CHECK(dt == doctest::Approx(5e-6).epsilon(0.02));
    // Diffusive part alone is exactly dr^2 / (2 eps^{p-2}).
    OperatorOptions pure;
    pure.absorption = false;
    CHECK(stable_dt(zero, p15, reg, 1.0, pure) == doctest::Approx(5e-6).epsilon(1e-12));

    const ProblemParams p2{1, 2.0, 0.5};
    const Regularization reg2 = Regularization::make(p2, 1e-2);
    const Field smooth = sample(grid, [](double r) { return std::cos(r); });
    const double dt2 = stable_dt(smooth, p2, reg2, 1.0);
    CHECK(dt2 <= 1e-4 / 2.0);
    // q b(g^2)/max(g, eps) peaks at g = eps with value q (2 eps^2)^{q/2} / eps.
    CHECK(dt2 >= 1e-4 / (2.0 + 0.01 * 0.5 * std::pow(2.0, 0.25) / std::sqrt(1e-2)));
    CHECK(stable_dt(smooth, p2, reg2, 0.5) == doctest::Approx(0.5 * dt2).epsilon(1e-15));
    CHECK_THROWS_AS(stable_dt(smooth, p2, reg2, 0.0), Error);
}

TEST_CASE("geometric stencil weights") {
    const DiscreteOperator op2(RadialGrid::make(2, 1.0, 16), ProblemParams{2, 1.8, 0.6},
                               Regularization::make(ProblemParams{2, 1.8, 0.6}, 1e-2));
    // Centre cell right weight 2 plus the left weight 2/3 of cell 1.
    CHECK(op2.max_weight_sum() == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    const DiscreteOperator op3(RadialGrid::make(3, 1.0, 16), ProblemParams{3, 1.9, 0.6},
                               Regularization::make(ProblemParams{3, 1.9, 0.6}, 1e-2));
    CHECK(op3.max_weight_sum() == doctest::Approx(4.0 + 4.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("upwind explicit step is monotone for arbitrary ordered pairs") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const ProblemParams pp = random_single_point(rng);
        const RadialGrid grid = RadialGrid::make(pp.N, 1.0 + 3.0 * unit(rng), 256);
        const double eps = std::pow(10.0, -6.0 + 5.0 * unit(rng));
        OperatorOptions opt;
        opt.stencil = HamiltonianStencil::Upwind;
        const DiscreteOperator op(grid, pp, Regularization::make(pp, eps, std::nullopt, unit(rng) < 0.5), opt);
        const std::vector<double> u = random_field(rng, grid, unit(rng));
        std::vector<double> v = random_field(rng, grid, unit(rng));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = u[i] + v[i] * (unit(rng) < 0.3 ? 0.0 : 1.0);
        const double dt = std::min(op.stable_dt(u, 0.0, 1.0), op.stable_dt(v, 0.0, 1.0));
        const auto u1 = euler_step(op, u, dt);
        const auto v1 = euler_step(op, v, dt);
        double worst = 0.0;
        for (std::size_t i = 0; i < u1.size(); ++i) worst = std::max(worst, u1[i] - v1[i]);
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("upwind explicit step keeps non-increasing profiles non-increasing") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const ProblemParams pp = random_single_point(rng);
        const RadialGrid grid = RadialGrid::make(pp.N, 1.0 + 3.0 * unit(rng), 256);
        const double eps = std::pow(10.0, -6.0 + 5.0 * unit(rng));
        const DiscreteOperator op(grid, pp, Regularization::make(pp, eps), {HamiltonianStencil::Upwind});
        std::vector<double> u = random_field(rng, grid, unit(rng));
        std::sort(u.begin(), u.end(), std::greater<>());
        // Flat stretches next to jumps are the worst case near the centre.
        for (std::size_t i = 1; i < u.size(); ++i) {
            if (unit(rng) < 0.3) u[i] = u[i - 1];
        }
        const auto u1 = euler_step(op, u, op.stable_dt(u, 0.0, 1.0));
        double worst = 0.0;
        for (std::size_t i = 1; i < u1.size(); ++i) worst = std::max(worst, u1[i] - u1[i - 1]);
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("centred explicit step is monotone at the resolution-tied eps") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const ProblemParams pp = random_single_point(rng);
        const RadialGrid grid = RadialGrid::make(pp.N, 1.0 + 3.0 * unit(rng), 256);
        const DiscreteOperator op(grid, pp, Regularization::make(pp, resolution_epsilon(grid)));
        const std::vector<double> u = random_field(rng, grid, unit(rng));
        std::vector<double> v = random_field(rng, grid, unit(rng));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += u[i];
        const double dt = std::min(op.stable_dt(u, 0.0, 1.0), op.stable_dt(v, 0.0, 1.0));
        const auto u1 = euler_step(op, u, dt);
        const auto v1 = euler_step(op, v, dt);
        double worst = 0.0;
        for (std::size_t i = 0; i < u1.size(); ++i) worst = std::max(worst, u1[i] - v1[i]);
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("weighted mass is conserved without absorption under zero flux") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const ProblemParams pp = random_single_point(rng);
        const RadialGrid grid = RadialGrid::make(pp.N, 2.0, 128);
        OperatorOptions opt;
        opt.absorption = false;
        opt.outer = OuterBoundary::ZeroFlux;
        const DiscreteOperator op(grid, pp, Regularization::make(pp, 1e-2), opt);
        const auto u = random_field(rng, grid, 0.2);
        const auto u1 = euler_step(op, u, op.stable_dt(u, 0.0, 1.0));
        double m0 = 0.0, m1 = 0.0;
        for (int i = 0; i < grid.cells; ++i) {
            const double w = std::pow(grid.center(i), pp.N - 1) * grid.spacing();
            m0 += w * u[static_cast<std::size_t>(i)];
            m1 += w * u1[static_cast<std::size_t>(i)];
        }
        CHECK(std::abs(m1 - m0) <= 1e-12 * std::max(1.0, m0));
    }
}

TEST_CASE("centre cell sees only the symmetry face") {
    const ProblemParams pp{3, 1.9, 0.6};
    const RadialGrid grid = RadialGrid::make(3, 1.0, 64);
    const Regularization reg = Regularization::make(pp, 1e-3);
    const DiscreteOperator op(grid, pp, reg);
    const Field u = sample(grid, [](double r) { return std::exp(-4 * r * r); });
    std::vector<double> k(64), k_ghost(64);
    op.rhs(u.values, 0.0, k);
    op.rhs(u.values, 0.3, k_ghost);
    const double dr = grid.spacing();
    const double g1 = (u.values[1] - u.values[0]) / dr;
    const double expect = op.weight_right(0) * op.flux(g1) / dr - op.hamiltonian(0.5 * g1) + std::pow(1e-3, 0.6);
    CHECK(k[0] == doctest::Approx(expect).epsilon(1e-13));
    CHECK(k[0] == k_ghost[0]);
    CHECK(op.weight_right(0) == doctest::Approx(4.0));
}

TEST_CASE("snapshot csv") {
    const RadialGrid grid = RadialGrid::make(1, 1.0, 3);
    const Field u = sample(grid, [](double r) { return 1.0 / 3.0 + r; });
    std::ostringstream os;
    write_csv(os, u);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "r,u");
    int rows = 0;
    while (std::getline(is, line)) {
        const auto comma = line.find(',');
        CHECK(std::stod(line.substr(comma + 1)) == u.values[static_cast<std::size_t>(rows)]);
        ++rows;
    }
    CHECK(rows == 3);
}
