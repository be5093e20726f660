#pragma once

#include <algorithm>
#include <random>

#include "hjlab/exponents.hpp"

namespace hjlab {

// Uniform draw of (N, p, q) with p_c < p <= 2 and 0 < q < p - 1 - min_gap.
// A positive min_gap keeps amplitude * r^exponent inside binary64 range.
inline ProblemParams random_single_point(std::mt19937_64& rng, double min_gap = 0.0) {
    std::uniform_int_distribution<int> dim(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
        ProblemParams pp;
        pp.N = dim(rng);
        const double lo = std::max(2.0 * pp.N / (pp.N + 1.0), 1.0) + 1e-9;
        pp.p = lo + (2.0 - lo) * unit(rng);
        const double q_hi = pp.p - 1.0 - min_gap;
        if (q_hi <= 0.0) continue;
        pp.q = q_hi * (1e-6 + (1.0 - 2e-6) * unit(rng));
        return pp;
    }
}

}  // namespace hjlab
