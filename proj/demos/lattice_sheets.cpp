// Alchemical sheets on a time-parallel lattice. Column b samples
// V(x) + (b / B) W(x), and neighbouring sheets exchange states.

#include <cstdio>

#include "hglue.hpp"

using namespace hglue;

int main() {
    const std::size_t rows = 16, cols = 5;
    const auto v = make_double_well(1.0, 1.0);
    HorizontalSpec h;
    h.kind = HorizontalKind::sheet;
    h.sheet = linear_sheet(static_cast<int>(cols) - 1, make_quadratic(2.0, {0.0}));

    auto lat = TrajectoryLattice::gaussian(Schedule::uniform(rows, 0.02), cols, 1, 5);
    LatticeStats total;
    std::vector<Moments> m(cols);
    for (int it = 0; it < 4000; ++it) {
        const auto s = macro_iteration(lat, *v, h, {0.5, 0.5}, {}, {5, 0});
        total.swap_attempts += s.swap_attempts;
        total.swaps_accepted += s.swaps_accepted;
        if (it < 500) continue;
        for (std::size_t n = 0; n < rows; ++n)
            for (std::size_t b = 0; b < cols; ++b) m[b].add(lat.at(n, b).positions[0] * lat.at(n, b).positions[0]);
    }
    std::printf("swap acceptance %.3f over %zu attempts\n",
                static_cast<double>(total.swaps_accepted) / static_cast<double>(total.swap_attempts),
                total.swap_attempts);
    for (std::size_t b = 0; b < cols; ++b)
        std::printf("sheet %zu  lambda %.2f  E[x^2] %.4f\n", b, h.sheet.lambda(static_cast<int>(b)), m[b].mean());
}
