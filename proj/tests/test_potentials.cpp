#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hglue/diagnostics.hpp"
#include "hglue/potentials.hpp"

using namespace hglue;

namespace {

Vector random_point(std::uint32_t i, std::size_t dim, double scale) {
    Vector x = gaussian_draw(RngStream(77, i, 0, 0), dim);
    for (double& v : x) v *= scale;
    return x;
}

void expect_fd_match(const DriftProvider& p, std::size_t dim, double scale) {
    for (std::uint32_t i = 0; i < 100; ++i) {
        const Vector x = random_point(i, dim, scale);
        const Vector g = p.gradient(x);
        const Vector fd = finite_difference_gradient(p, x);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            num += (g[j] - fd[j]) * (g[j] - fd[j]);
            den += g[j] * g[j];
        }
        EXPECT_LE(std::sqrt(num), 1e-6 * std::max(1.0, std::sqrt(den))) << p.label() << " probe " << i;
    }
}

} // namespace

TEST(Quadratic, Examples) {
    const auto q = make_quadratic(1.0, {0.0});
    const Vector x{2.0};
    EXPECT_DOUBLE_EQ(q->value(x), 2.0);
    EXPECT_DOUBLE_EQ(q->gradient(x)[0], 2.0);
    const auto c = make_quadratic(3.0, {1.0, -2.0});
    EXPECT_EQ(c->value(Vector{1.0, -2.0}), 0.0);
    EXPECT_EQ(c->gradient(Vector{1.0, -2.0}), (Vector{0.0, 0.0}));
    EXPECT_THROW(make_quadratic(0.0, {0.0}), DomainError);
    EXPECT_EQ(*c->lipschitz(), 3.0);
}

TEST(DoubleWell, Examples) {
    const DoubleWell w(2.0, 1.5);
    for (double x : {-1.5, 1.5}) {
        EXPECT_EQ(w.value(Vector{x}), 0.0);
        EXPECT_EQ(w.gradient(Vector{x})[0], 0.0);
    }
    EXPECT_DOUBLE_EQ(w.value(Vector{0.0}), 2.0 * std::pow(1.5, 4));
    EXPECT_EQ(w.gradient(Vector{0.0})[0], 0.0);
    EXPECT_THROW(DoubleWell(0.0, 1.0), DomainError);
    EXPECT_THROW(DoubleWell(1.0, -1.0), DomainError);
}

TEST(DoubleWell, SymmetricOccupancyByQuadrature) {
    const DoubleWell w(1.0, 1.0);
    // Odd observables average to zero; the step indicator is only Simpson-accurate to O(h).
    EXPECT_NEAR(boltzmann_average_1d(w, [](double x) { return x * x * x; }, 1.0, -4.0, 4.0), 0.0, 1e-9);
    const double left = boltzmann_average_1d(w, [](double x) { return x < 0.0 ? 1.0 : 0.0; }, 1.0, -4.0, 4.0);
    EXPECT_NEAR(left, 0.5, 1e-3);
}

TEST(TorsionRing, FlatHeightsGiveZeroDrift) {
    const TorsionRing flat({0.0, 0.0, 0.0});
    for (double t : {-3.0, 0.0, 1.0, 2.5}) {
        EXPECT_EQ(flat.value(Vector{t}), 0.0);
        EXPECT_EQ(flat.gradient(Vector{t})[0], 0.0);
    }
}

TEST(TorsionRing, Periodic) {
    const TorsionRing r({0.5, 0.2, 1.0});
    for (double t = -3.0; t < 3.0; t += 0.37)
        EXPECT_NEAR(r.value(Vector{t + 2.0 * std::numbers::pi}), r.value(Vector{t}), 1e-12);
}

TEST(TorsionRing, ThreeMinimaWithZeroGradient) {
    const TorsionRing r({0.5, 0.0, 1.0});
    // Bracket each minimum around -60, 60 and 180 degrees and bisect on V'.
    const double deg = std::numbers::pi / 180.0;
    const std::array<std::pair<double, double>, 3> brackets{{{-90 * deg, -30 * deg}, {30 * deg, 90 * deg},
                                                             {150 * deg, 210 * deg}}};
    for (auto [lo, hi] : brackets) {
        auto d = [&](double t) { return r.gradient(Vector{t})[0]; };
        ASSERT_LT(d(lo), 0.0);
        ASSERT_GT(d(hi), 0.0);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (d(mid) < 0.0 ? lo : hi) = mid;
        }
        EXPECT_LE(std::abs(d(0.5 * (lo + hi))), 1e-10);
    }
    EXPECT_DOUBLE_EQ(r.value(Vector{std::numbers::pi}), -1.5);
}

TEST(FiniteDifference, AllProvidersAtHundredProbes) {
    expect_fd_match(*make_quadratic(2.5, {0.3, -0.1, 1.0}), 3, 1.0);
    expect_fd_match(DoubleWell(1.0, 1.0, 2), 2, 1.0);
    expect_fd_match(TorsionRing({0.5, 0.3, 1.0}, 2), 2, 2.0);
    expect_fd_match(SumDrift(make_quadratic(1.0, {0.0, 0.0}), make_double_well(0.5, 1.0, 2)), 2, 1.0);
    expect_fd_match(ScaledDrift(make_quadratic(1.0, {0.0}), 2.0), 1, 1.0);
}

TEST(Perturb, ZeroBoundIsIdentity) {
    const auto base = make_double_well(1.0, 1.0);
    const auto p = perturb(base, 0.0, PerturbationMode::smooth_random, 1);
    for (double x = -2.0; x <= 2.0; x += 0.1) EXPECT_EQ(p->gradient(Vector{x}), base->gradient(Vector{x}));
}

TEST(Perturb, ConstantShiftIsExact) {
    const auto base = make_quadratic(1.0, {0.0});
    const auto p = perturb(base, 0.1, PerturbationMode::constant_shift, 1);
    for (double x = -2.0; x <= 2.0; x += 0.25)
        EXPECT_NEAR(p->gradient(Vector{x})[0] - base->gradient(Vector{x})[0], 0.1, 1e-15);
}

TEST(Perturb, SupNormBoundedOnDenseGrid) {
    for (auto mode : {PerturbationMode::constant_shift, PerturbationMode::smooth_random}) {
        const auto p = perturb(make_quadratic(1.0, {0.0, 0.0}), 0.3, mode, 2, 99);
        double sup = 0.0;
        for (double a = -5.0; a <= 5.0; a += 0.05)
            for (double b = -5.0; b <= 5.0; b += 0.05) {
                const Vector e = p->perturbation(Vector{a, b});
                sup = std::max(sup, std::hypot(e[0], e[1]));
            }
        EXPECT_LE(sup, 0.3 * (1.0 + 1e-9));
        EXPECT_GT(sup, 0.0);
    }
}

TEST(Registry, BuildsByLabel) {
    PotentialParams p;
    p.dim = 2;
    EXPECT_EQ(make_potential("quadratic", p)->label(), "quadratic");
    EXPECT_EQ(make_potential("double-well", p)->label(), "double-well");
    EXPECT_EQ(make_potential("torsion-ring", p)->label(), "torsion-ring");
    p.eps_bar = 0.1;
    EXPECT_EQ(make_potential("quadratic", p)->label(), "perturbed");
    EXPECT_THROW(make_potential("lennard-jones", p), ConfigError);
}

TEST(EnergyUnits, ScalesByBeta) {
    const auto g = energy_units(make_quadratic(1.0, {0.0}), 2.0);
    EXPECT_DOUBLE_EQ(g->gradient(Vector{1.5})[0], 3.0);
}
