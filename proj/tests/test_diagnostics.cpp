#include <gtest/gtest.h>

#include <cmath>

#include "hglue/diagnostics.hpp"

using namespace hglue;

TEST(Fit, ExactPowerLaw) {
    const Vector x{0.1, 0.2, 0.4, 0.8};
    Vector y;
    for (double v : x) y.push_back(3.0 * v * v);
    const auto f = fit_loglog(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
    EXPECT_NEAR(f.stderr_, 0.0, 1e-10);
    EXPECT_EQ(f.points, 4u);
    EXPECT_TRUE(std::isnan(fit_loglog({1.0}, {1.0}).slope));
}

TEST(Fit, MomentsMergeMatchesSinglePass) {
    Moments all, a, b;
    for (int i = 0; i < 100; ++i) {
        const double v = std::sin(i * 0.7);
        all.add(v);
        (i < 37 ? a : b).add(v);
    }
    a.merge(b);
    EXPECT_NEAR(a.mean(), all.mean(), 1e-15);
    EXPECT_NEAR(a.variance(), all.variance(), 1e-14);
}

TEST(PathKl, ScheduleTermQuadraticOracle) {
    // Exact drift, kappa = 1, T = 1: KL(0) = T^2 / (4N) up to O(dt^2) corrections.
    const auto q = make_quadratic(1.0, {0.0});
    for (std::size_t n : {10u, 20u, 40u}) {
        PathKlConfig cfg;
        cfg.schedule = Schedule::uniform(n, 1.0 / n);
        cfg.paths = 20000;
        const auto r = path_kl_estimate(*q, *q, {}, cfg);
        EXPECT_NEAR(r.kl, 1.0 / (4.0 * n), 0.1 / (4.0 * n)) << "N=" << n;
    }
}

TEST(PathKl, ConstantShiftModelTerm) {
    // A constant drift bias eps adds T eps^2 / (4 D) to leading order.
    const auto q = make_quadratic(1.0, {0.0});
    const auto used = perturb(q, 0.3, PerturbationMode::constant_shift, 1);
    PathKlConfig cfg;
    cfg.schedule = Schedule::uniform(50, 0.02);
    cfg.paths = 4000;
    const auto r = kl_budget(*q, *used, 0.3, {}, cfg);
    EXPECT_NEAR(r.model_term, 0.09 / 4.0, 0.1 * 0.09 / 4.0);
    EXPECT_NEAR(r.empirical_kl, r.model_term + r.schedule_term, 1e-15);
    EXPECT_EQ(r.steps, 50u);
}

TEST(PathKl, WorkerCountInvariant) {
    const auto q = make_double_well(1.0, 1.0);
    PathKlConfig cfg;
    cfg.schedule = Schedule::uniform(10, 0.05);
    cfg.paths = 1000;
    cfg.workers = 1;
    const auto a = path_kl_estimate(*q, *q, {}, cfg);
    cfg.workers = 4;
    const auto b = path_kl_estimate(*q, *q, {}, cfg);
    EXPECT_EQ(a.kl, b.kl);
    EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(PathKl, TemperingRaisesDiffusion) {
    // Hot steps divide the drift gap by a larger D_n.
    const auto q = make_quadratic(1.0, {0.0});
    const auto used = perturb(q, 0.3, PerturbationMode::constant_shift, 1);
    PathKlConfig cold;
    cold.schedule = Schedule::uniform(20, 0.05);
    cold.paths = 2000;
    PathKlConfig hot = cold;
    hot.schedule = cold.schedule.with_tempering(Vector(20, 2.0));
    const double c = kl_budget(*q, *used, 0.3, {}, cold).model_term;
    const double h = kl_budget(*q, *used, 0.3, {}, hot).model_term;
    EXPECT_NEAR(h, c / 2.0, 0.1 * c);
}

TEST(PathKl, NodeSumOfConstantShift) {
    const auto q = make_quadratic(1.0, {0.0});
    const auto used = perturb(q, 0.2, PerturbationMode::constant_shift, 1);
    const Schedule s = Schedule::uniform(5, 0.1);
    const std::vector<std::vector<Vector>> frames(6, std::vector<Vector>{{0.3}, {-1.0}});
    EXPECT_NEAR(path_kl_node_sum(frames, *q, *used, s, {}), 0.04 * 0.5 / 4.0, 1e-15);
}

TEST(Budget, StepsForAccuracy) {
    // N >= beta L^2 T^2 / (2 (eps^2 - beta T eps_bar^2)).
    EXPECT_EQ(steps_for_accuracy(0.1, 0.0, 1.0, 1.0, {}), 50u);
    EXPECT_EQ(steps_for_accuracy(0.1, 0.05, 2.0, 1.0, {}), 267u);
    EXPECT_THROW(steps_for_accuracy(0.1, 0.2, 1.0, 1.0, {}), DomainError);
}

TEST(Budget, RefinementSweepShrinksScheduleTerm) {
    const auto q = make_quadratic(1.0, {0.0});
    PathKlConfig base;
    base.paths = 2000;
    const auto rows = refinement_sweep(
        q, [&](double e) { return DriftPtr(perturb(q, e, PerturbationMode::constant_shift, 1)); }, {10, 40},
        [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }, 1.0, {}, base);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LT(rows[1].report.schedule_term, rows[0].report.schedule_term / 2.0);
    EXPECT_LT(rows[1].report.model_term, rows[0].report.model_term);
}

TEST(Stationary, EmOuBiasMatchesClosedForm) {
    const auto q = make_quadratic(1.0, {0.0});
    const StepKernel k(KernelKind::em, q);
    StationaryConfig cfg;
    cfg.steps = 400000;
    cfg.burn_in = 2000;
    const auto e = stationary_average(k, [](std::span<const double> x) { return x[0] * x[0]; }, 0.4, cfg);
    EXPECT_NEAR(e.mean, em_ou_stationary_variance(1.0, 0.4), 4.0 * e.sigma);
    EXPECT_GT(e.tau_int, 1.0);
    EXPECT_EQ(e.acceptance, 1.0);
    EXPECT_THROW(em_ou_stationary_variance(1.0, 2.0), DomainError);
}

TEST(Stationary, BiasSlopeOne) {
    const auto q = make_quadratic(1.0, {0.0});
    const StepKernel k(KernelKind::em, q);
    StationaryConfig cfg;
    cfg.steps = 400000;
    cfg.burn_in = 2000;
    const auto r = stationary_bias_fit(k, [](std::span<const double> x) { return x[0] * x[0]; }, 1.0,
                                       {0.4, 0.2, 0.1}, cfg);
    EXPECT_NEAR(r.fit.slope, 1.0, 0.3);
}

TEST(Quadrature, BoltzmannAverage) {
    const auto q = make_quadratic(2.0, {0.5});
    EXPECT_NEAR(boltzmann_average_1d(*q, [](double x) { return x; }, 1.0, -10, 10), 0.5, 1e-10);
    EXPECT_NEAR(boltzmann_average_1d(*q, [](double x) { return (x - 0.5) * (x - 0.5); }, 1.0, -10, 10), 0.5, 1e-10);
}

TEST(Fusion, TotalNoiseIsTwoDdt) {
    const double v = noise_fusion_variance({0.3, 0.7}, 0.1, 20000, 2, 3);
    EXPECT_NEAR(v, 0.2, 4.0 * 0.2 * std::sqrt(2.0 / 40000));
}

TEST(WeakOrder, WorkerCountInvariant) {
    const auto q = make_double_well(1.0, 1.0);
    const StepKernel k(KernelKind::em, q);
    WeakOrderConfig cfg;
    cfg.paths = 500;
    cfg.refine = 4;
    cfg.dts = {0.04, 0.02, 0.01, 0.005};  // EM on the quartic well diverges at dt = 0.2
    cfg.workers = 1;
    const auto a = weak_order_fit(k, [](std::span<const double> x) { return x[0] * x[0]; }, cfg);
    cfg.workers = 3;
    const auto b = weak_order_fit(k, [](std::span<const double> x) { return x[0] * x[0]; }, cfg);
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].error, b.points[i].error);
}
