// Batch of EM chains on a 1-D quadratic: compares the unadjusted stationary
// variance with the closed form and with the MH-corrected chain.

#include <cstdio>

#include "hglue.hpp"

using namespace hglue;

int main() {
    const auto q = make_quadratic(1.0, {0.0});
    const StepKernel em(KernelKind::em, q);
    const Observable x2 = [](std::span<const double> x) { return x[0] * x[0]; };

    std::printf("%8s %12s %12s %12s %10s\n", "dt", "E[x^2]", "closed form", "MH E[x^2]", "accept");
    for (double dt : {0.4, 0.2, 0.1, 0.05}) {
        StationaryConfig cfg;
        cfg.steps = 200000;
        cfg.burn_in = 2000;
        const auto raw = stationary_average(em, x2, dt, cfg);
        cfg.metropolis = true;
        const auto mh = stationary_average(em, x2, dt, cfg);
        std::printf("%8.3f %12.5f %12.5f %12.5f %10.4f\n", dt, raw.mean, em_ou_stationary_variance(1.0, dt), mh.mean,
                    mh.acceptance);
    }

    // Sixteen chains over a tempered schedule, hot early and cold late.
    const Schedule sched = Schedule::uniform(400, 0.01).with_tempering(geometric_tempering(400, 4.0));
    const StepKernel tempered(KernelKind::tempered, make_double_well(1.0, 1.0));
    const auto traj = parallel_batch_sample(gaussian_batch(16, 1, 3), tempered, sched, 3);
    std::size_t right = 0;
    for (const Vector& x : traj.frames.back()) right += x[0] > 0.0;
    std::printf("tempered double well: %zu of 16 chains end in the right well\n", right);
}
