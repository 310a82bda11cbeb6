// Acceptance checks. `acceptance --criterion N` runs one; no argument runs all.
// Each prints one line: "criterion N: PASS|FAIL <measurements> (<seconds>s, budget <b>s)".

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "hglue.hpp"

using namespace hglue;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

Observable square() {
    return [](std::span<const double> x) { return x[0] * x[0]; };
}

std::size_t workers() { return resolve_workers(0); }

// 1. harmonic kernel == EM bitwise.
Outcome c1() {
    const auto q = make_double_well(1.0, 1.0, 3);
    std::size_t mismatches = 0;
    for (std::uint32_t i = 0; i < 10000; ++i) {
        const Vector x = gaussian_draw(RngStream(1, i, 0, stage::init), 3);
        const RngStream s(1000 + i, i, i % 7, 0);
        if (harmonic_kernel_step(x, 0.01 * (1 + i % 50), *q, {}, s) != em_step(x, 0.01 * (1 + i % 50), *q, {}, s))
            ++mismatches;
    }
    return {mismatches == 0, "mismatches=" + std::to_string(mismatches) + "/10000"};
}

// 2. k = 1/(2 D dt), dt = beta/(2k).
Outcome c2() {
    double worst = 0.0;
    const Units u = Units::from_temperature(1.7);
    for (int i = 0; i < 1000; ++i) {
        const double dt = std::pow(10.0, -6.0 + 8.0 * i / 999.0);
        const double k = stiffness_for_step(dt, u);
        worst = std::max(worst, std::abs(k * 2.0 * u.diffusion * dt - 1.0));
        worst = std::max(worst, std::abs(step_for_stiffness(k, u) / dt - 1.0));
        worst = std::max(worst, std::abs(step_for_stiffness(k, u) / (u.beta / (2.0 * k)) - 1.0));
    }
    return {worst < 1e-12, "max_rel_err=" + fmt(worst)};
}

// 3. OU stationarity, unadjusted and MH-wrapped.
Outcome c3() {
    const auto q = make_quadratic(1.0, {0.0});
    const StepKernel k(KernelKind::em, q);
    StationaryConfig cfg;
    cfg.steps = 1000000;
    cfg.burn_in = 10000;
    cfg.seed = 31;
    const double exact_em = em_ou_stationary_variance(1.0, 0.01);
    const auto e = stationary_average(k, square(), 0.01, cfg);
    cfg.metropolis = true;
    cfg.seed = 32;
    const auto m = stationary_average(k, square(), 0.01, cfg);
    const double ze = std::abs(e.mean - exact_em) / e.sigma;
    const double zm = std::abs(m.mean - 1.0) / m.sigma;
    return {ze <= 3.0 && zm <= 3.0, "em_var=" + fmt(e.mean) + " exact=" + fmt(exact_em) + " z=" + fmt(ze) +
                                        "; mh_var=" + fmt(m.mean) + " z=" + fmt(zm)};
}

// 4. Boltzmann well populations under MH.
Outcome c4() {
    std::ostringstream d;
    bool ok = true;
    auto check = [&](const std::string& name, const DriftPtr& v, const Observable& F,
                     const std::function<double(double)>& f1, double lo, double hi, double dt, std::uint64_t seed) {
        const StepKernel k(KernelKind::em, v);
        StationaryConfig cfg;
        cfg.steps = 2000000;
        cfg.burn_in = 10000;
        cfg.seed = seed;
        cfg.metropolis = true;
        const auto e = stationary_average(k, F, dt, cfg);
        const double exact = boltzmann_average_1d(*v, f1, 1.0, lo, hi);
        const double z = std::abs(e.mean - exact) / e.sigma;
        ok = ok && z <= 3.0;
        d << name << "=" << fmt(e.mean) << " exact=" << fmt(exact) << " z=" << fmt(z) << "; ";
    };
    constexpr double pi = std::numbers::pi;
    const auto dw = make_double_well(1.0, 1.0);
    check("dw_P(x>0.5)", dw, [](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; },
          [](double x) { return x > 0.5 ? 1.0 : 0.0; }, -4, 4, 0.05, 41);
    const auto tr = make_torsion_ring({0.5, 0.0, 1.0});
    auto trans = [](double t) {
        const double w = wrap_angle(t);
        return std::abs(w) > 2.0 * pi / 3.0 ? 1.0 : 0.0;
    };
    auto gauche_plus = [](double t) {
        const double w = wrap_angle(t);
        return w > 0.0 && w < 2.0 * pi / 3.0 ? 1.0 : 0.0;
    };
    check("torsion_P(trans)", tr, [&](std::span<const double> x) { return trans(x[0]); }, trans, -pi, pi, 0.05, 42);
    check("torsion_P(g+)", tr, [&](std::span<const double> x) { return gauche_plus(x[0]); }, gauche_plus, -pi, pi,
          0.05, 43);
    return {ok, d.str()};
}

// 5. Strang pure-noise covariance = 2 D dt.
Outcome c5() {
    std::ostringstream d;
    bool ok = true;
    const double dt = 0.01;
    for (const Split& s : {Split{0.5, 0.5}, Split{0.2, 0.8}, Split{0.9, 0.1}}) {
        const double v = noise_fusion_variance(s, dt, 100000, 1, 51);
        const double rel = std::abs(v / (2.0 * dt) - 1.0);
        ok = ok && rel < 0.02;
        d << "(" << s.vertical << "," << s.horizontal << ") rel_err=" << fmt(rel) << "; ";
    }
    return {ok, d.str()};
}

// 6. Weak-order slopes on OU against a coupled fine-grid reference.
Outcome c6() {
    const auto q = make_quadratic(1.0, {0.0});
    const auto half = make_quadratic(0.5, {0.0});
    KernelOptions so;
    so.horizontal = half;
    so.split = {0.5, 0.5};
    so.substep = SubstepKind::heun;
    KernelOptions so_em = so;
    so_em.substep = SubstepKind::em;
    const StepKernel em(KernelKind::em, q), heun(KernelKind::heun, q), strang(KernelKind::strang, half, {}, so),
        strang_em(KernelKind::strang, half, {}, so_em);
    WeakOrderConfig cfg;
    cfg.paths = 400000;
    cfg.refine = 64;
    cfg.seed = 61;
    cfg.workers = workers();
    const auto r = weak_order_sweep({&em, &heun, &strang, &strang_em}, square(), cfg);
    const double se = r[0].fit.slope, sh = r[1].fit.slope, ss = r[2].fit.slope;
    const bool ok = std::abs(se - 1.0) <= 0.15 && std::abs(sh - 2.0) <= 0.25 && std::abs(ss - 2.0) <= 0.25;
    std::string warn;
    for (const auto& x : r)
        for (const auto& w : x.warnings) warn += " [" + w + "]";
    return {ok, "em=" + fmt(se) + " heun=" + fmt(sh) + " strang(heun substeps)=" + fmt(ss) +
                    " [info: strang(em substeps)=" + fmt(r[3].fit.slope) + "]" + warn};
}

// 7. (1 - acceptance) vs dt for EM and Strang proposals.
Outcome c7() {
    const Vector dts{0.2, 0.1, 0.05, 0.025};
    auto gaps = [&](const StepKernel& k, const DriftProvider& target) {
        Vector g;
        for (double dt : dts) {
            const auto chain = mh_wrapped_trajectory(k, target, Vector{0.0}, dt, 400000, 71, 400001);
            g.push_back(1.0 - chain.mean_alpha());
        }
        return g;
    };
    const auto q = make_quadratic(1.0, {0.0});
    const auto half = make_quadratic(0.5, {0.0});
    KernelOptions so;
    so.horizontal = half;
    so.split = {0.5, 0.5};
    const StepKernel em(KernelKind::em, q), strang(KernelKind::strang, half, {}, so);
    const auto sum = make_sum(half, half);
    const double se = fit_loglog(dts, gaps(em, *q)).slope;
    const double ss = fit_loglog(dts, gaps(strang, *sum)).slope;
    return {std::abs(se - 1.0) <= 0.3 && std::abs(ss - 2.0) <= 0.3, "em=" + fmt(se) + " strang=" + fmt(ss)};
}

// 8. KL budget: schedule slope vs N, model slope vs eps_bar, constant-gap closed form.
Outcome c8() {
    const auto q = make_quadratic(1.0, {0.0});
    PathKlConfig cfg;
    cfg.paths = 20000;
    cfg.seed = 81;
    cfg.workers = workers();
    Vector ns, kls;
    for (std::size_t n : {16u, 32u, 64u, 128u}) {
        cfg.schedule = Schedule::uniform(n, 1.0 / static_cast<double>(n));
        ns.push_back(static_cast<double>(n));
        kls.push_back(path_kl_estimate(*q, *q, {}, cfg).kl);
    }
    const double sn = fit_loglog(ns, kls).slope;

    cfg.schedule = Schedule::uniform(32, 1.0 / 32.0);
    Vector es, model;
    for (double e : {0.2, 0.1, 0.05}) {
        es.push_back(e);
        model.push_back(kl_budget(*q, *perturb(q, e, PerturbationMode::constant_shift, 1), e, {}, cfg).model_term);
    }
    const double se = fit_loglog(es, model).slope;

    const auto free = std::make_shared<FreeDrift>();
    const auto r = path_kl_estimate(*free, *perturb(free, 0.1, PerturbationMode::constant_shift, 1), {}, cfg);
    const double gap_err = std::abs(r.kl - 0.0025);
    const bool ok = std::abs(sn + 1.0) <= 0.2 && std::abs(se - 2.0) <= 0.2 && gap_err <= 3.0 * r.stderr_ + 1e-12;
    return {ok, "slope_vs_N=" + fmt(sn) + " slope_vs_eps=" + fmt(se) + " const_gap=" + fmt(r.kl) + " (exact 0.0025)"};
}

// 9. Variance tempering.
Outcome c9() {
    const auto dw = make_double_well(1.0, 1.0);
    const Vector x{0.7};
    const double dt = 0.01;
    std::ostringstream d;
    bool ok = true;
    for (double ups : {0.5, 2.0, 4.0}) {
        Moments a, b;
        for (std::uint32_t i = 0; i < 100000; ++i) {
            a.add(tempered_kernel_step(x, dt, ups, *dw, {}, RngStream(91, i, 0, 0))[0]);
            b.add(em_step(x, dt, *dw, {}, RngStream(92, i, 0, 0))[0]);
        }
        const double z = std::abs(a.mean() - b.mean()) /
                         std::sqrt(a.stderr_of_mean() * a.stderr_of_mean() + b.stderr_of_mean() * b.stderr_of_mean());
        const bool temp_ok = effective_temperature(ups, 300.0) == ups * 300.0;
        ok = ok && z <= 4.0 && temp_ok;
        d << "ups=" << ups << " z=" << fmt(z) << (temp_ok ? "" : " T_n mismatch") << "; ";
    }
    const auto free = std::make_shared<FreeDrift>();
    const auto used = perturb(free, 0.2, PerturbationMode::constant_shift, 1);
    PathKlConfig cold;
    cold.schedule = Schedule::uniform(20, 0.05);
    cold.paths = 2000;
    PathKlConfig hot = cold;
    hot.schedule = cold.schedule.with_tempering(Vector(20, 2.0));
    const auto kc = kl_budget(*free, *used, 0.2, {}, cold);
    const auto kh = kl_budget(*free, *used, 0.2, {}, hot);
    const double ratio = kh.model_term / kc.model_term;
    ok = ok && std::abs(ratio - 0.5) <= 3.0 * (kh.stderr_ / kh.model_term + kc.stderr_ / kc.model_term) * 0.5 + 1e-12;
    d << "model_ratio(ups=2)=" << fmt(ratio);
    return {ok, d.str()};
}

// 10. Replica exchange detailed balance.
Outcome c10() {
    SheetSpec s;
    s.B = 1;
    s.u = [](std::span<const double> x, double lam) { return lam * x[0] * x[0] + std::sin(x[0]); };
    const std::array<double, 3> xs{-0.8, 0.3, 1.5};
    const double beta = 1.3;
    auto pi = [&](int a, int b) { return std::exp(-beta * (s.u(Vector{xs[a]}, 0.0) + s.u(Vector{xs[b]}, 1.0))); };
    double P[9][9] = {};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double al = arex_alpha(Vector{xs[a]}, Vector{xs[b]}, s, 0, beta);
            P[3 * a + b][3 * b + a] += al;
            P[3 * a + b][3 * a + b] += 1.0 - al;
        }
    double z = 0.0;
    for (int i = 0; i < 9; ++i) z += pi(i / 3, i % 3);
    double worst = 0.0;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            worst = std::max(worst, std::abs(pi(i / 3, i % 3) * P[i][j] - pi(j / 3, j % 3) * P[j][i]) / z);
    const double sym1 = arex_alpha(Vector{0.4}, Vector{0.4}, s, 0, beta);
    SheetSpec flat = s;
    flat.u = [](std::span<const double> x, double) { return std::cos(x[0]); };
    const double sym2 = arex_alpha(Vector{0.1}, Vector{2.0}, flat, 0, beta);
    return {worst <= 1e-12 && sym1 == 1.0 && sym2 == 1.0,
            "max_balance_residual=" + fmt(worst) + " alpha_sym=" + fmt(sym1) + "," + fmt(sym2)};
}

// 11. Lattice determinism across worker counts.
Outcome c11() {
    const Schedule sched = Schedule::uniform(24, 0.02);
    const auto v = make_double_well(1.0, 1.0, 2);
    HorizontalSpec glue;
    glue.kind = HorizontalKind::glue;
    glue.glue_stiffness = 3.0;
    HorizontalSpec sheet;
    sheet.kind = HorizontalKind::sheet;
    sheet.sheet = linear_sheet(5, make_quadratic(2.0, {0.0, 0.0}));
    bool ok = true;
    std::ostringstream d;
    for (const auto* h : {&glue, &sheet}) {
        const auto init = TrajectoryLattice::gaussian(sched, 6, 2, 111);
        std::vector<TrajectoryLattice> results;
        for (std::size_t w : {1u, 4u, 8u}) {
            auto lat = init;
            for (int it = 0; it < 100; ++it) macro_iteration(lat, *v, *h, {0.5, 0.5}, {}, {111, w});
            results.push_back(std::move(lat));
        }
        const bool same = results[0] == results[1] && results[0] == results[2];
        ok = ok && same;
        d << (h == &glue ? "glue" : "sheet") << (same ? " identical" : " DIFFER") << "; ";
    }
    return {ok, d.str()};
}

// 12. Radial glue: antisymmetry, zero at r_min, finite differences.
Outcome c12() {
    auto stack = [](std::size_t T, std::size_t atoms, std::uint64_t seed) {
        FrameStack s;
        for (std::uint32_t t = 0; t < T; ++t) s.push_back(gaussian_draw(RngStream(seed, t, 0, 0), 3 * atoms));
        return s;
    };
    double worst_sum = 0.0, worst_fd = 0.0, zero_norm = 0.0;
    for (auto mode : {DistanceMode::per_frame, DistanceMode::pairwise})
        for (bool align : {false, true}) {
            const FrameStack s = stack(5, 4, align ? 121 : 122);
            GlueSpec spec;
            spec.kind = GlueKind::radial_rmin;
            spec.neighbors = 2;
            spec.r_min = 0.6;
            spec.align = align;
            spec.distance_mode = mode;
            const double k = 1.1;
            const FrameStack g = radial_glue_forces(s, spec, k);
            for (std::size_t i = 0; i < g[0].size(); ++i) {
                double sum = 0.0;
                for (const auto& f : g) sum += f[i];
                worst_sum = std::max(worst_sum, std::abs(sum));
            }
            if (align) continue;  // the FD oracle differentiates the unaligned energy
            const Vector d = per_frame_distances(s, false, spec.eps);
            auto energy = [&](const FrameStack& f) {
                return mode == DistanceMode::per_frame ? frozen_distance_energy(f, d, spec, k)
                                                       : radial_glue_energy(f, spec, k);
            };
            double num = 0.0, den = 0.0;
            for (std::size_t t = 0; t < s.size(); ++t)
                for (std::size_t i = 0; i < s[t].size(); ++i) {
                    FrameStack up = s, dn = s;
                    up[t][i] += 1e-5;
                    dn[t][i] -= 1e-5;
                    const double fd = -(energy(up) - energy(dn)) / 2e-5;
                    num += (g[t][i] - fd) * (g[t][i] - fd);
                    den += fd * fd;
                }
            worst_fd = std::max(worst_fd, std::sqrt(num / den));
        }
    // Evenly spaced frames: every d_t is the same, so r_min = d_0 zeroes the force.
    FrameStack line;
    const Vector base = gaussian_draw(RngStream(123, 0, 0, 0), 12);
    const Vector step = gaussian_draw(RngStream(123, 1, 0, 0), 12);
    for (int t = 0; t < 6; ++t) {
        Vector f = base;
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += t * step[i];
        line.push_back(f);
    }
    GlueSpec spec;
    spec.kind = GlueKind::radial_rmin;
    spec.neighbors = 3;
    spec.r_min = per_frame_distances(line, false, spec.eps)[0];
    for (const auto& f : radial_glue_forces(line, spec, 1.0))
        for (double v : f) zero_norm = std::max(zero_norm, std::abs(v));
    const bool ok = worst_sum <= 1e-12 && zero_norm <= 1e-12 && worst_fd <= 1e-5;
    return {ok, "max|sum|=" + fmt(worst_sum) + " max|F| at r_min=" + fmt(zero_norm) + " fd_rel=" + fmt(worst_fd)};
}

// 13. Observable oracles.
Outcome c13() {
    constexpr double pi = std::numbers::pi;
    const auto cc = circular_acf(AngleSeries(Vector(100, 0.4)), 5);
    Vector alt;
    for (int i = 0; i < 100; ++i) alt.push_back(i % 2 ? pi : 0.0);
    const auto ca = circular_acf(AngleSeries(alt), 1);
    const bool acf_ok = std::abs(cc[5] - 1.0) < 1e-12 && std::abs(ca[1] + 1.0) < 1e-12;

    ObservableSeries s;
    double x = 0.0;
    const RngStream base(131, 0, 0, 0);
    for (std::uint32_t t = 0; t < 1000000; ++t) {
        x = 0.9 * x + gaussian_draw(base.offset(t), 1)[0];
        s.values.push_back(x);
    }
    const double tau = integrated_autocorrelation(s).tau_int;
    const bool tau_ok = std::abs(tau / 19.0 - 1.0) <= 0.15;

    const Vector ref = gaussian_draw(RngStream(132, 0, 0, 0), 18);
    const Eigen::Matrix3d R = axis_rotation({0.2, 0.9, -0.4}, 2.3);
    const Points moved = to_points(ref) * R;
    const auto k = kabsch_align(to_points(ref), moved);
    const double rot_err = (k.rotation - R.transpose()).cwiseAbs().maxCoeff();
    const bool rot_ok = rot_err <= 1e-9;

    std::vector<Vector> rows;
    for (std::uint32_t b = 0; b < 8; ++b) rows.push_back(gaussian_draw(RngStream(133, 0, b, 0), 30));
    const double lmin = min_eigenvalue(batch_correlation_matrix(rows).values);
    const bool psd_ok = lmin >= tol::psd_floor;
    return {acf_ok && tau_ok && rot_ok && psd_ok, "acf_const=" + fmt(cc[5]) + " acf_alt=" + fmt(ca[1]) +
                                                      " tau_int=" + fmt(tau) + " (oracle 19) kabsch_err=" +
                                                      fmt(rot_err) + " min_eig=" + fmt(lmin)};
}

// 14. Adjacent glue mismatch and spring-exponent scaling.
Outcome c14() {
    const auto q = make_quadratic(1.0, {0.0});
    Vector dts, mis, drift;
    for (double dt : {0.04, 0.02, 0.01, 0.005, 0.0025}) {
        const auto r = glue_scaling_probe(*q, {0.5}, dt, 400000, 141);
        dts.push_back(dt);
        mis.push_back(r.rms_mismatch);
        drift.push_back(std::abs(r.exponent_drift_part));
    }
    const double sm = fit_loglog(dts, mis).slope, sd = fit_loglog(dts, drift).slope;
    return {std::abs(sm - 0.5) <= 0.1 && std::abs(sd - 1.0) <= 0.15,
            "mismatch_slope=" + fmt(sm) + " exponent_slope=" + fmt(sd)};
}

// 15. Underdamped velocity variance and free flight.
Outcome c15() {
    const FreeDrift zero;
    const double dt = 0.01, gamma = 2.0;
    Moments m;
    for (std::uint32_t i = 0; i < 100000; ++i)
        m.add(underdamped_em_step({{0.0}, {0.0}, gamma}, dt, zero, {}, RngStream(151, i, 0, 0)).v[0]);
    const double expected = 2.0 * gamma * dt;
    const double rel = std::abs(m.variance() / expected - 1.0);
    const Vector xi{0.0, 0.0};
    const auto s = underdamped_em_update({{1.0, -2.0}, {0.5, 0.25}, 0.0}, 0.1, zero, {}, xi);
    const bool flight = s.x == Vector{1.0 + 0.5 * 0.1, -2.0 + 0.25 * 0.1} && s.v == Vector{0.5, 0.25};
    return {rel < 0.02 && flight, "var_rel_err=" + fmt(rel) + (flight ? " free_flight=exact" : " free_flight=WRONG")};
}

struct Criterion {
    std::function<Outcome()> run;
    double budget_s;
};

const std::map<int, Criterion>& criteria() {
    static const std::map<int, Criterion> table{
        {1, {c1, 1}},    {2, {c2, 1}},     {3, {c3, 60}},   {4, {c4, 120}},  {5, {c5, 30}},
        {6, {c6, 600}},  {7, {c7, 300}},   {8, {c8, 300}},  {9, {c9, 60}},   {10, {c10, 1}},
        {11, {c11, 60}}, {12, {c12, 5}},   {13, {c13, 30}}, {14, {c14, 120}}, {15, {c15, 10}},
    };
    return table;
}

bool run_one(int id) {
    const auto& c = criteria().at(id);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.run();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    std::printf("criterion %d: %s %s (%.2fs, budget %.0fs%s)\n", id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
    return pass;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) {
            const int id = std::atoi(argv[++i]);
            if (!criteria().count(id)) {
                std::fprintf(stderr, "unknown criterion %d\n", id);
                return 2;
            }
            ids.push_back(id);
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
            return 2;
        }
    }
    if (ids.empty())
        for (const auto& [id, c] : criteria()) ids.push_back(id);
    bool all = true;
    for (int id : ids) all = run_one(id) && all;
    return all ? 0 : 1;
}
