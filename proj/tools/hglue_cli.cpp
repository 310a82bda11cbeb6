// hglue: run, analyze and diagnose entry point.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hglue.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hglue;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kIo = 3 };

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out_dir;
};

std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ConfigFile load_config(const Globals& g) {
    if (g.config.empty()) return ConfigFile{};
    auto in = open_input(g.config);
    ConfigFile f = ConfigFile::parse(in);
    if (g.seed) f.set("sampler.seed", std::to_string(*g.seed));
    return f;
}

RunConfig run_config(const Globals& g, ConfigFile& f) {
    if (g.seed) f.set("sampler.seed", std::to_string(*g.seed));
    RunConfig rc = load_run_config(f);
    if (g.workers) rc.workers = *g.workers;
    rc.workers = resolve_workers(rc.workers);
    return rc;
}

fs::path output_dir(const Globals& g, const RunConfig* rc) {
    std::string dir = g.out_dir;
    if (dir.empty() && rc && !rc->out_dir.empty()) dir = rc->out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("HGLUE_OUT_DIR");
        dir = env && *env ? env : ".";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

json parameter_echo(const RunConfig& rc) {
    return {{"units", {{"beta", rc.units.beta}, {"diffusion", rc.units.diffusion}}},
            {"schedule", {{"steps", rc.schedule.size()}, {"horizon", rc.schedule.horizon()}}},
            {"potential", rc.potential_kind},
            {"dim", rc.potential.dim},
            {"eps_bar", rc.potential.eps_bar},
            {"sampler", std::string(to_string(rc.kernel))},
            {"split", {rc.kernel_options.split.vertical, rc.kernel_options.split.horizontal}},
            {"batch", rc.batch},
            {"metropolis", rc.mh_enabled},
            {"lattice", {{"N", rc.lattice_rows}, {"B", rc.lattice_cols}, {"passes", rc.lattice_passes}}}};
}

void write_manifest(const fs::path& path, const ConfigFile& f, std::uint64_t seed, const std::string& hash,
                    const std::string& started, const json& echo, const json& outputs) {
    json m;
    m["version"] = kVersion;
    m["manifest_hash"] = hash;
    m["seed"] = seed;
    m["config"] = f.entries();
    m["parameters"] = echo;
    m["outputs"] = outputs;
    m["started"] = started;
    m["finished"] = now_iso();
    auto out = open_output(path.string());
    out << m.dump(2) << "\n";
}

DriftPtr mh_target_for(const RunConfig& rc, const StepKernel& k) {
    // Strang proposals target the summed drift; "bare" then drops the horizontal part.
    if (rc.kernel == KernelKind::strang && rc.mh_target == "glued")
        return make_sum(k.drift_ptr(), k.options().horizontal);
    return k.drift_ptr();
}

// --- run -------------------------------------------------------------------------------

int cmd_run(const Globals& g) {
    if (g.config.empty()) throw ConfigError("--config", "run needs a config file");
    const std::string started = now_iso();
    auto in = open_input(g.config);
    ConfigFile f = ConfigFile::parse(in);
    const RunConfig rc = run_config(g, f);
    const std::string hash = manifest_hash(f.canonical(), rc.seed);
    const fs::path dir = output_dir(g, &rc);
    const DriftPtr drift = rc.make_drift();
    const std::size_t dim = rc.potential.dim;
    json outputs = json::array();
    json summary;

    if (rc.lattice_rows > 0 && rc.lattice_passes > 0) {
        const std::size_t cols = rc.lattice_cols ? rc.lattice_cols : rc.batch;
        const Schedule sched = Schedule::uniform(rc.lattice_rows, rc.schedule.step(0), rc.kernel_options.split);
        TrajectoryLattice lat = rc.gaussian_init ? TrajectoryLattice::gaussian(sched, cols, dim, rc.seed)
                                                 : TrajectoryLattice(sched, cols, Vector(dim, 0.0));
        HorizontalSpec h;
        if (rc.arex_enabled) {
            h.kind = HorizontalKind::sheet;
            const double wk = rc.horizontal_kappa > 0.0 ? rc.horizontal_kappa : 1.0;
            h.sheet = linear_sheet(static_cast<int>(cols) - 1 > 0 ? static_cast<int>(cols) - 1 : 1,
                                   make_quadratic(wk, Vector(dim, 0.0)));
        } else {
            h.kind = HorizontalKind::glue;
            h.glue_stiffness = rc.glue.stiffness;
        }
        Split split = rc.kernel_options.split;
        if (split.horizontal == 0.0) split = {0.5, 0.5};
        MacroOptions mo{rc.seed, rc.workers, rc.kernel_options.substep};
        LatticeStats total;
        for (std::size_t it = 0; it < rc.lattice_passes; ++it) {
            const LatticeStats s = macro_iteration(lat, *drift, h, split, rc.units, mo);
            total.swap_attempts += s.swap_attempts;
            total.swaps_accepted += s.swaps_accepted;
        }
        TrajectoryTable t;
        t.hash = hash;
        t.dim = dim;
        for (std::size_t n = 0; n < lat.rows(); ++n)
            for (std::size_t b = 0; b < lat.columns(); ++b)
                t.rows.push_back({n, b, sched.time_at(n + 1), lat.at(n, b).positions, {}});
        const fs::path p = dir / (rc.prefix + "_lattice.csv");
        auto out = open_output(p.string());
        write_trajectory(out, t);
        outputs.push_back(p.filename().string());
        summary = {{"rows", lat.rows()},
                   {"columns", lat.columns()},
                   {"passes", rc.lattice_passes},
                   {"swap_attempts", total.swap_attempts},
                   {"swaps_accepted", total.swaps_accepted}};
    } else {
        const StepKernel kernel(rc.kernel, drift, rc.units, rc.kernel_options);
        std::vector<Vector> init =
            rc.gaussian_init ? gaussian_batch(rc.batch, dim, rc.seed) : std::vector<Vector>(rc.batch, Vector(dim, 0.0));
        BatchOptions bo;
        bo.workers = rc.workers;
        bo.metropolis = rc.mh_enabled;
        const DriftPtr target = mh_target_for(rc, kernel);
        bo.target = target.get();
        const BatchTrajectory traj = parallel_batch_sample(std::move(init), kernel, rc.schedule, rc.seed, bo);

        TrajectoryTable t;
        t.hash = hash;
        t.dim = dim;
        t.has_velocities = rc.write_velocities && kernel.needs_velocity();
        Moments final_moments;
        for (std::size_t s = 1; s < traj.frames.size(); ++s)
            for (std::size_t b = 0; b < rc.batch; ++b) {
                TrajectoryRow r{s, b, rc.schedule.time_at(s), traj.frames[s][b], {}};
                if (t.has_velocities) r.velocities = traj.velocities[s][b];
                t.rows.push_back(std::move(r));
            }
        for (const Vector& x : traj.frames.back())
            for (double v : x) final_moments.add(v);
        const fs::path p = dir / (rc.prefix + "_traj.csv");
        auto out = open_output(p.string());
        write_trajectory(out, t);
        outputs.push_back(p.filename().string());
        summary = {{"rows", t.rows.size()},
                   {"acceptance", traj.acceptance_rate()},
                   {"final_mean", final_moments.mean()},
                   {"final_variance", final_moments.variance()}};
    }

    {
        const fs::path p = dir / (rc.prefix + "_summary.json");
        auto out = open_output(p.string());
        json s = summary;
        s["manifest_hash"] = hash;
        out << s.dump(2) << "\n";
        outputs.push_back(p.filename().string());
    }
    write_manifest(dir / (rc.prefix + "_manifest.json"), f, rc.seed, hash, started, parameter_echo(rc), outputs);
    std::cout << "run: " << summary.dump() << "\n";
    std::cout << "manifest-hash " << hash << "\n";
    return kOk;
}

// --- analyze -----------------------------------------------------------------------------

struct SeriesSpec {
    std::string name;
    enum Kind { rg, coord, angle, dihedral } kind;
    std::array<std::size_t, 4> idx{};
};

std::vector<SeriesSpec> parse_observables(const std::string& spec, std::size_t dim) {
    std::vector<SeriesSpec> out;
    std::stringstream ss(spec);
    std::string tok;
    auto index = [&](const std::string& s) -> std::size_t {
        std::size_t used = 0;
        long long v = -1;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
        }
        if (used != s.size() || v < 0) throw ConfigError("--observables", "bad index in '" + tok + "'");
        return static_cast<std::size_t>(v);
    };
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        const auto colon = tok.find(':');
        const std::string head = tok.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : tok.substr(colon + 1);
        if (head == "rg") {
            if (dim % 3) throw ConfigError("--observables", "rg needs 3-D points (dim divisible by 3)");
            out.push_back({"rg", SeriesSpec::rg, {}});
        } else if (head == "coord" || head == "angle") {
            const std::size_t i = index(arg);
            if (i >= dim) throw ConfigError("--observables", "coordinate out of range in '" + tok + "'");
            out.push_back({head + "_" + arg, head == "coord" ? SeriesSpec::coord : SeriesSpec::angle, {i, 0, 0, 0}});
        } else if (head == "dihedral") {
            std::array<std::size_t, 4> q{};
            std::stringstream qs(arg);
            std::string part;
            std::size_t k = 0;
            while (std::getline(qs, part, '-')) {
                if (k == 4) throw ConfigError("--observables", "dihedral takes four atoms");
                q[k++] = index(part);
            }
            if (k != 4) throw ConfigError("--observables", "dihedral takes four atoms");
            if (dim % 3) throw ConfigError("--observables", "dihedral needs 3-D points");
            for (std::size_t a : q)
                if (a >= dim / 3) throw ConfigError("--observables", "atom out of range in '" + tok + "'");
            out.push_back({"dihedral_" + arg, SeriesSpec::dihedral, q});
        } else {
            throw ConfigError("--observables", "unknown observable '" + head + "'");
        }
    }
    if (out.empty()) throw ConfigError("--observables", "nothing to compute");
    return out;
}

double evaluate(const SeriesSpec& s, const Vector& frame) {
    switch (s.kind) {
        case SeriesSpec::rg: return radius_of_gyration(frame);
        case SeriesSpec::coord: return frame[s.idx[0]];
        case SeriesSpec::angle: return wrap_angle(frame[s.idx[0]]);
        case SeriesSpec::dihedral: return frame_dihedral(frame, s.idx);
    }
    return 0.0;
}

int cmd_analyze(const Globals& g, const std::string& path, std::string observables, std::size_t max_lag,
                bool align) {
    auto in = open_input(path);
    const TrajectoryTable t = read_trajectory(in);
    if (t.rows.empty()) throw ParseError(0, "trajectory has no rows");
    const fs::path dir = output_dir(g, nullptr);
    const std::string stem = fs::path(path).stem().string();
    if (observables.empty()) observables = t.dim % 3 == 0 ? "rg" : "coord:0";
    const auto specs = parse_observables(observables, t.dim);

    // Group rows by replica in file order.
    std::map<std::size_t, std::vector<const TrajectoryRow*>> by_replica;
    for (const auto& r : t.rows) by_replica[r.replica].push_back(&r);
    const std::size_t B = by_replica.size();
    double dt_phys = 1.0;
    {
        const auto& r0 = by_replica.begin()->second;
        if (r0.size() >= 2) dt_phys = r0[1]->time - r0[0]->time;
    }
    json outputs = json::array();

    // Series table.
    const fs::path series_path = dir / (stem + "_series.csv");
    {
        auto out = open_output(series_path.string());
        out << "# manifest-hash " << t.hash << "\n";
        out << "step,replica,time";
        for (const auto& s : specs) out << ',' << s.name;
        out << "\n";
        for (const auto& r : t.rows) {
            out << r.step << ',' << r.replica << ',' << format_real(r.time);
            for (const auto& s : specs) out << ',' << format_real(evaluate(s, r.coords));
            out << "\n";
        }
    }
    outputs.push_back(series_path.filename().string());

    // ACF table with both lag axes, plus tau_int per series and replica.
    const fs::path acf_path = dir / (stem + "_acf.csv");
    json taus = json::array();
    {
        auto out = open_output(acf_path.string());
        out << "# manifest-hash " << t.hash << "\n";
        out << "series,replica,lag_index,lag_time,acf\n";
        for (const auto& s : specs) {
            for (const auto& [b, rows] : by_replica) {
                Vector v;
                for (const auto* r : rows) v.push_back(evaluate(s, r->coords));
                const std::size_t L = std::min(max_lag, v.size() - 1);
                Vector c;
                const bool circular = s.kind == SeriesSpec::angle || s.kind == SeriesSpec::dihedral;
                if (circular) {
                    c = circular_acf(AngleSeries(v), L);
                } else {
                    double mean = 0.0, var = 0.0;
                    for (double x : v) mean += x;
                    mean /= static_cast<double>(v.size());
                    for (double x : v) var += (x - mean) * (x - mean);
                    var /= static_cast<double>(v.size());
                    for (std::size_t k = 0; k <= L; ++k)
                        c.push_back(var > 0.0 ? autocorrelation_at(v, mean, var, k) : 1.0);
                }
                const LagAxis axis = lag_axis(L, dt_phys);
                for (std::size_t k = 0; k <= L; ++k)
                    out << s.name << ',' << b << ',' << axis.index[k] << ',' << format_real(axis.time[k]) << ','
                        << format_real(c[k]) << "\n";
                if (v.size() >= 10 && !circular) {
                    const auto tau = integrated_autocorrelation({v, dt_phys, s.name});
                    taus.push_back({{"series", s.name}, {"replica", b}, {"tau_int", tau.tau_int},
                                    {"tau_int_time", tau.tau_int * dt_phys}, {"n_eff", tau.n_eff}});
                }
            }
        }
    }
    outputs.push_back(acf_path.filename().string());

    // Replica correlation over flattened (aligned) coordinate histories.
    std::vector<Vector> rows;
    for (const auto& [b, rs] : by_replica) {
        Vector flat;
        for (const auto* r : rs) {
            if (align && t.dim % 3 == 0 && t.dim >= 9) {
                const auto& ref = by_replica.begin()->second.front()->coords;
                const Vector a = to_vector(kabsch_align(ref, r->coords).aligned);
                flat.insert(flat.end(), a.begin(), a.end());
            } else {
                flat.insert(flat.end(), r->coords.begin(), r->coords.end());
            }
        }
        rows.push_back(std::move(flat));
    }
    const fs::path corr_path = dir / (stem + "_corr.txt");
    if (rows.front().size() >= 2) {
        const auto c = batch_correlation_matrix(rows);
        auto out = open_output(corr_path.string());
        write_matrix(out, c.values, t.hash);
        outputs.push_back(corr_path.filename().string());
    }
    if (t.dim % 3 == 0) {
        std::vector<Vector> last;
        for (const auto& [b, rs] : by_replica) last.push_back(rs.back()->coords);
        const fs::path p = dir / (stem + "_rmsd.txt");
        auto out = open_output(p.string());
        write_matrix(out, pairwise_distance_matrix(last, align), t.hash);
        outputs.push_back(p.filename().string());
    }

    json report = {{"manifest_hash", t.hash}, {"replicas", B}, {"dt_phys", dt_phys},
                   {"internal_coordinates", align ? "aligned-cartesian" : "cartesian"},
                   {"tau_int", taus}, {"outputs", outputs}};
    const fs::path p = dir / (stem + "_analysis.json");
    auto out = open_output(p.string());
    out << report.dump(2) << "\n";
    std::cout << "analyze: " << B << " replicas, " << t.rows.size() << " rows -> " << dir.string() << "\n";
    return kOk;
}

// --- diagnose ----------------------------------------------------------------------------

struct Check {
    std::string name;
    double measured;
    double lo, hi;
    bool pass() const { return std::isfinite(measured) && measured >= lo && measured <= hi; }
};

struct DiagnoseOptions {
    std::string kernel;          // empty: from config
    std::size_t paths = 0;       // 0: suite default
    std::size_t steps = 0;
};

Observable square() {
    return [](std::span<const double> x) { return x[0] * x[0]; };
}

StepKernel ou_kernel(KernelKind kind, const RunConfig& rc) {
    KernelOptions o = rc.kernel_options;
    if (kind == KernelKind::strang) {
        o.horizontal = make_quadratic(0.5, {0.0});
        if (o.split.horizontal == 0.0) o.split = {0.5, 0.5};
        return StepKernel(kind, make_quadratic(0.5, {0.0}), rc.units, o);
    }
    return StepKernel(kind, make_quadratic(1.0, {0.0}), rc.units, o);
}

std::vector<Check> suite_noise_fusion(const RunConfig& rc, const DiagnoseOptions& o, std::uint64_t seed) {
    const std::size_t samples = o.paths ? o.paths : 100000;
    const double dt = rc.schedule.step(0);
    std::vector<Split> splits{{0.5, 0.5}, {0.2, 0.8}, {0.9, 0.1}};
    if (rc.kernel_options.split.horizontal > 0.0) splits.insert(splits.begin(), rc.kernel_options.split);
    std::vector<Check> out;
    for (const Split& s : splits) {
        const double v = noise_fusion_variance(s, dt, samples, 1, seed, rc.units);
        std::ostringstream name;
        name << "covariance_ratio[av=" << s.vertical << ",ah=" << s.horizontal << "]";
        out.push_back({name.str(), v / (2.0 * rc.units.diffusion * dt), 0.98, 1.02});
    }
    return out;
}

std::vector<Check> suite_weak_order(const RunConfig& rc, const DiagnoseOptions& o, std::uint64_t seed,
                                    std::size_t workers) {
    const KernelKind kind = o.kernel.empty() ? rc.kernel : kernel_kind_from(o.kernel);
    const StepKernel k = ou_kernel(kind, rc);
    WeakOrderConfig cfg;
    cfg.paths = o.paths ? o.paths : 200000;
    cfg.seed = seed;
    cfg.workers = workers;
    const auto r = weak_order_fit(k, square(), cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    const bool second = kind == KernelKind::heun ||
                        (kind == KernelKind::strang && k.options().substep == SubstepKind::heun);
    return {{"weak_slope[" + std::string(to_string(kind)) + "]", r.fit.slope, second ? 1.75 : 0.85,
             second ? 2.25 : 1.15}};
}

std::vector<Check> suite_stationary_bias(const RunConfig& rc, const DiagnoseOptions& o, std::uint64_t seed) {
    const KernelKind kind = o.kernel.empty() ? rc.kernel : kernel_kind_from(o.kernel);
    const StepKernel k = ou_kernel(kind, rc);
    StationaryConfig cfg;
    cfg.steps = o.steps ? o.steps : 1000000;
    cfg.burn_in = 5000;
    cfg.seed = seed;
    const bool second = kind == KernelKind::heun || kind == KernelKind::strang;
    const auto r = stationary_bias_fit(k, square(), 1.0, {0.4, 0.2, 0.1}, cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::vector<Check> out{{"stationary_bias_slope[" + std::string(to_string(kind)) + "]", r.fit.slope,
                            second ? 1.7 : 0.7, second ? 2.3 : 1.3}};
    if (k.has_density()) {
        cfg.metropolis = true;
        const DriftPtr target =
            kind == KernelKind::strang ? make_sum(k.drift_ptr(), k.options().horizontal) : k.drift_ptr();
        cfg.target = target.get();
        const auto e = stationary_average(k, square(), 0.4, cfg);
        out.push_back({"mh_bias_sigmas[dt=0.4]", std::abs(e.mean - 1.0) / e.sigma, 0.0, 3.0});
    }
    return out;
}

Vector acceptance_gaps(const StepKernel& k, const DriftProvider& target, const Vector& dts, std::size_t steps,
                       std::uint64_t seed) {
    Vector gaps;
    for (double dt : dts) {
        const auto chain = mh_wrapped_trajectory(k, target, Vector{0.0}, dt, steps, seed, steps + 1);
        gaps.push_back(1.0 - chain.mean_alpha());
    }
    return gaps;
}

std::vector<Check> suite_mh_acceptance(const RunConfig& rc, const DiagnoseOptions& o, std::uint64_t seed) {
    const std::size_t steps = o.steps ? o.steps : 200000;
    const Vector dts{0.2, 0.1, 0.05, 0.025};
    std::vector<Check> out;
    std::vector<KernelKind> kinds;
    if (!o.kernel.empty()) kinds.push_back(kernel_kind_from(o.kernel));
    else kinds = {KernelKind::em, KernelKind::strang};
    for (KernelKind kind : kinds) {
        const StepKernel k = ou_kernel(kind, rc);
        const DriftPtr target =
            kind == KernelKind::strang ? make_sum(k.drift_ptr(), k.options().horizontal) : k.drift_ptr();
        const Vector gaps = acceptance_gaps(k, *target, dts, steps, seed);
        const double slope = fit_loglog(dts, gaps).slope;
        const bool second = kind == KernelKind::strang;
        out.push_back({"rejection_slope[" + std::string(to_string(kind)) + "]", slope, second ? 1.7 : 0.7,
                       second ? 2.3 : 1.3});
    }
    return out;
}

std::vector<Check> suite_kl_budget(const RunConfig& rc, const DiagnoseOptions& o, std::uint64_t seed,
                                   std::size_t workers) {
    const auto q = make_quadratic(1.0, {0.0});
    PathKlConfig base;
    base.paths = o.paths ? o.paths : 20000;
    base.seed = seed;
    base.workers = workers;
    std::vector<Check> out;

    Vector ns, kls;
    for (std::size_t n : {16u, 32u, 64u, 128u}) {
        base.schedule = Schedule::uniform(n, 1.0 / static_cast<double>(n));
        ns.push_back(static_cast<double>(n));
        kls.push_back(path_kl_estimate(*q, *q, rc.units, base).kl);
    }
    out.push_back({"schedule_slope_vs_N", fit_loglog(ns, kls).slope, -1.2, -0.8});

    const double eps0 = rc.potential.eps_bar > 0.0 ? rc.potential.eps_bar : 0.2;
    base.schedule = Schedule::uniform(32, 1.0 / 32.0);
    Vector es, model;
    for (double e : {eps0, eps0 / 2.0, eps0 / 4.0}) {
        const auto used = perturb(q, e, PerturbationMode::constant_shift, 1);
        es.push_back(e);
        model.push_back(kl_budget(*q, *used, e, rc.units, base).model_term);
    }
    out.push_back({"model_slope_vs_eps", fit_loglog(es, model).slope, 1.8, 2.2});

    const auto free = std::make_shared<FreeDrift>();
    const auto shifted = perturb(free, 0.1, PerturbationMode::constant_shift, 1);
    const auto r = path_kl_estimate(*free, *shifted, rc.units, base);
    out.push_back({"constant_gap_ratio", r.kl / (0.01 / (4.0 * rc.units.diffusion)), 0.999, 1.001});
    return out;
}

std::vector<Check> suite_refinement(const RunConfig& rc, const DiagnoseOptions& o, std::uint64_t seed,
                                    std::size_t workers) {
    const auto q = make_quadratic(1.0, {0.0});
    PathKlConfig base;
    base.paths = o.paths ? o.paths : 10000;
    base.seed = seed;
    base.workers = workers;
    const double eps0 = rc.potential.eps_bar > 0.0 ? rc.potential.eps_bar : 0.2;
    const auto rows = refinement_sweep(
        q, [&](double e) { return DriftPtr(perturb(q, e, PerturbationMode::constant_shift, 1)); },
        {16, 32, 64, 128}, [&](std::size_t n) { return eps0 * std::sqrt(16.0 / static_cast<double>(n)); }, 1.0,
        rc.units, base);
    std::size_t monotone = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        monotone += rows[i].report.empirical_kl < rows[i - 1].report.empirical_kl;
    Vector ns, kls;
    for (const auto& r : rows) {
        ns.push_back(static_cast<double>(r.steps));
        kls.push_back(r.report.empirical_kl);
    }
    return {{"monotone_decreases", static_cast<double>(monotone), static_cast<double>(rows.size() - 1),
             static_cast<double>(rows.size() - 1)},
            {"total_slope_vs_N", fit_loglog(ns, kls).slope, -1.2, -0.8}};
}

int cmd_diagnose(const Globals& g, const std::string& suite, const DiagnoseOptions& o) {
    static const std::vector<std::string> suites{"kl-budget",     "weak-order",   "stationary-bias",
                                                 "mh-acceptance", "noise-fusion", "refinement"};
    if (std::find(suites.begin(), suites.end(), suite) == suites.end()) {
        std::cerr << "error: unknown suite '" << suite << "'\n";
        return kUsage;
    }
    const std::string started = now_iso();
    ConfigFile f = load_config(g);
    const RunConfig rc = run_config(g, f);
    const std::uint64_t seed = rc.seed;
    const std::size_t workers = rc.workers;
    std::vector<Check> checks;
    if (suite == "noise-fusion") checks = suite_noise_fusion(rc, o, seed);
    else if (suite == "weak-order") checks = suite_weak_order(rc, o, seed, workers);
    else if (suite == "stationary-bias") checks = suite_stationary_bias(rc, o, seed);
    else if (suite == "mh-acceptance") checks = suite_mh_acceptance(rc, o, seed);
    else if (suite == "kl-budget") checks = suite_kl_budget(rc, o, seed, workers);
    else checks = suite_refinement(rc, o, seed, workers);

    const std::string hash = manifest_hash(f.canonical() + "suite=" + suite + "\n", seed);
    const fs::path dir = output_dir(g, &rc);
    const fs::path p = dir / ("diagnose_" + suite + ".csv");
    bool all = true;
    {
        auto out = open_output(p.string());
        out << "# manifest-hash " << hash << "\n";
        out << "name,measured,band_lo,band_hi,verdict\n";
        for (const auto& c : checks) {
            out << c.name << ',' << format_real(c.measured) << ',' << format_real(c.lo) << ',' << format_real(c.hi)
                << ',' << (c.pass() ? "PASS" : "FAIL") << "\n";
            all = all && c.pass();
        }
    }
    json echo = parameter_echo(rc);
    echo["suite"] = suite;
    write_manifest(dir / ("diagnose_" + suite + "_manifest.json"), f, seed, hash, started, echo,
                   json::array({p.filename().string()}));
    std::cout << "diagnose " << suite << ":";
    for (const auto& c : checks) std::cout << " " << c.name << "=" << format_real(c.measured);
    std::cout << " -> " << (all ? "PASS" : "FAIL") << "\n";
    return all ? kOk : kCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hglue: glued Langevin samplers"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    auto* seed_opt = app.add_option("--seed", seed, "Master seed; overrides sampler.seed");
    app.add_option("--config", g.config, "INI config file");
    auto* workers_opt = app.add_option("--workers", workers, "Worker threads (0: hardware concurrency)");
    app.add_option("--out-dir", g.out_dir, "Output directory (default: $HGLUE_OUT_DIR or .)");

    auto* run = app.add_subcommand("run", "Sample trajectories from a config");
    run->fallthrough();

    auto* analyze = app.add_subcommand("analyze", "Observables, ACFs and matrices from a trajectory file");
    analyze->fallthrough();
    std::string traj_path, observables;
    std::size_t max_lag = 50;
    bool align = false;
    analyze->add_option("trajectory", traj_path, "Trajectory CSV")->required();
    analyze->add_option("--observables", observables, "Comma list: rg, coord:i, angle:i, dihedral:i-j-k-l");
    analyze->add_option("--max-lag", max_lag, "Largest ACF lag in frames");
    analyze->add_flag("--align", align, "Kabsch-align frames before matrices");

    auto* diagnose = app.add_subcommand("diagnose", "Run a verification suite");
    diagnose->fallthrough();
    std::string suite;
    DiagnoseOptions dopt;
    diagnose->add_option("suite", suite, "kl-budget | weak-order | stationary-bias | mh-acceptance | "
                                         "noise-fusion | refinement")
        ->required();
    diagnose->add_option("--kernel", dopt.kernel, "Kernel to test (default: sampler.kind)");
    diagnose->add_option("--paths", dopt.paths, "Monte Carlo paths or samples");
    diagnose->add_option("--steps", dopt.steps, "Chain length for stationary suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (*seed_opt) g.seed = seed;
    if (*workers_opt) g.workers = workers;

    try {
        if (*run) return cmd_run(g);
        if (*analyze) return cmd_analyze(g, traj_path, observables, max_lag, align);
        return cmd_diagnose(g, suite, dopt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kIo;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const StepError& e) {
        std::cerr << "step error: " << e.what() << "\n";
        return kCheckFailed;
    }
}
