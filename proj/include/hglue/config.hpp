#pragma once

// Run configuration: flat INI with typed sections. Unknown sections or keys
// are errors that name the offending entry.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hglue/core/error.hpp"
#include "hglue/core/schedule.hpp"
#include "hglue/core/units.hpp"
#include "hglue/glue.hpp"
#include "hglue/kernel.hpp"
#include "hglue/potentials.hpp"

namespace hglue {

enum class ValueType { real, integer, text, flag, real_list };

struct KeySchema {
    ValueType type;
    const char* help;
};

/// section -> key -> schema.
inline const std::map<std::string, std::map<std::string, KeySchema>>& config_schema() {
    using V = ValueType;
    static const std::map<std::string, std::map<std::string, KeySchema>> schema{
        {"units",
         {{"temperature", {V::real, "T; beta = 1 / (k_B T), D = k_B T"}},
          {"boltzmann", {V::real, "k_B, default 1"}}}},
        {"schedule",
         {{"n_steps", {V::integer, "number of steps N"}},
          {"steps", {V::real_list, "explicit step sizes; overrides n_steps and sampler.dt"}},
          {"tempering_max", {V::real, "upsilon at step 0, decaying geometrically to 1"}}}},
        {"potential",
         {{"kind", {V::text, "quadratic | double-well | torsion-ring | free"}},
          {"dim", {V::integer, "coordinates per state"}},
          {"kappa", {V::real, "quadratic curvature"}},
          {"center", {V::real_list, "quadratic center"}},
          {"a", {V::real, "double-well barrier scale"}},
          {"b", {V::real, "double-well half separation"}},
          {"heights", {V::real_list, "torsion-ring cosine heights h1, h2, h3"}},
          {"eps_bar", {V::real, "drift perturbation bound"}},
          {"perturbation", {V::text, "constant-shift | smooth-random"}}}},
        {"sampler",
         {{"kind", {V::text, "em | harmonic | tempered | heun | underdamped | strang | adjacent-glue | anchored-glue"}},
          {"dt", {V::real, "step size (exclusive with stiffness)"}},
          {"stiffness", {V::real, "spring k; dt = beta / (2k)"}},
          {"gamma", {V::real, "underdamped friction"}},
          {"split_vertical", {V::real, "strang alpha_v"}},
          {"split_horizontal", {V::real, "strang alpha_h"}},
          {"horizontal_kappa", {V::real, "strang horizontal quadratic curvature"}},
          {"substep", {V::text, "em | heun"}},
          {"heun_split_stiffness", {V::real, "heun split-drift spring, default 0"}},
          {"batch", {V::integer, "number of replicas B"}},
          {"seed", {V::integer, "master seed"}},
          {"init", {V::text, "gaussian | zero"}}}},
        {"glue",
         {{"kind", {V::text, "adjacent | anchored | radial-rmin"}},
          {"k", {V::real, "spring override"}},
          {"k_a", {V::real, "anchor spring"}},
          {"r_min", {V::real, "preferred distance"}},
          {"neighbors", {V::integer, "S"}},
          {"rho", {V::real, "neighbor decay"}},
          {"eps", {V::real, "distance stabilizer"}},
          {"align", {V::flag, "Kabsch-align frames"}},
          {"distance_mode", {V::text, "per-frame | pairwise"}}}},
        {"exactness",
         {{"mh_enabled", {V::flag, "Metropolis correction"}},
          {"mh_target", {V::text, "bare | glued"}},
          {"arex_enabled", {V::flag, "replica exchange"}},
          {"B", {V::integer, "sheet count"}},
          {"lambda_schedule", {V::text, "linear"}}}},
        {"lattice",
         {{"N", {V::integer, "rows"}},
          {"B", {V::integer, "columns"}},
          {"passes", {V::integer, "macro-iterations"}},
          {"workers", {V::integer, "0 = auto"}}}},
        {"output",
         {{"dir", {V::text, "output directory"}},
          {"prefix", {V::text, "file name prefix"}},
          {"velocities", {V::flag, "write velocity columns"}}}},
    };
    return schema;
}

/// Parsed, validated key/value store.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in) {
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::read_ini(in, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError("", "malformed config (line " + std::to_string(e.line()) + "): " + e.message());
        }
        ConfigFile cfg;
        const auto& schema = config_schema();
        for (const auto& [section, body] : tree) {
            auto sit = schema.find(section);
            if (sit == schema.end()) {
                if (body.empty()) throw ConfigError(section, "top-level keys must live in a section");
                throw ConfigError(section, "unknown section");
            }
            for (const auto& [key, node] : body) {
                const std::string full = section + "." + key;
                auto kit = sit->second.find(key);
                if (kit == sit->second.end()) throw ConfigError(full, "unknown key");
                const std::string raw = node.get_value<std::string>();
                check_type(full, raw, kit->second.type);
                cfg.values_[full] = raw;
            }
        }
        return cfg;
    }

    static ConfigFile parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    double real(const std::string& key, double fallback) const {
        return has(key) ? std::stod(values_.at(key)) : fallback;
    }
    long long integer(const std::string& key, long long fallback) const {
        return has(key) ? std::stoll(values_.at(key)) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? values_.at(key) : fallback;
    }
    bool flag(const std::string& key, bool fallback) const { return has(key) ? parse_flag(values_.at(key)) : fallback; }
    Vector reals(const std::string& key) const { return has(key) ? parse_list(key, values_.at(key)) : Vector{}; }

    void set(const std::string& key, const std::string& value) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) throw ConfigError(key, "expected section.key");
        const auto& schema = config_schema();
        auto sit = schema.find(key.substr(0, dot));
        if (sit == schema.end() || !sit->second.count(key.substr(dot + 1))) throw ConfigError(key, "unknown key");
        check_type(key, value, sit->second.at(key.substr(dot + 1)).type);
        values_[key] = value;
    }

    /// Canonical text used for hashing: sorted key=value lines.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

private:
    static bool parse_flag(const std::string& s) {
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw ConfigError("", "not a boolean: '" + s + "'");
    }

    static Vector parse_list(const std::string& key, const std::string& s) {
        Vector out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) {
            std::size_t used = 0;
            try {
                out.push_back(std::stod(item, &used));
            } catch (const std::exception&) {
                throw ConfigError(key, "not a number list: '" + s + "'");
            }
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw ConfigError(key, "not a number list: '" + s + "'");
        }
        return out;
    }

    static void check_type(const std::string& key, const std::string& raw, ValueType t) {
        try {
            std::size_t used = 0;
            switch (t) {
                case ValueType::real:
                    std::stod(raw, &used);
                    if (used != raw.size()) throw std::invalid_argument("trailing");
                    break;
                case ValueType::integer:
                    std::stoll(raw, &used);
                    if (used != raw.size()) throw std::invalid_argument("trailing");
                    break;
                case ValueType::flag: parse_flag(raw); break;
                case ValueType::real_list: parse_list(key, raw); break;
                case ValueType::text:
                    if (raw.empty()) throw std::invalid_argument("empty");
                    break;
            }
        } catch (const ConfigError&) {
            throw ConfigError(key, "bad value '" + raw + "'");
        } catch (const std::exception&) {
            throw ConfigError(key, "bad value '" + raw + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

/// Typed view of a run configuration.
struct RunConfig {
    Units units;
    Schedule schedule;
    std::string potential_kind = "quadratic";
    PotentialParams potential;
    KernelKind kernel = KernelKind::em;
    KernelOptions kernel_options;
    double horizontal_kappa = 0.0;
    std::size_t batch = 1;
    std::uint64_t seed = 1;
    bool gaussian_init = true;
    GlueSpec glue;
    bool mh_enabled = false;
    std::string mh_target = "bare";
    bool arex_enabled = false;
    int sheets = 1;
    std::size_t lattice_rows = 0, lattice_cols = 0, lattice_passes = 0, workers = 1;
    std::string out_dir;
    std::string prefix = "run";
    bool write_velocities = false;

    DriftPtr make_drift() const { return make_potential(potential_kind, potential); }
};

inline RunConfig load_run_config(const ConfigFile& f) {
    RunConfig c;
    c.units = Units::from_temperature(f.real("units.temperature", 1.0), f.real("units.boltzmann", 1.0));

    c.potential_kind = f.text("potential.kind", "quadratic");
    if (!potential_registry().count(c.potential_kind))
        throw ConfigError("potential.kind", "unknown potential '" + c.potential_kind + "'");
    auto& p = c.potential;
    p.dim = static_cast<std::size_t>(f.integer("potential.dim", 1));
    if (p.dim < 1) throw ConfigError("potential.dim", "must be >= 1");
    p.kappa = f.real("potential.kappa", 1.0);
    p.center = f.reals("potential.center");
    if (!p.center.empty() && p.center.size() != p.dim) throw ConfigError("potential.center", "length must equal dim");
    p.a = f.real("potential.a", 1.0);
    p.b = f.real("potential.b", 1.0);
    if (f.has("potential.heights")) {
        const Vector h = f.reals("potential.heights");
        if (h.size() != 3) throw ConfigError("potential.heights", "expected three values");
        p.heights = {h[0], h[1], h[2]};
    }
    p.eps_bar = f.real("potential.eps_bar", 0.0);
    if (p.eps_bar < 0.0) throw ConfigError("potential.eps_bar", "must be >= 0");
    const std::string pert = f.text("potential.perturbation", "constant-shift");
    if (pert == "constant-shift") p.perturbation = PerturbationMode::constant_shift;
    else if (pert == "smooth-random") p.perturbation = PerturbationMode::smooth_random;
    else throw ConfigError("potential.perturbation", "unknown mode '" + pert + "'");

    c.kernel = kernel_kind_from(f.text("sampler.kind", "em"));
    const bool has_dt = f.has("sampler.dt"), has_k = f.has("sampler.stiffness");
    if (has_dt && has_k) throw ConfigError("sampler.stiffness", "give exactly one of sampler.dt and sampler.stiffness");
    double dt = 0.01;
    try {
        if (has_dt) dt = f.real("sampler.dt", dt);
        if (has_k) dt = step_for_stiffness(f.real("sampler.stiffness", 1.0), c.units);
        if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    } catch (const DomainError& e) {
        throw ConfigError(has_k ? "sampler.stiffness" : "sampler.dt", e.what());
    }

    auto& ko = c.kernel_options;
    ko.gamma = f.real("sampler.gamma", 1.0);
    ko.split.vertical = f.real("sampler.split_vertical", c.kernel == KernelKind::strang ? 0.5 : 1.0);
    ko.split.horizontal = f.real("sampler.split_horizontal", 1.0 - ko.split.vertical);
    try {
        ko.split.validate();
    } catch (const DomainError& e) {
        throw ConfigError("sampler.split_vertical", e.what());
    }
    const std::string sub = f.text("sampler.substep", "em");
    if (sub == "em") ko.substep = SubstepKind::em;
    else if (sub == "heun") ko.substep = SubstepKind::heun;
    else throw ConfigError("sampler.substep", "unknown substep '" + sub + "'");
    ko.heun_split_stiffness = f.real("sampler.heun_split_stiffness", 0.0);
    c.horizontal_kappa = f.real("sampler.horizontal_kappa", 0.0);
    if (c.kernel == KernelKind::strang) {
        ko.horizontal = c.horizontal_kappa > 0.0 ? make_quadratic(c.horizontal_kappa, Vector(p.dim, 0.0))
                                                 : DriftPtr(std::make_shared<FreeDrift>());
    }
    const long long batch = f.integer("sampler.batch", 1);
    if (batch < 1) throw ConfigError("sampler.batch", "must be >= 1");
    c.batch = static_cast<std::size_t>(batch);
    c.seed = static_cast<std::uint64_t>(f.integer("sampler.seed", 1));
    const std::string init = f.text("sampler.init", "gaussian");
    if (init != "gaussian" && init != "zero") throw ConfigError("sampler.init", "expected gaussian or zero");
    c.gaussian_init = init == "gaussian";

    // Schedule.
    std::vector<double> steps;
    if (f.has("schedule.steps")) {
        steps = f.reals("schedule.steps");
    } else {
        const long long n = f.integer("schedule.n_steps", 100);
        if (n < 1) throw ConfigError("schedule.n_steps", "must be >= 1");
        steps.assign(static_cast<std::size_t>(n), dt);
    }
    const double umax = f.real("schedule.tempering_max", 1.0);
    try {
        c.schedule = Schedule(steps, geometric_tempering(steps.size(), umax), ko.split);
    } catch (const DomainError& e) {
        throw ConfigError(f.has("schedule.steps") ? "schedule.steps" : "schedule.tempering_max", e.what());
    }

    // Glue.
    const std::string gk = f.text("glue.kind", "adjacent");
    if (gk == "adjacent") c.glue.kind = GlueKind::adjacent;
    else if (gk == "anchored") c.glue.kind = GlueKind::anchored;
    else if (gk == "radial-rmin") c.glue.kind = GlueKind::radial_rmin;
    else throw ConfigError("glue.kind", "unknown glue '" + gk + "'");
    if (f.has("glue.k")) c.glue.stiffness = f.real("glue.k", 0.0);
    c.glue.anchor_stiffness = f.real("glue.k_a", 1.0);
    c.glue.r_min = f.real("glue.r_min", 1.0);
    c.glue.neighbors = static_cast<int>(f.integer("glue.neighbors", 1));
    c.glue.rho = f.real("glue.rho", 0.6);
    c.glue.eps = f.real("glue.eps", tol::glue_eps);
    c.glue.align = f.flag("glue.align", false);
    const std::string dm = f.text("glue.distance_mode", "per-frame");
    if (dm == "per-frame") c.glue.distance_mode = DistanceMode::per_frame;
    else if (dm == "pairwise") c.glue.distance_mode = DistanceMode::pairwise;
    else throw ConfigError("glue.distance_mode", "unknown mode '" + dm + "'");
    try {
        c.glue.validate();
    } catch (const DomainError& e) {
        throw ConfigError("glue", e.what());
    }
    if (c.kernel == KernelKind::adjacent_glue) ko.glue_stiffness = c.glue.stiffness;
    ko.anchor_stiffness = c.glue.anchor_stiffness;

    c.mh_enabled = f.flag("exactness.mh_enabled", false);
    c.mh_target = f.text("exactness.mh_target", "bare");
    if (c.mh_target != "bare" && c.mh_target != "glued")
        throw ConfigError("exactness.mh_target", "expected bare or glued");
    c.arex_enabled = f.flag("exactness.arex_enabled", false);
    c.sheets = static_cast<int>(f.integer("exactness.B", 1));
    if (c.sheets < 1) throw ConfigError("exactness.B", "must be >= 1");
    if (f.text("exactness.lambda_schedule", "linear") != "linear")
        throw ConfigError("exactness.lambda_schedule", "only 'linear' is supported");

    c.lattice_rows = static_cast<std::size_t>(f.integer("lattice.N", 0));
    c.lattice_cols = static_cast<std::size_t>(f.integer("lattice.B", 0));
    c.lattice_passes = static_cast<std::size_t>(f.integer("lattice.passes", 0));
    c.workers = static_cast<std::size_t>(f.integer("lattice.workers", 1));

    c.out_dir = f.text("output.dir", "");
    c.prefix = f.text("output.prefix", "run");
    c.write_velocities = f.flag("output.velocities", c.kernel == KernelKind::underdamped);
    return c;
}

} // namespace hglue
