#pragma once

// File I/O and config plumbing: atomic writes, the pulse parameter file
// format (flat TOML mirroring the published table layout: ansatz, omega0_T,
// delta0_over_omega0, A1, alpha1, [B1, beta1], ...), the [geometry]/[target]/
// [objective]/[optimizer] config sections, and JSON result documents.
// Dimensionless units throughout: times are Omega_0*t, energies E/(hbar
// Omega_0).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydpulse/common.hpp"
#include "rydpulse/geometry.hpp"
#include "rydpulse/objective.hpp"
#include "rydpulse/optimizer.hpp"
#include "rydpulse/pulse.hpp"
#include "rydpulse/targets.hpp"
#include "rydpulse/toml.hpp"

namespace rydpulse {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// write-temp-then-rename so readers never observe a partial file
inline void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp);
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ConfigError("cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

// shortest digit string that round-trips a double
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lg", &back);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lg", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

inline std::string config_hash_hex(const std::string& raw) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(raw)));
    return buf;
}

// ---------------------------------------------------------------------------
// pulse parameter files

inline AnsatzKind ansatz_from_string(const std::string& s) {
    if (s == "antisymmetric") return AnsatzKind::antisymmetric;
    if (s == "general") return AnsatzKind::general;
    throw ConfigError("unknown ansatz family '" + s +
                      "' (expected \"antisymmetric\" or \"general\")");
}

inline PulseSpec pulse_from_table(const toml::Table& t) {
    PulseSpec p;
    p.kind = ansatz_from_string(toml::get_string(t, "ansatz"));
    p.duration = toml::get_float(t, "omega0_T");
    p.detuning0 = toml::get_float(t, "delta0_over_omega0");
    for (int k = 1;; ++k) {
        const std::string n = std::to_string(k);
        if (!toml::find(t, "A" + n)) break;
        CrabTerm term;
        term.A = toml::get_float(t, "A" + n);
        term.alpha = toml::get_float(t, "alpha" + n);
        if (p.kind == AnsatzKind::general) {
            term.B = toml::get_float(t, "B" + n);
            term.beta = toml::get_float(t, "beta" + n);
        } else if (toml::find(t, "B" + n) || toml::find(t, "beta" + n)) {
            throw ConfigError("antisymmetric pulse file must not define B" + n +
                              "/beta" + n);
        }
        p.terms.push_back(term);
    }
    if (p.terms.empty()) throw ConfigError("pulse file defines no CRAB terms (A1 missing)");
    p.validate();
    return p;
}

inline PulseSpec read_pulse_file(const std::string& path) {
    try {
        return pulse_from_table(toml::parse(read_file(path)));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline std::string pulse_to_toml(const PulseSpec& p) {
    if (p.linear_phase != 0.0 || p.phase_offset != 0.0)
        throw ConfigError("pulse files hold the canonical form; write the pulse "
                          "before to_detuning_form");
    std::ostringstream out;
    out << "ansatz = \"" << to_string(p.kind) << "\"\n";
    out << "omega0_T = " << fmt_double(p.duration) << "\n";
    out << "delta0_over_omega0 = " << fmt_double(p.detuning0) << "\n";
    for (std::size_t k = 0; k < p.terms.size(); ++k) {
        const std::string n = std::to_string(k + 1);
        out << "A" << n << " = " << fmt_double(p.terms[k].A) << "\n";
        out << "alpha" << n << " = " << fmt_double(p.terms[k].alpha) << "\n";
        if (p.kind == AnsatzKind::general) {
            out << "B" << n << " = " << fmt_double(p.terms[k].B) << "\n";
            out << "beta" << n << " = " << fmt_double(p.terms[k].beta) << "\n";
        }
    }
    return out.str();
}

inline void write_pulse_file(const std::string& path, const PulseSpec& p) {
    atomic_write_file(path, pulse_to_toml(p));
}

// ---------------------------------------------------------------------------
// config sections

struct LoadedGeometry {
    InteractionMatrix mat;
    std::optional<AtomArrangement> arrangement;  // present iff positions given
};

inline LoadedGeometry parse_geometry(const toml::Table& g) {
    LoadedGeometry out;
    const bool perfect = toml::get_bool_or(g, "perfect_blockade", false);
    if (const toml::Value* pos = toml::find(g, "positions")) {
        AtomArrangement arr;
        for (const auto& xy : pos->as_array()) {
            const auto& a = xy.as_array();
            if (a.size() != 2)
                throw ConfigError("geometry.positions entries must be [x, y] pairs");
            arr.positions.push_back({a[0].as_float(), a[1].as_float()});
        }
        arr.c6 = toml::get_float(g, "c6_over_hbar_omega0");
        out.mat = interactions_from_positions(arr, toml::get_bool_or(g, "signed", false));
        out.mat.perfect_blockade = perfect;
        out.arrangement = std::move(arr);
    } else if (const toml::Value* vm = toml::find(g, "v_matrix")) {
        const int n = static_cast<int>(toml::get_int(g, "n_atoms"));
        if (n < 2) throw ConfigError("geometry.n_atoms must be >= 2");
        const auto& tri = vm->as_array();
        if (static_cast<int>(tri.size()) != n * (n - 1) / 2)
            throw ConfigError("geometry.v_matrix needs N(N-1)/2 upper-triangle entries");
        InteractionMatrix m;
        m.n_atoms = n;
        m.v.assign(static_cast<std::size_t>(n) * n, 0.0);
        std::size_t idx = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double v = tri[idx++].as_float();
                m.at(i, j) = v;
                m.at(j, i) = v;
            }
        m.perfect_blockade = perfect;
        out.mat = m;
    } else if (perfect && toml::find(g, "n_atoms")) {
        out.mat = perfect_blockade_matrix(static_cast<int>(toml::get_int(g, "n_atoms")));
    } else {
        throw ConfigError(
            "geometry section needs positions + c6_over_hbar_omega0, v_matrix + "
            "n_atoms, or perfect_blockade + n_atoms");
    }
    out.mat.validate();
    return out;
}

inline TargetGate parse_target(const toml::Table& t) {
    if (const toml::Value* g3 = toml::find(t, "g3")) {
        const auto& tab = g3->as_table();
        G3Params p;
        p.theta = toml::get_float(tab, "theta");
        p.lambda = toml::get_float(tab, "lambda");
        const toml::Value* tp = toml::find(tab, "theta_prime");
        if (!tp) throw ConfigError("target.g3 needs theta_prime (a number or \"free\")");
        if (tp->kind() == toml::Value::Kind::string) {
            if (tp->as_string() != "free")
                throw ConfigError("target.g3.theta_prime must be a number or \"free\"");
        } else {
            p.theta_prime = tp->as_float();
        }
        return make_g3(p);
    }
    return make_builtin(toml::get_string(t, "name"));
}

inline Objective parse_objective(const toml::Table& root, const TargetGate& target) {
    Objective obj;
    obj.target = target;
    if (const toml::Value* o = toml::find(root, "objective")) {
        const auto& t = o->as_table();
        obj.gamma = toml::get_float_or(t, "gamma_over_omega0", 0.0);
        const std::string mode = toml::get_string_or(t, "mode", "fidelity");
        if (mode == "fidelity") obj.mode = ObjectiveMode::maximize_fidelity;
        else if (mode == "time_regularized") obj.mode = ObjectiveMode::minimize_time_regularized;
        else throw ConfigError("objective.mode must be \"fidelity\" or \"time_regularized\"");
        obj.duration_penalty = toml::get_float_or(t, "duration_penalty", 0.0);
    }
    obj.validate();
    return obj;
}

inline void parse_range(const toml::Table& t, const std::string& key, double& lo,
                        double& hi) {
    const toml::Value* v = toml::find(t, key);
    if (!v) return;
    const auto& a = v->as_array();
    if (a.size() != 2) throw ConfigError("optimizer." + key + " must be [lo, hi]");
    lo = a[0].as_float();
    hi = a[1].as_float();
    if (!(lo <= hi)) throw ConfigError("optimizer." + key + " range is empty");
}

inline OptimizerConfig parse_optimizer(const toml::Table& root, AnsatzKind kind,
                                       int k_terms) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    cfg.k_terms = k_terms;
    if (const toml::Value* o = toml::find(root, "optimizer")) {
        const auto& t = o->as_table();
        cfg.restarts = static_cast<int>(toml::get_int_or(t, "restarts", cfg.restarts));
        cfg.seed = static_cast<std::uint64_t>(toml::get_int_or(t, "seed", 0));
        cfg.jobs = static_cast<int>(toml::get_int_or(t, "jobs", 0));  // 0: CLI decides
        cfg.adam.step = toml::get_float_or(t, "step", cfg.adam.step);
        cfg.adam.beta1 = toml::get_float_or(t, "beta1", cfg.adam.beta1);
        cfg.adam.beta2 = toml::get_float_or(t, "beta2", cfg.adam.beta2);
        cfg.adam.epsilon = toml::get_float_or(t, "epsilon", cfg.adam.epsilon);
        cfg.adam.max_iters =
            static_cast<int>(toml::get_int_or(t, "max_iters", cfg.adam.max_iters));
        cfg.adam.decay_interval = static_cast<int>(
            toml::get_int_or(t, "decay_interval", cfg.adam.decay_interval));
        cfg.adam.decay_factor =
            toml::get_float_or(t, "decay_factor", cfg.adam.decay_factor);
        cfg.opt_tolerance = toml::get_float_or(t, "opt_tolerance", cfg.opt_tolerance);
        cfg.final_tolerance =
            toml::get_float_or(t, "final_tolerance", cfg.final_tolerance);
        cfg.converged_infidelity =
            toml::get_float_or(t, "converged_infidelity", cfg.converged_infidelity);
        cfg.polish = toml::get_bool_or(t, "polish", cfg.polish);
        cfg.polish_max_iters = static_cast<int>(
            toml::get_int_or(t, "polish_max_iters", cfg.polish_max_iters));
        cfg.polish_refine_iters = static_cast<int>(
            toml::get_int_or(t, "polish_refine_iters", cfg.polish_refine_iters));
        cfg.polish_enter_infidelity = toml::get_float_or(t, "polish_enter_infidelity",
                                                         cfg.polish_enter_infidelity);
        cfg.polish_stop_cost =
            toml::get_float_or(t, "polish_stop_cost", cfg.polish_stop_cost);
        cfg.polish_grad_tol =
            toml::get_float_or(t, "polish_grad_tol", cfg.polish_grad_tol);
        cfg.plateau_window =
            static_cast<int>(toml::get_int_or(t, "plateau_window", cfg.plateau_window));
        cfg.plateau_rel = toml::get_float_or(t, "plateau_rel", cfg.plateau_rel);
        cfg.t_descent = toml::get_bool_or(t, "t_descent", cfg.t_descent);
        cfg.t_descent_step = toml::get_float_or(t, "t_descent_step", cfg.t_descent_step);
        cfg.t_descent_min_step =
            toml::get_float_or(t, "t_descent_min_step", cfg.t_descent_min_step);
        cfg.t_descent_max_steps = static_cast<int>(
            toml::get_int_or(t, "t_descent_max_steps", cfg.t_descent_max_steps));
        cfg.t_descent_inner_iters = static_cast<int>(
            toml::get_int_or(t, "t_descent_inner_iters", cfg.t_descent_inner_iters));
        const std::string sel = toml::get_string_or(t, "selection", "min_duration");
        if (sel == "min_duration") cfg.selection = SelectionRule::min_duration;
        else if (sel == "min_infidelity") cfg.selection = SelectionRule::min_infidelity;
        else throw ConfigError("optimizer.selection must be \"min_duration\" or \"min_infidelity\"");
        parse_range(t, "duration", cfg.init.duration_lo, cfg.init.duration_hi);
        parse_range(t, "detuning", cfg.init.detuning_lo, cfg.init.detuning_hi);
        parse_range(t, "freq", cfg.init.freq_lo, cfg.init.freq_hi);
        parse_range(t, "amp", cfg.init.amp_lo, cfg.init.amp_hi);
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// JSON result documents

inline json pulse_to_json(const PulseSpec& p) {
    json j;
    j["ansatz"] = to_string(p.kind);
    j["omega0_T"] = p.duration;
    j["delta0_over_omega0"] = p.detuning0;
    for (std::size_t k = 0; k < p.terms.size(); ++k) {
        const std::string n = std::to_string(k + 1);
        j["A" + n] = p.terms[k].A;
        j["alpha" + n] = p.terms[k].alpha;
        if (p.kind == AnsatzKind::general) {
            j["B" + n] = p.terms[k].B;
            j["beta" + n] = p.terms[k].beta;
        }
    }
    return j;
}

inline json record_to_json(const EvaluationRecord& r) {
    json j;
    j["fidelity"] = r.fidelity;
    j["infidelity"] = r.infidelity;
    j["rydberg_time"] = r.rydberg_time;
    j["omega0_T"] = r.duration;
    j["cost"] = r.cost;
    json fv = json::object();
    for (const auto& [name, value] : r.free_values) fv[name] = value;
    j["free_values"] = fv;
    return j;
}

inline json restart_to_json(const RestartResult& r) {
    json j;
    j["index"] = r.index;
    j["converged"] = r.converged;
    if (r.failed()) {
        j["error"] = r.error;
        return j;
    }
    j["adam_iters"] = r.adam_iters;
    j["polish_iters"] = r.polish_iters;
    j["descent_steps"] = r.descent_steps;
    j["grad_norm"] = r.grad_norm;
    j["record"] = record_to_json(r.record);
    j["pulse"] = pulse_to_json(r.pulse);
    return j;
}

// Deliberately excludes wall_seconds: the campaign subtree of a result file
// must be a pure function of (config, seed), independent of machine and jobs.
inline json campaign_to_json(const CampaignResult& c, bool per_restart = true) {
    json j;
    j["n_restarts"] = c.restarts.size();
    int converged = 0;
    for (const auto& r : c.restarts) converged += r.converged ? 1 : 0;
    j["n_converged"] = converged;
    j["best_index"] = c.best_index;
    if (c.best_index >= 0) j["best"] = restart_to_json(c.best());
    if (per_restart) {
        json arr = json::array();
        for (const auto& r : c.restarts) arr.push_back(restart_to_json(r));
        j["restarts"] = arr;
    }
    return j;
}

}  // namespace rydpulse
