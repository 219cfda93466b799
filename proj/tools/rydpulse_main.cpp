// rydpulse: design and verify global-laser multiqubit Rydberg gate pulses.
//
// Subcommands: evaluate, optimize, scan-distance, scan-geometry, scan-params,
// verify-tables, profile. Configs are TOML (paths inside a config resolve
// relative to the config file), results are JSON, tabular exports are CSV.
// Exit codes: 0 ok, 1 verification mismatch, 2 config error, 3 simulation
// error, 4 no admissible solution. RYDPULSE_JOBS sets the --jobs default.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rydpulse/io.hpp"
#include "rydpulse/scan.hpp"
#include "rydpulse/tables.hpp"

namespace {

using namespace rydpulse;

struct LoadedConfig {
    std::string path;
    std::string hash;
    toml::Table root;
    std::filesystem::path dir;
};

LoadedConfig load_config(const std::string& path) {
    LoadedConfig c;
    c.path = path;
    const std::string raw = read_file(path);
    c.hash = config_hash_hex(raw);
    c.root = toml::parse(raw);
    c.dir = std::filesystem::path(path).parent_path();
    return c;
}

std::string resolve_path(const std::filesystem::path& dir, const std::string& p) {
    const std::filesystem::path fp(p);
    if (fp.is_absolute() || dir.empty()) return p;
    return (dir / fp).string();
}

const toml::Table& section(const toml::Table& root, const char* name) {
    const toml::Value* v = toml::find(root, name);
    if (!v) throw ConfigError(std::string("missing [") + name + "] section");
    return v->as_table();
}

double sim_tolerance(const toml::Table& root) {
    if (const toml::Value* s = toml::find(root, "simulation"))
        return toml::get_float_or(s->as_table(), "tolerance", 1e-12);
    return 1e-12;
}

PulseSpec load_pulse(const LoadedConfig& cfg) {
    const auto& p = section(cfg.root, "pulse");
    return read_pulse_file(resolve_path(cfg.dir, toml::get_string(p, "file")));
}

// Desk-scale restart defaults: 200 for a plain optimize, 500 per sweep point.
void default_restarts(const toml::Table& root, OptimizerConfig& opt, int fallback) {
    if (const toml::Value* o = toml::find(root, "optimizer"))
        if (toml::find(o->as_table(), "restarts")) return;
    opt.restarts = fallback;
}

int resolve_jobs(int cli_jobs, int config_jobs) {
    if (cli_jobs > 0) return cli_jobs;
    if (config_jobs > 0) return config_jobs;
    if (const char* env = std::getenv("RYDPULSE_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<double> scan_deltas(const toml::Table& s) {
    if (const toml::Value* d = toml::find(s, "deltas")) {
        std::vector<double> out;
        for (const auto& v : d->as_array()) out.push_back(v.as_float());
        if (out.empty()) throw ConfigError("scan.deltas must not be empty");
        return out;
    }
    const double lo = toml::get_float(s, "delta_min");
    const double hi = toml::get_float(s, "delta_max");
    const int n = static_cast<int>(toml::get_int(s, "n_points"));
    if (n < 2 || !(lo < hi))
        throw ConfigError("scan needs delta_min < delta_max and n_points >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return out;
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& config_path, const std::string& out_path) {
    const LoadedConfig cfg = load_config(config_path);
    const LoadedGeometry geo = parse_geometry(section(cfg.root, "geometry"));
    const TargetGate target = parse_target(section(cfg.root, "target"));
    const Objective obj = parse_objective(cfg.root, target);
    const PulseSpec pulse = load_pulse(cfg);
    const EvaluationRecord rec = evaluate(geo.mat, pulse, obj, sim_tolerance(cfg.root));

    json doc = record_to_json(rec);
    doc["config_hash"] = cfg.hash;
    doc["target"] = target.name;
    doc["pulse"] = pulse_to_json(pulse);
    const std::string body = doc.dump(2) + "\n";
    std::cout << body;
    if (!out_path.empty()) atomic_write_file(out_path, body);
    return 0;
}

int cmd_optimize(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 int cli_jobs, const std::string& out_path,
                 const std::string& pulse_out) {
    const LoadedConfig cfg = load_config(config_path);
    const LoadedGeometry geo = parse_geometry(section(cfg.root, "geometry"));
    const TargetGate target = parse_target(section(cfg.root, "target"));
    const Objective obj = parse_objective(cfg.root, target);
    const auto& ans = section(cfg.root, "ansatz");
    const AnsatzKind kind = ansatz_from_string(toml::get_string(ans, "family"));
    const int k_terms = static_cast<int>(toml::get_int(ans, "k_terms"));
    OptimizerConfig opt = parse_optimizer(cfg.root, kind, k_terms);
    default_restarts(cfg.root, opt, 200);
    if (seed_set) opt.seed = seed;
    opt.jobs = resolve_jobs(cli_jobs, opt.jobs);

    CampaignResult result;
    const toml::Value* warm = nullptr;
    if (const toml::Value* o = toml::find(cfg.root, "optimizer"))
        warm = toml::find(o->as_table(), "warm_start_file");
    if (warm) {
        const PulseSpec start =
            read_pulse_file(resolve_path(cfg.dir, warm->as_string()));
        result.restarts.push_back(warm_start(geo.mat, obj, opt, start));
        const auto& r = result.restarts[0];
        const bool admissible =
            !r.failed() &&
            (opt.selection == SelectionRule::min_infidelity || r.converged);
        result.best_index = admissible ? 0 : -1;
    } else {
        result = run_campaign(geo.mat, obj, opt);
    }

    json doc;
    doc["command"] = "optimize";
    doc["config_hash"] = cfg.hash;
    doc["target"] = target.name;
    doc["ansatz"] = to_string(kind);
    doc["k_terms"] = k_terms;
    doc["seed"] = opt.seed;
    doc["campaign"] = campaign_to_json(result);
    doc["wall_seconds"] = result.wall_seconds;
    std::string out = out_path;
    if (out.empty()) out = config_path + ".result.json";
    atomic_write_file(out, doc.dump(2) + "\n");

    std::printf("campaign: %zu restarts, %.1f s wall, result written to %s\n",
                result.restarts.size(), result.wall_seconds, out.c_str());
    if (result.best_index < 0) {
        std::printf("no restart satisfied the selection rule\n");
        throw NoSolutionError(
            std::string("no admissible restart (selection: ") +
            (opt.selection == SelectionRule::min_duration ? "min_duration"
                                                          : "min_infidelity") +
            ")");
    }
    const auto& best = result.best();
    std::printf("best (restart %d): omega0_T = %.8f, T_R = %.6f, 1-F = %.3e\n",
                best.index, best.record.duration, best.record.rydberg_time,
                best.record.infidelity);
    if (!pulse_out.empty()) {
        write_pulse_file(pulse_out, best.pulse);
        std::printf("best pulse written to %s\n", pulse_out.c_str());
    }
    return 0;
}

int cmd_scan_distance(const std::string& config_path, const std::string& out_cli) {
    const LoadedConfig cfg = load_config(config_path);
    const LoadedGeometry geo = parse_geometry(section(cfg.root, "geometry"));
    if (!geo.arrangement)
        throw ConfigError("scan-distance needs a positions-based geometry section");
    const TargetGate target = parse_target(section(cfg.root, "target"));
    const Objective obj = parse_objective(cfg.root, target);
    const PulseSpec pulse = load_pulse(cfg);
    const auto& s = section(cfg.root, "scan");
    const std::vector<double> deltas = scan_deltas(s);
    const bool pin = toml::get_bool_or(s, "pin_theta_prime", true);
    const std::string out = out_cli.empty()
                                ? resolve_path(cfg.dir, toml::get_string_or(
                                                            s, "out", "distance_scan.csv"))
                                : out_cli;

    // scan.pair = [i, j] scans one pair; without it, every pair gets its own
    // CSV (schema has no pair column) suffixed _pair<i><j>.
    std::vector<std::pair<int, int>> pairs;
    if (const toml::Value* pair = toml::find(s, "pair")) {
        if (pair->as_array().size() != 2) throw ConfigError("scan.pair must be [i, j]");
        pairs.emplace_back(static_cast<int>(pair->as_array()[0].as_int()),
                           static_cast<int>(pair->as_array()[1].as_int()));
    } else {
        const int n = geo.mat.n_atoms;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    for (const auto& [i, j] : pairs) {
        std::string path = out;
        if (pairs.size() > 1) {
            const std::string suffix = "_pair" + std::to_string(i) + std::to_string(j);
            const std::size_t dot = path.rfind('.');
            path.insert(dot == std::string::npos ? path.size() : dot, suffix);
        }
        ScanWriter writer = ScanWriter::open(path, distance_scan_header, cfg.hash);
        const auto points =
            distance_scan(*geo.arrangement, geo.mat.perfect_blockade, pulse, obj, i, j,
                          deltas, sim_tolerance(cfg.root), pin, &writer);
        std::printf("distance scan (pair %d,%d): %zu points written to %s\n", i, j,
                    points.size(), path.c_str());
    }
    return 0;
}

int cmd_scan_geometry(const std::string& config_path, std::uint64_t seed, bool seed_set,
                      int cli_jobs, const std::string& out_cli) {
    const LoadedConfig cfg = load_config(config_path);
    const TargetGate target = parse_target(section(cfg.root, "target"));
    const Objective obj = parse_objective(cfg.root, target);
    const auto& ans = section(cfg.root, "ansatz");
    const AnsatzKind kind = ansatz_from_string(toml::get_string(ans, "family"));
    const int k_terms = static_cast<int>(toml::get_int(ans, "k_terms"));
    OptimizerConfig opt = parse_optimizer(cfg.root, kind, k_terms);
    default_restarts(cfg.root, opt, 500);
    if (seed_set) opt.seed = seed;
    opt.jobs = resolve_jobs(cli_jobs, opt.jobs);
    const auto& s = section(cfg.root, "scan");
    const double v_nn = toml::get_float(s, "v_nn");
    std::vector<double> v_nnn;
    for (const auto& v : toml::get(s, "v_nnn").as_array()) v_nnn.push_back(v.as_float());
    std::string out = out_cli.empty()
                          ? resolve_path(cfg.dir, toml::get_string_or(s, "out",
                                                                      "geometry_sweep.csv"))
                          : out_cli;

    ScanWriter writer = ScanWriter::open(out, geometry_sweep_header, cfg.hash);
    const auto points = geometry_sweep(v_nn, v_nnn, target, obj.gamma, opt, &writer);
    for (const auto& p : points) {
        if (p.no_solution)
            std::printf("v_nnn = %-8g no solution\n", p.v_nnn);
        else
            std::printf("v_nnn = %-8g T_R = %.6f  1-F = %.3e  theta' = %.6f\n", p.v_nnn,
                        p.best_TR, p.best_infid, p.theta_prime);
    }
    std::printf("geometry sweep: %zu points written to %s\n", points.size(), out.c_str());
    return 0;
}

int cmd_scan_params(const std::string& config_path, std::uint64_t seed, bool seed_set,
                    int cli_jobs, const std::string& out_cli) {
    const LoadedConfig cfg = load_config(config_path);
    const LoadedGeometry geo = parse_geometry(section(cfg.root, "geometry"));
    const TargetGate target = parse_target(section(cfg.root, "target"));
    const Objective obj = parse_objective(cfg.root, target);
    OptimizerConfig opt = parse_optimizer(cfg.root, AnsatzKind::antisymmetric, 1);
    default_restarts(cfg.root, opt, 500);
    if (seed_set) opt.seed = seed;
    opt.jobs = resolve_jobs(cli_jobs, opt.jobs);
    const auto& s = section(cfg.root, "scan");
    std::vector<std::string> families;
    if (const toml::Value* f = toml::find(s, "families"))
        for (const auto& v : f->as_array()) families.push_back(v.as_string());
    else
        families.push_back("antisymmetric");
    std::vector<int> k_list;
    for (const auto& v : toml::get(s, "k_list").as_array())
        k_list.push_back(static_cast<int>(v.as_int()));
    if (k_list.empty()) throw ConfigError("scan.k_list must not be empty");
    std::vector<std::pair<AnsatzKind, int>> points;
    for (const auto& fam : families)
        for (const int k : k_list) points.emplace_back(ansatz_from_string(fam), k);
    std::string out = out_cli.empty()
                          ? resolve_path(cfg.dir, toml::get_string_or(s, "out",
                                                                      "param_sweep.csv"))
                          : out_cli;

    ScanWriter writer = ScanWriter::open(out, param_count_sweep_header, cfg.hash);
    const auto rows = param_count_sweep(geo.mat, target, obj.gamma, points, opt, &writer);
    for (const auto& r : rows) {
        if (r.no_solution)
            std::printf("%-14s K=%d (%d params): no solution\n",
                        to_string(r.kind).c_str(), r.k_terms, r.n_params);
        else
            std::printf("%-14s K=%d (%d params): T = %.6f  T_R = %.6f  1-F = %.3e\n",
                        to_string(r.kind).c_str(), r.k_terms, r.n_params, r.best_T,
                        r.best_TR, r.best_infid);
    }
    std::printf("parameter sweep: %zu points written to %s\n", rows.size(), out.c_str());
    return 0;
}

int cmd_verify_tables(const std::string& table_id, double tol) {
    const auto checks = verify_tables(table_id, tol);
    int failures = 0;
    for (const auto& c : checks) {
        const bool ok = c.ok();
        failures += ok ? 0 : 1;
        std::printf("[%s] %s (%s, %s): 1-F = %.3e (bound %.1e), T_R = %.4f "
                    "(recorded %.3f +/- 0.01)\n",
                    ok ? "PASS" : "FAIL", c.col->id().c_str(), c.col->target.c_str(),
                    c.col->role.c_str(), c.infidelity, c.infid_bound, c.rydberg_time,
                    c.col->recorded_TR);
    }
    std::printf("%zu columns checked, %d failed\n", checks.size(), failures);
    return failures == 0 ? 0 : 1;
}

int cmd_profile(const std::string& pulse_path, int samples, const std::string& out) {
    const PulseSpec pulse = read_pulse_file(pulse_path);
    const PulseProfile profile = sample_profile(pulse, samples);
    std::string body = "omega0_t,xi,dxi_dt\n";
    for (std::size_t i = 0; i < profile.t.size(); ++i)
        body += fmt_double(profile.t[i]) + "," + fmt_double(profile.xi[i]) + "," +
                fmt_double(profile.dxi_dt[i]) + "\n";
    if (out.empty())
        std::cout << body;
    else
        atomic_write_file(out, body);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"design and verify global-laser multiqubit Rydberg gate pulses"};
    app.require_subcommand(1);

    std::string config_path, out_path, pulse_out, table_id, pulse_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    int samples = 1001;
    double tol = 1e-12;
    std::function<int()> run;

    auto add_seed_jobs = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "override the optimizer seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--jobs", jobs, "parallel workers (default: RYDPULSE_JOBS or all cores)");
    };

    auto* ev = app.add_subcommand("evaluate", "simulate a pulse and score it");
    ev->add_option("config", config_path, "TOML config")->required();
    ev->add_option("--out", out_path, "also write the JSON result here");
    ev->callback([&] { run = [&] { return cmd_evaluate(config_path, out_path); }; });

    auto* op = app.add_subcommand("optimize", "run a multi-start pulse search");
    op->add_option("config", config_path, "TOML config")->required();
    op->add_option("--out", out_path, "campaign result path (JSON)");
    op->add_option("--save-pulse", pulse_out, "write the best pulse parameters here");
    add_seed_jobs(op);
    op->callback([&] {
        run = [&] {
            return cmd_optimize(config_path, seed, seed_set, jobs, out_path, pulse_out);
        };
    });

    auto* sd = app.add_subcommand("scan-distance", "fixed-pulse distance-robustness scan");
    sd->add_option("config", config_path, "TOML config")->required();
    sd->add_option("--out", out_path, "CSV output path");
    sd->callback([&] { run = [&] { return cmd_scan_distance(config_path, out_path); }; });

    auto* sg = app.add_subcommand("scan-geometry", "triangle-geometry campaign sweep");
    sg->add_option("config", config_path, "TOML config")->required();
    sg->add_option("--out", out_path, "CSV output path");
    add_seed_jobs(sg);
    sg->callback([&] {
        run = [&] { return cmd_scan_geometry(config_path, seed, seed_set, jobs, out_path); };
    });

    auto* sp = app.add_subcommand("scan-params", "ansatz-size campaign sweep");
    sp->add_option("config", config_path, "TOML config")->required();
    sp->add_option("--out", out_path, "CSV output path");
    add_seed_jobs(sp);
    sp->callback([&] {
        run = [&] { return cmd_scan_params(config_path, seed, seed_set, jobs, out_path); };
    });

    auto* vt = app.add_subcommand("verify-tables",
                                  "re-simulate the bundled reference pulse tables");
    vt->add_option("table", table_id, "table id I..IV (default: all)");
    vt->add_option("--tolerance", tol, "ODE tolerance")->check(CLI::Range(1e-14, 1e-6));
    vt->callback([&] { run = [&] { return cmd_verify_tables(table_id, tol); }; });

    auto* pr = app.add_subcommand("profile", "export a sampled phase profile as CSV");
    pr->add_option("pulse", pulse_path, "pulse parameter file")->required();
    pr->add_option("--samples", samples, "number of samples")->check(CLI::Range(2, 10000000));
    pr->add_option("--out", out_path, "CSV output path (default: stdout)");
    pr->callback([&] { run = [&] { return cmd_profile(pulse_path, samples, out_path); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run();
    } catch (const ConfigError& e) {
        std::cerr << "rydpulse: config error: " << e.what() << "\n";
        return 2;
    } catch (const NoSolutionError& e) {
        std::cerr << "rydpulse: " << e.what() << "\n";
        return 4;
    } catch (const SimulationError& e) {
        std::cerr << "rydpulse: simulation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "rydpulse: error: " << e.what() << "\n";
        return 3;
    }
}
