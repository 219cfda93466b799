#pragma once

// Parameter studies: distance-robustness curves, triangle-geometry sweeps,
// and ansatz-size (parameter-count) sweeps. Every sweep can persist to an
// append-only CSV plus a JSON manifest keyed by point index, so interrupted
// campaigns resume without recomputing finished points; the manifest records
// the config hash and refuses to resume under a different config.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rydpulse/common.hpp"
#include "rydpulse/geometry.hpp"
#include "rydpulse/io.hpp"
#include "rydpulse/objective.hpp"
#include "rydpulse/optimizer.hpp"
#include "rydpulse/targets.hpp"

namespace rydpulse {

class ScanWriter {
  public:
    // Creates the CSV (with header) if absent; loads the manifest if present.
    static ScanWriter open(const std::string& csv_path, const std::string& header,
                           const std::string& config_hash) {
        ScanWriter w;
        w.csv_path_ = csv_path;
        w.manifest_path_ = csv_path + ".manifest.json";
        w.header_ = header;
        w.config_hash_ = config_hash;
        if (std::ifstream m(w.manifest_path_); m) {
            json doc;
            try {
                m >> doc;
            } catch (const std::exception& e) {
                throw ConfigError("corrupt scan manifest " + w.manifest_path_ + ": " +
                                  e.what());
            }
            if (doc.value("config_hash", "") != config_hash ||
                doc.value("schema", "") != header)
                throw ConfigError("scan manifest " + w.manifest_path_ +
                                  " belongs to a different scan config; remove it or "
                                  "change the output path");
            for (const auto& [k, v] : doc.at("rows").items())
                w.rows_[std::atoi(k.c_str())] = v.get<std::string>();
        }
        if (!std::ifstream(csv_path)) {
            std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
            if (!csv) throw ConfigError("cannot write file: " + csv_path);
            csv << header << "\n";
        }
        return w;
    }

    bool has(int idx) const { return rows_.count(idx) != 0; }
    const std::string& row(int idx) const { return rows_.at(idx); }

    // idempotent: a second put for the same index is ignored
    void put(int idx, const std::string& row) {
        if (has(idx)) return;
        {
            std::ofstream csv(csv_path_, std::ios::binary | std::ios::app);
            if (!csv) throw ConfigError("cannot append to file: " + csv_path_);
            csv << row << "\n";
            csv.flush();
        }
        rows_[idx] = row;
        json doc;
        doc["config_hash"] = config_hash_;
        doc["schema"] = header_;
        json r = json::object();
        for (const auto& [k, v] : rows_) r[std::to_string(k)] = v;
        doc["rows"] = r;
        atomic_write_file(manifest_path_, doc.dump(2) + "\n");
    }

    const std::string& csv_path() const { return csv_path_; }

  private:
    std::string csv_path_, manifest_path_, header_, config_hash_;
    std::map<int, std::string> rows_;
};

namespace detail {

inline std::vector<double> split_csv_row(const std::string& row) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= row.size()) {
        const std::size_t comma = row.find(',', start);
        const std::string field =
            row.substr(start, comma == std::string::npos ? comma : comma - start);
        out.push_back(std::strtod(field.c_str(), nullptr));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

// Distinct, documented seed stream per sweep point: the k-th point's campaign
// seed is the (k+1)-th output of splitmix64 seeded with the base seed.
inline std::uint64_t derive_seed(std::uint64_t base, int point) {
    SplitMix64 rng(base);
    std::uint64_t s = 0;
    for (int i = 0; i <= point; ++i) s = rng.next();
    return s;
}

// ---------------------------------------------------------------------------
// distance scan

struct DistancePoint {
    double delta_d = 0.0;
    double infidelity = 0.0;
};

// Re-simulates a FIXED calibrated pulse while atom j is displaced along the
// i->j line by each relative delta (position-space perturbation: all of atom
// j's distances move). When the target leaves theta' free and pin_theta_prime
// is set, theta' is realized once at delta = 0 and held fixed across the scan:
// robustness of a shipped gate means fidelity to that one unitary. phi always
// stays free (a single-qubit frame choice). Each point is evaluate() on the
// perturbed geometry, so the delta = 0 point reproduces the calibration
// evaluation exactly.
inline std::vector<DistancePoint> distance_scan(const AtomArrangement& arr,
                                                bool perfect_blockade,
                                                const PulseSpec& pulse,
                                                const Objective& obj, int i, int j,
                                                const std::vector<double>& deltas,
                                                double tol = 1e-12,
                                                bool pin_theta_prime = true,
                                                ScanWriter* sink = nullptr) {
    Objective scan_obj = obj;
    if (pin_theta_prime && obj.target.theta_prime_free) {
        InteractionMatrix mat0 = interactions_from_positions(arr);
        mat0.perfect_blockade = perfect_blockade;
        const EvaluationRecord cal = evaluate(mat0, pulse, obj, tol);
        double realized = 0.0;
        for (const auto& [name, value] : cal.free_values)
            if (name == "theta_prime") realized = value;
        G3Params pinned = *obj.target.g3;
        pinned.theta_prime = realized;
        scan_obj.target = make_g3(pinned);
    }
    std::vector<DistancePoint> out;
    out.reserve(deltas.size());
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        const int idx = static_cast<int>(k);
        if (sink && sink->has(idx)) {
            const auto f = detail::split_csv_row(sink->row(idx));
            if (f.size() != 2) throw ConfigError("corrupt distance-scan row");
            out.push_back({f[0], f[1]});
            continue;
        }
        const AtomArrangement moved = displace_along_pair(arr, i, j, deltas[k]);
        InteractionMatrix mat = interactions_from_positions(moved);
        mat.perfect_blockade = perfect_blockade;
        const EvaluationRecord rec = evaluate(mat, pulse, scan_obj, tol);
        DistancePoint pt{deltas[k], rec.infidelity};
        if (sink) sink->put(idx, fmt_double(pt.delta_d) + "," + fmt_double(pt.infidelity));
        out.push_back(pt);
    }
    return out;
}

inline const std::string distance_scan_header = "delta_d,infidelity";

// ---------------------------------------------------------------------------
// geometry sweep

struct GeometryPoint {
    double v_nnn = 0.0;
    bool no_solution = false;
    double best_TR = 0.0;
    double best_infid = 0.0;
    double theta_prime = 0.0;  // realized at the optimum; NaN if the target has none
};

// One Rydberg-time-optimal campaign per v_nnn on the isosceles triangle
// [[0, v_nn, v_nnn], [v_nn, 0, v_nn], [v_nnn, v_nn, 0]] (atom 1 is the apex).
// Selection is forced to min_infidelity: with gamma > 0, 1 - F tracks
// gamma*T_R once the gate phases are met, so the best restart is the
// T_R-optimal one.
inline std::vector<GeometryPoint> geometry_sweep(double v_nn,
                                                 const std::vector<double>& v_nnn_list,
                                                 const TargetGate& target, double gamma,
                                                 OptimizerConfig cfg,
                                                 ScanWriter* sink = nullptr) {
    if (target.n_qubits != 3)
        throw ConfigError("geometry_sweep is defined for three-qubit targets");
    cfg.selection = SelectionRule::min_infidelity;
    Objective obj;
    obj.target = target;
    obj.gamma = gamma;
    const std::uint64_t base_seed = cfg.seed;
    std::vector<GeometryPoint> out;
    out.reserve(v_nnn_list.size());
    for (std::size_t k = 0; k < v_nnn_list.size(); ++k) {
        const int idx = static_cast<int>(k);
        if (sink && sink->has(idx)) {
            const auto f = detail::split_csv_row(sink->row(idx));
            if (f.size() != 4) throw ConfigError("corrupt geometry-sweep row");
            out.push_back({f[0], std::isnan(f[1]), f[1], f[2], f[3]});
            continue;
        }
        const double v_nnn = v_nnn_list[k];
        InteractionMatrix mat;
        mat.n_atoms = 3;
        mat.v = {0.0, v_nn, v_nnn, v_nn, 0.0, v_nn, v_nnn, v_nn, 0.0};
        mat.validate();
        cfg.seed = derive_seed(base_seed, idx);
        const CampaignResult res = run_campaign(mat, obj, cfg);
        GeometryPoint pt;
        pt.v_nnn = v_nnn;
        if (res.best_index < 0) {
            pt.no_solution = true;
            pt.best_TR = pt.best_infid = pt.theta_prime = nan_value();
        } else {
            const auto& rec = res.best().record;
            pt.best_TR = rec.rydberg_time;
            pt.best_infid = rec.infidelity;
            pt.theta_prime = nan_value();
            for (const auto& [name, value] : rec.free_values)
                if (name == "theta_prime") pt.theta_prime = value;
            if (std::isnan(pt.theta_prime) && target.g3 && target.g3->theta_prime)
                pt.theta_prime = *target.g3->theta_prime;
        }
        if (sink)
            sink->put(idx, fmt_double(pt.v_nnn) + "," + fmt_double(pt.best_TR) + "," +
                               fmt_double(pt.best_infid) + "," +
                               fmt_double(pt.theta_prime));
        out.push_back(pt);
    }
    return out;
}

inline const std::string geometry_sweep_header = "v_nnn,best_TR,best_infid,theta_prime";

// ---------------------------------------------------------------------------
// parameter-count sweep

struct ParamCountPoint {
    AnsatzKind kind = AnsatzKind::antisymmetric;
    int k_terms = 0;
    int n_params = 0;
    bool no_solution = false;
    double best_T = 0.0;
    double best_TR = 0.0;
    double best_infid = 0.0;
};

// One campaign per (ansatz family, K). Selection comes from the config:
// min_duration for time-optimal sweeps, min_infidelity (with gamma > 0) for
// Rydberg-time-optimal ones.
inline std::vector<ParamCountPoint> param_count_sweep(
    const InteractionMatrix& mat, const TargetGate& target, double gamma,
    const std::vector<std::pair<AnsatzKind, int>>& ks, OptimizerConfig cfg,
    ScanWriter* sink = nullptr) {
    Objective obj;
    obj.target = target;
    obj.gamma = gamma;
    const std::uint64_t base_seed = cfg.seed;
    std::vector<ParamCountPoint> out;
    out.reserve(ks.size());
    for (std::size_t k = 0; k < ks.size(); ++k) {
        const int idx = static_cast<int>(k);
        ParamCountPoint pt;
        pt.kind = ks[k].first;
        pt.k_terms = ks[k].second;
        pt.n_params = param_count(pt.kind, pt.k_terms);
        if (sink && sink->has(idx)) {
            const auto& row = sink->row(idx);
            const std::size_t comma = row.find(',');
            if (comma == std::string::npos) throw ConfigError("corrupt param-sweep row");
            const auto f = detail::split_csv_row(row.substr(comma + 1));
            if (f.size() != 5) throw ConfigError("corrupt param-sweep row");
            pt.no_solution = std::isnan(f[2]);
            pt.best_T = f[2];
            pt.best_TR = f[3];
            pt.best_infid = f[4];
            out.push_back(pt);
            continue;
        }
        cfg.kind = pt.kind;
        cfg.k_terms = pt.k_terms;
        cfg.seed = derive_seed(base_seed, idx);
        const CampaignResult res = run_campaign(mat, obj, cfg);
        if (res.best_index < 0) {
            pt.no_solution = true;
            pt.best_T = pt.best_TR = pt.best_infid = nan_value();
        } else {
            const auto& rec = res.best().record;
            pt.best_T = rec.duration;
            pt.best_TR = rec.rydberg_time;
            pt.best_infid = rec.infidelity;
        }
        if (sink)
            sink->put(idx, std::string(to_string(pt.kind)) + "," +
                               std::to_string(pt.k_terms) + "," +
                               std::to_string(pt.n_params) + "," + fmt_double(pt.best_T) +
                               "," + fmt_double(pt.best_TR) + "," +
                               fmt_double(pt.best_infid));
        out.push_back(pt);
    }
    return out;
}

inline const std::string param_count_sweep_header =
    "ansatz,K,param_count,best_T,best_TR,best_infid";

}  // namespace rydpulse
