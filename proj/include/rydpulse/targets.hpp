#pragma once

// Diagonal target gates. A global laser cannot distinguish atoms, so every
// qubit acquires the same single-qubit phase phi; phi is therefore a free
// parameter of every target. Three-qubit targets in a two-distance geometry
// (apex atom = index 1, the one with two nearest neighbours) follow the
// G3(theta, theta', lambda) parameterization:
//
//   phase(b) = phi * w(b) + theta ([b0 b1] + [b1 b2]) + theta' [b0 b2] + lambda [b0 b1 b2]
//
// theta' may itself be free (realized value recovered at evaluation time).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rydpulse/common.hpp"
#include "rydpulse/geometry.hpp"

namespace rydpulse {

inline double wrap_angle(double a) {  // into (-pi, pi]
    a = std::fmod(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    if (a > pi) a -= 2.0 * pi;
    return a;
}

struct G3Params {
    double theta = 0.0;
    std::optional<double> theta_prime;  // nullopt -> free
    double lambda = 0.0;
};

struct TargetGate {
    std::string name;
    int n_qubits = 0;
    std::vector<double> base_phase;  // per basis state b, at phi = 0 (and theta' = 0 if free)
    std::vector<double> tp_coeff;    // coefficient of a free theta' per basis state
    bool theta_prime_free = false;
    std::optional<G3Params> g3;      // set for G3-structured targets (feasibility checks)

    int dim() const { return 1 << n_qubits; }
    int free_param_count() const { return 1 + (theta_prime_free ? 1 : 0); }
    std::vector<std::string> free_param_names() const {
        if (theta_prime_free) return {"phi", "theta_prime"};
        return {"phi"};
    }

    // theta_b for given free-parameter values; free = {phi [, theta_prime]}
    double phase(std::uint32_t b, const std::vector<double>& free_values) const {
        double th = base_phase[b] + free_values[0] * popcount32(b);
        if (theta_prime_free) th += free_values[1] * tp_coeff[b];
        return th;
    }
};

// Phases of G3(theta, theta', lambda) for all 8 three-qubit basis states at
// given phi. Bit i of b = atom i; apex atom is index 1.
inline std::vector<double> g3_phases(double theta, double theta_prime, double lambda,
                                     double phi) {
    std::vector<double> ph(8, 0.0);
    for (std::uint32_t b = 0; b < 8; ++b) {
        double v = phi * popcount32(b);
        if ((b & 0b011) == 0b011) v += theta;   // atoms 0,1
        if ((b & 0b110) == 0b110) v += theta;   // atoms 1,2
        if ((b & 0b101) == 0b101) v += theta_prime;
        if (b == 0b111) v += lambda;
        ph[b] = v;
    }
    return ph;
}

inline TargetGate make_g3(const G3Params& g) {
    TargetGate t;
    t.n_qubits = 3;
    t.g3 = g;
    t.theta_prime_free = !g.theta_prime.has_value();
    const double tp_fixed = g.theta_prime.value_or(0.0);
    t.base_phase = g3_phases(g.theta, tp_fixed, g.lambda, 0.0);
    t.tp_coeff.assign(8, 0.0);
    if (t.theta_prime_free)
        for (std::uint32_t b = 0; b < 8; ++b)
            if ((b & 0b101) == 0b101) t.tp_coeff[b] = 1.0;
    return t;
}

// Phases that are a function of excitation weight only (fully symmetric gates).
inline TargetGate make_weight_phases(int n_qubits, const std::vector<double>& phase_of_weight) {
    TargetGate t;
    t.n_qubits = n_qubits;
    const std::uint32_t dim = 1u << n_qubits;
    t.base_phase.resize(dim);
    t.tp_coeff.assign(dim, 0.0);
    for (std::uint32_t b = 0; b < dim; ++b) t.base_phase[b] = phase_of_weight[popcount32(b)];
    return t;
}

// Builtin names accepted by configs. The "bar" gates apply a pi on every
// subset of the marked order (C..Z on all pairs/triples), e.g. CCZbar puts pi
// on each two-qubit pair and none on 111; CCCZbar gives weight-2 -> pi,
// weight-3 -> 0, weight-4 -> pi.
inline TargetGate make_builtin(const std::string& name) {
    TargetGate t;
    if (name == "CZ") {
        t = make_weight_phases(2, {0.0, 0.0, pi});
    } else if (name == "CCZ") {
        t = make_g3({0.0, 0.0, pi});
    } else if (name == "CCZbar") {
        t = make_g3({pi, pi, pi});
    } else if (name == "thetaprime_CCZ") {
        t = make_g3({0.0, std::nullopt, pi});
    } else if (name == "thetaprime_CCZbar") {
        t = make_g3({pi, std::nullopt, pi});
    } else if (name == "CZCZCZ") {
        t = make_g3({pi, pi, 0.0});
    } else if (name == "CZCZCZ_thetaprime") {
        t = make_g3({pi, std::nullopt, 0.0});
    } else if (name == "CCCZ") {
        t = make_weight_phases(4, {0.0, 0.0, 0.0, 0.0, pi});
    } else if (name == "CCCZbar") {
        t = make_weight_phases(4, {0.0, 0.0, pi, 0.0, pi});
    } else {
        throw ConfigError("unknown target gate: " + name);
    }
    t.name = name;
    return t;
}

enum class Feasibility { ok, symmetric_theta_prime_conflict };

// A fully symmetric interaction matrix makes all pair blocks identical, so a
// fixed theta' != theta (mod 2pi) cannot be realized there.
inline Feasibility check_feasibility(const TargetGate& t, const InteractionMatrix& m) {
    if (t.g3 && t.g3->theta_prime.has_value() && m.fully_symmetric()) {
        if (std::abs(wrap_angle(*t.g3->theta_prime - t.g3->theta)) > 1e-9)
            return Feasibility::symmetric_theta_prime_conflict;
    }
    return Feasibility::ok;
}

}  // namespace rydpulse
