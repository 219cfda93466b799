#pragma once

// Gate-fidelity objective. With every block amplitude c_b on the diagonal,
//
//   F = | 2^-N sum_b e^{-i theta_b} c_b |^2
//
// where theta_b carries the target phases plus the free parameters (the
// homogeneous single-qubit phase phi, and theta' when the target leaves it
// free). Free parameters are maximized in closed form at evaluation time
// (coarse grid + damped Newton); during optimization they ride along as extra
// optimization variables. Analytic parameter gradients come from the forward
// sensitivities of the block propagation.

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rydpulse/common.hpp"
#include "rydpulse/dynamics.hpp"
#include "rydpulse/geometry.hpp"
#include "rydpulse/pulse.hpp"
#include "rydpulse/targets.hpp"

namespace rydpulse {

enum class ObjectiveMode { maximize_fidelity, minimize_time_regularized };

struct Objective {
    TargetGate target;
    double gamma = 0.0;  // Rydberg decay rate / Omega_0
    ObjectiveMode mode = ObjectiveMode::maximize_fidelity;
    double duration_penalty = 0.0;  // weight on Omega_0 T (regularized mode only)

    void validate() const {
        if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
        if (duration_penalty < 0.0) throw ConfigError("duration penalty must be >= 0");
        if (target.n_qubits < 2) throw ConfigError("target must act on at least 2 qubits");
    }
};

// F at given free-parameter values; amps must hold all 2^N diagonal amplitudes.
inline double fidelity(const std::vector<std::complex<double>>& amps, const TargetGate& t,
                       const std::vector<double>& free_values) {
    if (static_cast<int>(amps.size()) != t.dim())
        throw ConfigError("fidelity: amplitude count does not match target dimension");
    if (static_cast<int>(free_values.size()) != t.free_param_count())
        throw ConfigError("fidelity: wrong number of free parameter values");
    std::complex<double> z(0.0, 0.0);
    for (std::uint32_t b = 0; b < amps.size(); ++b) {
        const double th = t.phase(b, free_values);
        z += std::complex<double>(std::cos(th), -std::sin(th)) * amps[b];
    }
    z /= static_cast<double>(amps.size());
    return std::norm(z);
}

namespace detail {

// Amplitudes grouped by their free-parameter coefficients (w(b), tp_coeff(b)):
// z(phi, tp) = sum_g Y_g exp(-i (phi a_g + tp b_g)).
struct FreePhaseGroups {
    std::vector<std::complex<double>> Y;
    std::vector<double> a, b;

    FreePhaseGroups(const std::vector<std::complex<double>>& amps, const TargetGate& t) {
        std::map<std::pair<int, int>, std::size_t> idx;
        for (std::uint32_t s = 0; s < amps.size(); ++s) {
            const int w = popcount32(s);
            const int tp = t.theta_prime_free ? static_cast<int>(t.tp_coeff[s]) : 0;
            auto [it, fresh] = idx.try_emplace({w, tp}, Y.size());
            if (fresh) {
                Y.emplace_back(0.0, 0.0);
                a.push_back(w);
                b.push_back(tp);
            }
            const double th = t.base_phase[s];
            Y[it->second] += std::complex<double>(std::cos(th), -std::sin(th)) * amps[s] /
                             static_cast<double>(amps.size());
        }
    }

    std::complex<double> z(double phi, double tp) const {
        std::complex<double> v(0.0, 0.0);
        for (std::size_t g = 0; g < Y.size(); ++g) {
            const double th = phi * a[g] + tp * b[g];
            v += Y[g] * std::complex<double>(std::cos(th), -std::sin(th));
        }
        return v;
    }
    // z and its first/second derivatives in (phi, tp)
    void derivs(double phi, double tp, std::complex<double> out[6]) const {
        for (int k = 0; k < 6; ++k) out[k] = {0.0, 0.0};
        for (std::size_t g = 0; g < Y.size(); ++g) {
            const double th = phi * a[g] + tp * b[g];
            const std::complex<double> e =
                Y[g] * std::complex<double>(std::cos(th), -std::sin(th));
            const std::complex<double> ia(0.0, -a[g]), ib(0.0, -b[g]);
            out[0] += e;
            out[1] += ia * e;
            out[2] += ib * e;
            out[3] += ia * ia * e;
            out[4] += ia * ib * e;
            out[5] += ib * ib * e;
        }
    }
};

}  // namespace detail

struct FreePhaseMax {
    double fidelity = 0.0;
    std::vector<double> values;  // {phi [, theta_prime]}
};

// Maximize F over the free phases: coarse grid, then damped Newton on |z|^2.
inline FreePhaseMax maximize_free_phases(const std::vector<std::complex<double>>& amps,
                                         const TargetGate& t) {
    detail::FreePhaseGroups gr(amps, t);
    const bool two = t.theta_prime_free;
    const int n1 = 256, n2 = two ? 128 : 1;
    double best_phi = 0.0, best_tp = 0.0, best = -1.0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const double phi = 2.0 * pi * i / n1;
            const double tp = 2.0 * pi * j / n2;
            const double f = std::norm(gr.z(phi, tp));
            if (f > best) {
                best = f;
                best_phi = phi;
                best_tp = tp;
            }
        }
    // damped Newton; the 2x2 system degenerates to 1D when theta' is fixed
    std::complex<double> d[6];
    for (int it = 0; it < 80; ++it) {
        gr.derivs(best_phi, best_tp, d);
        const auto& z = d[0];
        const double g1 = 2.0 * std::real(std::conj(z) * d[1]);
        const double g2 = two ? 2.0 * std::real(std::conj(z) * d[2]) : 0.0;
        const double h11 = 2.0 * (std::real(std::conj(z) * d[3]) + std::norm(d[1]));
        const double h12 = 2.0 * (std::real(std::conj(z) * d[4]) +
                                  std::real(std::conj(d[2]) * d[1]));
        const double h22 = two ? 2.0 * (std::real(std::conj(z) * d[5]) + std::norm(d[2])) : 1.0;
        double s1, s2;
        const double det = h11 * h22 - h12 * h12;
        if (two && std::abs(det) > 1e-300) {
            s1 = (h22 * g1 - h12 * g2) / det;
            s2 = (h11 * g2 - h12 * g1) / det;
        } else if (std::abs(h11) > 1e-300) {
            s1 = g1 / h11;
            s2 = 0.0;
        } else {
            break;
        }
        double step = 1.0;
        const double f0 = std::norm(z);
        bool moved = false;
        for (int half = 0; half < 40; ++half) {
            const double p = best_phi - step * s1, q = best_tp - step * s2;
            if (std::norm(gr.z(p, q)) >= f0) {
                best_phi = p;
                best_tp = q;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved || (std::abs(g1) + std::abs(g2)) < 1e-16) break;
    }
    FreePhaseMax out;
    out.fidelity = std::norm(gr.z(best_phi, best_tp));
    out.values = {wrap_angle(best_phi)};
    if (two) out.values.push_back(wrap_angle(best_tp));
    return out;
}

struct EvaluationRecord {
    double fidelity = 0.0;
    double infidelity = 1.0;
    double rydberg_time = 0.0;
    double duration = 0.0;
    double cost = 1.0;
    std::vector<std::pair<std::string, double>> free_values;
    SimulationResult sim;
};

inline double objective_cost(const Objective& obj, double fidelity_value, double duration) {
    double c = 1.0 - fidelity_value;
    if (obj.mode == ObjectiveMode::minimize_time_regularized)
        c += obj.duration_penalty * duration;
    return c;
}

// Simulate + maximize free phases; the canonical fixed-pulse evaluation.
inline EvaluationRecord evaluate(const InteractionMatrix& mat, const PulseSpec& pulse,
                                 const Objective& obj, double tol = 1e-12) {
    obj.validate();
    if (mat.n_atoms != obj.target.n_qubits)
        throw ConfigError("geometry and target disagree on atom count");
    EvaluationRecord rec;
    rec.sim = simulate_pulse(mat, pulse, obj.gamma, tol);
    const FreePhaseMax m = maximize_free_phases(rec.sim.amplitudes, obj.target);
    rec.fidelity = m.fidelity;
    rec.infidelity = 1.0 - m.fidelity;
    rec.rydberg_time = rec.sim.rydberg_time;
    rec.duration = pulse.duration;
    rec.cost = objective_cost(obj, m.fidelity, pulse.duration);
    const auto names = obj.target.free_param_names();
    for (std::size_t i = 0; i < names.size(); ++i) rec.free_values.emplace_back(names[i], m.values[i]);
    return rec;
}

struct CostGradient {
    double cost = 0.0;
    double fidelity = 0.0;
    double rydberg_time = 0.0;
    std::vector<double> grad;  // d cost / d (pulse params..., free params...)
};

// Cost and analytic gradient of the joint (pulse, free-phase) parameter vector
// at fixed free values. d c_b / d p comes from forward sensitivities; free-
// phase derivatives are closed-form.
inline CostGradient cost_and_gradient(const InteractionMatrix& mat, const PulseSpec& pulse,
                                      const Objective& obj,
                                      const std::vector<double>& free_values,
                                      double tol = 1e-12) {
    obj.validate();
    if (mat.n_atoms != obj.target.n_qubits)
        throw ConfigError("geometry and target disagree on atom count");
    const TargetGate& t = obj.target;
    if (static_cast<int>(free_values.size()) != t.free_param_count())
        throw ConfigError("cost_and_gradient: wrong number of free parameter values");
    const auto sens = simulate_with_sensitivities(mat, pulse, obj.gamma, tol);
    const int np = pulse.param_count();
    const int nf = t.free_param_count();
    const std::uint32_t dim = 1u << mat.n_atoms;
    const double inv_dim = 1.0 / static_cast<double>(dim);

    std::complex<double> z(0.0, 0.0);
    std::vector<std::complex<double>> dz(static_cast<std::size_t>(np) + nf, {0.0, 0.0});
    for (std::uint32_t b = 0; b < dim; ++b) {
        const double th = t.phase(b, free_values);
        const std::complex<double> ph(std::cos(th), -std::sin(th));
        z += ph * sens.base.amplitudes[b] * inv_dim;
        for (int p = 0; p < np; ++p) dz[p] += ph * sens.amplitude_grad[b][p] * inv_dim;
        const std::complex<double> mi(0.0, -1.0);
        dz[np] += mi * static_cast<double>(popcount32(b)) * ph * sens.base.amplitudes[b] *
                  inv_dim;
        if (nf > 1)
            dz[np + 1] += mi * t.tp_coeff[b] * ph * sens.base.amplitudes[b] * inv_dim;
    }
    CostGradient out;
    out.fidelity = std::norm(z);
    out.rydberg_time = sens.base.rydberg_time;
    out.cost = objective_cost(obj, out.fidelity, pulse.duration);
    out.grad.resize(dz.size());
    for (std::size_t p = 0; p < dz.size(); ++p)
        out.grad[p] = -2.0 * std::real(std::conj(z) * dz[p]);
    if (obj.mode == ObjectiveMode::minimize_time_regularized)
        out.grad[0] += obj.duration_penalty;
    return out;
}

}  // namespace rydpulse
