#pragma once

// Propagation of the blockaded dynamics, block by block, in rescaled time
// s = t/T. The generator of block evolution is
//
//   d psi / ds = -i T [ C(xi(s)) + Delta_0 n_r + V_diag - (i/2) gamma n_r ] psi
//
// with C(xi) carrying 1/2 e^{+i xi} on every |...r...><...1...| coupling.
// Rydberg-state decay enters as the non-Hermitian -(i/2) gamma n_r term, so
// norms are non-increasing for gamma > 0 and conserved for gamma = 0.
// Forward sensitivities for the canonical pulse parameters are co-integrated
// on request; the duration column uses log T (dH/dlogT = H exactly in s).
// The Rydberg time T_R = integral of sum_i <r_i|rho|r_i> accumulates alongside.

#include <cmath>
#include <complex>
#include <vector>

#include "rydpulse/blocks.hpp"
#include "rydpulse/common.hpp"
#include "rydpulse/geometry.hpp"
#include "rydpulse/ode.hpp"
#include "rydpulse/pulse.hpp"

namespace rydpulse {

inline void check_tolerance(double tol) {
    if (!(tol >= 1e-14 && tol <= 1e-6))
        throw ConfigError("integration tolerance must lie in [1e-14, 1e-6]");
}

namespace detail {

struct BlockRhs {
    const Block* blk;
    AnsatzEval eval;
    double T;
    double d0;
    double gamma;
    int n_params;  // 0: state only; else canonical count (col 0 of sens = log T)
    mutable cvec a_work, b_work;  // per-coupling phase-derivative sources

    BlockRhs(const Block& b, const PulseSpec& p, double gamma_, int n_params_)
        : blk(&b),
          eval(p),
          T(p.duration),
          d0(p.detuning0),
          gamma(gamma_),
          n_params(n_params_),
          a_work(b.couplings.size()),
          b_work(b.couplings.size()) {}

    std::size_t state_size() const {
        return static_cast<std::size_t>(blk->dim()) * (1 + n_params) + 1;
    }

    void operator()(double s, const cvec& y, cvec& dy) const {
        const int dim = blk->dim();
        const int cols = 1 + n_params;
        const double xi = eval.xi(s);
        const std::complex<double> e(0.5 * std::cos(xi), 0.5 * std::sin(xi));
        const std::complex<double> ec = std::conj(e);

        for (int col = 0; col < cols; ++col) {
            const std::complex<double>* src = y.data() + static_cast<std::size_t>(col) * dim;
            std::complex<double>* dst = dy.data() + static_cast<std::size_t>(col) * dim;
            for (int j = 0; j < dim; ++j)
                dst[j] = std::complex<double>(d0 * blk->nr_diag[j] + blk->v_diag[j],
                                              -0.5 * gamma * blk->nr_diag[j]) *
                         src[j];
            for (const auto& [lo, up] : blk->couplings) {
                dst[up] += e * src[lo];
                dst[lo] += ec * src[up];
            }
        }

        const std::complex<double>* psi = y.data();
        if (n_params > 0) {
            // phase-derivative coupling applied to psi, shared by all xi-dependent columns
            const std::complex<double> ie(-e.imag(), e.real());
            for (std::size_t q = 0; q < blk->couplings.size(); ++q) {
                const auto& [lo, up] = blk->couplings[q];
                a_work[q] = ie * psi[lo];
                b_work[q] = std::conj(ie) * psi[up];
            }
            // log T column: dH/dlogT = H, plus the absorbed-linear-phase piece
            {
                std::complex<double>* dst = dy.data() + dim;
                for (int j = 0; j < dim; ++j) dst[j] += dy[j];  // dy[0..dim) = H psi here
                const double dxi_u = eval.linear_phase * T * s;
                if (dxi_u != 0.0)
                    for (std::size_t q = 0; q < blk->couplings.size(); ++q) {
                        const auto& [lo, up] = blk->couplings[q];
                        dst[up] += dxi_u * a_work[q];
                        dst[lo] += dxi_u * b_work[q];
                    }
            }
            // Delta_0 column
            if (n_params > 1) {
                std::complex<double>* dst = dy.data() + 2 * dim;
                for (int j = 0; j < dim; ++j)
                    dst[j] += static_cast<double>(blk->nr_diag[j]) * psi[j];
            }
            // ansatz columns
            for (int p = 2; p < n_params; ++p) {
                const double xp = eval.dxi_dparam(p, s);
                if (xp == 0.0) continue;
                std::complex<double>* dst = dy.data() + static_cast<std::size_t>(1 + p) * dim;
                for (std::size_t q = 0; q < blk->couplings.size(); ++q) {
                    const auto& [lo, up] = blk->couplings[q];
                    dst[up] += xp * a_work[q];
                    dst[lo] += xp * b_work[q];
                }
            }
        }

        const std::complex<double> miT(0.0, -T);
        const std::size_t total = static_cast<std::size_t>(dim) * cols;
        for (std::size_t j = 0; j < total; ++j) dy[j] *= miT;

        double nr_pop = 0.0;
        for (int j = 0; j < dim; ++j)
            nr_pop += blk->nr_diag[j] * std::norm(psi[j]);
        dy[total] = std::complex<double>(T * nr_pop, 0.0);
    }
};

}  // namespace detail

struct PropagationResult {
    cvec state;                // final block state, index 0 = the basis state itself
    double rydberg_time = 0.0; // this block's integral of <n_r>
    // d c / d p for the canonical parameters, when requested (natural T, not log T)
    std::vector<std::complex<double>> amplitude_grad;
};

// Propagate one block from its computational configuration. with_sensitivities
// co-integrates d psi / d p for all canonical pulse parameters.
inline PropagationResult propagate_block(const Block& blk, const PulseSpec& pulse, double gamma,
                                         double tol = 1e-12, bool with_sensitivities = false) {
    pulse.validate();
    check_tolerance(tol);
    if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
    const int n_params = with_sensitivities ? pulse.param_count() : 0;
    PropagationResult out;
    if (blk.dim() == 1) {  // inert block: no laser coupling, c = 1 throughout
        out.state = {std::complex<double>(1.0, 0.0)};
        out.amplitude_grad.assign(n_params, {0.0, 0.0});
        return out;
    }
    detail::BlockRhs rhs(blk, pulse, gamma, n_params);
    cvec y(rhs.state_size(), {0.0, 0.0});
    y[0] = 1.0;
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    integrate_dopri5(rhs, y, 0.0, 1.0, opt);
    const int dim = blk.dim();
    out.state.assign(y.begin(), y.begin() + dim);
    out.rydberg_time = y[static_cast<std::size_t>(dim) * (1 + n_params)].real();
    if (with_sensitivities) {
        out.amplitude_grad.resize(n_params);
        for (int p = 0; p < n_params; ++p)
            out.amplitude_grad[p] = y[static_cast<std::size_t>(1 + p) * dim];
        out.amplitude_grad[0] /= pulse.duration;  // log T column -> d/dT
    }
    return out;
}

struct SimulationResult {
    int n_qubits = 0;
    double duration = 0.0;
    std::vector<std::complex<double>> amplitudes;  // c_b for every basis state
    std::vector<double> block_norm;                // final norm of each block state
    double rydberg_time = 0.0;                     // 2^-N sum over basis states
};

struct SimulationSensitivities {
    SimulationResult base;
    // amplitude_grad[b][p] = d c_b / d p in canonical parameter order
    std::vector<std::vector<std::complex<double>>> amplitude_grad;
};

namespace detail {

inline SimulationSensitivities simulate_impl(const InteractionMatrix& mat,
                                             const PulseSpec& pulse, double gamma, double tol,
                                             bool with_sens, bool use_dedup) {
    pulse.validate();
    mat.validate();
    check_tolerance(tol);
    if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
    BlockSet set;
    if (use_dedup) {
        set = dedup_blocks(mat);
    } else {
        set.n_atoms = mat.n_atoms;
        const std::uint32_t dim = 1u << mat.n_atoms;
        set.class_of.resize(dim);
        for (std::uint32_t b = 0; b < dim; ++b) {
            set.class_of[b] = static_cast<int>(b);
            set.blocks.push_back(build_block(mat, b));
            set.multiplicity.push_back(1);
        }
    }
    std::vector<PropagationResult> results(set.blocks.size());
    for (std::size_t k = 0; k < set.blocks.size(); ++k)
        results[k] = propagate_block(set.blocks[k], pulse, gamma, tol, with_sens);

    SimulationSensitivities out;
    const std::uint32_t dim = 1u << mat.n_atoms;
    out.base.n_qubits = mat.n_atoms;
    out.base.duration = pulse.duration;
    out.base.amplitudes.resize(dim);
    out.base.block_norm.resize(dim);
    if (with_sens) out.amplitude_grad.resize(dim);
    double tr = 0.0;
    for (std::uint32_t b = 0; b < dim; ++b) {
        const auto& r = results[static_cast<std::size_t>(set.class_of[b])];
        out.base.amplitudes[b] = r.state[0];
        double n2 = 0.0;
        for (const auto& a : r.state) n2 += std::norm(a);
        out.base.block_norm[b] = std::sqrt(n2);
        tr += r.rydberg_time;
        if (with_sens) out.amplitude_grad[b] = r.amplitude_grad;
    }
    out.base.rydberg_time = tr / static_cast<double>(dim);
    return out;
}

}  // namespace detail

inline SimulationResult simulate_pulse(const InteractionMatrix& mat, const PulseSpec& pulse,
                                       double gamma = 0.0, double tol = 1e-12,
                                       bool use_dedup = true) {
    return detail::simulate_impl(mat, pulse, gamma, tol, false, use_dedup).base;
}

inline SimulationSensitivities simulate_with_sensitivities(const InteractionMatrix& mat,
                                                           const PulseSpec& pulse,
                                                           double gamma = 0.0,
                                                           double tol = 1e-12) {
    return detail::simulate_impl(mat, pulse, gamma, tol, true, true);
}

struct BlockTrajectory {
    std::vector<double> t;        // Omega_0 t sample times
    std::vector<double> norm;     // state norm (non-increasing for gamma > 0)
    std::vector<double> rydberg;  // <n_r>
};

inline BlockTrajectory block_trajectory(const Block& blk, const PulseSpec& pulse, double gamma,
                                        double tol, int n_samples) {
    pulse.validate();
    check_tolerance(tol);
    if (n_samples < 2) throw ConfigError("block_trajectory: need at least 2 samples");
    detail::BlockRhs rhs(blk, pulse, gamma, 0);
    cvec y(rhs.state_size(), {0.0, 0.0});
    y[0] = 1.0;
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    BlockTrajectory tr;
    const int dim = blk.dim();
    auto record = [&](double s) {
        double n2 = 0.0, nr = 0.0;
        for (int j = 0; j < dim; ++j) {
            n2 += std::norm(y[j]);
            nr += blk.nr_diag[j] * std::norm(y[j]);
        }
        tr.t.push_back(s * pulse.duration);
        tr.norm.push_back(std::sqrt(n2));
        tr.rydberg.push_back(nr);
    };
    record(0.0);
    for (int i = 1; i < n_samples; ++i) {
        const double s0 = static_cast<double>(i - 1) / (n_samples - 1);
        const double s1 = static_cast<double>(i) / (n_samples - 1);
        if (dim > 1) integrate_dopri5(rhs, y, s0, s1, opt);
        record(s1);
    }
    return tr;
}

// Full 3^N product-space simulation; test oracle for the block decomposition.
// Perfect blockade (or any infinite entry) is approximated by V = 1e6 here,
// which is why cross-checks against it carry loose tolerances.
inline SimulationResult brute_force_simulate(const InteractionMatrix& mat,
                                             const PulseSpec& pulse, double gamma = 0.0,
                                             double tol = 1e-12) {
    pulse.validate();
    mat.validate();
    check_tolerance(tol);
    if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
    const int N = mat.n_atoms;
    if (N > 4) throw ConfigError("brute_force_simulate: supported only for N <= 4");
    int dim3 = 1;
    std::vector<int> pow3(N + 1, 1);
    for (int i = 0; i < N; ++i) {
        dim3 *= 3;
        pow3[i + 1] = dim3;
    }
    const double v_big = 1e6;
    std::vector<double> vdiag(dim3, 0.0);
    std::vector<double> nr(dim3, 0.0);
    std::vector<std::pair<int, int>> pairs;  // (digit-1 state, digit-2 state)
    for (int s = 0; s < dim3; ++s) {
        for (int i = 0; i < N; ++i) {
            const int di = (s / pow3[i]) % 3;
            if (di == 1) pairs.emplace_back(s, s + pow3[i]);
            if (di != 2) continue;
            nr[s] += 1.0;
            for (int j = 0; j < i; ++j) {
                const int dj = (s / pow3[j]) % 3;
                if (dj != 2) continue;
                vdiag[s] += mat.infinite(i, j) ? v_big : mat(i, j);
            }
        }
    }
    const AnsatzEval eval(pulse);
    const double T = pulse.duration, d0 = pulse.detuning0;
    auto rhs = [&](double s, const cvec& y, cvec& dy) {
        const double xi = eval.xi(s);
        const std::complex<double> e(0.5 * std::cos(xi), 0.5 * std::sin(xi));
        const std::complex<double> ec = std::conj(e);
        for (int j = 0; j < dim3; ++j)
            dy[j] = std::complex<double>(d0 * nr[j] + vdiag[j], -0.5 * gamma * nr[j]) * y[j];
        for (const auto& [lo, up] : pairs) {
            dy[up] += e * y[lo];
            dy[lo] += ec * y[up];
        }
        const std::complex<double> miT(0.0, -T);
        for (int j = 0; j < dim3; ++j) dy[j] *= miT;
        double pop = 0.0;
        for (int j = 0; j < dim3; ++j) pop += nr[j] * std::norm(y[j]);
        dy[dim3] = std::complex<double>(T * pop, 0.0);
    };

    SimulationResult out;
    out.n_qubits = N;
    out.duration = T;
    const std::uint32_t dim2 = 1u << N;
    out.amplitudes.resize(dim2);
    out.block_norm.resize(dim2);
    double tr = 0.0;
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    for (std::uint32_t b = 0; b < dim2; ++b) {
        int s0 = 0;
        for (int i = 0; i < N; ++i)
            if (b & (1u << i)) s0 += pow3[i];
        cvec y(static_cast<std::size_t>(dim3) + 1, {0.0, 0.0});
        y[static_cast<std::size_t>(s0)] = 1.0;
        integrate_dopri5(rhs, y, 0.0, 1.0, opt);
        out.amplitudes[b] = y[static_cast<std::size_t>(s0)];
        double n2 = 0.0;
        for (int j = 0; j < dim3; ++j) n2 += std::norm(y[j]);
        out.block_norm[b] = std::sqrt(n2);
        tr += y[static_cast<std::size_t>(dim3)].real();
    }
    out.rydberg_time = tr / static_cast<double>(dim2);
    return out;
}

}  // namespace rydpulse
