#pragma once

// Multi-start gradient search. Each restart draws an initial point from the
// documented ranges with splitmix64 (stream seed + restart index), runs Adam
// on the internal coordinates (log T, Delta_0, ansatz params, free phases),
// then polishes with damped BFGS on the same analytic gradient. Free phases
// are plain optimization variables here; the final record re-maximizes them
// in closed form. Results are bit-deterministic for a given (config, seed)
// and independent of the number of worker threads, because every restart owns
// its PRNG stream and results are committed by index.
//
// Time-optimal search = maximize F with T free, then select the minimal
// duration among converged restarts (infidelity below the configured
// threshold). Rydberg-time-optimal search = the same with gamma > 0 and
// min-infidelity selection, since 1-F tracks gamma*T_R once the gate phases
// are met.

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "rydpulse/common.hpp"
#include "rydpulse/geometry.hpp"
#include "rydpulse/objective.hpp"
#include "rydpulse/pulse.hpp"

namespace rydpulse {

struct AdamSettings {
    double step = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_iters = 2000;
    int decay_interval = 500;  // step *= decay_factor every decay_interval iterations
    double decay_factor = 0.5;
};

struct InitRanges {
    double duration_lo = 0.0, duration_hi = 0.0;  // both 0 -> [pi N, 6 pi N]
    double detuning_lo = -2.0, detuning_hi = 2.0;
    double freq_lo = -2.0, freq_hi = 2.0;  // A_n, B_n
    double amp_lo = -pi, amp_hi = pi;      // alpha_n, beta_n, and the free phases
};

enum class SelectionRule { min_duration, min_infidelity };

struct OptimizerConfig {
    AnsatzKind kind = AnsatzKind::antisymmetric;
    int k_terms = 1;
    int restarts = 1;
    std::uint64_t seed = 0;
    int jobs = 1;
    AdamSettings adam;
    InitRanges init;
    double opt_tolerance = 1e-9;     // ODE tolerance while searching
    double final_tolerance = 1e-12;  // ODE tolerance for the reported record
    double converged_infidelity = 1e-7;
    SelectionRule selection = SelectionRule::min_duration;
    bool polish = true;                  // BFGS refinement after Adam
    int polish_max_iters = 100;
    int polish_refine_iters = 25;        // second pass at final_tolerance
    double polish_grad_tol = 1e-10;
    double polish_stop_cost = 1e-10;     // good enough; below this is ODE noise
    double polish_enter_infidelity = 1e-3;  // leave Adam early once this is reached
    // Duration descent (time-optimal searches only: gamma = 0, fidelity
    // objective, min_duration selection): a converged restart repeatedly
    // shrinks T and re-polishes the remaining parameters at fixed T, walking
    // along the F = 1 manifold to its local duration minimum. Without this,
    // plain gradient ascent stops at whatever duration the restart happened
    // to converge at.
    bool t_descent = true;
    double t_descent_step = 0.02;   // initial relative duration decrease
    double t_descent_min_step = 3e-4;  // duration resolution of the descent
    int t_descent_max_steps = 80;
    int t_descent_inner_iters = 25;
    // Adam gives up after plateau_window iterations without a relative cost
    // improvement of at least plateau_rel (kills restarts stuck in bad local
    // optima without burning the full iteration budget).
    int plateau_window = 250;
    double plateau_rel = 0.02;

    void validate() const {
        if (k_terms < 1) throw ConfigError("optimizer: K must be >= 1");
        if (restarts < 1) throw ConfigError("optimizer: restarts must be >= 1");
        if (adam.max_iters < 0 || polish_max_iters < 0)
            throw ConfigError("optimizer: iteration counts must be >= 0");
        if (!(adam.step > 0.0)) throw ConfigError("optimizer: step size must be positive");
    }
};

struct RestartResult {
    int index = 0;
    bool converged = false;
    int adam_iters = 0;
    int polish_iters = 0;
    int descent_steps = 0;
    double grad_norm = 0.0;
    PulseSpec pulse;
    EvaluationRecord record;
    std::string error;  // nonempty if this restart failed numerically

    bool failed() const { return !error.empty(); }
};

struct CampaignResult {
    std::vector<RestartResult> restarts;
    int best_index = -1;  // -1: no admissible result under the selection rule
    double wall_seconds = 0.0;

    const RestartResult& best() const {
        if (best_index < 0) throw NoSolutionError("campaign produced no admissible result");
        return restarts[static_cast<std::size_t>(best_index)];
    }
};

namespace detail {

struct XVector {
    // internal coordinates: [log T, Delta_0, ansatz..., free phases...]
    const OptimizerConfig* cfg;
    int np, nf;

    XVector(const OptimizerConfig& c, const TargetGate& t)
        : cfg(&c), np(param_count(c.kind, c.k_terms)), nf(t.free_param_count()) {}

    int dim() const { return np + nf; }

    // false once the state drifts where exp(log T) over/underflows or picks up
    // a NaN; such a point is a numerical event, never config misuse
    bool representable(const Eigen::VectorXd& x) const {
        const double t = std::exp(x[0]);
        return x.allFinite() && std::isfinite(t) && t > 0.0;
    }

    PulseSpec pulse(const Eigen::VectorXd& x) const {
        if (!representable(x))
            throw SimulationError("optimizer state left the representable parameter range");
        std::vector<double> nat(static_cast<std::size_t>(np));
        nat[0] = std::exp(x[0]);
        for (int i = 1; i < np; ++i) nat[static_cast<std::size_t>(i)] = x[i];
        return unpack_params(cfg->kind, cfg->k_terms, nat);
    }
    std::vector<double> free_values(const Eigen::VectorXd& x) const {
        std::vector<double> f(static_cast<std::size_t>(nf));
        for (int i = 0; i < nf; ++i) f[static_cast<std::size_t>(i)] = x[np + i];
        return f;
    }
    Eigen::VectorXd from(const PulseSpec& p, const std::vector<double>& free_vals) const {
        const auto nat = pack_params(p);
        Eigen::VectorXd x(dim());
        x[0] = std::log(nat[0]);
        for (int i = 1; i < np; ++i) x[i] = nat[static_cast<std::size_t>(i)];
        for (int i = 0; i < nf; ++i) x[np + i] = free_vals[static_cast<std::size_t>(i)];
        return x;
    }
    // natural-parameter gradient -> internal coordinates
    Eigen::VectorXd chain(const std::vector<double>& g, double duration) const {
        Eigen::VectorXd out(dim());
        for (int i = 0; i < dim(); ++i) out[i] = g[static_cast<std::size_t>(i)];
        out[0] *= duration;
        return out;
    }
};

struct CostEvaluator {
    const InteractionMatrix* mat;
    const Objective* obj;
    const XVector* xv;
    double tol;

    double cost(const Eigen::VectorXd& x) const {
        // line searches probe wild trial points; cost them +inf so
        // backtracking recovers instead of failing the restart
        if (!xv->representable(x)) return std::numeric_limits<double>::infinity();
        const PulseSpec p = xv->pulse(x);
        const auto sim = simulate_pulse(*mat, p, obj->gamma, tol);
        const double f = fidelity(sim.amplitudes, obj->target, xv->free_values(x));
        return objective_cost(*obj, f, p.duration);
    }
    double cost_grad(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
        const PulseSpec p = xv->pulse(x);
        const auto cg = cost_and_gradient(*mat, p, *obj, xv->free_values(x), tol);
        g = xv->chain(cg.grad, p.duration);
        return cg.cost;
    }
};

// Damped BFGS with Armijo backtracking; returns iterations used.
template <class Ev>
inline int bfgs_polish(const Ev& ev, Eigen::VectorXd& x, double& fx,
                       Eigen::VectorXd& g, int max_iters, double grad_tol,
                       double stop_cost) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    fx = ev.cost_grad(x, g);
    double checkpoint = fx;
    int it = 0;
    for (; it < max_iters; ++it) {
        if (g.norm() <= grad_tol || fx <= stop_cost) break;
        // stall check: BFGS converges superlinearly when it converges at all,
        // so <1% progress over 10 iterations means a hopeless basin
        if (it > 0 && it % 10 == 0) {
            if (fx > 0.99 * checkpoint) break;
            checkpoint = fx;
        }
        Eigen::VectorXd d = -H * g;
        double gd = g.dot(d);
        if (gd > -1e-18) {  // not a descent direction: reset curvature
            H.setIdentity();
            d = -g;
            gd = g.dot(d);
        }
        double step = 1.0;
        double f_new = fx;
        Eigen::VectorXd x_new;
        bool ok = false;
        for (int half = 0; half < 40; ++half) {
            x_new = x + step * d;
            f_new = ev.cost(x_new);
            if (f_new <= fx + 1e-4 * step * gd) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) break;
        Eigen::VectorXd g_new(n);
        ev.cost_grad(x_new, g_new);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = H * y;
            H += (rho * rho * (y.dot(Hy)) + rho) * (s * s.transpose()) -
                 rho * (Hy * s.transpose() + s * Hy.transpose());
        } else {
            H.setIdentity();
        }
        x = x_new;
        g = g_new;
        fx = f_new;
    }
    return it;
}

// the same cost over x[1..] with x[0] (log T) held fixed
struct FrozenDurationEvaluator {
    const CostEvaluator* ev;
    double x0;

    Eigen::VectorXd expand(const Eigen::VectorXd& xr) const {
        Eigen::VectorXd x(xr.size() + 1);
        x[0] = x0;
        x.tail(xr.size()) = xr;
        return x;
    }
    double cost(const Eigen::VectorXd& xr) const { return ev->cost(expand(xr)); }
    double cost_grad(const Eigen::VectorXd& xr, Eigen::VectorXd& gr) const {
        Eigen::VectorXd g;
        const double c = ev->cost_grad(expand(xr), g);
        gr = g.tail(xr.size());
        return c;
    }
};

// Walk T down along the F = 1 manifold: shrink log T by a trust step, re-polish
// the remaining parameters at fixed T, accept while the gate still converges.
// Returns the number of accepted shrink steps.
inline int duration_descent(const CostEvaluator& ev, const OptimizerConfig& cfg,
                            Eigen::VectorXd& x, double& fx, Eigen::VectorXd& g) {
    const auto n = x.size();
    const double accept_cost = 0.5 * cfg.converged_infidelity;
    double step = cfg.t_descent_step;
    int accepted = 0;
    for (int k = 0; k < cfg.t_descent_max_steps && step > cfg.t_descent_min_step; ++k) {
        FrozenDurationEvaluator fe{&ev, x[0] + std::log1p(-step)};
        Eigen::VectorXd xr = x.tail(n - 1);
        Eigen::VectorXd gr(n - 1);
        double fr = 0.0;
        bfgs_polish(fe, xr, fr, gr, cfg.t_descent_inner_iters, cfg.polish_grad_tol,
                    0.5 * accept_cost);
        if (fr < accept_cost) {
            x[0] = fe.x0;
            x.tail(n - 1) = xr;
            fx = fr;
            ++accepted;
            step = std::min(step * 1.3, 0.05);
        } else {
            step *= 0.4;
        }
    }
    if (accepted > 0) fx = ev.cost_grad(x, g);
    return accepted;
}

}  // namespace detail

inline RestartResult warm_start(const InteractionMatrix& mat, const Objective& obj,
                                const OptimizerConfig& cfg, const PulseSpec& start,
                                std::vector<double> free0 = {}, int index = 0);

// One seeded restart. The initial point draws, in order: T (uniform in the
// duration range, default [pi N, 6 pi N]), Delta_0, then A_k, alpha_k
// [, B_k, beta_k] per term, then phi [, theta'] uniform in the amp range.
inline RestartResult run_restart(const InteractionMatrix& mat, const Objective& obj,
                                 const OptimizerConfig& cfg, int index) {
    cfg.validate();
    obj.validate();
    const detail::XVector xv(cfg, obj.target);
    SplitMix64 rng(cfg.seed + static_cast<std::uint64_t>(index));
    double dlo = cfg.init.duration_lo, dhi = cfg.init.duration_hi;
    if (dlo == 0.0 && dhi == 0.0) {
        dlo = pi * mat.n_atoms;
        dhi = 6.0 * pi * mat.n_atoms;
    }
    PulseSpec p;
    p.kind = cfg.kind;
    p.duration = rng.uniform(dlo, dhi);
    p.detuning0 = rng.uniform(cfg.init.detuning_lo, cfg.init.detuning_hi);
    p.terms.resize(static_cast<std::size_t>(cfg.k_terms));
    for (auto& t : p.terms) {
        t.A = rng.uniform(cfg.init.freq_lo, cfg.init.freq_hi);
        t.alpha = rng.uniform(cfg.init.amp_lo, cfg.init.amp_hi);
        if (cfg.kind == AnsatzKind::general) {
            t.B = rng.uniform(cfg.init.freq_lo, cfg.init.freq_hi);
            t.beta = rng.uniform(cfg.init.amp_lo, cfg.init.amp_hi);
        }
    }
    std::vector<double> free0(static_cast<std::size_t>(xv.nf));
    for (auto& f : free0) f = rng.uniform(cfg.init.amp_lo, cfg.init.amp_hi);
    return warm_start(mat, obj, cfg, p, free0, index);
}

// Locally optimize from a given starting pulse (Adam then BFGS polish).
inline RestartResult warm_start(const InteractionMatrix& mat, const Objective& obj,
                                const OptimizerConfig& cfg, const PulseSpec& start,
                                std::vector<double> free0, int index) {
    cfg.validate();
    obj.validate();
    start.validate();
    if (start.kind != cfg.kind || start.k_terms() != cfg.k_terms)
        throw ConfigError("warm_start: pulse does not match the configured ansatz kind/K");
    if (start.linear_phase != 0.0)
        throw ConfigError("warm_start: absorbed-detuning pulses are not optimizable");
    RestartResult res;
    res.index = index;
    try {
        if (free0.empty())
            free0 = maximize_free_phases(
                        simulate_pulse(mat, start, obj.gamma, cfg.opt_tolerance).amplitudes,
                        obj.target)
                        .values;
        const detail::XVector xv(cfg, obj.target);
        if (static_cast<int>(free0.size()) != xv.nf)
            throw ConfigError("warm_start: wrong number of free parameter values");
        detail::CostEvaluator ev{&mat, &obj, &xv, cfg.opt_tolerance};
        Eigen::VectorXd x = xv.from(start, free0);
        Eigen::VectorXd g(xv.dim());

        // Adam phase
        Eigen::VectorXd m = Eigen::VectorXd::Zero(xv.dim());
        Eigen::VectorXd v = Eigen::VectorXd::Zero(xv.dim());
        double fx = 0.0;
        double best_cost = 1e300;
        int best_iter = 0;
        Eigen::VectorXd best_x = x;
        int it = 0;
        for (; it < cfg.adam.max_iters; ++it) {
            fx = ev.cost_grad(x, g);
            if (fx < best_cost) {
                if (fx < best_cost * (1.0 - cfg.plateau_rel)) best_iter = it;
                best_cost = fx;
                best_x = x;
            }
            if (fx < cfg.polish_enter_infidelity) break;
            if (it - best_iter >= cfg.plateau_window) break;
            const double lr =
                cfg.adam.step *
                std::pow(cfg.adam.decay_factor,
                         static_cast<double>(it / std::max(1, cfg.adam.decay_interval)));
            m = cfg.adam.beta1 * m + (1.0 - cfg.adam.beta1) * g;
            v = cfg.adam.beta2 * v + (1.0 - cfg.adam.beta2) * g.cwiseProduct(g);
            const double bc1 = 1.0 - std::pow(cfg.adam.beta1, it + 1);
            const double bc2 = 1.0 - std::pow(cfg.adam.beta2, it + 1);
            for (int i = 0; i < xv.dim(); ++i)
                x[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam.epsilon);
        }
        res.adam_iters = it;
        if (!(fx <= best_cost)) {  // also restores from a NaN cost
            x = best_x;
            fx = best_cost;
        }

        // BFGS polish at search tolerance, then a short pass at final tolerance
        if (cfg.polish) {
            res.polish_iters =
                detail::bfgs_polish(ev, x, fx, g, cfg.polish_max_iters,
                                    cfg.polish_grad_tol, cfg.polish_stop_cost);
            const bool time_optimal_search =
                cfg.t_descent && cfg.selection == SelectionRule::min_duration &&
                obj.mode == ObjectiveMode::maximize_fidelity && obj.gamma == 0.0;
            if (time_optimal_search && fx < cfg.converged_infidelity)
                res.descent_steps = detail::duration_descent(ev, cfg, x, fx, g);
            if (fx < 1e-4 && cfg.polish_refine_iters > 0) {
                detail::CostEvaluator ev2{&mat, &obj, &xv, cfg.final_tolerance};
                res.polish_iters += detail::bfgs_polish(
                    ev2, x, fx, g, cfg.polish_refine_iters, cfg.polish_grad_tol,
                    0.1 * cfg.polish_stop_cost);
            }
            res.grad_norm = g.norm();
        }

        res.pulse = xv.pulse(x);
        res.record = evaluate(mat, res.pulse, obj, cfg.final_tolerance);
        res.converged = res.record.infidelity < cfg.converged_infidelity;
    } catch (const ConfigError&) {
        throw;  // misuse, not a numerical failure
    } catch (const std::exception& e) {
        res.error = e.what();
        res.converged = false;
        res.record = EvaluationRecord{};
        res.record.duration = start.duration;
    }
    return res;
}

// Seeded multi-start campaign; deterministic for fixed (config, seed).
inline CampaignResult run_campaign(const InteractionMatrix& mat, const Objective& obj,
                                   const OptimizerConfig& cfg) {
    cfg.validate();
    obj.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CampaignResult out;
    out.restarts.resize(static_cast<std::size_t>(cfg.restarts));
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (int i = 0; i < cfg.restarts; ++i)
            out.restarts[static_cast<std::size_t>(i)] = run_restart(mat, obj, cfg, i);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= cfg.restarts) return;
                out.restarts[static_cast<std::size_t>(i)] = run_restart(mat, obj, cfg, i);
            }
        };
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (int i = 0; i < cfg.restarts; ++i) {
        const auto& r = out.restarts[static_cast<std::size_t>(i)];
        if (r.failed()) continue;
        if (cfg.selection == SelectionRule::min_duration) {
            if (!r.converged) continue;
            if (out.best_index < 0 ||
                r.record.duration <
                    out.restarts[static_cast<std::size_t>(out.best_index)].record.duration)
                out.best_index = i;
        } else {
            if (out.best_index < 0 ||
                r.record.infidelity <
                    out.restarts[static_cast<std::size_t>(out.best_index)].record.infidelity)
                out.best_index = i;
        }
    }
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace rydpulse
