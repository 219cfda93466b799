#pragma once

// Analytic CRAB phase-modulation ansatz. The drive is Omega(t) = Omega_0 e^{i xi(t)}
// with constant amplitude and, optionally, a constant detuning Delta_0:
//
//   xi(t) = sum_n alpha_n sin(w_n (t - T/2)) + beta_n cos(wb_n (t - T/2))
//   w_n  = (2 pi / T) n (1 + tanh(A_n)/2),  wb_n likewise from B_n
//
// The antisymmetric family keeps only the sine terms, so xi is odd about T/2.
// A pulse with constant detuning Delta_0 implements the same gate as the pulse
// with xi(t) + Delta_0 t and zero detuning (to_detuning_form); linear_phase and
// phase_offset carry that absorbed form. Canonical parameter order is
// (T, Delta_0, A_1, alpha_1, [B_1, beta_1,] A_2, ...) giving 2+2K or 2+4K
// parameters. All quantities are in Omega_0 units.

#include <cmath>
#include <string>
#include <vector>

#include "rydpulse/common.hpp"

namespace rydpulse {

enum class AnsatzKind { antisymmetric, general };

inline std::string to_string(AnsatzKind k) {
    return k == AnsatzKind::antisymmetric ? "antisymmetric" : "general";
}

struct CrabTerm {
    double A = 0.0;
    double alpha = 0.0;
    double B = 0.0;   // general ansatz only
    double beta = 0.0;
};

struct PulseSpec {
    AnsatzKind kind = AnsatzKind::antisymmetric;
    double duration = 0.0;       // Omega_0 T > 0
    double detuning0 = 0.0;      // Delta_0 / Omega_0
    std::vector<CrabTerm> terms; // K >= 1
    double linear_phase = 0.0;   // absorbed-detuning slope, adds linear_phase * t to xi
    double phase_offset = 0.0;   // constant added to xi

    int k_terms() const { return static_cast<int>(terms.size()); }
    int param_count() const {
        return 2 + (kind == AnsatzKind::antisymmetric ? 2 : 4) * k_terms();
    }

    void validate() const {
        if (!(duration > 0.0) || !std::isfinite(duration))
            throw ConfigError("pulse duration must be positive and finite");
        if (terms.empty()) throw ConfigError("pulse needs at least one CRAB term (K >= 1)");
        if (kind == AnsatzKind::antisymmetric)
            for (const auto& t : terms)
                if (t.B != 0.0 || t.beta != 0.0)
                    throw ConfigError("antisymmetric ansatz must not carry B/beta terms");
        for (const auto& t : terms)
            if (!std::isfinite(t.A) || !std::isfinite(t.alpha) || !std::isfinite(t.B) ||
                !std::isfinite(t.beta))
                throw ConfigError("pulse parameters must be finite");
    }
};

inline int param_count(AnsatzKind kind, int k_terms) {
    if (k_terms < 1) throw ConfigError("K must be >= 1");
    return 2 + (kind == AnsatzKind::antisymmetric ? 2 : 4) * k_terms;
}

// Flatten to the canonical parameter vector (T, Delta_0, A_1, alpha_1, ...).
inline std::vector<double> pack_params(const PulseSpec& p) {
    std::vector<double> x;
    x.reserve(p.param_count());
    x.push_back(p.duration);
    x.push_back(p.detuning0);
    for (const auto& t : p.terms) {
        x.push_back(t.A);
        x.push_back(t.alpha);
        if (p.kind == AnsatzKind::general) {
            x.push_back(t.B);
            x.push_back(t.beta);
        }
    }
    return x;
}

inline PulseSpec unpack_params(AnsatzKind kind, int k_terms, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != param_count(kind, k_terms))
        throw ConfigError("parameter vector length does not match ansatz kind and K");
    PulseSpec p;
    p.kind = kind;
    p.duration = x[0];
    p.detuning0 = x[1];
    p.terms.resize(k_terms);
    std::size_t i = 2;
    for (auto& t : p.terms) {
        t.A = x[i++];
        t.alpha = x[i++];
        if (kind == AnsatzKind::general) {
            t.B = x[i++];
            t.beta = x[i++];
        }
    }
    return p;
}

// Precomputed ansatz evaluation in rescaled time s = t/T in [0,1]. The mode
// frequencies c_n = 2 pi n (1 + tanh(A_n)/2) are T-independent in s, which is
// what makes log T a clean optimization coordinate (dH/dlogT = H).
struct AnsatzEval {
    double duration;
    double linear_phase;
    double phase_offset;
    bool general;
    struct Term {
        double c, alpha;      // sine mode: alpha sin(c (s-1/2))
        double d, beta;       // cosine mode (general only)
        double dc_dA, dd_dB;  // frequency sensitivities: pi n sech^2
    };
    std::vector<Term> terms;

    explicit AnsatzEval(const PulseSpec& p)
        : duration(p.duration),
          linear_phase(p.linear_phase),
          phase_offset(p.phase_offset),
          general(p.kind == AnsatzKind::general) {
        p.validate();
        terms.resize(p.terms.size());
        for (std::size_t n = 0; n < p.terms.size(); ++n) {
            const auto& t = p.terms[n];
            const double base = 2.0 * pi * static_cast<double>(n + 1);
            const double sechA = 1.0 / std::cosh(t.A);
            terms[n].c = base * (1.0 + 0.5 * std::tanh(t.A));
            terms[n].alpha = t.alpha;
            terms[n].dc_dA = 0.5 * base * sechA * sechA;
            if (general) {
                const double sechB = 1.0 / std::cosh(t.B);
                terms[n].d = base * (1.0 + 0.5 * std::tanh(t.B));
                terms[n].beta = t.beta;
                terms[n].dd_dB = 0.5 * base * sechB * sechB;
            } else {
                terms[n].d = 0.0;
                terms[n].beta = 0.0;
                terms[n].dd_dB = 0.0;
            }
        }
    }

    double xi(double s) const {
        const double u = s - 0.5;
        double v = linear_phase * duration * s + phase_offset;
        for (const auto& t : terms) {
            v += t.alpha * std::sin(t.c * u);
            if (general) v += t.beta * std::cos(t.d * u);
        }
        return v;
    }

    // d xi / d s
    double dxi_ds(double s) const {
        const double u = s - 0.5;
        double v = linear_phase * duration;
        for (const auto& t : terms) {
            v += t.alpha * t.c * std::cos(t.c * u);
            if (general) v -= t.beta * t.d * std::sin(t.d * u);
        }
        return v;
    }

    // Partial of xi(s) w.r.t. canonical parameter index (s held fixed).
    // Index 0 is T: nonzero only through an absorbed linear_phase term.
    double dxi_dparam(int index, double s) const {
        const double u = s - 0.5;
        if (index == 0) return linear_phase * s;
        if (index == 1) return 0.0;  // Delta_0 lives in the generator diagonal
        const int per = general ? 4 : 2;
        const int n = (index - 2) / per;
        const int which = (index - 2) % per;
        const auto& t = terms[static_cast<std::size_t>(n)];
        switch (which) {
            case 0: return t.alpha * std::cos(t.c * u) * u * t.dc_dA;   // A_n
            case 1: return std::sin(t.c * u);                           // alpha_n
            case 2: return -t.beta * std::sin(t.d * u) * u * t.dd_dB;   // B_n
            default: return std::cos(t.d * u);                          // beta_n
        }
    }
};

// xi(t) at physical (Omega_0-scaled) time t in [0, T]. The constant detuning
// Delta_0 is not part of xi; it sits in the dynamics generator until absorbed
// by to_detuning_form.
inline double phase_at(const PulseSpec& p, double t) {
    p.validate();
    if (t < 0.0 || t > p.duration) throw ConfigError("phase_at: time outside [0, T]");
    return AnsatzEval(p).xi(t / p.duration);
}

// d xi / d t, analytic.
inline double phase_rate_at(const PulseSpec& p, double t) {
    p.validate();
    if (t < 0.0 || t > p.duration) throw ConfigError("phase_rate_at: time outside [0, T]");
    const AnsatzEval e(p);
    // dxi_ds includes the linear term's slope in s; convert everything to t
    return e.dxi_ds(t / p.duration) / p.duration;
}

// Equivalent zero-detuning pulse: xi'(t) = xi(t) + Delta_0 t, shifted so that
// xi'(0) = 0. Leaves every computational-basis amplitude exactly invariant.
inline PulseSpec to_detuning_form(const PulseSpec& p) {
    p.validate();
    PulseSpec out = p;
    out.linear_phase += p.detuning0;
    out.detuning0 = 0.0;
    out.phase_offset = 0.0;
    out.phase_offset = -AnsatzEval(out).xi(0.0);
    return out;
}

struct PulseProfile {
    std::vector<double> t;       // Omega_0 t
    std::vector<double> xi;      // absorbed-detuning phase
    std::vector<double> dxi_dt;  // its rate (the equivalent time-dependent detuning)
};

inline PulseProfile sample_profile(const PulseSpec& p, int n_samples) {
    if (n_samples < 2) throw ConfigError("sample_profile: need at least 2 samples");
    const PulseSpec q = to_detuning_form(p);
    const AnsatzEval e(q);
    PulseProfile out;
    out.t.resize(n_samples);
    out.xi.resize(n_samples);
    out.dxi_dt.resize(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double s = static_cast<double>(i) / (n_samples - 1);
        out.t[i] = s * q.duration;
        out.xi[i] = e.xi(s);
        out.dxi_dt[i] = e.dxi_ds(s) / q.duration;
    }
    return out;
}

}  // namespace rydpulse
