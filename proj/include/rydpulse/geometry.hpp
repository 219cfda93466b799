#pragma once

// Atom geometries and van-der-Waals interaction matrices. Interactions are
// dimensionless: v_ij = |C6/(hbar*Omega_0)| / |x_i-x_j|^6 with distances in
// the same length unit as c6^(1/6). Entries may be +infinity; the
// perfect_blockade flag marks the all-pairs-infinite idealization.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "rydpulse/common.hpp"

namespace rydpulse {

struct AtomArrangement {
    std::vector<std::array<double, 2>> positions;
    double c6 = 1.0;  // C6/(hbar*Omega_0) in length_unit^6; magnitude used unless signed mode
};

struct InteractionMatrix {
    int n_atoms = 0;
    std::vector<double> v;  // row-major n x n, symmetric, zero diagonal
    bool perfect_blockade = false;

    double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * n_atoms + j]; }
    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * n_atoms + j]; }

    bool infinite(int i, int j) const {
        return perfect_blockade || std::isinf((*this)(i, j));
    }

    // all off-diagonal couplings equal (the theta' = theta degeneracy condition)
    bool fully_symmetric(double rel_tol = 1e-9) const {
        if (perfect_blockade || n_atoms < 3) return true;
        double v0 = (*this)(0, 1);
        for (int i = 0; i < n_atoms; ++i)
            for (int j = 0; j < i; ++j) {
                double vij = (*this)(i, j);
                if (std::isinf(v0) != std::isinf(vij)) return false;
                if (!std::isinf(v0) && std::abs(vij - v0) > rel_tol * std::max(std::abs(v0), 1.0))
                    return false;
            }
        return true;
    }

    void validate() const {
        if (n_atoms < 2) throw ConfigError("interaction matrix needs at least 2 atoms");
        if (v.size() != static_cast<std::size_t>(n_atoms) * n_atoms)
            throw ConfigError("interaction matrix has wrong size");
        for (int i = 0; i < n_atoms; ++i) {
            if ((*this)(i, i) != 0.0) throw ConfigError("interaction matrix diagonal must be zero");
            for (int j = 0; j < i; ++j) {
                double vij = (*this)(i, j);
                if (vij != (*this)(j, i)) throw ConfigError("interaction matrix must be symmetric");
                if (std::isnan(vij)) throw ConfigError("interaction matrix entry is NaN");
            }
        }
    }
};

inline InteractionMatrix perfect_blockade_matrix(int n_atoms) {
    if (n_atoms < 2) throw ConfigError("interaction matrix needs at least 2 atoms");
    InteractionMatrix m;
    m.n_atoms = n_atoms;
    m.v.assign(static_cast<std::size_t>(n_atoms) * n_atoms, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_atoms; ++i)
        for (int j = 0; j < n_atoms; ++j)
            if (i != j) m.at(i, j) = inf;
    m.perfect_blockade = true;
    return m;
}

// v_ij = |c6|/d_ij^6 (signed_mode keeps the sign of c6). Coincident atoms are
// a degenerate geometry and rejected.
inline InteractionMatrix interactions_from_positions(const AtomArrangement& arr,
                                                     bool signed_mode = false) {
    const int n = static_cast<int>(arr.positions.size());
    if (n < 2) throw ConfigError("geometry needs at least 2 atoms");
    InteractionMatrix m;
    m.n_atoms = n;
    m.v.assign(static_cast<std::size_t>(n) * n, 0.0);
    const double c6 = signed_mode ? arr.c6 : std::abs(arr.c6);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            const double dx = arr.positions[i][0] - arr.positions[j][0];
            const double dy = arr.positions[i][1] - arr.positions[j][1];
            const double d2 = dx * dx + dy * dy;
            if (d2 <= 0.0) throw ConfigError("degenerate geometry: atoms coincide");
            const double vij = c6 / (d2 * d2 * d2);
            m.at(i, j) = vij;
            m.at(j, i) = vij;
        }
    return m;
}

// Entry-wise variant: only v_ij is rescaled as if d_ij -> (1+delta_d) d_ij.
inline InteractionMatrix perturb_pair(const InteractionMatrix& m, int i, int j, double delta_d) {
    if (i < 0 || j < 0 || i >= m.n_atoms || j >= m.n_atoms || i == j)
        throw ConfigError("perturb_pair: invalid atom pair");
    if (1.0 + delta_d <= 0.0) throw ConfigError("perturb_pair: 1+delta_d must be positive");
    InteractionMatrix out = m;
    const double s = std::pow(1.0 + delta_d, -6.0);
    if (!std::isinf(out(i, j))) {
        out.at(i, j) *= s;
        out.at(j, i) *= s;
    }
    return out;
}

// Position-space variant: atom j is displaced along the line i -> j so that
// |x_i - x_j| scales by (1+delta_d); every distance involving atom j moves.
inline AtomArrangement displace_along_pair(const AtomArrangement& arr, int i, int j,
                                           double delta_d) {
    const int n = static_cast<int>(arr.positions.size());
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
        throw ConfigError("displace_along_pair: invalid atom pair");
    if (1.0 + delta_d <= 0.0) throw ConfigError("displace_along_pair: 1+delta_d must be positive");
    AtomArrangement out = arr;
    for (int k = 0; k < 2; ++k)
        out.positions[j][k] =
            arr.positions[i][k] + (1.0 + delta_d) * (arr.positions[j][k] - arr.positions[i][k]);
    return out;
}

}  // namespace rydpulse
