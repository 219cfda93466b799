#pragma once

// Block decomposition of the blockaded-register dynamics. Atoms starting in
// |0> never couple to the laser, so the propagator is block diagonal over
// computational basis states b: the block of b lives on configurations where
// each participating atom (bit set in b) is in |1> or |r>. Configurations in
// which any pair with infinite interaction is doubly excited are removed from
// the state space (this truncation IS the perfect-blockade limit; it is not a
// large-V approximation). A weight-w block then has dimension w+1 under
// all-to-all perfect blockade and 2^w with all interactions finite.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "rydpulse/common.hpp"
#include "rydpulse/geometry.hpp"

namespace rydpulse {

struct Block {
    std::uint32_t basis_state = 0;  // representative b
    int weight = 0;                 // participating atoms
    std::vector<std::uint32_t> configs;  // bitmask over slots [0,w): slot k excited to |r>
    std::vector<double> v_diag;          // interaction energy per configuration
    std::vector<int> nr_diag;            // Rydberg occupation per configuration
    // laser couplings: (lower, upper) index pairs, upper = lower with one more excitation
    std::vector<std::pair<std::uint16_t, std::uint16_t>> couplings;

    int dim() const { return static_cast<int>(configs.size()); }
};

inline constexpr int max_block_atoms = 6;

inline Block build_block(const InteractionMatrix& mat, std::uint32_t b) {
    Block blk;
    blk.basis_state = b;
    std::vector<int> atoms;  // slot -> atom index
    for (int i = 0; i < mat.n_atoms; ++i)
        if (b & (1u << i)) atoms.push_back(i);
    const int w = static_cast<int>(atoms.size());
    blk.weight = w;

    std::vector<int> index(std::size_t{1} << w, -1);
    for (std::uint32_t c = 0; c < (1u << w); ++c) {
        double v = 0.0;
        bool ok = true;
        for (int k = 0; k < w && ok; ++k) {
            if (!(c & (1u << k))) continue;
            for (int l = 0; l < k && ok; ++l) {
                if (!(c & (1u << l))) continue;
                if (mat.infinite(atoms[k], atoms[l]))
                    ok = false;  // doubly excited blockaded pair: truncated away
                else
                    v += mat(atoms[k], atoms[l]);
            }
        }
        if (!ok) continue;
        index[c] = blk.dim();
        blk.configs.push_back(c);
        blk.v_diag.push_back(v);
        blk.nr_diag.push_back(popcount32(c));
    }
    for (int ci = 0; ci < blk.dim(); ++ci) {
        const std::uint32_t c = blk.configs[ci];
        for (int k = 0; k < w; ++k) {
            if (c & (1u << k)) continue;
            const int up = index[c | (1u << k)];
            if (up >= 0)
                blk.couplings.emplace_back(static_cast<std::uint16_t>(ci),
                                           static_cast<std::uint16_t>(up));
        }
    }
    return blk;
}

// All 2^N blocks, one per basis state.
inline std::vector<Block> enumerate_blocks(const InteractionMatrix& mat,
                                           int cap = max_block_atoms) {
    mat.validate();
    if (mat.n_atoms > cap)
        throw ConfigError("enumerate_blocks: atom count exceeds cap (" + std::to_string(cap) +
                          ")");
    std::vector<Block> out;
    out.reserve(std::size_t{1} << mat.n_atoms);
    for (std::uint32_t b = 0; b < (1u << mat.n_atoms); ++b) out.push_back(build_block(mat, b));
    return out;
}

// Canonical interaction signature of the participating-atom submatrix:
// lexicographically minimal upper triangle over all slot permutations. Exact
// for every weight (an unordered edge multiset would not be for w >= 4).
inline std::vector<double> block_signature(const InteractionMatrix& mat, std::uint32_t b) {
    std::vector<int> atoms;
    for (int i = 0; i < mat.n_atoms; ++i)
        if (b & (1u << i)) atoms.push_back(i);
    const int w = static_cast<int>(atoms.size());
    std::vector<int> perm(w);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> best, cur;
    bool first = true;
    do {
        cur.clear();
        for (int k = 0; k < w; ++k)
            for (int l = k + 1; l < w; ++l)
                cur.push_back(mat.infinite(atoms[perm[k]], atoms[perm[l]])
                                  ? std::numeric_limits<double>::infinity()
                                  : mat(atoms[perm[k]], atoms[perm[l]]));
        if (first || std::lexicographical_compare(cur.begin(), cur.end(), best.begin(),
                                                  best.end())) {
            best = cur;
            first = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline bool signatures_equal(const std::vector<double>& a, const std::vector<double>& b,
                             double rel_tol = 1e-12) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool ia = std::isinf(a[i]), ib = std::isinf(b[i]);
        if (ia != ib) return false;
        if (!ia && std::abs(a[i] - b[i]) >
                       rel_tol * std::max({1.0, std::abs(a[i]), std::abs(b[i])}))
            return false;
    }
    return true;
}

// Blocks grouped into equivalence classes. Blocks with permutation-equivalent
// interaction submatrices evolve identically, so only one representative per
// class is propagated; class_of maps each basis state to its class.
struct BlockSet {
    int n_atoms = 0;
    std::vector<Block> blocks;      // representatives
    std::vector<int> class_of;      // size 2^N
    std::vector<int> multiplicity;  // per class
};

inline BlockSet dedup_blocks(const InteractionMatrix& mat, int cap = max_block_atoms) {
    mat.validate();
    if (mat.n_atoms > cap)
        throw ConfigError("dedup_blocks: atom count exceeds cap (" + std::to_string(cap) + ")");
    BlockSet set;
    set.n_atoms = mat.n_atoms;
    const std::uint32_t dim = 1u << mat.n_atoms;
    set.class_of.resize(dim);
    std::vector<std::pair<int, std::vector<double>>> seen;  // (weight, signature) per class
    for (std::uint32_t b = 0; b < dim; ++b) {
        const int w = popcount32(b);
        const auto sig = block_signature(mat, b);
        int cls = -1;
        for (std::size_t k = 0; k < seen.size(); ++k)
            if (seen[k].first == w && signatures_equal(seen[k].second, sig)) {
                cls = static_cast<int>(k);
                break;
            }
        if (cls < 0) {
            cls = static_cast<int>(seen.size());
            seen.emplace_back(w, sig);
            set.blocks.push_back(build_block(mat, b));
            set.multiplicity.push_back(0);
        }
        set.class_of[b] = cls;
        ++set.multiplicity[cls];
    }
    return set;
}

}  // namespace rydpulse
