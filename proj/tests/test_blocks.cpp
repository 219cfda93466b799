#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "rydpulse/blocks.hpp"
#include "rydpulse/geometry.hpp"

using namespace rydpulse;

namespace {

InteractionMatrix line3(double v_nn, double v_nnn) {
    InteractionMatrix m;
    m.n_atoms = 3;
    m.v = {0.0, v_nn, v_nnn, v_nn, 0.0, v_nn, v_nnn, v_nn, 0.0};
    return m;
}

}  // namespace

TEST_CASE("two-atom block, finite interaction") {
    InteractionMatrix m;
    m.n_atoms = 2;
    m.v = {0.0, 7.5, 7.5, 0.0};
    const Block blk = build_block(m, 0b11);

    CHECK(blk.weight == 2);
    CHECK(blk.configs == std::vector<std::uint32_t>{0b00, 0b01, 0b10, 0b11});
    CHECK(blk.v_diag == std::vector<double>{0.0, 0.0, 0.0, 7.5});
    CHECK(blk.nr_diag == std::vector<int>{0, 1, 1, 2});
    const std::vector<std::pair<std::uint16_t, std::uint16_t>> expect = {
        {0, 1}, {0, 2}, {1, 3}, {2, 3}};
    CHECK(blk.couplings == expect);
}

TEST_CASE("two-atom block, perfect blockade truncates |rr>") {
    const auto m = perfect_blockade_matrix(2);
    const Block blk = build_block(m, 0b11);
    CHECK(blk.dim() == 3);
    CHECK(blk.configs == std::vector<std::uint32_t>{0b00, 0b01, 0b10});
    CHECK(blk.v_diag == std::vector<double>{0.0, 0.0, 0.0});
    const std::vector<std::pair<std::uint16_t, std::uint16_t>> expect = {{0, 1}, {0, 2}};
    CHECK(blk.couplings == expect);
}

TEST_CASE("weight profile of block dimensions") {
    // dim = w + 1 under all-to-all perfect blockade, 2^w when all finite
    const auto perfect = enumerate_blocks(perfect_blockade_matrix(4));
    const auto finite = enumerate_blocks([] {
        InteractionMatrix m;
        m.n_atoms = 4;
        m.v.assign(16, 3.0);
        for (int i = 0; i < 4; ++i) m.at(i, i) = 0.0;
        return m;
    }());
    REQUIRE(perfect.size() == 16);
    REQUIRE(finite.size() == 16);
    for (std::uint32_t b = 0; b < 16; ++b) {
        const int w = popcount32(b);
        CHECK(perfect[b].dim() == w + 1);
        CHECK(finite[b].dim() == 1 << w);
        CHECK(perfect[b].basis_state == b);
    }
    // weight-0 and weight-1 blocks have no interactions to feel
    CHECK(perfect[0].couplings.empty());
    CHECK(perfect[1].couplings ==
          std::vector<std::pair<std::uint16_t, std::uint16_t>>{{0, 1}});
}

TEST_CASE("mixed infinite/finite interactions truncate selectively") {
    const double inf = std::numeric_limits<double>::infinity();
    auto m = line3(inf, 0.5);  // neighbours blockaded, far pair finite
    const Block blk = build_block(m, 0b111);
    // surviving configs: only slots {0,2} may be jointly excited
    CHECK(blk.configs == std::vector<std::uint32_t>{0b000, 0b001, 0b010, 0b100, 0b101});
    CHECK(blk.v_diag == std::vector<double>{0.0, 0.0, 0.0, 0.0, 0.5});
    CHECK(blk.nr_diag == std::vector<int>{0, 1, 1, 1, 2});
}

TEST_CASE("interaction energies add per excited pair") {
    auto m = line3(32.0, 0.5);
    const Block blk = build_block(m, 0b111);
    REQUIRE(blk.dim() == 8);
    CHECK(blk.v_diag[0b011] == 32.0);        // atoms 0,1
    CHECK(blk.v_diag[0b110] == 32.0);        // atoms 1,2
    CHECK(blk.v_diag[0b101] == 0.5);         // atoms 0,2
    CHECK(blk.v_diag[0b111] == 32.0 + 32.0 + 0.5);
}

TEST_CASE("block deduplication by interaction signature") {
    SECTION("perfect blockade: one class per weight") {
        const auto set = dedup_blocks(perfect_blockade_matrix(3));
        REQUIRE(set.blocks.size() == 4);
        CHECK(set.multiplicity == std::vector<int>{1, 3, 3, 1});
        // all weight-1 states share a class
        CHECK(set.class_of[0b001] == set.class_of[0b010]);
        CHECK(set.class_of[0b010] == set.class_of[0b100]);
        CHECK(set.class_of[0b011] == set.class_of[0b101]);
    }
    SECTION("two-distance line: near and far pairs split") {
        const auto set = dedup_blocks(line3(32.0, 0.5));
        REQUIRE(set.blocks.size() == 5);  // empty, single, near pair, far pair, triple
        CHECK(set.class_of[0b011] == set.class_of[0b110]);
        CHECK(set.class_of[0b011] != set.class_of[0b101]);
        int total = 0;
        for (int mult : set.multiplicity) total += mult;
        CHECK(total == 8);
    }
    SECTION("class representatives rebuild to the member's dynamics data") {
        const auto m = line3(32.0, 0.5);
        const auto set = dedup_blocks(m);
        const Block direct = build_block(m, 0b110);
        const Block& rep = set.blocks[set.class_of[0b110]];
        CHECK(rep.v_diag == direct.v_diag);
        CHECK(rep.nr_diag == direct.nr_diag);
        CHECK(rep.couplings == direct.couplings);
    }
}

TEST_CASE("block signatures are permutation canonical") {
    auto m = line3(32.0, 0.5);
    // (0,1) and (1,2) are both {32}; (0,2) is {0.5}
    CHECK(signatures_equal(block_signature(m, 0b011), block_signature(m, 0b110)));
    CHECK_FALSE(signatures_equal(block_signature(m, 0b011), block_signature(m, 0b101)));
    // the triple signature is the sorted-minimal upper triangle
    const auto sig = block_signature(m, 0b111);
    REQUIRE(sig.size() == 3);
    CHECK(std::vector<double>(sig) == std::vector<double>{0.5, 32.0, 32.0});

    SECTION("weight mismatch never matches") {
        CHECK_FALSE(signatures_equal(block_signature(m, 0b011), block_signature(m, 0b111)));
    }
    SECTION("infinities compare as equal infinities") {
        const auto p = perfect_blockade_matrix(3);
        CHECK(signatures_equal(block_signature(p, 0b011), block_signature(p, 0b101)));
    }
}

TEST_CASE("atom-count cap") {
    InteractionMatrix m;
    m.n_atoms = 7;
    m.v.assign(49, 1.0);
    for (int i = 0; i < 7; ++i) m.at(i, i) = 0.0;
    CHECK_THROWS_AS(enumerate_blocks(m), ConfigError);
    CHECK_THROWS_AS(dedup_blocks(m), ConfigError);
    CHECK_NOTHROW(enumerate_blocks(m, 7));
}
