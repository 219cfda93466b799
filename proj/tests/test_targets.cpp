#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "rydpulse/targets.hpp"

using namespace rydpulse;

namespace {

// Independent oracle: phase of a product of C^(k-1)Z factors, one per subset
// of the listed sizes, each contributing pi when every subset atom is in |1>.
double product_phase(int n, std::uint32_t b, const std::vector<int>& sizes) {
    double phase = 0.0;
    for (std::uint32_t s = 1; s < (1u << n); ++s) {
        bool wanted = false;
        for (int k : sizes) wanted |= popcount32(s) == k;
        if (wanted && (b & s) == s) phase += pi;
    }
    return phase;
}

bool same_angle(double a, double b) { return std::abs(wrap_angle(a - b)) < 1e-12; }

}  // namespace

TEST_CASE("wrap_angle") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK_THAT(wrap_angle(3.0 * pi), Catch::Matchers::WithinAbs(pi, 1e-12));
    CHECK_THAT(wrap_angle(-0.5), Catch::Matchers::WithinAbs(-0.5, 1e-15));
    CHECK(wrap_angle(pi) == pi);       // boundary stays in (-pi, pi]
    CHECK(wrap_angle(-pi) == pi);
    CHECK_THAT(wrap_angle(2.0 * pi), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("builtin targets equal the subset-product oracle") {
    struct Case {
        const char* name;
        int n;
        std::vector<int> sizes;
    };
    // the "bar" gates put one C^(k-1)Z factor on every subset of order >= 2
    const Case cases[] = {
        {"CZ", 2, {2}},       {"CCZ", 3, {3}},      {"CCZbar", 3, {2, 3}},
        {"CZCZCZ", 3, {2}},   {"CCCZ", 4, {4}},     {"CCCZbar", 4, {2, 3, 4}},
    };
    for (const auto& c : cases) {
        INFO(c.name);
        const TargetGate t = make_builtin(c.name);
        REQUIRE(t.n_qubits == c.n);
        REQUIRE(static_cast<int>(t.base_phase.size()) == (1 << c.n));
        CHECK_FALSE(t.theta_prime_free);
        for (std::uint32_t b = 0; b < (1u << c.n); ++b) {
            INFO("b = " << b);
            CHECK(same_angle(t.phase(b, {0.0}), product_phase(c.n, b, c.sizes)));
        }
    }
    CHECK_THROWS_AS(make_builtin("CNOT"), ConfigError);
}

TEST_CASE("G3 phase structure") {
    const double th = 0.4, tp = 1.1, lam = -0.7;
    const auto ph = g3_phases(th, tp, lam, 0.0);
    CHECK(ph[0b000] == 0.0);
    CHECK(ph[0b001] == 0.0);
    CHECK(ph[0b011] == th);   // atoms 0,1: a nearest pair
    CHECK(ph[0b110] == th);   // atoms 1,2: the other nearest pair
    CHECK(ph[0b101] == tp);   // atoms 0,2: the far pair
    CHECK_THAT(ph[0b111], Catch::Matchers::WithinAbs(2 * th + tp + lam, 1e-15));

    SECTION("the single-qubit phase counts excitations") {
        const double phi = 0.3;
        const auto shifted = g3_phases(th, tp, lam, phi);
        for (std::uint32_t b = 0; b < 8; ++b)
            CHECK_THAT(shifted[b], Catch::Matchers::WithinAbs(ph[b] + phi * popcount32(b),
                                                              1e-15));
        const TargetGate t = make_g3({th, tp, lam});
        for (std::uint32_t b = 0; b < 8; ++b)
            CHECK_THAT(t.phase(b, {phi}), Catch::Matchers::WithinAbs(shifted[b], 1e-15));
    }
}

TEST_CASE("free theta_prime targets") {
    const TargetGate t = make_builtin("thetaprime_CCZbar");
    REQUIRE(t.theta_prime_free);
    CHECK(t.free_param_count() == 2);
    CHECK(t.free_param_names() == std::vector<std::string>{"phi", "theta_prime"});
    // pinning theta' = pi by hand recovers the fixed gate
    const TargetGate fixed = make_builtin("CCZbar");
    for (std::uint32_t b = 0; b < 8; ++b)
        CHECK(same_angle(t.phase(b, {0.2, pi}), fixed.phase(b, {0.2})));
    // the theta' coefficient marks exactly the far-pair states
    for (std::uint32_t b = 0; b < 8; ++b)
        CHECK(t.tp_coeff[b] == (((b & 0b101) == 0b101) ? 1.0 : 0.0));
}

TEST_CASE("symmetric-geometry feasibility") {
    const auto symmetric = perfect_blockade_matrix(3);
    InteractionMatrix line;
    line.n_atoms = 3;
    line.v = {0.0, 32.0, 0.5, 32.0, 0.0, 32.0, 0.5, 32.0, 0.0};

    // theta' != theta requested on a symmetric geometry: impossible
    const TargetGate conflicted = make_g3({0.0, pi, 0.0});
    CHECK(check_feasibility(conflicted, symmetric) ==
          Feasibility::symmetric_theta_prime_conflict);
    CHECK(check_feasibility(conflicted, line) == Feasibility::ok);

    // theta' == theta or theta' free: fine anywhere
    CHECK(check_feasibility(make_builtin("CZCZCZ"), symmetric) == Feasibility::ok);
    CHECK(check_feasibility(make_builtin("CCZbar"), symmetric) == Feasibility::ok);
    CHECK(check_feasibility(make_builtin("thetaprime_CCZbar"), symmetric) ==
          Feasibility::ok);
    // 2pi-equivalence counts as equal
    CHECK(check_feasibility(make_g3({pi, -pi, 0.0}), symmetric) == Feasibility::ok);
    // non-G3 targets carry no constraint
    CHECK(check_feasibility(make_builtin("CZ"), perfect_blockade_matrix(2)) ==
          Feasibility::ok);
}
