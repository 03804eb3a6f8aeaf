#include "doctest.h"

#include <cmath>
#include <vector>

#include "ctrg/core.hpp"
#include "ctrg/ising.hpp"

using namespace ctrg;
using namespace ctrg::core;

namespace {

const TruncationPolicy kExact{1, true};

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

// all-ones rank-4 tensor (infinite-temperature plaquette tensor)
Tensor ones_bulk() {
    Tensor t({2, 2, 2, 2});
    for (index_t i = 0; i < t.size(); ++i) t.data()[i] = 1.0;
    return t;
}

void check_isometry_columns(const Tensor& y) {
    Tensor g = contract(y, y, {{0, 0}});
    for (index_t i = 0; i < g.dim(0); ++i)
        for (index_t j = 0; j < g.dim(1); ++j)
            CHECK(g.at({i, j}) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

}  // namespace

TEST_SUITE_BEGIN("core");

TEST_CASE("init_core: center pair reconstructs the bulk tensor") {
    for (double T : {1.0, 3.1}) {
        Tensor a0 = ising::plaquette_tensor({T, ising::Boundary::torus});
        CoreState s = init_core(a0, 4, kExact);
        Tensor rebuilt = contract(s.center_left, s.center_right, {{2, 0}});
        Tensor diff = add(rebuilt, scaled(s.bulk, -1.0));
        CHECK(frobenius_norm(diff) < 1e-12 * frobenius_norm(s.bulk));
        REQUIRE(s.ledger.size() == 1);
        CHECK(s.ledger[0].log_norm ==
              doctest::Approx(std::log(frobenius_norm(a0))).epsilon(1e-14));
        CHECK(s.ledger[0].multiplicity == 16.0);
    }
}

TEST_CASE("init_core: all-ones bulk splits exactly") {
    CoreState s = init_core(ones_bulk(), 3, kExact);
    Tensor rebuilt = contract(s.center_left, s.center_right, {{2, 0}});
    CHECK(max_abs_diff(rebuilt, s.bulk) < 1e-14);
    CHECK(s.center_left.dim(2) == 1);  // rank-1 bulk
}

TEST_CASE("build_F: all-ones start gives a rank-1 patch") {
    CoreState s = init_core(ones_bulk(), 5, kExact);
    Tensor f = build_F(s);
    REQUIRE(f.rank() == 8);
    // patch Gram over the left pair has rank 1
    Tensor g = contract(
        f, f, {{2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {7, 7}});
    Tensor gram = permute_reshape(g, {0, 1, 2, 3}, {2, 2});
    auto e = truncated_eig(gram, gram.dim(0));
    CHECK(std::abs(e.eigenvalues[0]) > 1e-12);
    for (std::size_t i = 1; i < e.eigenvalues.size(); ++i)
        CHECK(std::abs(e.eigenvalues[i]) < 1e-12 * std::abs(e.eigenvalues[0]));
}

TEST_CASE("build_F: multilinear in the corner and center factors") {
    // Scaling the bulk scales the patch once through the corner; scaling the
    // center pair as well gives the quadratic scaling of the two
    // bulk-derived factors together.
    Tensor a0 = ising::plaquette_tensor({1.3, ising::Boundary::torus});
    CoreState s = init_core(a0, 5, kExact);
    const double scale = 1.7;

    CoreState corner_scaled = s;
    corner_scaled.bulk = scaled(s.bulk, scale);
    Tensor f_corner = build_F(corner_scaled);

    CoreState both_scaled = corner_scaled;
    both_scaled.center_left = scaled(s.center_left, scale);
    Tensor f_both = build_F(both_scaled);

    Tensor f = build_F(s);
    CHECK(max_abs_diff(f_corner, scaled(f, scale)) < 1e-12);
    CHECK(max_abs_diff(f_both, scaled(f, scale * scale)) < 1e-12);
}

TEST_CASE("compute_isometries: complete projector has zero error") {
    Tensor a0 = ising::plaquette_tensor({2.0, ising::Boundary::torus});
    CoreState s = init_core(a0, 4, kExact);
    auto [iso, rep] = compute_isometries(build_F(s), build_half(s), kExact);
    CHECK(rep.eps_horizontal < 1e-10);
    CHECK(rep.eps_vertical < 1e-10);
    CHECK(rep.eps_center < 1e-10);
    check_isometry_columns(iso.horizontal);
    check_isometry_columns(iso.vertical);
    check_isometry_columns(iso.center);

    // P F = F at full rank
    Tensor f = build_F(s);
    Tensor ff = permute_reshape(f, {0, 1, 2, 3, 4, 5, 6, 7},
                                {2, 1, 1, 1, 1, 1, 1});
    Tensor pf = contract(iso.horizontal,
                         contract(iso.horizontal, ff, {{0, 0}}), {{1, 0}});
    CHECK(max_abs_diff(pf, ff) < 1e-10);
}

TEST_CASE("compute_isometries: all-ones patch is exact at rank one") {
    CoreState s = init_core(ones_bulk(), 4, kExact);
    TruncationPolicy one{1, false};
    auto [iso, rep] = compute_isometries(build_F(s), build_half(s), one);
    CHECK(rep.eps_horizontal < 1e-12);
    CHECK(rep.eps_vertical < 1e-12);
    CHECK(rep.eps_center < 1e-12);
    CHECK(iso.horizontal.dim(1) == 1);
}

TEST_CASE("compute_isometries: truncation error matches discarded spectrum") {
    // random patch built from a compatible pair of half-networks
    Tensor upper = Tensor::random({3, 2, 2, 3, 4, 2}, 7);
    Tensor lower = Tensor::random({4, 2, 3, 2, 2, 3}, 8);
    Tensor f = contract(upper, lower, {{4, 0}, {5, 1}});
    const index_t k = 3;
    TruncationPolicy pol{k, false};
    auto [iso, rep] = compute_isometries(f, lower, pol);
    (void)iso;

    Tensor g = contract(
        f, f, {{2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {7, 7}});
    auto eig = truncated_eig(permute_reshape(g, {0, 1, 2, 3}, {2, 2}), 6);
    double tail = 0.0;
    for (std::size_t i = k; i < eig.eigenvalues.size(); ++i)
        tail += std::max(0.0, eig.eigenvalues[i]);
    CHECK(rep.eps_horizontal * rep.eps_horizontal ==
          doctest::Approx(tail).epsilon(1e-10));
}

TEST_CASE("step_isometries agrees with the materialized-patch reference") {
    Tensor a0 = ising::plaquette_tensor({1.8, ising::Boundary::torus});
    CoreState s = init_core(a0, 5, kExact);
    TruncationPolicy pol{6, false};
    // advance one step so both absorption sides get exercised
    for (int step = 0; step < 2; ++step) {
        auto [iso_fast, rep_fast] = step_isometries(s, pol);
        auto [iso_ref, rep_ref] =
            compute_isometries(build_F(s), build_half(s), pol);
        (void)iso_ref;
        CHECK(rep_fast.eps_horizontal ==
              doctest::Approx(rep_ref.eps_horizontal).epsilon(1e-8));
        CHECK(rep_fast.eps_vertical ==
              doctest::Approx(rep_ref.eps_vertical).epsilon(1e-8));
        CHECK(rep_fast.eps_center ==
              doctest::Approx(rep_ref.eps_center).epsilon(1e-8));
        CHECK(rep_fast.kept_horizontal == rep_ref.kept_horizontal);
        check_isometry_columns(iso_fast.horizontal);
        check_isometry_columns(iso_fast.vertical);
        check_isometry_columns(iso_fast.center);
        auto [next, rep] = ctrg_iteration(s, pol);
        (void)rep;
        s = next;
    }
}

TEST_CASE("ctrg_iteration: shrinks m by one and alternates sides") {
    Tensor a0 = ising::plaquette_tensor({2.5, ising::Boundary::torus});
    CoreState s = init_core(a0, 6, kExact);
    CHECK(s.side == Side::below_left);
    auto [s1, rep1] = ctrg_iteration(s, kExact);
    (void)rep1;
    CHECK(s1.m == 5);
    CHECK(s1.side == Side::above_right);
    auto [s2, rep2] = ctrg_iteration(s1, kExact);
    (void)rep2;
    CHECK(s2.m == 4);
    CHECK(s2.side == Side::below_left);
}

TEST_CASE("ctrg_iteration: state error below m = 3") {
    Tensor a0 = ising::plaquette_tensor({2.5, ising::Boundary::torus});
    CoreState s = init_core(a0, 2, kExact);
    CHECK_THROWS_AS(ctrg_iteration(s, kExact), state_error);
}

TEST_CASE("exact-mode CTRG reproduces the exact torus contraction") {
    // the heart of the wiring: projector insertions must be lossless
    for (index_t L : {index_t(3), index_t(4), index_t(5), index_t(6)}) {
        for (double T : {1.0, ising::critical_temperature(), 4.0}) {
            ising::ModelSpec m{T, ising::Boundary::torus};
            const double ref =
                ising::exact_network_logZ(ising::plaquette_tensor(m), L);
            TorusResult res = logZ_torus(m, L, kExact);
            CHECK(rel_diff(res.ln_z, ref) < 1e-10);
            CHECK(res.steps == L - 2);
        }
    }
}

TEST_CASE("infinite temperature: chi = 1 is exact and lnZ = N ln 2") {
    TruncationPolicy one{1, false};
    for (index_t L : {index_t(2), index_t(4), index_t(7)}) {
        TorusResult res = logZ_torus(ones_bulk(), L, one);
        const double expected = 2.0 * L * L * std::log(2.0);
        CHECK(rel_diff(res.ln_z, expected) < 1e-12);
        CHECK(res.max_eps < 1e-12);
    }
}

TEST_CASE("logZ_torus: truncated run at chi 16 still exact for L = 4") {
    ising::ModelSpec m{1.0, ising::Boundary::torus};
    TruncationPolicy pol{16, false};
    const double ref = ising::exact_network_logZ(ising::plaquette_tensor(m), 4);
    TorusResult res = logZ_torus(m, 4, pol);
    CHECK(rel_diff(res.ln_z, ref) < 1e-10);
}

TEST_CASE("ledger covariance: scaling the bulk shifts lnZ by L^2 ln s") {
    Tensor a0 = ising::plaquette_tensor({1.6, ising::Boundary::torus});
    const index_t L = 5;
    TruncationPolicy pol{4, false};
    const double scale = 3.7;

    CoreState a = init_core(a0, L, pol);
    CoreState b = init_core(scaled(a0, scale), L, pol);
    double max_eps_diff = 0.0;
    while (a.m > 2) {
        auto [an, ra] = ctrg_iteration(a, pol);
        auto [bn, rb] = ctrg_iteration(b, pol);
        max_eps_diff = std::max(max_eps_diff,
                                std::abs(ra.eps_horizontal - rb.eps_horizontal));
        max_eps_diff =
            std::max(max_eps_diff, std::abs(ra.eps_vertical - rb.eps_vertical));
        max_eps_diff =
            std::max(max_eps_diff, std::abs(ra.eps_center - rb.eps_center));
        a = std::move(an);
        b = std::move(bn);
    }
    CHECK(max_eps_diff < 1e-12);
    const double lnz1 = a.ledger_sum() + finalize_contract(a);
    const double lnz2 = b.ledger_sum() + finalize_contract(b);
    CHECK(std::abs(lnz2 - lnz1 - L * L * std::log(scale)) < 1e-10);
}

TEST_CASE("truncation error is non-increasing in chi") {
    Tensor a0 = ising::plaquette_tensor(
        {ising::critical_temperature(), ising::Boundary::torus});
    // grow the core legs first so truncation actually bites
    TruncationPolicy grow{8, false};
    CoreState s = init_core(a0, 12, grow);
    for (int i = 0; i < 4; ++i) {
        auto [next, rep] = ctrg_iteration(s, grow);
        (void)rep;
        s = std::move(next);
    }
    std::vector<index_t> chis = {2, 3, 4, 6, 8, 12, 16};
    double prev_h = 1e300, prev_v = 1e300, prev_c = 1e300;
    for (index_t chi : chis) {
        TruncationPolicy pol{chi, false};
        auto [iso, rep] = step_isometries(s, pol);
        (void)iso;
        CHECK(rep.eps_horizontal <= prev_h + 1e-12);
        CHECK(rep.eps_vertical <= prev_v + 1e-12);
        CHECK(rep.eps_center <= prev_c + 1e-12);
        prev_h = rep.eps_horizontal;
        prev_v = rep.eps_vertical;
        prev_c = rep.eps_center;
    }
}

TEST_CASE("observables: stencil on the closed-form f reproduces u") {
    const double delta = 1e-3;
    for (double T : {1.8, 2.6}) {
        const double beta = 1.0 / T;
        auto lnz_density = [](double b) {
            // per-spin lnZ from the closed form: -beta f
            return -b * ising::onsager_free_energy_density(1.0 / b);
        };
        auto obs = observables_from_stencil(
            T, lnz_density(beta * (1.0 - delta)), lnz_density(beta),
            lnz_density(beta * (1.0 + delta)), 1.0, delta);
        CHECK(std::abs(obs.f - ising::onsager_free_energy_density(T)) < 1e-12);
        CHECK(std::abs(obs.u - ising::onsager_internal_energy_density(T)) < 1e-5);
    }
}

TEST_CASE("observables: u vanishes at high temperature like -2/T") {
    const double T = 500.0;
    const double beta = 1.0 / T;
    auto lnz_density = [](double b) {
        return -b * ising::onsager_free_energy_density(1.0 / b);
    };
    auto obs = observables_from_stencil(
        T, lnz_density(beta * 0.999), lnz_density(beta), lnz_density(beta * 1.001),
        1.0);
    CHECK(std::abs(obs.u) < 1e-2);
    CHECK(obs.u == doctest::Approx(-2.0 / T).epsilon(0.05));
}

TEST_SUITE_END();
