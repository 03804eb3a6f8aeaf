// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctrg/bench.hpp"
#include "ctrg/core.hpp"
#include "ctrg/ising.hpp"
#include "ctrg/strip.hpp"
#include "ctrg/trg.hpp"

using namespace ctrg;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    }
};

double rel_err(double value, double reference) {
    return std::abs(value - reference) / std::abs(reference);
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %d: %s [%.1fs]\n", pass ? "PASS" : "FAIL",
                criterion, detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------

// 1. Exact-mode coarse graining matches the exact torus contraction (which
// criterion 2 validates against spin enumeration) for CTRG on L in {3..6}
// and TRG on L in {2,4}, three temperatures each, 1e-10 relative.
void criterion_1() {
    Timer timer;
    const core::TruncationPolicy exact{1, true};
    double worst = 0.0;
    const std::vector<double> temps = {1.0, ising::critical_temperature(), 4.0};
    for (index_t L : {3, 4, 5, 6}) {
        for (double T : temps) {
            ising::ModelSpec m{T, ising::Boundary::torus};
            const double ref =
                ising::exact_network_logZ(ising::plaquette_tensor(m), L);
            const double lnz = core::logZ_torus(m, L, exact).ln_z;
            worst = std::max(worst, rel_err(lnz, ref));
        }
    }
    for (index_t L : {2, 4}) {
        for (double T : temps) {
            ising::ModelSpec m{T, ising::Boundary::torus};
            const double ref =
                ising::exact_network_logZ(ising::plaquette_tensor(m), L);
            const double lnz = trg::logZ_torus_trg(m, L, exact);
            worst = std::max(worst, rel_err(lnz, ref));
        }
    }
    report(1, worst < 1e-10,
           fmt("exact-mode CTRG (L=3..6) and TRG (L=2,4) vs exact contraction, "
               "max rel err %.2e (tol 1e-10)",
               worst),
           timer.seconds());
}

// 2. Exact tensor-network contraction agrees with brute-force spin
// enumeration on the matching tilted spin torus for L in {2,3}.
void criterion_2() {
    Timer timer;
    double worst = 0.0;
    for (index_t L : {2, 3}) {
        for (double T : {1.0, ising::critical_temperature(), 4.0}) {
            ising::ModelSpec m{T, ising::Boundary::torus};
            const double ref = ising::brute_force_logZ(m, ising::LatticeSpec{L});
            const double net =
                ising::exact_network_logZ(ising::plaquette_tensor(m), L);
            worst = std::max(worst, rel_err(net, ref));
        }
    }
    report(2, worst < 1e-10,
           fmt("plaquette network vs spin enumeration (L=2,3), max rel err "
               "%.2e (tol 1e-10)",
               worst),
           timer.seconds());
}

// 3. Thermodynamic-limit free energy at chi = 32, L grown to convergence
// (cap 512) with bulk densities taken from lnZ increments between sizes.
void criterion_3() {
    Timer timer;
    const double tc = ising::critical_temperature();
    const core::TruncationPolicy pol{32, false};
    std::map<double, double> errs;
    for (double frac : {0.8, 0.9, 1.0, 1.1, 1.2}) {
        const double T = frac * tc;
        const double f_inf = ising::onsager_free_energy_density(T);
        double prev_lnz = 0.0, prev_f = 0.0, f_est = 0.0;
        index_t prev_L = 0;
        bool have_prev = false;
        for (index_t L = 8; L <= 512; L *= 2) {
            ising::ModelSpec m{T, ising::Boundary::torus};
            const double lnz = core::logZ_torus(m, L, pol).ln_z;
            if (prev_L != 0) {
                const double dn = 2.0 * static_cast<double>(L * L - prev_L * prev_L);
                f_est = -T * (lnz - prev_lnz) / dn;
                if (have_prev && std::abs(f_est - prev_f) < 1e-8) break;
                prev_f = f_est;
                have_prev = true;
            }
            prev_lnz = lnz;
            prev_L = L;
        }
        errs[frac] = rel_err(f_est, f_inf);
    }
    const bool tol_ok = errs[1.0] <= 1e-5 && errs[0.8] <= 1e-7 && errs[1.2] <= 1e-7;
    bool max_at_tc = true;
    for (const auto& [frac, err] : errs)
        if (frac != 1.0 && err > errs[1.0]) max_at_tc = false;
    report(3, tol_ok && max_at_tc,
           fmt("chi=32 vs infinite-lattice solution: err(Tc)=%.2e (tol 1e-5), "
               "err(0.8Tc)=%.2e, err(1.2Tc)=%.2e (tol 1e-7), max over scan at "
               "Tc: %s",
               errs[1.0], errs[0.8], errs[1.2], max_at_tc ? "yes" : "no"),
           timer.seconds());
}

// Shared width-64 strip evaluations for criteria 4-6: {f, wall seconds}.
struct StripCache {
    std::map<std::pair<double, index_t>, std::pair<double, double>> ctrg;
    std::map<std::pair<double, index_t>, std::pair<double, double>> trg;

    std::pair<double, double> get(strip::Method method, double T, index_t chi) {
        auto& store = (method == strip::Method::ctrg) ? ctrg : trg;
        auto key = std::make_pair(T, chi);
        auto it = store.find(key);
        if (it != store.end()) return it->second;
        Timer timer;
        core::TruncationPolicy pol{chi, false};
        const double f = strip::strip_free_energy(method, {64, T}, pol);
        auto val = std::make_pair(f, timer.seconds());
        store.emplace(key, val);
        return val;
    }
};

StripCache g_strip;

// 4. Strip free-energy error vs bond dimension fits a power law with
// exponent in [-4.1, -2.7] against the chi_ref = 192 proxy (width 64, T_c).
void criterion_4() {
    Timer timer;
    const double tc = ising::critical_temperature();
    const double f_ref = g_strip.get(strip::Method::ctrg, tc, 192).first;
    const double f_96 = g_strip.get(strip::Method::ctrg, tc, 96).first;

    std::vector<std::pair<double, double>> pts;
    double min_df = 1e300;
    for (index_t chi : {8, 12, 16, 24, 32, 48}) {
        const double f = g_strip.get(strip::Method::ctrg, tc, chi).first;
        const double df = std::abs(f - f_ref);
        pts.push_back({static_cast<double>(chi), df});
        min_df = std::min(min_df, df);
    }
    const double proxy_conv = std::abs(f_96 - f_ref);
    auto fit = bench::fit_power_law(pts);
    const bool exponent_ok = fit.exponent >= -4.1 && fit.exponent <= -2.7;
    const bool proxy_ok = proxy_conv < 0.2 * min_df;
    report(4, exponent_ok && proxy_ok,
           fmt("width-64 strip at Tc: dF(chi=8..48) vs chi_ref=192 fits "
               "exponent %.2f (range [-4.1,-2.7]), rms log-residual %.2f; "
               "proxy converged: |f(96)-f(192)|=%.1e vs min dF %.1e",
               fit.exponent, fit.residual, proxy_conv, min_df),
           timer.seconds());
}

// 5. Method parity on the width-64 strip: at T_c, chi = 24, the baseline is
// slightly more accurate but within a factor 10 of CTRG; at 1.5 T_c CTRG is
// the more accurate method. The 1.5 T_c reference is a chi_ref = 96 proxy
// (4x the compared bond dimension).
void criterion_5() {
    Timer timer;
    const double tc = ising::critical_temperature();
    const double f_ref_tc = g_strip.get(strip::Method::ctrg, tc, 192).first;
    const double err_ctrg_tc =
        std::abs(g_strip.get(strip::Method::ctrg, tc, 24).first - f_ref_tc);
    const double err_trg_tc =
        std::abs(g_strip.get(strip::Method::trg, tc, 24).first - f_ref_tc);

    const double t15 = 1.5 * tc;
    const double f_ref_15 = g_strip.get(strip::Method::ctrg, t15, 96).first;
    const double err_ctrg_15 =
        std::abs(g_strip.get(strip::Method::ctrg, t15, 24).first - f_ref_15);
    const double err_trg_15 =
        std::abs(g_strip.get(strip::Method::trg, t15, 24).first - f_ref_15);

    const bool tc_ok =
        err_trg_tc <= err_ctrg_tc && err_ctrg_tc <= 10.0 * err_trg_tc;
    const bool off_ok = err_ctrg_15 <= err_trg_15;
    report(5, tc_ok && off_ok,
           fmt("chi=24 width-64 strip: Tc errors trg=%.2e <= ctrg=%.2e <= "
               "10x trg: %s; 1.5Tc errors ctrg=%.2e <= trg=%.2e: %s",
               err_trg_tc, err_ctrg_tc, tc_ok ? "yes" : "no", err_ctrg_15,
               err_trg_15, off_ok ? "yes" : "no"),
           timer.seconds());
}

// 6. Cost scaling: per-iteration wall-time ratio under chi -> 2 chi lies in
// [8,32] for CTRG and [32,128] for TRG (chi = 32 vs 64, median of 5), and on
// the width-64 strip at T_c some chi* <= 64 lets CTRG reach err_f <= 1e-5 in
// less wall time than the TRG baseline (a method that never reaches the
// target counts as unbounded time).
void criterion_6() {
    Timer timer;
    const double tc = ising::critical_temperature();
    ising::ModelSpec model{tc, ising::Boundary::torus};

    auto ctrg_step_time = [&](index_t chi) {
        core::TruncationPolicy pol{chi, false};
        core::CoreState s =
            core::init_core(ising::plaquette_tensor(model), 256, pol);
        for (int i = 0; i < 12; ++i) s = core::ctrg_iteration(s, pol).first;
        std::vector<double> times;
        for (int rep = 0; rep < 5; ++rep) {
            Timer t;
            auto next = core::ctrg_iteration(s, pol);
            times.push_back(t.seconds());
        }
        std::sort(times.begin(), times.end());
        return times[2];
    };
    auto trg_step_time = [&](index_t chi) {
        core::TruncationPolicy pol{chi, false};
        trg::TrgState s = trg::init_trg(ising::plaquette_tensor(model), 64);
        while (s.tensor.dim(0) < chi && s.copies > 4) s = trg::trg_step(s, pol);
        std::vector<double> times;
        for (int rep = 0; rep < 5; ++rep) {
            Timer t;
            auto next = trg::trg_step(s, pol);
            times.push_back(t.seconds());
        }
        std::sort(times.begin(), times.end());
        return times[2];
    };

    const double ctrg_ratio = ctrg_step_time(64) / ctrg_step_time(32);
    const double trg_ratio = trg_step_time(64) / trg_step_time(32);
    const bool ratios_ok = ctrg_ratio >= 8.0 && ctrg_ratio <= 32.0 &&
                           trg_ratio >= 32.0 && trg_ratio <= 128.0;

    // scanning upward, the first bond dimension that reaches the target is
    // also the cheapest run, so it gives the method's time-to-target
    const double f_ref = g_strip.get(strip::Method::ctrg, tc, 192).first;
    double t_ctrg = -1.0, t_trg = -1.0;
    index_t chi_star = 0;
    for (index_t chi : {32, 48, 64}) {
        auto [f, secs] = g_strip.get(strip::Method::ctrg, tc, chi);
        if (rel_err(f, f_ref) <= 1e-5) {
            t_ctrg = secs;
            chi_star = chi;
            break;
        }
    }
    for (index_t chi : {32, 48, 64}) {
        auto [f, secs] = g_strip.get(strip::Method::trg, tc, chi);
        if (rel_err(f, f_ref) <= 1e-5) {
            t_trg = secs;
            break;
        }
    }
    const bool crossover_ok = t_ctrg >= 0.0 && (t_trg < 0.0 || t_ctrg < t_trg);
    const std::string trg_txt = t_trg < 0.0 ? "never" : fmt("in %.1fs", t_trg);
    report(6, ratios_ok && crossover_ok,
           fmt("step-time ratios chi 32->64: ctrg %.1f (in [8,32]), trg %.1f "
               "(in [32,128]); width-64 crossover: ctrg reaches 1e-5 at "
               "chi*=%lld in %.1fs vs trg %s",
               ctrg_ratio, trg_ratio, static_cast<long long>(chi_star), t_ctrg,
               trg_txt.c_str()),
           timer.seconds());
}

// 7. Invariant sweep: isometry orthonormality, truncation-error monotonicity
// in chi, ledger scale covariance, infinite-temperature exactness at chi = 1,
// plaquette-tensor cyclic symmetry.
void criterion_7() {
    Timer timer;
    bool pass = true;
    std::string fail_what;

    // isometry orthonormality on a truncated mid-run state
    {
        core::TruncationPolicy pol{8, false};
        core::CoreState s = core::init_core(
            ising::plaquette_tensor(
                {ising::critical_temperature(), ising::Boundary::torus}),
            16, pol);
        for (int i = 0; i < 5; ++i) s = core::ctrg_iteration(s, pol).first;
        auto [iso, rep] = core::step_isometries(s, pol);
        for (const Tensor* y : {&iso.horizontal, &iso.vertical, &iso.center}) {
            Tensor g = contract(*y, *y, {{0, 0}});
            for (index_t i = 0; i < g.dim(0); ++i)
                for (index_t j = 0; j < g.dim(1); ++j) {
                    const double want = (i == j) ? 1.0 : 0.0;
                    if (std::abs(g.at({i, j}) - want) > 1e-12) pass = false;
                }
        }
        if (!pass) fail_what = "isometry orthonormality";
    }

    // truncation error monotone in chi
    if (pass) {
        core::TruncationPolicy grow{8, false};
        core::CoreState s = core::init_core(
            ising::plaquette_tensor(
                {ising::critical_temperature(), ising::Boundary::torus}),
            12, grow);
        for (int i = 0; i < 4; ++i) s = core::ctrg_iteration(s, grow).first;
        double prev_h = 1e300, prev_v = 1e300, prev_c = 1e300;
        for (index_t chi : {2, 4, 8, 16}) {
            auto [iso, rep] = core::step_isometries(s, {chi, false});
            if (rep.eps_horizontal > prev_h + 1e-12 ||
                rep.eps_vertical > prev_v + 1e-12 ||
                rep.eps_center > prev_c + 1e-12)
                pass = false;
            prev_h = rep.eps_horizontal;
            prev_v = rep.eps_vertical;
            prev_c = rep.eps_center;
        }
        if (!pass) fail_what = "eps monotonicity";
    }

    // ledger covariance under bulk scaling
    if (pass) {
        const index_t L = 5;
        const double scale = 2.4;
        core::TruncationPolicy pol{4, false};
        Tensor a0 = ising::plaquette_tensor({1.7, ising::Boundary::torus});
        core::CoreState a = core::init_core(a0, L, pol);
        core::CoreState b = core::init_core(scaled(a0, scale), L, pol);
        while (a.m > 2) {
            auto [an, ra] = core::ctrg_iteration(a, pol);
            auto [bn, rb] = core::ctrg_iteration(b, pol);
            if (std::abs(ra.eps_horizontal - rb.eps_horizontal) > 1e-12 ||
                std::abs(ra.eps_vertical - rb.eps_vertical) > 1e-12 ||
                std::abs(ra.eps_center - rb.eps_center) > 1e-12)
                pass = false;
            a = std::move(an);
            b = std::move(bn);
        }
        const double lnz_a = a.ledger_sum() + core::finalize_contract(a);
        const double lnz_b = b.ledger_sum() + core::finalize_contract(b);
        if (std::abs(lnz_b - lnz_a - L * L * std::log(scale)) > 1e-10) pass = false;
        if (!pass) fail_what = "ledger covariance";
    }

    // infinite temperature is exact at chi = 1
    if (pass) {
        Tensor ones({2, 2, 2, 2});
        for (index_t i = 0; i < ones.size(); ++i) ones.data()[i] = 1.0;
        core::TruncationPolicy one{1, false};
        auto res = core::logZ_torus(ones, 6, one);
        if (rel_err(res.ln_z, 72.0 * std::log(2.0)) > 1e-12) pass = false;
        if (res.max_eps > 1e-12) pass = false;
        if (!pass) fail_what = "infinite-temperature chi=1 exactness";
    }

    // plaquette-tensor cyclic symmetry
    if (pass) {
        Tensor a = ising::plaquette_tensor({1.3, ising::Boundary::torus});
        for (index_t i = 0; i < 2 && pass; ++i)
            for (index_t j = 0; j < 2 && pass; ++j)
                for (index_t k = 0; k < 2 && pass; ++k)
                    for (index_t l = 0; l < 2 && pass; ++l)
                        if (std::abs(a.at({i, j, k, l}) - a.at({j, k, l, i})) >
                            1e-15 * a.at({i, j, k, l}))
                            pass = false;
        if (!pass) fail_what = "plaquette cyclic symmetry";
    }

    report(7, pass,
           pass ? "orthonormality, eps monotonicity, ledger covariance, "
                  "infinite-T exactness, plaquette symmetry"
                : "failed at: " + fail_what,
           timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    auto enabled = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

    Timer total;
    if (enabled(1)) criterion_1();
    if (enabled(2)) criterion_2();
    if (enabled(3)) criterion_3();
    if (enabled(4)) criterion_4();
    if (enabled(5)) criterion_5();
    if (enabled(6)) criterion_6();
    if (enabled(7)) criterion_7();
    std::printf("acceptance: %d criterion(s) failed [total %.1fs]\n", g_failures,
                total.seconds());
    return g_failures;
}
