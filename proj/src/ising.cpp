#include "ctrg/ising.hpp"

#include <cmath>
#include <vector>

namespace ctrg::ising {

namespace {

void check_model(const ModelSpec& m) {
    if (!(m.temperature > 0.0) || !std::isfinite(m.temperature))
        throw argument_error("temperature must be positive and finite");
}

double spin(index_t s) { return 1.0 - 2.0 * static_cast<double>(s); }

}  // namespace

double critical_temperature() { return 2.0 / std::log(1.0 + std::sqrt(2.0)); }

Tensor plaquette_tensor(const ModelSpec& m) {
    check_model(m);
    const double beta = 1.0 / m.temperature;
    Tensor a({2, 2, 2, 2});
    for (index_t l = 0; l < 2; ++l)
        for (index_t u = 0; u < 2; ++u)
            for (index_t r = 0; r < 2; ++r)
                for (index_t d = 0; d < 2; ++d) {
                    const double e = spin(l) * spin(u) + spin(u) * spin(r) +
                                     spin(r) * spin(d) + spin(d) * spin(l);
                    a.at({l, u, r, d}) = std::exp(beta * e);
                }
    return a;
}

Tensor site_tensor(const ModelSpec& m) {
    check_model(m);
    const double beta = 1.0 / m.temperature;
    // symmetric square root of [[e^b, e^-b], [e^-b, e^b]]
    const double sp = std::sqrt(2.0 * std::cosh(beta));
    const double sm = std::sqrt(2.0 * std::sinh(beta));
    const double s00 = 0.5 * (sp + sm);
    const double s01 = 0.5 * (sp - sm);
    const double S[2][2] = {{s00, s01}, {s01, s00}};
    Tensor a({2, 2, 2, 2});
    for (index_t l = 0; l < 2; ++l)
        for (index_t u = 0; u < 2; ++u)
            for (index_t r = 0; r < 2; ++r)
                for (index_t d = 0; d < 2; ++d) {
                    double v = 0.0;
                    for (int s = 0; s < 2; ++s)
                        v += S[l][s] * S[u][s] * S[r][s] * S[d][s];
                    a.at({l, u, r, d}) = v;
                }
    return a;
}

namespace {

double enumerate_logZ(double beta, index_t n_sites,
                      const std::vector<std::pair<index_t, index_t>>& bonds) {
    if (n_sites > 26) throw capacity_error("enumeration bound is 26 spins");
    const index_t n_conf = index_t(1) << n_sites;
    const double shift = beta * static_cast<double>(bonds.size());
    double acc = 0.0;
    for (index_t c = 0; c < n_conf; ++c) {
        double energy = 0.0;  // sum of s_i s_j over bonds
        for (const auto& [i, j] : bonds) {
            const int si = 1 - 2 * static_cast<int>((c >> i) & 1);
            const int sj = 1 - 2 * static_cast<int>((c >> j) & 1);
            energy += si * sj;
        }
        acc += std::exp(beta * energy - shift);
    }
    return std::log(acc) + shift;
}

}  // namespace

double brute_force_logZ(const ModelSpec& m, const LatticeSpec& lat) {
    check_model(m);
    const index_t L = lat.tensors_per_side;
    if (L < 1) throw argument_error("lattice size must be >= 1");
    // Spins live on Z^2 modulo the lattice generated by (L, L) and (L, -L);
    // representatives are x in [0, 2L), y in [0, L).
    auto canon = [L](index_t x, index_t y) -> index_t {
        x = ((x % (2 * L)) + 2 * L) % (2 * L);
        y = ((y % (2 * L)) + 2 * L) % (2 * L);
        if (y >= L) {
            x = (x + L) % (2 * L);
            y -= L;
        }
        return y * 2 * L + x;
    };
    std::vector<std::pair<index_t, index_t>> bonds;
    for (index_t y = 0; y < L; ++y)
        for (index_t x = 0; x < 2 * L; ++x) {
            bonds.emplace_back(canon(x, y), canon(x + 1, y));
            bonds.emplace_back(canon(x, y), canon(x, y + 1));
        }
    return enumerate_logZ(1.0 / m.temperature, lat.spin_count(), bonds);
}

double brute_force_logZ_rect(const ModelSpec& m, index_t width, index_t height) {
    check_model(m);
    if (width < 1 || height < 1) throw argument_error("lattice sides must be >= 1");
    std::vector<std::pair<index_t, index_t>> bonds;
    auto id = [width](index_t x, index_t y) { return y * width + x; };
    for (index_t y = 0; y < height; ++y)
        for (index_t x = 0; x < width; ++x) {
            bonds.emplace_back(id(x, y), id((x + 1) % width, y));
            bonds.emplace_back(id(x, y), id(x, (y + 1) % height));
        }
    return enumerate_logZ(1.0 / m.temperature, width * height, bonds);
}

double exact_network_logZ(const Tensor& site, index_t L) {
    if (site.rank() != 4) throw shape_error("site tensor must be rank 4");
    if (site.dim(0) != site.dim(2) || site.dim(1) != site.dim(3))
        throw shape_error("opposite legs must match for a torus");
    if (L < 1) throw argument_error("L must be >= 1");

    const index_t h = site.dim(0);
    // Row operator R[(u_1..u_L), (d_1..d_L)]: contract one ring of L tensors
    // over their horizontal legs.
    Tensor g = permute_reshape(site, {0, 1, 3, 2});  // [l, u, d, r]
    for (index_t x = 1; x < L; ++x) {
        Tensor next = contract(g, site, {{3, 0}});       // [l, U, D, u, r, d]
        g = permute_reshape(next, {0, 1, 3, 2, 5, 4}, {1, 2, 2, 1});
    }
    Tensor eye({h, h});
    for (index_t i = 0; i < h; ++i) eye.at({i, i}) = 1.0;
    Tensor row = contract(g, eye, {{0, 0}, {3, 1}});  // [U, D]

    double log_scale = 0.0;
    const double r_norm = frobenius_norm(row);
    if (!(r_norm > 0.0) || !std::isfinite(r_norm))
        throw numeric_error("degenerate row operator");
    row = scaled(row, 1.0 / r_norm);
    log_scale += std::log(r_norm);

    Tensor power = row;
    double power_scale = log_scale;
    for (index_t k = 1; k < L; ++k) {
        power = contract(power, row, {{1, 0}});
        const double n = frobenius_norm(power);
        power = scaled(power, 1.0 / n);
        power_scale += std::log(n) + log_scale;
    }
    double trace = 0.0;
    for (index_t i = 0; i < power.dim(0); ++i) trace += power.at({i, i});
    if (!(trace > 0.0))
        throw numeric_error("non-positive torus contraction");
    return std::log(trace) + power_scale;
}

double elliptic_K(double k) {
    if (!(k >= 0.0) || k > 1.0) throw argument_error("elliptic_K requires k in [0,1]");
    if (k == 1.0) throw numeric_error("elliptic_K diverges at k = 1");
    double a = 1.0;
    double b = std::sqrt(1.0 - k * k);
    while (std::abs(a - b) > 4e-16 * a) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return M_PI / (2.0 * a);
}

double onsager_free_energy_density(double T) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw argument_error("temperature must be positive and finite");
    const double beta = 1.0 / T;
    const double c2 = std::cosh(2.0 * beta);
    const double s2 = std::sinh(2.0 * beta);
    const double kappa = 2.0 * s2 / (c2 * c2);
    // 1 - kappa^2 = ((1 - s2^2) / c2^2)^2, so the square-root argument can be
    // written without cancellation even at T_c where kappa = 1.
    const double w = (1.0 - s2 * s2) / (c2 * c2);
    auto integrand = [kappa, w](double phi) {
        const double c = std::cos(phi);
        return std::log(0.5 * (1.0 + std::sqrt(w * w + kappa * kappa * c * c)));
    };
    const double integral = adaptive_simpson(integrand, 0.0, M_PI, 1e-13);
    const double beta_f = -std::log(2.0 * c2) - integral / (2.0 * M_PI);
    return beta_f / beta;
}

double onsager_internal_energy_density(double T) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw argument_error("temperature must be positive and finite");
    const double beta = 1.0 / T;
    const double c2 = std::cosh(2.0 * beta);
    const double s2 = std::sinh(2.0 * beta);
    // u = -coth(2b) [1 + (2/pi)(2 tanh^2(2b) - 1) K(kappa)] with modulus
    // kappa = 2 s2 / c2^2. The coefficient equals -(1 - s2^2)/c2^2 = -w and
    // the complementary modulus is |w|, so (2/pi) w K = w / AGM(1, |w|),
    // which stays finite through T_c.
    const double w = (1.0 - s2 * s2) / (c2 * c2);
    double term = 0.0;
    if (w != 0.0) {
        double a = 1.0;
        double b = std::abs(w);
        while (std::abs(a - b) > 4e-16 * a) {
            const double an = 0.5 * (a + b);
            b = std::sqrt(a * b);
            a = an;
        }
        term = w / a;
    }
    return -(c2 / s2) * (1.0 - term);
}

}  // namespace ctrg::ising
