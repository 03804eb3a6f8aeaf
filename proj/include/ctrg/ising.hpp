#ifndef CTRG_ISING_HPP
#define CTRG_ISING_HPP

#include "ctrg/tensor.hpp"

namespace ctrg::ising {

enum class Boundary { torus, open_strip };

// Square-lattice ferromagnetic Ising model with coupling J = 1 and the
// convention that a bond between aligned spins carries weight e^{+1/T}.
struct ModelSpec {
    double temperature = 1.0;
    Boundary boundary = Boundary::torus;
};

// An L x L torus of plaquette tensors represents N = 2 L^2 spins: the spins
// live on the corners of a checkerboard of plaquettes and each tensor covers
// the four bonds of one plaquette, so each tensor accounts for two spins.
struct LatticeSpec {
    index_t tensors_per_side = 2;  // L
    index_t spin_count() const { return 2 * tensors_per_side * tensors_per_side; }
};

// T_c = 2 / ln(1 + sqrt(2))
double critical_temperature();

// Rank-4 plaquette tensor A[l,u,r,d] = exp((s_l s_u + s_u s_r + s_r s_d +
// s_d s_l)/T) with s(0) = +1, s(1) = -1. Index order (l,u,r,d) walks the
// plaquette corners cyclically: left leg = SW spin, up = NW, right = NE,
// down = SE, shared with the four diagonal neighbour plaquettes.
Tensor plaquette_tensor(const ModelSpec& m);

// Rank-4 per-spin tensor built from the symmetric square root S of the bond
// weight matrix [[e^b, e^-b], [e^-b, e^b]]: A[l,u,r,d] = sum_s S[l,s] S[u,s]
// S[r,s] S[d,s]. One tensor per spin; used for open-width strips where the
// plaquette tiling cannot cover boundary bonds.
Tensor site_tensor(const ModelSpec& m);

// ln Z by explicit enumeration of the spin lattice matching the L x L tensor
// torus: spins on the tilted torus with periods (L, L) and (L, -L), N = 2L^2.
// Throws capacity_error when N exceeds 26.
double brute_force_logZ(const ModelSpec& m, const LatticeSpec& lat);

// ln Z by enumeration of a rectangular W x H spin torus (wrap bonds counted).
double brute_force_logZ_rect(const ModelSpec& m, index_t width, index_t height);

// Exact ln Z of the homogeneous L x L tensor torus made of copies of `site`,
// contracted row by row through a 2^L-dimensional transfer space. Exact up to
// float rounding; practical for L up to ~12 with d = 2 legs.
double exact_network_logZ(const Tensor& site, index_t L);

// Thermodynamic-limit energy densities of the infinite square lattice,
// evaluated by adaptive quadrature of the closed-form integral solution
// (absolute tolerance 1e-12).
double onsager_free_energy_density(double T);
// Closed-form derivative expression (complete elliptic integral via the
// arithmetic-geometric mean), not a finite difference of f.
double onsager_internal_energy_density(double T);

// Complete elliptic integral of the first kind K(k), AGM evaluation.
double elliptic_K(double k);

// Generic adaptive Simpson quadrature, absolute tolerance `tol`.
template <typename F>
double adaptive_simpson(F f, double a, double b, double tol, int depth = 60);

namespace detail {
template <typename F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double adaptive_simpson(F f, double a, double b, double tol, int depth) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace ctrg::ising

#endif
