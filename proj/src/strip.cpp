#include "ctrg/strip.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace ctrg::strip {

namespace {

constexpr double kEigRankCut = 1e-28;

void check_spec(const StripSpec& s) {
    if (s.width < 1) throw argument_error("strip width must be >= 1");
    if (!(s.temperature > 0.0) || !std::isfinite(s.temperature))
        throw argument_error("temperature must be positive and finite");
}

// Isometry for a fused transfer leg from the Gram of `t` over its two
// leading (unfused) legs, all remaining legs summed.
Tensor pair_isometry(const Tensor& t, const TruncationPolicy& p) {
    std::vector<std::pair<int, int>> pairs;
    for (int ax = 2; ax < t.rank(); ++ax) pairs.push_back({ax, ax});
    Tensor g4 = contract(t, t, pairs);
    Tensor gram = permute_reshape(g4, {0, 1, 2, 3}, {2, 2});
    const index_t n = gram.dim(0);
    auto eig = truncated_eig(gram, n);
    const double l0 = eig.eigenvalues.empty() ? 0.0 : std::abs(eig.eigenvalues[0]);
    index_t rank = n;
    while (rank > 1 && std::abs(eig.eigenvalues[rank - 1]) <= l0 * kEigRankCut)
        --rank;
    const index_t kept = p.exact ? rank : std::min(rank, p.chi_max);
    Tensor iso({n, kept});
    for (index_t r = 0; r < n; ++r)
        for (index_t c = 0; c < kept; ++c)
            iso.data()[r * kept + c] = eig.isometry.data()[r * n + c];
    return iso;
}

// ln(lambda_max) by power iteration given the matrix action as a callback.
template <typename MatVec>
double log_dominant(MatVec apply, index_t dim, double tol, index_t max_iters) {
    std::vector<double> x(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    double lambda = 0.0;
    for (index_t it = 0; it < max_iters; ++it) {
        std::vector<double> y = apply(x);
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw numeric_error("power iteration broke down");
        double dot = 0.0;
        for (index_t i = 0; i < dim; ++i) dot += x[i] * y[i];
        for (index_t i = 0; i < dim; ++i) x[i] = y[i] / norm;
        if (it > 0 && std::abs(dot - lambda) <= tol * std::abs(dot)) {
            if (!(dot > 0.0))
                throw numeric_error("dominant transfer eigenvalue not positive");
            return std::log(dot);
        }
        lambda = dot;
    }
    throw numeric_error("power iteration did not converge; last estimate " +
                        std::to_string(lambda));
}

// The all-ones closure of the two free edges overcounts each row by
// (sum of one square-root-weight row)^2 = 2 cosh(beta).
double cap_log_norm(double temperature) {
    return std::log(2.0 * std::cosh(1.0 / temperature));
}

// The strip is coarse-grained by the full core-tensor iteration: the core
// column sits at the left edge (its dangling leg closed by the all-ones
// cap) and every step absorbs the bulk column to its right together with
// one bulk row from above, using the standard patch isometries. The
// column tensor is the only per-row object, so only its norm credits enter
// the free energy; the core row and center cells are a measure-zero defect
// of the infinite chain.
double ctrg_strip(const StripSpec& s, const TruncationPolicy& p) {
    const ising::ModelSpec model{s.temperature, ising::Boundary::open_strip};
    Tensor site = ising::site_tensor(model);
    const double site_norm = frobenius_norm(site);
    site = scaled(site, 1.0 / site_norm);

    Tensor ones({2}, {1.0, 1.0});
    Tensor left_edge = with_dims(contract(ones, site, {{0, 0}}), {1, 2, 2, 2});
    const double edge_norm = frobenius_norm(left_edge);
    left_edge = scaled(left_edge, 1.0 / edge_norm);

    core::CoreState cs;
    cs.bulk = site;
    cs.row_core = site;
    cs.col_core = left_edge;
    auto center = core::split_center(left_edge, p);
    cs.center_left = std::move(center.first);
    cs.center_right = std::move(center.second);
    cs.m = s.width;
    cs.side = core::Side::above_right;

    double per_row = static_cast<double>(s.width) * std::log(site_norm) +
                     std::log(edge_norm);
    while (cs.m > 2) {
        auto [next, rep] = core::ctrg_iteration(cs, p);
        (void)rep;
        // the column entry is the middle of the three credits per step
        per_row += next.ledger[next.ledger.size() - 2].log_norm;
        next.side = core::Side::above_right;  // no left side on the strip
        cs = std::move(next);
    }

    // remaining pair: the accumulated column next to the right edge column
    Tensor right_edge = with_dims(contract(site, ones, {{2, 0}}), {2, 2, 1, 2});
    const Tensor& col = cs.col_core;  // [1, u0, m, d0]
    const index_t c0 = col.dim(1), c1 = right_edge.dim(1);
    const index_t dim = c0 * c1;
    auto apply = [&](const std::vector<double>& x) {
        Tensor xv({c0, c1}, x);
        Tensor t1 = contract(right_edge, xv, {{3, 1}});   // [m, u1, 1, d0]
        Tensor t2 = contract(col, t1, {{2, 0}, {3, 3}});  // [1, u0, u1, 1]
        return std::vector<double>(t2.data(), t2.data() + t2.size());
    };
    const double log_lambda = log_dominant(apply, dim, 1e-13, 100000);
    const double row_total =
        log_lambda + per_row - cap_log_norm(s.temperature);
    return -s.temperature * row_total / static_cast<double>(s.width);
}

// Width-halving baseline: three column species (left edge, bulk, right
// edge), merged pairwise per sweep with the fused transfer legs truncated.
// Edge columns carry a dummy outer leg of dimension one.
struct ColumnTriple {
    Tensor left;   // [1, u, r, d]
    Tensor bulk;   // [l, u, r, d]
    Tensor right;  // [l, u, 1, d]
    index_t width = 0;
    double log_per_row = 0.0;
};

Tensor merge_pair(const Tensor& a, const Tensor& b, const TruncationPolicy& p) {
    Tensor t = contract(a, b, {{2, 0}});  // [l, u0, d0, u1, r, d1]
    Tensor patch = permute_reshape(t, {1, 3, 0, 4, 2, 5});  // [u0,u1, l, r, d0,d1]
    // two rows of the merged column feed the truncation Gram, so the fused
    // transfer leg sees one application of the column transfer as context
    Tensor window = contract(patch, patch, {{4, 0}, {5, 1}});
    Tensor iso = pair_isometry(window, p);
    Tensor pf = permute_reshape(patch, {0, 1, 2, 3, 4, 5}, {2, 1, 1, 2});
    Tensor top = contract(iso, pf, {{0, 0}});   // [u', l, r, (d)]
    Tensor next = contract(top, iso, {{3, 0}});  // [u', l, r, d']
    return permute_reshape(next, {1, 0, 2, 3});  // [l, u', r, d']
}

double trg_strip(const StripSpec& s, const TruncationPolicy& p) {
    if (s.width < 2 || (s.width & (s.width - 1)) != 0)
        throw argument_error("trg strip width must be a power of two >= 2");
    const ising::ModelSpec model{s.temperature, ising::Boundary::open_strip};
    Tensor site = ising::site_tensor(model);
    const double site_norm = frobenius_norm(site);
    site = scaled(site, 1.0 / site_norm);

    Tensor ones({2}, {1.0, 1.0});
    ColumnTriple cols;
    cols.left = with_dims(contract(ones, site, {{0, 0}}), {1, 2, 2, 2});
    cols.bulk = site;
    cols.right = with_dims(contract(site, ones, {{2, 0}}), {2, 2, 1, 2});
    cols.width = s.width;
    cols.log_per_row = static_cast<double>(s.width) * std::log(site_norm);

    while (cols.width > 2) {
        ColumnTriple next;
        next.width = cols.width / 2;
        Tensor nl = merge_pair(cols.left, cols.bulk, p);
        Tensor nr = merge_pair(cols.bulk, cols.right, p);
        const double ln_l = std::log(frobenius_norm(nl));
        const double ln_r = std::log(frobenius_norm(nr));
        next.left = scaled(nl, std::exp(-ln_l));
        next.right = scaled(nr, std::exp(-ln_r));
        next.log_per_row = cols.log_per_row + ln_l + ln_r;
        if (next.width > 2) {
            Tensor nb = merge_pair(cols.bulk, cols.bulk, p);
            const double ln_b = std::log(frobenius_norm(nb));
            next.bulk = scaled(nb, std::exp(-ln_b));
            next.log_per_row += ln_b * static_cast<double>(next.width - 2);
        }
        cols = std::move(next);
    }

    // Final pair: power-iterate the factored transfer matrix instead of
    // materializing the (chi^2)^2 chain matrix.
    const Tensor& el = cols.left;   // [1, u0, m, d0]
    const Tensor& er = cols.right;  // [m, u1, 1, d1]
    const index_t c0 = el.dim(1), c1 = er.dim(1);
    if (el.dim(1) != el.dim(3) || er.dim(1) != er.dim(3))
        throw numeric_error("unbalanced transfer legs");
    const index_t dim = c0 * c1;
    auto apply = [&](const std::vector<double>& x) {
        Tensor xv({c0, c1}, x);
        Tensor t1 = contract(er, xv, {{3, 1}});          // [m, u1, 1, d0]
        Tensor t2 = contract(el, t1, {{2, 0}, {3, 3}});  // [1, u0, u1, 1]
        return std::vector<double>(t2.data(), t2.data() + t2.size());
    };
    const double log_lambda = log_dominant(apply, dim, 1e-13, 100000);
    const double per_row =
        log_lambda + cols.log_per_row - cap_log_norm(s.temperature);
    return -s.temperature * per_row / static_cast<double>(s.width);
}

}  // namespace

double power_iteration(const Tensor& matrix, double tol, index_t max_iters) {
    if (matrix.rank() != 2 || matrix.dim(0) != matrix.dim(1))
        throw shape_error("power_iteration requires a square matrix");
    if (!matrix.all_finite()) throw numeric_error("non-finite matrix");
    const index_t n = matrix.dim(0);
    const double* m = matrix.data();
    auto apply = [&](const std::vector<double>& x) {
        std::vector<double> y(n, 0.0);
        for (index_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (index_t j = 0; j < n; ++j) acc += m[i * n + j] * x[j];
            y[i] = acc;
        }
        return y;
    };
    return std::exp(log_dominant(apply, n, tol, max_iters));
}

double strip_free_energy(Method method, const StripSpec& s,
                         const TruncationPolicy& p) {
    check_spec(s);
    if (p.chi_max < 1) throw argument_error("chi_max must be >= 1");
    if (s.width == 1) {
        // single spin column: the chain transfer matrix is the bond matrix
        const double beta = 1.0 / s.temperature;
        Tensor m({2, 2},
                 {std::exp(beta), std::exp(-beta), std::exp(-beta), std::exp(beta)});
        return -s.temperature * std::log(power_iteration(m));
    }
    return (method == Method::ctrg) ? ctrg_strip(s, p) : trg_strip(s, p);
}

double strip_exact_free_energy(const StripSpec& s) {
    check_spec(s);
    const index_t w = s.width;
    if (w > 12) throw capacity_error("dense transfer matrix limited to width 12");
    const double beta = 1.0 / s.temperature;
    const index_t dim = index_t(1) << w;
    // Symmetric row-to-row transfer matrix: half the horizontal energy of
    // each row on either side of the vertical bonds.
    std::vector<double> horiz(dim, 0.0);
    for (index_t a = 0; a < dim; ++a) {
        double h = 0.0;
        for (index_t x = 0; x + 1 < w; ++x) {
            const int s1 = 1 - 2 * static_cast<int>((a >> x) & 1);
            const int s2 = 1 - 2 * static_cast<int>((a >> (x + 1)) & 1);
            h += s1 * s2;
        }
        horiz[a] = h;
    }
    Eigen::MatrixXd tm(dim, dim);
    for (index_t a = 0; a < dim; ++a) {
        for (index_t b = 0; b < dim; ++b) {
            double vert = 0.0;
            for (index_t x = 0; x < w; ++x) {
                const int s1 = 1 - 2 * static_cast<int>((a >> x) & 1);
                const int s2 = 1 - 2 * static_cast<int>((b >> x) & 1);
                vert += s1 * s2;
            }
            tm(a, b) = std::exp(beta * (0.5 * horiz[a] + vert + 0.5 * horiz[b]));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tm);
    const double lambda = es.eigenvalues().maxCoeff();
    if (!(lambda > 0.0)) throw numeric_error("non-positive transfer eigenvalue");
    return -s.temperature * std::log(lambda) / static_cast<double>(w);
}

}  // namespace ctrg::strip
