#include "ctrg/core.hpp"

#include <algorithm>
#include <cmath>

namespace ctrg::core {

namespace {

constexpr double kSvdRankCut = 1e-14;   // relative singular-value floor
constexpr double kEigRankCut = 1e-28;   // relative eigenvalue floor (~ sigma^2)

struct CornerSplit {
    Tensor left;   // [left, up, diag]
    Tensor right;  // [diag, right, down]
};

// Splits a rank-4 tensor across the forward diagonal, grouping (left, up)
// against (right, down), with the singular values shared evenly between the
// two factors. Rank is capped by the policy and by the numerical rank.
CornerSplit diagonal_split(const Tensor& t, const TruncationPolicy& p) {
    const index_t cap =
        p.exact ? std::min(t.dim(0) * t.dim(1), t.dim(2) * t.dim(3)) : p.chi_max;
    auto f = svd_split(t, {{0, 1}, {2, 3}}, cap);
    index_t k = static_cast<index_t>(f.singular_values.size());
    const double s0 = f.singular_values.empty() ? 0.0 : f.singular_values[0];
    while (k > 1 && f.singular_values[k - 1] <= s0 * kSvdRankCut) --k;

    Tensor left({t.dim(0), t.dim(1), k});
    Tensor right({k, t.dim(2), t.dim(3)});
    const index_t lrows = t.dim(0) * t.dim(1);
    const index_t rcols = t.dim(2) * t.dim(3);
    const index_t kfull = f.left.dim(2);
    for (index_t r = 0; r < lrows; ++r)
        for (index_t c = 0; c < k; ++c)
            left.data()[r * k + c] =
                f.left.data()[r * kfull + c] * std::sqrt(f.singular_values[c]);
    for (index_t r = 0; r < k; ++r)
        for (index_t c = 0; c < rcols; ++c)
            right.data()[r * rcols + c] =
                f.right.data()[r * rcols + c] * std::sqrt(f.singular_values[r]);
    return {std::move(left), std::move(right)};
}

struct GramTrunc {
    Tensor isometry;  // [n, kept]
    double eps = 0.0;
    index_t kept = 0;
};

// Dominant eigenvectors of a (numerically symmetric) Gram matrix, with the
// truncation error sqrt(sum of discarded eigenvalues).
GramTrunc gram_isometry(const Tensor& gram, const TruncationPolicy& p) {
    const index_t n = gram.dim(0);
    auto eig = truncated_eig(gram, n);
    const double l0 = eig.eigenvalues.empty() ? 0.0 : std::abs(eig.eigenvalues[0]);
    index_t rank = n;
    while (rank > 1 && std::abs(eig.eigenvalues[rank - 1]) <= l0 * kEigRankCut)
        --rank;
    const index_t kept = p.exact ? rank : std::min(rank, p.chi_max);

    // Discarded weight below the eigensolver's noise floor (~ n * machine
    // epsilon relative to the leading eigenvalue) does not count as
    // truncation error.
    const double noise = l0 * 2.5e-16 * static_cast<double>(n);
    double tail = 0.0;
    for (index_t i = kept; i < n; ++i)
        if (eig.eigenvalues[i] > noise) tail += eig.eigenvalues[i];

    Tensor iso({n, kept});
    for (index_t r = 0; r < n; ++r)
        for (index_t c = 0; c < kept; ++c)
            iso.data()[r * kept + c] = eig.isometry.data()[r * n + c];
    return {std::move(iso), std::sqrt(std::max(0.0, tail)), kept};
}

// Half-networks of the current patch, materialized; used by the reference
// operations (moderate bond dimensions only). Layout:
//   upper[h0, h1, v0, v1, kc, kb]   (external h-pair, v-pair, then cut legs)
//   lower[kc, kb, h0, h1, v0, v1]
struct HalfNetworks {
    Tensor upper;
    Tensor lower;
};

HalfNetworks build_halves(const CoreState& s, const CornerSplit& corner) {
    if (s.side == Side::below_left) {
        // upper = {row_core, center_left, corner.left}
        //   row_core[a,p,x,m], center_left[x,q,kc], corner.left[b,m,kb]
        Tensor t = contract(s.row_core, s.center_left, {{2, 0}});  // [a,p,m,q,kc]
        t = contract(t, corner.left, {{2, 1}});  // [a,p,q,kc,b,kb]
        Tensor upper = permute_reshape(t, {0, 4, 1, 2, 3, 5});  // [a,b,p,q,kc,kb]

        // lower = {center_right, col_core, corner.right}
        //   center_right[kc,r1,y], col_core[n,y,r2,s2], corner.right[kb,n,s1]
        Tensor u = contract(s.center_right, s.col_core, {{2, 1}});  // [kc,r1,n,r2,s2]
        u = contract(u, corner.right, {{2, 1}});  // [kc,r1,r2,s2,kb,s1]
        Tensor lower = permute_reshape(u, {0, 4, 1, 2, 5, 3});  // [kc,kb,r1,r2,s1,s2]
        return {std::move(upper), std::move(lower)};
    }
    // above_right
    // upper = {col_core, corner.left, center_left}
    //   col_core[l0,u0,n,w], corner.left[n,u1,kb], center_left[l1,w,kc]
    Tensor t = contract(s.col_core, corner.left, {{2, 0}});  // [l0,u0,w,u1,kb]
    t = contract(t, s.center_left, {{2, 1}});                // [l0,u0,u1,kb,l1,kc]
    Tensor upper = permute_reshape(t, {0, 4, 1, 2, 5, 3});   // [l0,l1,u0,u1,kc,kb]

    // lower = {center_right, corner.right, row_core}
    //   center_right[kc,x,s0], row_core[x,m,r1,s1], corner.right[kb,r0,m]
    Tensor u = contract(s.center_right, s.row_core, {{1, 0}});  // [kc,s0,m,r1,s1]
    u = contract(u, corner.right, {{2, 2}});                    // [kc,s0,r1,s1,kb,r0]
    Tensor lower = permute_reshape(u, {0, 4, 5, 2, 1, 3});      // [kc,kb,r0,r1,s0,s1]
    return {std::move(upper), std::move(lower)};
}

// Copies the hyperplane of `t` with `axis` fixed to `idx`.
Tensor slice_axis(const Tensor& t, int axis, index_t idx) {
    std::vector<index_t> dims = t.dims();
    dims.erase(dims.begin() + axis);
    if (dims.empty()) dims.push_back(1);
    Tensor out(dims);

    std::vector<index_t> strides(t.rank(), 1);
    for (int i = t.rank() - 2; i >= 0; --i)
        strides[i] = strides[i + 1] * t.dim(i + 1);
    std::vector<index_t> odims, osteps;
    for (int ax = 0; ax < t.rank(); ++ax) {
        if (ax == axis) continue;
        odims.push_back(t.dim(ax));
        osteps.push_back(strides[ax]);
    }
    const int r = static_cast<int>(odims.size());
    std::vector<index_t> cnt(r, 0);
    index_t off = idx * strides[axis];
    const double* src = t.data();
    double* dst = out.data();
    for (index_t lin = 0; lin < out.size(); ++lin) {
        dst[lin] = src[off];
        for (int ax = r - 1; ax >= 0; --ax) {
            off += osteps[ax];
            if (++cnt[ax] < odims[ax]) break;
            off -= osteps[ax] * odims[ax];
            cnt[ax] = 0;
        }
    }
    return out;
}

// 180-degree rotation of a lattice tensor: (l,u,r,d) -> (r,d,l,u).
Tensor rot4(const Tensor& t) { return permute_reshape(t, {2, 3, 0, 1}); }

// Applies an isometry to the fused leading pair and the fused pair at axes
// (2,3) of a four-group tensor [(p0,p1), x, (q0,q1), y] -> [a, x, b, y].
Tensor sandwich(const Tensor& grouped, const Tensor& iso) {
    Tensor t = contract(iso, grouped, {{0, 0}});   // [a, x, (q), y]
    t = contract(t, iso, {{2, 0}});                // [a, x, y, b]
    return permute_reshape(t, {0, 1, 3, 2});       // [a, x, b, y]
}

double checked_log_norm(const Tensor& t, const char* what) {
    const double n = frobenius_norm(t);
    if (!(n > 0.0) || !std::isfinite(n))
        throw numeric_error(std::string("degenerate core tensor: ") + what);
    return std::log(n);
}

// ---------------------------------------------------------------------------
// Step engine, written for the below/left orientation. The isometry Grams
// are assembled by pairing the patch tensors outward from the cut, so no
// intermediate ever carries more than one diagonal corner leg at full size.
// The above/right side runs the same engine on the 180-degree rotated state.
// ---------------------------------------------------------------------------

struct EngineInputs {
    Tensor row;   // A_h[a, p, x, m]
    Tensor cl;    // C_l[x, q, k]
    Tensor cr;    // C_r[k, r1, y]
    Tensor col;   // A_v[n, y, r2, s2]
    Tensor bulk;  // A0
};

struct EngineIsometries {
    IsometrySet iso;
    Tensor yh_other;  // for the center's horizontal pair away from absorption
    Tensor yv_other;  // likewise vertical
    TruncationReport report;
    CornerSplit corner;
    Tensor t1;  // row x center_left   [a, p, m, q, k]
    Tensor t2;  // center_right x col  [k, r1, n, r2, s2]
};

EngineIsometries engine_isometries(const EngineInputs& in,
                                   const TruncationPolicy& p) {
    EngineIsometries out;
    out.corner = diagonal_split(in.bulk, p);
    const Tensor& bl = out.corner.left;   // [b, m, j]
    const Tensor& br = out.corner.right;  // [j, n, s1]
    const index_t q_dim = bl.dim(2);
    const index_t k_dim = in.cl.dim(2);

    out.t1 = contract(in.row, in.cl, {{2, 0}});  // [a, p, m, q, k]
    out.t2 = contract(in.cr, in.col, {{2, 1}});  // [k, r1, n, r2, s2]

    // cut Grams of both halves, one corner block at a time
    Tensor ab = contract(in.row, bl, {{3, 1}});            // [a, p, x, b, j]
    Tensor g_ab = contract(ab, ab, {{0, 0}, {1, 1}, {3, 3}});  // [x, j, x', j']
    Tensor ba = contract(br, in.col, {{1, 0}});            // [j, s1, y, r2, s2]
    Tensor g_ba = contract(ba, ba, {{1, 1}, {3, 3}, {4, 4}});  // [j, y, j', y']

    Tensor d_lower({k_dim, q_dim, k_dim, q_dim});
    Tensor d_upper({k_dim, q_dim, k_dim, q_dim});
    for (index_t j = 0; j < q_dim; ++j) {
        Tensor gj = slice_axis(g_ba, 0, j);            // [y, j', y']
        Tensor t = contract(in.cr, gj, {{2, 0}});      // [k, r1, j', y']
        Tensor dj = contract(t, in.cr, {{1, 1}, {3, 2}});  // [k, j', k']
        for (index_t k = 0; k < k_dim; ++k)
            for (index_t jb = 0; jb < q_dim; ++jb)
                for (index_t kb = 0; kb < k_dim; ++kb)
                    d_lower.at({k, j, kb, jb}) = dj.at({k, jb, kb});

        Tensor gju = slice_axis(g_ab, 1, j);           // [x, x', j']
        Tensor tu = contract(in.cl, gju, {{0, 0}});    // [q, k, x', j']
        Tensor dju = contract(tu, in.cl, {{0, 1}, {2, 0}});  // [k, j', k']
        for (index_t k = 0; k < k_dim; ++k)
            for (index_t jb = 0; jb < q_dim; ++jb)
                for (index_t kb = 0; kb < k_dim; ++kb)
                    d_upper.at({k, j, kb, jb}) = dju.at({k, jb, kb});
    }

    // patch Gram over the absorbed-side horizontal pair (a, b)
    const index_t a_dim = in.row.dim(0), b_dim = bl.dim(0);
    Tensor gram_h4({a_dim, b_dim, a_dim, b_dim});
    for (index_t j = 0; j < q_dim; ++j) {
        Tensor blj = slice_axis(bl, 2, j);  // [b, m]
        for (index_t jb = 0; jb < q_dim; ++jb) {
            Tensor dblk = slice_axis(slice_axis(d_lower, 3, jb), 1, j);  // [k, k']
            Tensor u1 = contract(in.cl, dblk, {{2, 0}});        // [x, q, k']
            Tensor e = contract(u1, in.cl, {{1, 1}, {2, 2}});   // [x, x']
            Tensor f1 = contract(in.row, e, {{2, 0}});          // [a, p, m, x']
            Tensor g1 = contract(f1, in.row, {{1, 1}, {3, 2}}); // [a, m, a', m']
            Tensor bljb = slice_axis(bl, 2, jb);
            Tensor tt = contract(g1, blj, {{1, 1}});    // [a, a', m', b]
            tt = contract(tt, bljb, {{2, 1}});          // [a, a', b, b']
            gram_h4 = add(gram_h4, permute_reshape(tt, {0, 2, 1, 3}));
        }
    }
    Tensor gram_h = permute_reshape(gram_h4, {0, 1, 2, 3}, {2, 2});

    // patch Gram over the absorbed-side vertical pair (s1, s2)
    const index_t s1_dim = br.dim(2), s2_dim = in.col.dim(3);
    Tensor gram_v4({s1_dim, s2_dim, s1_dim, s2_dim});
    for (index_t j = 0; j < q_dim; ++j) {
        Tensor brj = slice_axis(br, 0, j);  // [n, s1]
        for (index_t jb = 0; jb < q_dim; ++jb) {
            Tensor dblk = slice_axis(slice_axis(d_upper, 3, jb), 1, j);  // [k, k']
            Tensor u2 = contract(in.cr, dblk, {{0, 0}});        // [r1, y, k']
            Tensor e2 = contract(u2, in.cr, {{0, 1}, {2, 0}});  // [y, y']
            Tensor f2 = contract(in.col, e2, {{1, 0}});         // [n, r2, s2, y']
            Tensor g2 = contract(f2, in.col, {{1, 2}, {3, 1}}); // [n, s2, n', s2']
            Tensor brjb = slice_axis(br, 0, jb);
            Tensor tt = contract(brj, g2, {{0, 0}});  // [s1, s2, n', s2']
            tt = contract(tt, brjb, {{2, 0}});        // [s1, s2, s2', s1']
            gram_v4 = add(gram_v4, permute_reshape(tt, {0, 1, 3, 2}));
        }
    }
    Tensor gram_v = permute_reshape(gram_v4, {0, 1, 2, 3}, {2, 2});

    GramTrunc th = gram_isometry(gram_h, p);
    GramTrunc tv = gram_isometry(gram_v, p);
    // center isometry from the half containing the column core
    GramTrunc tc =
        gram_isometry(permute_reshape(d_lower, {0, 1, 2, 3}, {2, 2}), p);

    // center pairs away from the absorption side: same isometry when the
    // fused dimension matches the main one (homogeneous row/column), the
    // trivial isometry for a capped edge pair of dimension one
    const index_t h_other = in.cr.dim(1) * in.col.dim(2);
    if (h_other == th.isometry.dim(0)) {
        out.yh_other = th.isometry;
    } else if (h_other == 1) {
        out.yh_other = Tensor({1, 1}, {1.0});
    } else {
        throw argument_error("unsupported patch asymmetry (horizontal)");
    }
    const index_t v_other = in.row.dim(1) * in.cl.dim(1);
    if (v_other == tv.isometry.dim(0)) {
        out.yv_other = tv.isometry;
    } else if (v_other == 1) {
        out.yv_other = Tensor({1, 1}, {1.0});
    } else {
        throw argument_error("unsupported patch asymmetry (vertical)");
    }

    out.report.eps_horizontal = th.eps;
    out.report.eps_vertical = tv.eps;
    out.report.eps_center = tc.eps;
    out.report.kept_horizontal = th.kept;
    out.report.kept_vertical = tv.kept;
    out.report.kept_center = tc.kept;
    out.iso = {std::move(th.isometry), std::move(tv.isometry),
               std::move(tc.isometry)};
    return out;
}

struct EngineStep {
    Tensor new_row, new_col, new_cl, new_cr;
    TruncationReport report;
};

EngineStep engine_step(const EngineInputs& in, const TruncationPolicy& p) {
    EngineIsometries ei = engine_isometries(in, p);
    const Tensor& yh = ei.iso.horizontal;
    const Tensor& yv = ei.iso.vertical;
    const Tensor& yc = ei.iso.center;
    const index_t q_dim = ei.corner.left.dim(2);
    const index_t k_dim = in.cl.dim(2);
    Tensor yc3 = with_dims(yc, {k_dim, q_dim, yc.dim(1)});

    EngineStep out;
    out.report = ei.report;

    // row merge: core row tensor over the absorbed bulk row tensor
    Tensor t = contract(in.row, in.bulk, {{3, 1}});  // [a,p,x, b,y,n]
    t = permute_reshape(t, {0, 3, 1, 2, 4, 5}, {2, 1, 2, 1});
    out.new_row = sandwich(t, yh);  // [l', up, r', down]

    // column merge: absorbed bulk column tensor left of the core column
    Tensor v = contract(in.bulk, in.col, {{2, 0}});  // [e,u1,w1, u2,g,w2]
    v = permute_reshape(v, {1, 3, 0, 2, 5, 4}, {2, 1, 2, 1});
    Tensor nv = sandwich(v, yv);                         // [u', left, d', right]
    out.new_col = permute_reshape(nv, {1, 0, 3, 2});     // [left, u', right, d']

    // center-left from {row, center_left, corner.left}
    Tensor t1p = permute_reshape(ei.t1, {1, 3, 0, 2, 4}, {2, 1, 1, 1});
    Tensor tvv = contract(ei.yv_other, t1p, {{0, 0}});  // [beta, a, m, k]
    Tensor acc({tvv.dim(0), in.row.dim(0), ei.corner.left.dim(0), yc.dim(1)});
    for (index_t j = 0; j < q_dim; ++j) {
        Tensor blj = slice_axis(ei.corner.left, 2, j);   // [b, m]
        Tensor ycj = slice_axis(yc3, 1, j);              // [k, gamma]
        Tensor tb = contract(tvv, blj, {{2, 1}});        // [beta, a, k, b]
        acc = add(acc, contract(tb, ycj, {{2, 0}}));     // [beta, a, b, gamma]
    }
    Tensor clt = permute_reshape(acc, {1, 2, 0, 3}, {2, 1, 1});  // [(ab), beta, g]
    out.new_cl = contract(yh, clt, {{0, 0}});  // [alpha, beta, gamma]

    // center-right from {center_right, col, corner.right}
    Tensor t2p = permute_reshape(ei.t2, {1, 3, 0, 2, 4}, {2, 1, 1, 1});
    Tensor tw = contract(ei.yh_other, t2p, {{0, 0}});  // [beta', k, n, s2]
    Tensor acc2({tw.dim(0), in.col.dim(3), ei.corner.right.dim(2), yc.dim(1)});
    for (index_t j = 0; j < q_dim; ++j) {
        Tensor brj = slice_axis(ei.corner.right, 0, j);  // [n, s1]
        Tensor ycj = slice_axis(yc3, 1, j);
        Tensor tb2 = contract(tw, brj, {{2, 0}});        // [beta', k, s2, s1]
        acc2 = add(acc2, contract(tb2, ycj, {{1, 0}}));  // [beta', s2, s1, gamma]
    }
    Tensor crt = permute_reshape(acc2, {2, 1, 0, 3}, {2, 1, 1});  // [(s), b', g]
    Tensor cr = contract(yv, crt, {{0, 0}});    // [alpha', beta', gamma]
    out.new_cr = permute_reshape(cr, {2, 1, 0});  // [gamma, beta', alpha']
    return out;
}

EngineInputs oriented_inputs(const CoreState& s) {
    if (s.side == Side::below_left)
        return {s.row_core, s.center_left, s.center_right, s.col_core, s.bulk};
    // rotate the lattice by 180 degrees: the above/right absorption becomes
    // a below/left absorption of the rotated state
    return {rot4(s.row_core), permute_reshape(s.center_right, {1, 2, 0}),
            permute_reshape(s.center_left, {2, 0, 1}), rot4(s.col_core),
            rot4(s.bulk)};
}

}  // namespace

double CoreState::ledger_sum() const {
    double acc = 0.0;
    for (const auto& e : ledger) acc += e.log_norm * e.multiplicity;
    return acc;
}

double TruncationReport::max_eps() const {
    return std::max(eps_horizontal, std::max(eps_vertical, eps_center));
}

std::pair<Tensor, Tensor> split_center(const Tensor& t,
                                       const TruncationPolicy& p) {
    if (t.rank() != 4) throw shape_error("split_center requires a rank-4 tensor");
    CornerSplit split = diagonal_split(t, p);
    return {std::move(split.left), std::move(split.right)};
}

CoreState init_core(const Tensor& a0, index_t L, const TruncationPolicy& p) {
    if (a0.rank() != 4) throw shape_error("bulk tensor must be rank 4");
    const index_t d = a0.dim(0);
    for (int ax = 1; ax < 4; ++ax)
        if (a0.dim(ax) != d) throw shape_error("bulk tensor legs must all match");
    if (L < 2) throw argument_error("lattice size must be >= 2");
    if (!a0.all_finite()) throw numeric_error("bulk tensor has non-finite entries");
    if (p.chi_max < 1) throw argument_error("chi_max must be >= 1");

    CoreState s;
    const double norm = frobenius_norm(a0);
    if (!(norm > 0.0)) throw numeric_error("bulk tensor is zero");
    s.bulk = scaled(a0, 1.0 / norm);
    s.ledger.push_back({std::log(norm), static_cast<double>(L * L)});
    s.row_core = s.bulk;
    s.col_core = s.bulk;
    CornerSplit center = diagonal_split(s.bulk, p);
    s.center_left = std::move(center.left);
    s.center_right = std::move(center.right);
    s.m = L;
    s.side = Side::below_left;
    return s;
}

Tensor build_F(const CoreState& s) {
    TruncationPolicy exact{1, true};
    CornerSplit corner = diagonal_split(s.bulk, exact);
    HalfNetworks halves = build_halves(s, corner);
    // Canonical order: the pair the horizontal isometry compresses first,
    // then clockwise around the patch, ending with the vertical pair.
    // below/left:  [left0,left1, up0,up1, right0,right1, down0,down1]
    // above/right: [right0,right1, down0,down1, left0,left1, up0,up1]
    if (s.side == Side::below_left)
        return contract(halves.upper, halves.lower, {{4, 0}, {5, 1}});
    return contract(halves.lower, halves.upper, {{0, 4}, {1, 5}});
}

Tensor build_half(const CoreState& s) {
    TruncationPolicy exact{1, true};
    CornerSplit corner = diagonal_split(s.bulk, exact);
    HalfNetworks halves = build_halves(s, corner);
    if (s.side == Side::below_left) return halves.lower;
    return permute_reshape(halves.upper, {4, 5, 0, 1, 2, 3});
}

std::pair<IsometrySet, TruncationReport> compute_isometries(
    const Tensor& f_net, const Tensor& half_net, const TruncationPolicy& p) {
    if (f_net.rank() != 8) throw shape_error("patch tensor must have 8 legs");
    if (half_net.rank() != 6) throw shape_error("half network must have 6 legs");
    if (!f_net.all_finite() || !half_net.all_finite())
        throw numeric_error("non-finite network");

    Tensor gh = contract(
        f_net, f_net, {{2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {7, 7}});
    Tensor gv = contract(
        f_net, f_net, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}});
    Tensor gc = contract(half_net, half_net, {{2, 2}, {3, 3}, {4, 4}, {5, 5}});

    GramTrunc th = gram_isometry(permute_reshape(gh, {0, 1, 2, 3}, {2, 2}), p);
    GramTrunc tv = gram_isometry(permute_reshape(gv, {0, 1, 2, 3}, {2, 2}), p);
    GramTrunc tc = gram_isometry(permute_reshape(gc, {0, 1, 2, 3}, {2, 2}), p);

    IsometrySet iso{std::move(th.isometry), std::move(tv.isometry),
                    std::move(tc.isometry)};
    TruncationReport rep;
    rep.eps_horizontal = th.eps;
    rep.eps_vertical = tv.eps;
    rep.eps_center = tc.eps;
    rep.kept_horizontal = th.kept;
    rep.kept_vertical = tv.kept;
    rep.kept_center = tc.kept;
    return {std::move(iso), rep};
}

std::pair<IsometrySet, TruncationReport> step_isometries(
    const CoreState& s, const TruncationPolicy& p) {
    EngineIsometries ei = engine_isometries(oriented_inputs(s), p);
    return {std::move(ei.iso), ei.report};
}

std::pair<CoreState, TruncationReport> ctrg_iteration(const CoreState& s,
                                                      const TruncationPolicy& p) {
    if (s.m < 3)
        throw state_error("no bulk row/column left to absorb; finalize instead");

    EngineStep step = engine_step(oriented_inputs(s), p);

    Tensor new_row, new_col, new_cl, new_cr;
    if (s.side == Side::below_left) {
        new_row = std::move(step.new_row);
        new_col = std::move(step.new_col);
        new_cl = std::move(step.new_cl);
        new_cr = std::move(step.new_cr);
    } else {
        // rotate the refreshed tensors back
        new_row = rot4(step.new_row);
        new_col = rot4(step.new_col);
        new_cl = permute_reshape(step.new_cr, {1, 2, 0});
        new_cr = permute_reshape(step.new_cl, {2, 0, 1});
    }

    CoreState out;
    out.bulk = s.bulk;
    out.m = s.m - 1;
    out.side =
        (s.side == Side::below_left) ? Side::above_right : Side::below_left;
    out.ledger = s.ledger;

    const double mult = static_cast<double>(out.m - 1);
    const double ln_row = checked_log_norm(new_row, "row");
    out.row_core = scaled(new_row, std::exp(-ln_row));
    out.ledger.push_back({ln_row, mult});
    const double ln_col = checked_log_norm(new_col, "column");
    out.col_core = scaled(new_col, std::exp(-ln_col));
    out.ledger.push_back({ln_col, mult});
    const double ln_cl = checked_log_norm(new_cl, "center-left");
    const double ln_cr = checked_log_norm(new_cr, "center-right");
    out.center_left = scaled(new_cl, std::exp(-ln_cl));
    out.center_right = scaled(new_cr, std::exp(-ln_cr));
    out.ledger.push_back({ln_cl + ln_cr, 1.0});

    return {std::move(out), step.report};
}

double finalize_contract(const CoreState& s) {
    if (s.m != 2) throw state_error("finalize requires m == 2");
    Tensor center = contract(s.center_left, s.center_right, {{2, 0}});
    // [l,u,r,d]
    Tensor t1 = contract(center, s.row_core, {{0, 2}, {2, 0}});  // [b,e,p,q]
    Tensor t2 = contract(s.col_core, s.bulk, {{0, 2}, {2, 0}});  // [e,b,q,p]
    Tensor v = contract(t1, t2, {{0, 1}, {1, 0}, {2, 3}, {3, 2}});
    const double val = v.value();
    if (!(val > 0.0) || !std::isfinite(val))
        throw numeric_error("non-positive final contraction");
    return std::log(val);
}

TorusResult logZ_torus(const Tensor& a0, index_t L, const TruncationPolicy& p) {
    CoreState s = init_core(a0, L, p);
    TorusResult res;
    while (s.m > 2) {
        auto [next, rep] = ctrg_iteration(s, p);
        s = std::move(next);
        res.max_eps = std::max(res.max_eps, rep.max_eps());
        ++res.steps;
    }
    res.ln_z = s.ledger_sum() + finalize_contract(s);
    return res;
}

TorusResult logZ_torus(const ising::ModelSpec& m, index_t L,
                       const TruncationPolicy& p) {
    return logZ_torus(ising::plaquette_tensor(m), L, p);
}

Observables observables_from_stencil(double T, double lnz_lo, double lnz_mid,
                                     double lnz_hi, double n_spins,
                                     double delta_rel) {
    const double beta = 1.0 / T;
    Observables obs;
    obs.f = -T * lnz_mid / n_spins;
    obs.u = -(lnz_hi - lnz_lo) / (2.0 * beta * delta_rel * n_spins);
    return obs;
}

}  // namespace ctrg::core
