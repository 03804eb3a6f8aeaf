#include "ctrg/trg.hpp"

#include <cmath>

namespace ctrg::trg {

namespace {

constexpr double kSvdRankCut = 1e-14;

// SVD split with singular values shared evenly, rank capped by the policy
// and the numerical rank.
std::pair<Tensor, Tensor> balanced_split(const Tensor& t, const IndexPartition& part,
                                         const TruncationPolicy& p) {
    const index_t cap = p.exact ? t.size() : p.chi_max;
    auto f = svd_split(t, part, cap);
    index_t k = static_cast<index_t>(f.singular_values.size());
    const double s0 = f.singular_values.empty() ? 0.0 : f.singular_values[0];
    while (k > 1 && f.singular_values[k - 1] <= s0 * kSvdRankCut) --k;

    const index_t kfull = f.left.dim(f.left.rank() - 1);
    std::vector<index_t> ldims(f.left.dims().begin(), f.left.dims().end() - 1);
    const index_t lrows = f.left.size() / kfull;
    ldims.push_back(k);
    Tensor left(ldims);
    for (index_t r = 0; r < lrows; ++r)
        for (index_t c = 0; c < k; ++c)
            left.data()[r * k + c] =
                f.left.data()[r * kfull + c] * std::sqrt(f.singular_values[c]);

    std::vector<index_t> rdims(f.right.dims().begin() + 1, f.right.dims().end());
    const index_t rcols = f.right.size() / kfull;
    rdims.insert(rdims.begin(), k);
    Tensor right(rdims);
    for (index_t r = 0; r < k; ++r)
        for (index_t c = 0; c < rcols; ++c)
            right.data()[r * rcols + c] =
                f.right.data()[r * rcols + c] * std::sqrt(f.singular_values[r]);
    return {std::move(left), std::move(right)};
}

}  // namespace

double TrgState::ledger_sum() const {
    double acc = 0.0;
    for (const auto& e : ledger) acc += e.log_norm * e.multiplicity;
    return acc;
}

TrgState init_trg(const Tensor& a0, index_t L) {
    if (a0.rank() != 4) throw shape_error("bulk tensor must be rank 4");
    if (a0.dim(0) != a0.dim(2) || a0.dim(1) != a0.dim(3))
        throw shape_error("opposite legs must match");
    if (L < 2 || (L & (L - 1)) != 0)
        throw argument_error("torus side must be a power of two >= 2");
    if (!a0.all_finite()) throw numeric_error("bulk tensor has non-finite entries");

    TrgState s;
    const double norm = frobenius_norm(a0);
    if (!(norm > 0.0)) throw numeric_error("bulk tensor is zero");
    s.tensor = scaled(a0, 1.0 / norm);
    s.copies = L * L;
    s.ledger.push_back({std::log(norm), static_cast<double>(L * L)});
    return s;
}

TrgState trg_step(const TrgState& s, const TruncationPolicy& p) {
    if (s.copies < 2) throw state_error("fewer than two tensors left");

    // Sites of one sublattice split between (left,up) and (right,down), the
    // other between (up,right) and (down,left); the four half-tensors around
    // each kept plaquette contract into the coarse tensor.
    auto [pl, q] = balanced_split(s.tensor, {{0, 1}, {2, 3}}, p);  // P[l,u,a] Q[a,r,d]
    auto [ro, so] = balanced_split(s.tensor, {{1, 2}, {3, 0}}, p); // R[u,r,b] S[b,d,l]

    // Around a kept plaquette: Q from its upper-left corner, S upper-right,
    // R lower-left, P lower-right. Internal bonds: Q.r-S.l, Q.d-R.u,
    // S.d-P.u, R.r-P.l. The four split bonds become the coarse legs,
    // pointing to the four diagonal neighbours.
    Tensor qs = contract(q, so, {{1, 2}});    // [alpha, b, beta, c]
    Tensor rp = contract(ro, pl, {{1, 0}});   // [b, gamma, c, delta]
    Tensor next = contract(qs, rp, {{1, 0}, {3, 2}});  // [alpha, beta, gamma, delta]

    // alpha -> up-left, beta -> up-right, gamma -> down-left, delta -> down-right
    Tensor coarse = permute_reshape(next, {0, 1, 3, 2});  // [l, u, r, d]

    TrgState out;
    out.copies = s.copies / 2;
    out.steps = s.steps + 1;
    out.rotated = !s.rotated;
    out.ledger = s.ledger;
    const double norm = frobenius_norm(coarse);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw numeric_error("degenerate coarse tensor");
    out.tensor = scaled(coarse, 1.0 / norm);
    out.ledger.push_back({std::log(norm), static_cast<double>(out.copies)});
    return out;
}

double logZ_torus_trg(const Tensor& a0, index_t L, const TruncationPolicy& p) {
    TrgState s = init_trg(a0, L);
    while (s.copies > 1) s = trg_step(s, p);
    // double trace of the last tensor
    double v = 0.0;
    for (index_t x = 0; x < s.tensor.dim(0); ++x)
        for (index_t y = 0; y < s.tensor.dim(1); ++y)
            v += s.tensor.at({x, y, x, y});
    if (!(v > 0.0) || !std::isfinite(v))
        throw numeric_error("non-positive final trace");
    return s.ledger_sum() + std::log(v);
}

double logZ_torus_trg(const ising::ModelSpec& m, index_t L,
                      const TruncationPolicy& p) {
    return logZ_torus_trg(ising::plaquette_tensor(m), L, p);
}

}  // namespace ctrg::trg
