#ifndef CTRG_CORE_HPP
#define CTRG_CORE_HPP

#include <utility>
#include <vector>

#include "ctrg/ising.hpp"
#include "ctrg/tensor.hpp"

namespace ctrg::core {

// Bond-dimension cap. In exact mode the cap is ignored and every
// decomposition keeps its full numerical rank (singular values down to
// 1e-14 of the largest), so insertions change nothing beyond rounding.
struct TruncationPolicy {
    index_t chi_max = 16;
    bool exact = false;
};

enum class Side { below_left, above_right };

struct LedgerEntry {
    double log_norm;
    double multiplicity;
};

// State of the coarse-graining: a homogeneous bulk tensor plus one
// distinguished row and column whose intersection is kept split as a pair of
// rank-3 tensors sharing a diagonal leg.
//
// Leg orders: every rank-4 tensor is [left, up, right, down]. The row tensor
// carries grown legs horizontally, the column tensor vertically. The center
// pair is center_left[left, up, diag] and center_right[diag, right, down].
struct CoreState {
    Tensor bulk;
    Tensor row_core;
    Tensor col_core;
    Tensor center_left;
    Tensor center_right;
    index_t m = 0;  // current linear lattice size
    Side side = Side::below_left;
    std::vector<LedgerEntry> ledger;

    double ledger_sum() const;
};

struct IsometrySet {
    Tensor horizontal;  // compresses fused (chi*d) row-direction legs
    Tensor vertical;    // compresses fused (d*chi) column-direction legs
    Tensor center;      // compresses the fused diagonal leg pair
};

struct TruncationReport {
    double eps_horizontal = 0.0;
    double eps_vertical = 0.0;
    double eps_center = 0.0;
    index_t kept_horizontal = 0;
    index_t kept_vertical = 0;
    index_t kept_center = 0;

    double max_eps() const;
};

// Prepares the state for an L x L torus of copies of a0 (rank 4, all legs
// equal). a0 is normalized once and credited to the ledger with
// multiplicity L^2.
CoreState init_core(const Tensor& a0, index_t L, const TruncationPolicy& p);

// Splits a rank-4 tensor across the forward diagonal, grouping (left, up)
// against (right, down), singular values shared evenly between the factors.
// This is how the center pair and the consumed diagonal bulk tensors are
// produced. Returns {left[l,u,diag], right[diag,r,d]}.
std::pair<Tensor, Tensor> split_center(const Tensor& t,
                                       const TruncationPolicy& p);

// The five-tensor patch around the center for the current absorption side:
// row tensor, center pair, column tensor and the diagonally split bulk
// corner, contracted into one tensor. Free legs are ordered canonically:
// the pair compressed by the horizontal isometry first, then clockwise
// around the patch, ending with the pair compressed by the vertical
// isometry (below/left: left, up, right, down; above/right: right, down,
// left, up).
Tensor build_F(const CoreState& s);

// The half of the patch on the column-core side of the diagonal cut, with
// the two cut legs first: [diag_center, diag_corner, ext...]. This is the
// network whose row space the center isometry preserves.
Tensor build_half(const CoreState& s);

// Reference isometry computation from the materialized patch: horizontal /
// vertical isometries from the patch Gram over its leading / trailing leg
// pair, center isometry from the half-network Gram over its cut legs.
std::pair<IsometrySet, TruncationReport> compute_isometries(
    const Tensor& f_net, const Tensor& half_net, const TruncationPolicy& p);

// Same isometries computed without materializing the patch (the Gram
// matrices are assembled from the half-networks at O(chi^4) cost).
std::pair<IsometrySet, TruncationReport> step_isometries(
    const CoreState& s, const TruncationPolicy& p);

// One coarse-graining step: absorbs the adjacent bulk row and column into
// the core row/column, shrinking m by one and alternating sides. Each fresh
// core tensor is rescaled by its norm with ledger multiplicities m'-1 for
// the row and column tensors and 1 for the center pair.
std::pair<CoreState, TruncationReport> ctrg_iteration(const CoreState& s,
                                                      const TruncationPolicy& p);

// Exact contraction of the remaining 2 x 2 torus {center pair, row, column,
// bulk}; returns the log of the (positive) scalar. Combine with the ledger
// for the full log partition function.
double finalize_contract(const CoreState& s);

struct TorusResult {
    double ln_z = 0.0;
    double max_eps = 0.0;
    index_t steps = 0;
};

// Ledger-corrected ln Z of the L x L torus built from a0.
TorusResult logZ_torus(const Tensor& a0, index_t L, const TruncationPolicy& p);
// Convenience overload building the plaquette tensor for the Ising model.
TorusResult logZ_torus(const ising::ModelSpec& m, index_t L,
                       const TruncationPolicy& p);

struct Observables {
    double f = 0.0;  // free energy per spin
    double u = 0.0;  // internal energy per spin
};

// Free energy from lnZ at temperature T and internal energy by central
// difference on an inverse-temperature stencil beta*(1 -+ delta_rel).
// lnz_lo / lnz_hi are the values at the smaller / larger inverse temperature.
Observables observables_from_stencil(double T, double lnz_lo, double lnz_mid,
                                     double lnz_hi, double n_spins,
                                     double delta_rel = 1e-3);

}  // namespace ctrg::core

#endif
