#ifndef CTRG_TRG_HPP
#define CTRG_TRG_HPP

#include <vector>

#include "ctrg/core.hpp"
#include "ctrg/ising.hpp"
#include "ctrg/tensor.hpp"

namespace ctrg::trg {

using core::LedgerEntry;
using core::TruncationPolicy;

// State of the standard coarse-graining baseline on a homogeneous torus:
// a single representative tensor, the number of copies remaining, and the
// running normalization ledger. Tensor count halves per step.
struct TrgState {
    Tensor tensor;          // [left, up, right, down]
    index_t copies = 0;     // tensors remaining on the torus
    index_t steps = 0;
    bool rotated = false;   // sublattice parity: flips every step
    std::vector<LedgerEntry> ledger;

    double ledger_sum() const;
};

TrgState init_trg(const Tensor& a0, index_t L);

// One coarse-graining step: every tensor is split by SVD along one of the
// two alternating diagonals (cap chi), and four 3-leg factors around each
// kept plaquette recombine into the coarse tensor. Copies halve; the fresh
// tensor is rescaled with ledger credit.
TrgState trg_step(const TrgState& s, const TruncationPolicy& p);

// Ledger-corrected ln Z of the L x L torus (L a power of two >= 2) after
// log2(L^2) halvings and a final double trace.
double logZ_torus_trg(const Tensor& a0, index_t L, const TruncationPolicy& p);
double logZ_torus_trg(const ising::ModelSpec& m, index_t L,
                      const TruncationPolicy& p);

}  // namespace ctrg::trg

#endif
