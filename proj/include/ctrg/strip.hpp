#ifndef CTRG_STRIP_HPP
#define CTRG_STRIP_HPP

#include "ctrg/core.hpp"
#include "ctrg/ising.hpp"
#include "ctrg/tensor.hpp"

namespace ctrg::strip {

using core::TruncationPolicy;

// Infinite-length Ising strip of finite width, open across the width.
// Width counts spins: the strip is encoded as `width` columns of per-spin
// tensors, with the dangling edge legs closed by free-boundary summation.
struct StripSpec {
    index_t width = 2;
    double temperature = 1.0;
};

enum class Method { ctrg, trg };

// Dominant eigenvalue of a square non-negative matrix by power iteration
// from the all-ones start vector.
double power_iteration(const Tensor& matrix, double tol = 1e-13,
                       index_t max_iters = 100000);

// Free energy per spin of the infinite strip.
//
// ctrg: the leftmost column is the core; bulk columns are absorbed into it
// one at a time, each truncated by an isometry from the Gram of the
// column-local patch (core column with the adjacent bulk column). After
// width-1 absorptions the surviving column is the chain transfer matrix.
//
// trg: column pairs are merged and their fused transfer legs truncated,
// halving the width per sweep (width must be a power of two); the final
// pair is contracted into the chain transfer matrix. Both finish with the
// dominant transfer eigenvalue.
double strip_free_energy(Method method, const StripSpec& s,
                         const TruncationPolicy& p);

// Exact f per spin from dense diagonalization of the row-to-row transfer
// matrix over the 2^width spin-row space. Oracle for small widths.
double strip_exact_free_energy(const StripSpec& s);

}  // namespace ctrg::strip

#endif
