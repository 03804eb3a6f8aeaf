#ifndef CTRG_TENSOR_HPP
#define CTRG_TENSOR_HPP

#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

#include "ctrg/errors.hpp"

namespace ctrg {

using index_t = std::int64_t;

// Dense tensor of doubles in row-major layout over the listed index order.
// Rank 0 is a scalar. All coarse-graining modules are built on this type.
class Tensor {
  public:
    Tensor() : dims_{}, data_(1, 0.0) {}
    explicit Tensor(std::vector<index_t> dims);
    Tensor(std::vector<index_t> dims, std::vector<double> data);

    static Tensor scalar(double value);
    // Filled with i.i.d. uniform [-1,1) entries from a fixed-seed generator.
    static Tensor random(std::vector<index_t> dims, std::uint64_t seed);

    int rank() const { return static_cast<int>(dims_.size()); }
    const std::vector<index_t>& dims() const { return dims_; }
    index_t dim(int axis) const { return dims_.at(axis); }
    index_t size() const { return static_cast<index_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& at(std::initializer_list<index_t> idx);
    double at(std::initializer_list<index_t> idx) const;

    double value() const;  // rank-0 access
    bool all_finite() const;

  private:
    std::vector<index_t> dims_;
    std::vector<double> data_;
};

// Splits a tensor's index positions into a row group and a column group.
struct IndexPartition {
    std::vector<int> left;
    std::vector<int> right;
};

struct SvdFactors {
    Tensor left;                          // [left dims..., k], orthonormal columns
    std::vector<double> singular_values;  // kept values, non-increasing
    Tensor right;                         // [k, right dims...], orthonormal rows
};

struct EigFactors {
    Tensor isometry;                  // [n, k] with orthonormal columns
    std::vector<double> eigenvalues;  // kept values, by descending magnitude
};

// Pairwise contraction, summing a's and b's indices named in `pairs`.
// Free indices of the result: a's unpaired indices (in order) then b's.
// Realized as permute -> fuse -> matrix multiply -> split for a fixed
// summation order.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& pairs);

// Reorders indices by `order` (order[i] = source axis of result axis i) and
// then fuses runs of adjacent result indices; `group_sizes` must sum to the
// rank (empty means no fusion). Element multiset is preserved.
Tensor permute_reshape(const Tensor& t, const std::vector<int>& order,
                       const std::vector<int>& group_sizes = {});

// Metadata-only reinterpretation of the row-major buffer under new dims.
Tensor with_dims(const Tensor& t, std::vector<index_t> dims);

// SVD of the matricization given by `p`, truncated to at most max_rank.
SvdFactors svd_split(const Tensor& t, const IndexPartition& p, index_t max_rank);

// Eigendecomposition of a square matrix, symmetrized as (h + h^T)/2 first.
// Keeps the min(max_rank, n) eigenvectors of largest-magnitude eigenvalue,
// ties broken by ascending position in the underlying decomposition, and
// fixes each column's sign so its largest-magnitude entry is positive.
EigFactors truncated_eig(const Tensor& h, index_t max_rank);

double frobenius_norm(const Tensor& t);

Tensor scaled(const Tensor& t, double factor);
Tensor add(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ctrg

#endif
