#include "ctrg/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

namespace ctrg {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

index_t product(const std::vector<index_t>& dims) {
    index_t p = 1;
    for (index_t d : dims) p *= d;
    return p;
}

void check_dims(const std::vector<index_t>& dims) {
    for (index_t d : dims) {
        if (d <= 0) throw shape_error("tensor dimensions must be positive");
    }
}

std::vector<index_t> row_major_strides(const std::vector<index_t>& dims) {
    std::vector<index_t> strides(dims.size(), 1);
    for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i)
        strides[i] = strides[i + 1] * dims[i + 1];
    return strides;
}

// Copies t's elements into the axis order given by `order`.
Tensor permute(const Tensor& t, const std::vector<int>& order) {
    const int r = t.rank();
    if (static_cast<int>(order.size()) != r)
        throw argument_error("permutation length does not match rank");
    std::vector<bool> seen(r, false);
    for (int ax : order) {
        if (ax < 0 || ax >= r || seen[ax])
            throw argument_error("invalid permutation");
        seen[ax] = true;
    }
    bool identity = true;
    for (int i = 0; i < r; ++i)
        if (order[i] != i) identity = false;
    if (identity) return t;

    std::vector<index_t> out_dims(r);
    for (int i = 0; i < r; ++i) out_dims[i] = t.dim(order[i]);
    Tensor out(out_dims);

    const auto in_strides = row_major_strides(t.dims());
    std::vector<index_t> step(r);  // input stride per output axis
    for (int i = 0; i < r; ++i) step[i] = in_strides[order[i]];

    const double* src = t.data();
    double* dst = out.data();
    const index_t n = t.size();
    if (step[r - 1] == 1) {
        // innermost output axis is contiguous in the source: copy runs
        const index_t run = out_dims[r - 1];
        std::vector<index_t> idx(r - 1, 0);
        index_t base = 0;  // source offset with the last axis at zero
        for (index_t lin = 0; lin < n; lin += run) {
            std::copy(src + base, src + base + run, dst + lin);
            for (int ax = r - 2; ax >= 0; --ax) {
                base += step[ax];
                if (++idx[ax] < out_dims[ax]) break;
                base -= step[ax] * out_dims[ax];
                idx[ax] = 0;
            }
        }
        return out;
    }
    std::vector<index_t> idx(r, 0);
    index_t src_off = 0;
    for (index_t lin = 0; lin < n; ++lin) {
        dst[lin] = src[src_off];
        for (int ax = r - 1; ax >= 0; --ax) {
            src_off += step[ax];
            if (++idx[ax] < out_dims[ax]) break;
            src_off -= step[ax] * out_dims[ax];
            idx[ax] = 0;
        }
    }
    return out;
}

// Moves the axes in `group` (in that order) to the back (front if !to_back),
// keeping the remaining axes in their original order. Returns the matricized
// dims as a byproduct.
Tensor gather_axes(const Tensor& t, const std::vector<int>& group, bool to_back,
                   index_t& group_dim, index_t& rest_dim,
                   std::vector<index_t>& rest_dims) {
    const int r = t.rank();
    std::vector<bool> in_group(r, false);
    for (int ax : group) {
        if (ax < 0 || ax >= r || in_group[ax])
            throw argument_error("invalid index group");
        in_group[ax] = true;
    }
    std::vector<int> order;
    order.reserve(r);
    if (!to_back)
        for (int ax : group) order.push_back(ax);
    rest_dims.clear();
    for (int ax = 0; ax < r; ++ax) {
        if (!in_group[ax]) {
            order.push_back(ax);
            rest_dims.push_back(t.dim(ax));
        }
    }
    if (to_back)
        for (int ax : group) order.push_back(ax);
    group_dim = 1;
    for (int ax : group) group_dim *= t.dim(ax);
    rest_dim = product(rest_dims);
    return permute(t, order);
}

}  // namespace

Tensor::Tensor(std::vector<index_t> dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(static_cast<std::size_t>(product(dims_)), 0.0);
}

Tensor::Tensor(std::vector<index_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (static_cast<index_t>(data_.size()) != product(dims_))
        throw shape_error("element count does not match dimensions");
}

Tensor Tensor::scalar(double value) {
    Tensor t;
    t.data_[0] = value;
    return t;
}

Tensor Tensor::random(std::vector<index_t> dims, std::uint64_t seed) {
    Tensor t(std::move(dims));
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (index_t i = 0; i < t.size(); ++i) t.data_[i] = dist(gen);
    return t;
}

namespace {
index_t flat_offset(const std::vector<index_t>& dims,
                    std::initializer_list<index_t> idx) {
    if (idx.size() != dims.size()) throw argument_error("index rank mismatch");
    index_t off = 0;
    int ax = 0;
    for (index_t i : idx) {
        if (i < 0 || i >= dims[ax]) throw argument_error("index out of range");
        off = off * dims[ax] + i;
        ++ax;
    }
    return off;
}
}  // namespace

double& Tensor::at(std::initializer_list<index_t> idx) {
    return data_[flat_offset(dims_, idx)];
}

double Tensor::at(std::initializer_list<index_t> idx) const {
    return data_[flat_offset(dims_, idx)];
}

double Tensor::value() const {
    if (rank() != 0) throw shape_error("value() requires a rank-0 tensor");
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& pairs) {
    std::vector<int> a_paired, b_paired;
    a_paired.reserve(pairs.size());
    b_paired.reserve(pairs.size());
    for (const auto& [ia, ib] : pairs) {
        if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
            throw argument_error("contraction index out of range");
        if (std::find(a_paired.begin(), a_paired.end(), ia) != a_paired.end() ||
            std::find(b_paired.begin(), b_paired.end(), ib) != b_paired.end())
            throw argument_error("repeated contraction index");
        if (a.dim(ia) != b.dim(ib))
            throw shape_error("contracted dimensions differ");
        a_paired.push_back(ia);
        b_paired.push_back(ib);
    }

    index_t k_a = 1, m = 1, k_b = 1, n = 1;
    std::vector<index_t> a_free, b_free;
    Tensor ap = gather_axes(a, a_paired, /*to_back=*/true, k_a, m, a_free);
    Tensor bp = gather_axes(b, b_paired, /*to_back=*/false, k_b, n, b_free);

    std::vector<index_t> out_dims = a_free;
    out_dims.insert(out_dims.end(), b_free.begin(), b_free.end());
    Tensor out(out_dims);

    ConstMatrixMap lhs(ap.data(), m, k_a);
    ConstMatrixMap rhs(bp.data(), k_b, n);
    MatrixMap res(out.data(), m, n);
    res.noalias() = lhs * rhs;
    return out;
}

Tensor permute_reshape(const Tensor& t, const std::vector<int>& order,
                       const std::vector<int>& group_sizes) {
    Tensor p = permute(t, order);
    if (group_sizes.empty()) return p;
    int covered = 0;
    std::vector<index_t> fused;
    fused.reserve(group_sizes.size());
    for (int g : group_sizes) {
        if (g <= 0 || covered + g > p.rank())
            throw argument_error("fusion groups must tile the permuted indices");
        index_t d = 1;
        for (int i = 0; i < g; ++i) d *= p.dim(covered + i);
        fused.push_back(d);
        covered += g;
    }
    if (covered != p.rank())
        throw argument_error("fusion groups must tile the permuted indices");
    return with_dims(p, fused);
}

Tensor with_dims(const Tensor& t, std::vector<index_t> dims) {
    check_dims(dims);
    index_t p = 1;
    for (index_t d : dims) p *= d;
    if (p != t.size())
        throw shape_error("reshape changes the element count");
    std::vector<double> data(t.data(), t.data() + t.size());
    return Tensor(std::move(dims), std::move(data));
}

SvdFactors svd_split(const Tensor& t, const IndexPartition& p, index_t max_rank) {
    if (max_rank < 1) throw argument_error("max_rank must be >= 1");
    if (static_cast<int>(p.left.size() + p.right.size()) != t.rank())
        throw argument_error("partition must cover every index exactly once");
    if (!t.all_finite()) throw numeric_error("svd_split: non-finite input");

    std::vector<int> order = p.left;
    order.insert(order.end(), p.right.begin(), p.right.end());
    Tensor perm = permute_reshape(t, order);

    std::vector<index_t> left_dims, right_dims;
    for (int ax : p.left) left_dims.push_back(t.dim(ax));
    for (int ax : p.right) right_dims.push_back(t.dim(ax));
    const index_t m = product(left_dims);
    const index_t n = product(right_dims);

    ConstMatrixMap mat(perm.data(), m, n);
    Eigen::VectorXd sv;
    RowMajorMatrix u, v;
    if (std::min(m, n) <= 32) {
        Eigen::JacobiSVD<RowMajorMatrix> svd(
            mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sv = svd.singularValues();
        u = svd.matrixU();
        v = svd.matrixV();
    } else {
        Eigen::BDCSVD<RowMajorMatrix> svd(
            mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sv = svd.singularValues();
        u = svd.matrixU();
        v = svd.matrixV();
    }
    const index_t full = sv.size();
    const index_t k = std::min<index_t>(max_rank, full);

    std::vector<double> kept(sv.data(), sv.data() + k);

    std::vector<index_t> ldims = left_dims;
    ldims.push_back(k);
    Tensor left(ldims);
    MatrixMap(left.data(), m, k) = u.leftCols(k);

    std::vector<index_t> rdims;
    rdims.push_back(k);
    rdims.insert(rdims.end(), right_dims.begin(), right_dims.end());
    Tensor right(rdims);
    MatrixMap(right.data(), k, n) = v.leftCols(k).transpose();

    return {std::move(left), std::move(kept), std::move(right)};
}

EigFactors truncated_eig(const Tensor& h, index_t max_rank) {
    if (max_rank < 1) throw argument_error("max_rank must be >= 1");
    if (h.rank() != 2 || h.dim(0) != h.dim(1))
        throw shape_error("truncated_eig requires a square matrix");
    if (!h.all_finite()) throw numeric_error("truncated_eig: non-finite input");

    const index_t n = h.dim(0);
    ConstMatrixMap mat(h.data(), n, n);
    RowMajorMatrix sym = 0.5 * (mat + mat.transpose());

    Eigen::SelfAdjointEigenSolver<RowMajorMatrix> es(sym);
    if (es.info() != Eigen::Success)
        throw numeric_error("truncated_eig: eigensolver failed");

    std::vector<index_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](index_t i, index_t j) {
        return std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[j]);
    });

    const index_t k = std::min<index_t>(max_rank, n);
    Tensor iso({n, k});
    std::vector<double> vals(k);
    MatrixMap out(iso.data(), n, k);
    for (index_t c = 0; c < k; ++c) {
        Eigen::VectorXd v = es.eigenvectors().col(idx[c]);
        index_t arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        out.col(c) = v;
        vals[c] = es.eigenvalues()[idx[c]];
    }
    return {std::move(iso), std::move(vals)};
}

double frobenius_norm(const Tensor& t) {
    double sum = 0.0;
    const double* d = t.data();
    for (index_t i = 0; i < t.size(); ++i) sum += d[i] * d[i];
    return std::sqrt(sum);
}

Tensor scaled(const Tensor& t, double factor) {
    std::vector<double> data(t.data(), t.data() + t.size());
    for (double& v : data) v *= factor;
    return Tensor(t.dims(), std::move(data));
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) throw shape_error("add: dimension mismatch");
    std::vector<double> data(a.data(), a.data() + a.size());
    for (index_t i = 0; i < a.size(); ++i) data[i] += b.data()[i];
    return Tensor(a.dims(), std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) throw shape_error("max_abs_diff: dimension mismatch");
    double m = 0.0;
    for (index_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace ctrg
