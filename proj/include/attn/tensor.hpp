#pragma once

// Dense N-way tensor stored first-index-fastest (column-major), matching
// Eigen's default storage so unfoldings map onto Eigen matrices without copies
// where the layout allows it.

#include "attn/error.hpp"
#include "attn/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace attn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

inline std::size_t shape_product(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(std::span<const std::size_t> shape) {
    std::string s = "(";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(shape[k]);
    }
    return s + ")";
}

class DenseTensor {
public:
    DenseTensor() : shape_{1}, data_(1, 0.0) {}

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_product(shape_), 0.0);
    }

    DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        require(data_.size() == shape_product(shape_), ErrorCode::shape_mismatch,
                "data length " + std::to_string(data_.size()) + " does not match shape " +
                    shape_string(shape_));
    }

    static DenseTensor filled(Shape shape, double value) {
        DenseTensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    static DenseTensor random_normal(Shape shape, Rng& rng, double scale = 1.0) {
        DenseTensor t(std::move(shape));
        std::normal_distribution<double> dist(0.0, 1.0);
        for (auto& x : t.data_) x = scale * dist(rng);
        return t;
    }

    [[nodiscard]] std::size_t order() const noexcept { return shape_.size(); }
    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t flat) noexcept { return data_[flat]; }
    double operator[](std::size_t flat) const noexcept { return data_[flat]; }

    [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const {
        require(index.size() == shape_.size(), ErrorCode::index_out_of_range,
                "index arity does not match tensor order");
        std::size_t off = 0;
        std::size_t stride = 1;
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            require(index[k] < shape_[k], ErrorCode::index_out_of_range, "index out of range");
            off += index[k] * stride;
            stride *= shape_[k];
        }
        return off;
    }

    double& at(std::span<const std::size_t> index) { return data_[offset(index)]; }
    [[nodiscard]] double at(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    double& at(std::initializer_list<std::size_t> index) {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }
    [[nodiscard]] double at(std::initializer_list<std::size_t> index) const {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Replace the shape metadata only; the flat data sequence is untouched.
    [[nodiscard]] DenseTensor reshaped(Shape new_shape) const& {
        DenseTensor out = *this;
        out.reshape_in_place(std::move(new_shape));
        return out;
    }
    [[nodiscard]] DenseTensor reshaped(Shape new_shape) && {
        reshape_in_place(std::move(new_shape));
        return std::move(*this);
    }

    DenseTensor& operator+=(const DenseTensor& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    DenseTensor& operator-=(const DenseTensor& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    DenseTensor& operator*=(double c) noexcept {
        for (auto& x : data_) x *= c;
        return *this;
    }

    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(DenseTensor a, double c) { return a *= c; }
    friend DenseTensor operator*(double c, DenseTensor a) { return a *= c; }

    friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

    /// View of the flat data as a rows x cols column-major matrix.
    [[nodiscard]] Eigen::Map<const Matrix> as_matrix(std::size_t rows, std::size_t cols) const {
        require(rows * cols == data_.size(), ErrorCode::shape_mismatch, "matrix view size mismatch");
        return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    }
    [[nodiscard]] Eigen::Map<Matrix> as_matrix(std::size_t rows, std::size_t cols) {
        require(rows * cols == data_.size(), ErrorCode::shape_mismatch, "matrix view size mismatch");
        return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    }

private:
    void validate_shape() const {
        require(!shape_.empty(), ErrorCode::invalid_argument, "tensor order must be >= 1");
        for (auto d : shape_)
            require(d >= 1, ErrorCode::invalid_argument, "tensor dimensions must be >= 1");
    }

    void reshape_in_place(Shape new_shape) {
        require(!new_shape.empty(), ErrorCode::invalid_argument, "tensor order must be >= 1");
        for (auto d : new_shape)
            require(d >= 1, ErrorCode::invalid_argument, "tensor dimensions must be >= 1");
        require(shape_product(new_shape) == data_.size(), ErrorCode::shape_mismatch,
                "reshape " + shape_string(shape_) + " -> " + shape_string(new_shape) +
                    " changes element count");
        shape_ = std::move(new_shape);
    }

    void check_same_shape(const DenseTensor& o) const {
        require(shape_ == o.shape_, ErrorCode::shape_mismatch,
                shape_string(shape_) + " vs " + shape_string(o.shape_));
    }

    Shape shape_;
    std::vector<double> data_;
};

inline DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
    return t.reshaped(std::move(new_shape));
}

inline DenseTensor from_matrix(const Matrix& m) {
    return DenseTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                       std::vector<double>(m.data(), m.data() + m.size()));
}

inline Matrix to_matrix(const DenseTensor& t) {
    require(t.order() == 2, ErrorCode::shape_mismatch, "expected a 2-way tensor");
    return t.as_matrix(t.dim(0), t.dim(1));
}

/// Generalized transpose: output mode k is input mode perm[k].
inline DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
    const std::size_t n = t.order();
    require(perm.size() == n, ErrorCode::invalid_argument, "permutation arity mismatch");
    std::vector<bool> seen(n, false);
    for (auto p : perm) {
        require(p < n && !seen[p], ErrorCode::invalid_argument, "not a permutation");
        seen[p] = true;
    }
    bool identity = true;
    for (std::size_t k = 0; k < n; ++k) identity = identity && perm[k] == k;
    if (identity) return t;

    Shape in_strides(n);
    std::size_t s = 1;
    for (std::size_t k = 0; k < n; ++k) {
        in_strides[k] = s;
        s *= t.dim(k);
    }
    Shape out_shape(n), step(n);
    for (std::size_t k = 0; k < n; ++k) {
        out_shape[k] = t.dim(perm[k]);
        step[k] = in_strides[perm[k]];
    }

    DenseTensor out(out_shape);
    const double* src = t.data().data();
    double* dst = out.data().data();
    const std::size_t inner = out_shape[0];
    const std::size_t inner_step = step[0];
    const std::size_t outer = out.size() / inner;
    Shape counter(n, 0);
    std::size_t base = 0;
    for (std::size_t o = 0; o < outer; ++o) {
        const double* p = src + base;
        for (std::size_t i = 0; i < inner; ++i) dst[i] = p[i * inner_step];
        dst += inner;
        for (std::size_t k = 1; k < n; ++k) {
            if (++counter[k] < out_shape[k]) {
                base += step[k];
                break;
            }
            base -= (out_shape[k] - 1) * step[k];
            counter[k] = 0;
        }
    }
    return out;
}

inline DenseTensor permute(const DenseTensor& t, std::initializer_list<std::size_t> perm) {
    return permute(t, std::span<const std::size_t>(perm.begin(), perm.size()));
}

/// Mode-n matricization (0-based mode). Rows index mode n; columns enumerate
/// the remaining modes in ascending order, first-index-fastest.
inline Matrix mode_unfold(const DenseTensor& t, std::size_t mode) {
    require(mode < t.order(), ErrorCode::index_out_of_range,
            "mode " + std::to_string(mode) + " out of range for order " + std::to_string(t.order()));
    const std::size_t rows = t.dim(mode);
    const std::size_t cols = t.size() / rows;
    if (mode == 0) return t.as_matrix(rows, cols);
    Shape perm;
    perm.push_back(mode);
    for (std::size_t k = 0; k < t.order(); ++k)
        if (k != mode) perm.push_back(k);
    return permute(t, perm).as_matrix(rows, cols);
}

/// Inverse of mode_unfold.
inline DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
    require(mode < shape.size(), ErrorCode::index_out_of_range, "fold mode out of range");
    const std::size_t rows = shape[mode];
    const std::size_t total = shape_product(shape);
    require(static_cast<std::size_t>(m.rows()) == rows &&
                static_cast<std::size_t>(m.rows() * m.cols()) == total,
            ErrorCode::shape_mismatch,
            "matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                " cannot fold along mode " + std::to_string(mode) + " into " + shape_string(shape));
    Shape permuted_shape;
    permuted_shape.push_back(rows);
    for (std::size_t k = 0; k < shape.size(); ++k)
        if (k != mode) permuted_shape.push_back(shape[k]);
    DenseTensor permuted(permuted_shape, std::vector<double>(m.data(), m.data() + m.size()));
    if (mode == 0) return permuted;
    // inverse permutation of (mode, 0, 1, ..., mode-1, mode+1, ...)
    Shape inv(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k < mode) inv[k] = k + 1;
        else if (k == mode) inv[k] = 0;
        else inv[k] = k;
    }
    return permute(permuted, inv);
}

inline double frobenius_norm(const DenseTensor& t) {
    double s = 0.0;
    for (double x : t.data()) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const DenseTensor& t) {
    double m = 0.0;
    for (double x : t.data()) m = std::max(m, std::abs(x));
    return m;
}

inline double frobenius_distance(const DenseTensor& a, const DenseTensor& b) {
    require(a.shape() == b.shape(), ErrorCode::shape_mismatch,
            shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Relative standard error ||reconstruction - reference||_F / ||reference||_F.
inline double rse(const DenseTensor& reconstruction, const DenseTensor& reference) {
    const double ref = frobenius_norm(reference);
    require(ref > 0.0, ErrorCode::zero_norm, "rse reference has zero norm");
    return frobenius_distance(reconstruction, reference) / ref;
}

using ModePairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// Contract the paired modes of a and b. The output carries a's unpaired modes
/// (in order) followed by b's unpaired modes (in order). An empty pair list is
/// the outer product.
inline DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b, const ModePairs& pairs) {
    std::vector<bool> a_used(a.order(), false), b_used(b.order(), false);
    Shape a_perm, b_perm;
    std::size_t shared = 1;
    for (auto [ma, mb] : pairs) {
        require(ma < a.order() && mb < b.order(), ErrorCode::index_out_of_range,
                "contracted mode out of range");
        require(!a_used[ma] && !b_used[mb], ErrorCode::invalid_argument,
                "mode paired more than once");
        require(a.dim(ma) == b.dim(mb), ErrorCode::shape_mismatch,
                "paired modes differ in size: " + std::to_string(a.dim(ma)) + " vs " +
                    std::to_string(b.dim(mb)));
        a_used[ma] = b_used[mb] = true;
        shared *= a.dim(ma);
    }

    Shape out_shape;
    std::size_t a_free = 1, b_free = 1;
    for (std::size_t k = 0; k < a.order(); ++k)
        if (!a_used[k]) {
            a_perm.push_back(k);
            out_shape.push_back(a.dim(k));
            a_free *= a.dim(k);
        }
    for (auto [ma, mb] : pairs) {
        a_perm.push_back(ma);
        b_perm.push_back(mb);
    }
    for (std::size_t k = 0; k < b.order(); ++k)
        if (!b_used[k]) {
            b_perm.push_back(k);
            out_shape.push_back(b.dim(k));
            b_free *= b.dim(k);
        }
    if (out_shape.empty()) out_shape.push_back(1);

    const DenseTensor ap = permute(a, a_perm);
    const DenseTensor bp = permute(b, b_perm);
    DenseTensor out(out_shape);
    out.as_matrix(a_free, b_free).noalias() = ap.as_matrix(a_free, shared) * bp.as_matrix(shared, b_free);
    return out;
}

/// Average over one mode, leaving it as a singleton dimension.
inline DenseTensor mode_mean(const DenseTensor& t, std::size_t mode) {
    require(mode < t.order(), ErrorCode::index_out_of_range, "mode out of range");
    const std::size_t left = shape_product(std::span(t.shape()).first(mode));
    const std::size_t len = t.dim(mode);
    const std::size_t right = t.size() / (left * len);
    Shape shape = t.shape();
    shape[mode] = 1;
    DenseTensor out(shape);
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t k = 0; k < len; ++k)
            for (std::size_t l = 0; l < left; ++l) out[l + left * r] += t[l + left * (k + len * r)];
    out *= 1.0 / static_cast<double>(len);
    return out;
}

/// Keep only slice `index` of one mode (the mode becomes a singleton).
inline DenseTensor mode_slice(const DenseTensor& t, std::size_t mode, std::size_t index) {
    require(mode < t.order(), ErrorCode::index_out_of_range, "mode out of range");
    require(index < t.dim(mode), ErrorCode::index_out_of_range, "slice index out of range");
    const std::size_t left = shape_product(std::span(t.shape()).first(mode));
    const std::size_t len = t.dim(mode);
    const std::size_t right = t.size() / (left * len);
    Shape shape = t.shape();
    shape[mode] = 1;
    DenseTensor out(shape);
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t l = 0; l < left; ++l) out[l + left * r] = t[l + left * (index + len * r)];
    return out;
}

/// Append `extra` slices along one mode, filled with N(0, scale^2) samples.
inline DenseTensor pad_mode(const DenseTensor& t, std::size_t mode, std::size_t extra, Rng& rng,
                            double scale) {
    require(mode < t.order(), ErrorCode::index_out_of_range, "mode out of range");
    const std::size_t left = shape_product(std::span(t.shape()).first(mode));
    const std::size_t len = t.dim(mode);
    const std::size_t right = t.size() / (left * len);
    Shape shape = t.shape();
    shape[mode] = len + extra;
    DenseTensor out(shape);
    std::normal_distribution<double> dist(0.0, 1.0);
    const std::size_t new_len = len + extra;
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t k = 0; k < new_len; ++k)
            for (std::size_t l = 0; l < left; ++l)
                out[l + left * (k + new_len * r)] =
                    k < len ? t[l + left * (k + len * r)] : scale * dist(rng);
    return out;
}

} // namespace attn
