#pragma once

// Tensor-network topology over N factors, one physical mode per factor.
//
// Factor n has shape (I_n, R_{0,n}, ..., R_{n-1,n}, R_{n,n+1}, ..., R_{n,N-1}):
// the physical mode first, then one rank mode per other factor in ascending
// factor order. Absent edges are rank 1 and stay materialized as singleton
// modes, so a factor's mode layout never changes when edges are pruned.

#include "attn/error.hpp"
#include "attn/random.hpp"
#include "attn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace attn {

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

class TopologyGraph {
public:
    TopologyGraph() = default;

    /// `ranks` is the full N x N matrix in row-major order; the diagonal is ignored.
    TopologyGraph(Shape mode_sizes, std::vector<std::size_t> ranks)
        : sizes_(std::move(mode_sizes)), ranks_(std::move(ranks)) {
        const std::size_t n = sizes_.size();
        require(n >= 2, ErrorCode::invalid_argument, "a tensor network needs at least two factors");
        require(ranks_.size() == n * n, ErrorCode::shape_mismatch, "rank matrix must be N x N");
        for (auto s : sizes_) require(s >= 1, ErrorCode::invalid_argument, "mode sizes must be >= 1");
        for (std::size_t i = 0; i < n; ++i) {
            ranks_[i * n + i] = 0;
            for (std::size_t j = i + 1; j < n; ++j) {
                require(ranks_[i * n + j] == ranks_[j * n + i], ErrorCode::invalid_argument,
                        "rank matrix must be symmetric");
                require(ranks_[i * n + j] >= 1, ErrorCode::invalid_argument, "edge ranks must be >= 1");
            }
        }
    }

    static TopologyGraph uniform(Shape mode_sizes, std::size_t rank) {
        const std::size_t n = mode_sizes.size();
        std::vector<std::size_t> r(n * n, rank);
        return {std::move(mode_sizes), std::move(r)};
    }

    /// Ranks given for the upper triangle in lexicographic (i, j) order.
    static TopologyGraph from_edge_ranks(Shape mode_sizes, const std::vector<std::size_t>& edge_ranks) {
        const std::size_t n = mode_sizes.size();
        require(edge_ranks.size() == n * (n - 1) / 2, ErrorCode::invalid_argument,
                "expected N(N-1)/2 edge ranks");
        std::vector<std::size_t> r(n * n, 0);
        std::size_t b = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) r[i * n + j] = r[j * n + i] = edge_ranks[b++];
        return {std::move(mode_sizes), std::move(r)};
    }

    /// Tensor-train chain: ranks[k] joins factors k and k+1.
    static TopologyGraph chain(Shape mode_sizes, const std::vector<std::size_t>& ranks) {
        const std::size_t n = mode_sizes.size();
        require(ranks.size() + 1 == n, ErrorCode::invalid_argument, "chain needs N-1 ranks");
        TopologyGraph g = uniform(std::move(mode_sizes), 1);
        for (std::size_t k = 0; k + 1 < n; ++k) g.set_rank(k, k + 1, ranks[k]);
        return g;
    }

    /// Tensor ring: ranks[k] joins factors k and (k+1) mod N.
    static TopologyGraph ring(Shape mode_sizes, const std::vector<std::size_t>& ranks) {
        const std::size_t n = mode_sizes.size();
        require(ranks.size() == n, ErrorCode::invalid_argument, "ring needs N ranks");
        require(n >= 3, ErrorCode::invalid_argument, "ring needs at least three factors");
        TopologyGraph g = uniform(std::move(mode_sizes), 1);
        for (std::size_t k = 0; k < n; ++k) g.set_rank(k, (k + 1) % n, ranks[k]);
        return g;
    }

    [[nodiscard]] std::size_t n_factors() const noexcept { return sizes_.size(); }
    [[nodiscard]] const Shape& mode_sizes() const noexcept { return sizes_; }
    [[nodiscard]] std::size_t mode_size(std::size_t n) const { return sizes_.at(n); }
    [[nodiscard]] const std::vector<std::size_t>& rank_matrix() const noexcept { return ranks_; }

    [[nodiscard]] std::size_t rank(std::size_t i, std::size_t j) const {
        check_pair(i, j);
        return ranks_[i * n_factors() + j];
    }

    void set_rank(std::size_t i, std::size_t j, std::size_t r) {
        check_pair(i, j);
        require(r >= 1, ErrorCode::invalid_argument, "edge ranks must be >= 1");
        ranks_[i * n_factors() + j] = ranks_[j * n_factors() + i] = r;
    }

    [[nodiscard]] std::size_t edge_count() const noexcept { return n_factors() * (n_factors() - 1) / 2; }

    /// All N(N-1)/2 factor pairs, lexicographic.
    [[nodiscard]] std::vector<Edge> all_edges() const {
        std::vector<Edge> out;
        for (std::size_t i = 0; i < n_factors(); ++i)
            for (std::size_t j = i + 1; j < n_factors(); ++j) out.push_back({i, j});
        return out;
    }

    /// Edges with rank > 1, lexicographic.
    [[nodiscard]] std::vector<Edge> present_edges() const {
        std::vector<Edge> out;
        for (auto e : all_edges())
            if (rank(e.i, e.j) > 1) out.push_back(e);
        return out;
    }

    [[nodiscard]] std::size_t edge_index(std::size_t i, std::size_t j) const {
        check_pair(i, j);
        if (i > j) std::swap(i, j);
        const std::size_t n = n_factors();
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    }

    /// Position of the rank mode facing `other` inside factor n's shape.
    [[nodiscard]] std::size_t rank_mode(std::size_t n, std::size_t other) const {
        check_pair(n, other);
        return 1 + (other < n ? other : other - 1);
    }

    [[nodiscard]] Shape factor_shape(std::size_t n) const {
        Shape s{mode_size(n)};
        for (std::size_t k = 0; k < n_factors(); ++k)
            if (k != n) s.push_back(rank(n, k));
        return s;
    }

    /// True when the graph of rank > 1 edges spans all factors.
    [[nodiscard]] bool is_connected() const {
        const std::size_t n = n_factors();
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v)
                if (v != u && !seen[v] && rank(u, v) > 1) {
                    seen[v] = true;
                    stack.push_back(v);
                }
        }
        for (bool s : seen)
            if (!s) return false;
        return true;
    }

    friend bool operator==(const TopologyGraph&, const TopologyGraph&) = default;

private:
    void check_pair(std::size_t i, std::size_t j) const {
        require(i < n_factors() && j < n_factors(), ErrorCode::index_out_of_range, "factor index out of range");
        require(i != j, ErrorCode::invalid_argument, "an edge needs two distinct factors");
    }

    Shape sizes_;
    std::vector<std::size_t> ranks_;
};

class FactorSet {
public:
    FactorSet() = default;

    FactorSet(TopologyGraph topology, std::vector<DenseTensor> factors)
        : topology_(std::move(topology)), factors_(std::move(factors)) {
        require(factors_.size() == topology_.n_factors(), ErrorCode::shape_mismatch,
                "factor count does not match topology");
        for (std::size_t n = 0; n < factors_.size(); ++n) {
            const Shape expected = topology_.factor_shape(n);
            require(factors_[n].shape() == expected, ErrorCode::shape_mismatch,
                    "factor " + std::to_string(n) + " has shape " + shape_string(factors_[n].shape()) +
                        ", expected " + shape_string(expected));
        }
        connected_ = topology_.is_connected();
    }

    /// i.i.d. N(0, scale^2) entries.
    static FactorSet random(const TopologyGraph& topology, Rng& rng, double scale = 1.0) {
        std::vector<DenseTensor> factors;
        for (std::size_t n = 0; n < topology.n_factors(); ++n)
            factors.push_back(DenseTensor::random_normal(topology.factor_shape(n), rng, scale));
        return {topology, std::move(factors)};
    }

    [[nodiscard]] const TopologyGraph& topology() const noexcept { return topology_; }
    [[nodiscard]] const std::vector<DenseTensor>& factors() const noexcept { return factors_; }
    [[nodiscard]] const DenseTensor& factor(std::size_t n) const { return factors_.at(n); }
    [[nodiscard]] std::size_t n_factors() const noexcept { return factors_.size(); }

    /// Diagnostic: false when pruning has split the network into components.
    [[nodiscard]] bool connected() const noexcept { return connected_; }

    friend bool operator==(const FactorSet& a, const FactorSet& b) {
        return a.topology_ == b.topology_ && a.factors_ == b.factors_;
    }

private:
    TopologyGraph topology_;
    std::vector<DenseTensor> factors_;
    bool connected_ = true;
};

/// Total element count of all factors (singleton rank modes count as 1).
inline std::size_t storage_cost(const FactorSet& f) {
    std::size_t total = 0;
    for (const auto& g : f.factors()) total += g.size();
    return total;
}

inline std::size_t storage_cost(const TopologyGraph& g) {
    std::size_t total = 0;
    for (std::size_t n = 0; n < g.n_factors(); ++n) total += shape_product(g.factor_shape(n));
    return total;
}

enum class ContractionOrder { greedy, sequential };

namespace detail {

struct LabeledTensor {
    DenseTensor tensor;
    std::vector<std::size_t> labels;
};

inline std::size_t physical_label(std::size_t n) { return n; }

inline std::size_t edge_label(const TopologyGraph& g, std::size_t i, std::size_t j) {
    return g.n_factors() + g.edge_index(i, j);
}

inline LabeledTensor label_factor(const FactorSet& f, std::size_t n) {
    const auto& g = f.topology();
    LabeledTensor lt{f.factor(n), {physical_label(n)}};
    for (std::size_t k = 0; k < g.n_factors(); ++k)
        if (k != n) lt.labels.push_back(edge_label(g, n, k));
    return lt;
}

inline std::size_t contracted_size(const LabeledTensor& a, const LabeledTensor& b) {
    std::size_t size = 1;
    for (std::size_t k = 0; k < a.labels.size(); ++k)
        if (std::find(b.labels.begin(), b.labels.end(), a.labels[k]) == b.labels.end())
            size *= a.tensor.dim(k);
    for (std::size_t k = 0; k < b.labels.size(); ++k)
        if (std::find(a.labels.begin(), a.labels.end(), b.labels[k]) == a.labels.end())
            size *= b.tensor.dim(k);
    return size;
}

inline LabeledTensor contract_labeled(const LabeledTensor& a, const LabeledTensor& b) {
    ModePairs pairs;
    std::vector<bool> a_shared(a.labels.size(), false), b_shared(b.labels.size(), false);
    for (std::size_t ka = 0; ka < a.labels.size(); ++ka)
        for (std::size_t kb = 0; kb < b.labels.size(); ++kb)
            if (a.labels[ka] == b.labels[kb]) {
                pairs.emplace_back(ka, kb);
                a_shared[ka] = b_shared[kb] = true;
            }
    LabeledTensor out{contract_pair(a.tensor, b.tensor, pairs), {}};
    for (std::size_t k = 0; k < a.labels.size(); ++k)
        if (!a_shared[k]) out.labels.push_back(a.labels[k]);
    for (std::size_t k = 0; k < b.labels.size(); ++k)
        if (!b_shared[k]) out.labels.push_back(b.labels[k]);
    if (out.labels.empty()) out.labels.push_back(std::numeric_limits<std::size_t>::max());
    return out;
}

inline LabeledTensor contract_all(std::vector<LabeledTensor> items, ContractionOrder order) {
    require(!items.empty(), ErrorCode::invalid_argument, "nothing to contract");
    while (items.size() > 1) {
        std::size_t bi = 0, bj = 1;
        if (order == ContractionOrder::greedy) {
            std::size_t best = std::numeric_limits<std::size_t>::max();
            for (std::size_t i = 0; i < items.size(); ++i)
                for (std::size_t j = i + 1; j < items.size(); ++j) {
                    const std::size_t c = contracted_size(items[i], items[j]);
                    if (c < best) {
                        best = c;
                        bi = i;
                        bj = j;
                    }
                }
        }
        items[bi] = contract_labeled(items[bi], items[bj]);
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return std::move(items.front());
}

inline DenseTensor arrange(const LabeledTensor& lt, const std::vector<std::size_t>& wanted) {
    require(lt.labels.size() == wanted.size(), ErrorCode::numerical_failure,
            "contraction produced unexpected dangling modes");
    Shape perm;
    for (auto w : wanted) {
        auto it = std::find(lt.labels.begin(), lt.labels.end(), w);
        require(it != lt.labels.end(), ErrorCode::numerical_failure, "missing dangling mode");
        perm.push_back(static_cast<std::size_t>(it - lt.labels.begin()));
    }
    return permute(lt.tensor, perm);
}

} // namespace detail

/// Full network contraction; the result has shape mode_sizes().
inline DenseTensor contract_network(const FactorSet& f, ContractionOrder order = ContractionOrder::greedy) {
    std::vector<detail::LabeledTensor> items;
    std::vector<std::size_t> wanted;
    for (std::size_t n = 0; n < f.n_factors(); ++n) {
        items.push_back(detail::label_factor(f, n));
        wanted.push_back(detail::physical_label(n));
    }
    return detail::arrange(detail::contract_all(std::move(items), order), wanted);
}

/// Contraction of every factor except n.
///
/// Mode layout of the result: first the rank modes facing factor n (one per
/// other factor k, ascending k, sizes R_{k,n}), then the physical modes of the
/// other factors (ascending, sizes I_k). Its leading block therefore lines up
/// with the rank modes of G^(n), and reshaping it to a
/// (prod_k R_{k,n}) x (prod_{k != n} I_k) matrix gives the A^{!=n}_(n) with
/// X_(n) = G^(n)_(1) * A^{!=n}_(n).
inline DenseTensor contract_except(const FactorSet& f, std::size_t n,
                                   ContractionOrder order = ContractionOrder::greedy) {
    const auto& g = f.topology();
    require(n < g.n_factors(), ErrorCode::index_out_of_range, "factor index out of range");
    std::vector<detail::LabeledTensor> items;
    std::vector<std::size_t> wanted;
    for (std::size_t k = 0; k < g.n_factors(); ++k)
        if (k != n) {
            items.push_back(detail::label_factor(f, k));
            wanted.push_back(detail::edge_label(g, n, k));
        }
    for (std::size_t k = 0; k < g.n_factors(); ++k)
        if (k != n) wanted.push_back(detail::physical_label(k));
    return detail::arrange(detail::contract_all(std::move(items), order), wanted);
}

/// A^{!=n}_(n) as a matrix with prod_k R_{k,n} rows and prod_{k != n} I_k columns.
inline Matrix leave_one_out_matrix(const FactorSet& f, std::size_t n,
                                   ContractionOrder order = ContractionOrder::greedy) {
    const DenseTensor a = contract_except(f, n, order);
    const std::size_t rows = f.factor(n).size() / f.topology().mode_size(n);
    return a.as_matrix(rows, a.size() / rows);
}

/// Collapse edge (i, j) to rank 1 by averaging both factors over that rank mode.
inline FactorSet collapse_edge_mean(const FactorSet& f, std::size_t i, std::size_t j) {
    TopologyGraph g = f.topology();
    std::vector<DenseTensor> factors = f.factors();
    factors[i] = mode_mean(factors[i], g.rank_mode(i, j));
    factors[j] = mode_mean(factors[j], g.rank_mode(j, i));
    g.set_rank(i, j, 1);
    return {std::move(g), std::move(factors)};
}

inline double rms(const DenseTensor& t) {
    return frobenius_norm(t) / std::sqrt(static_cast<double>(t.size()));
}

/// Grow edge (i, j) by `extra`, filling the new slices of both factors with
/// N(0, (relative_scale * RMS(factor))^2) samples.
inline FactorSet grow_edge(const FactorSet& f, std::size_t i, std::size_t j, std::size_t extra, Rng& rng,
                           double relative_scale) {
    TopologyGraph g = f.topology();
    std::vector<DenseTensor> factors = f.factors();
    factors[i] = pad_mode(factors[i], g.rank_mode(i, j), extra, rng, relative_scale * rms(factors[i]));
    factors[j] = pad_mode(factors[j], g.rank_mode(j, i), extra, rng, relative_scale * rms(factors[j]));
    g.set_rank(i, j, g.rank(i, j) + extra);
    return {std::move(g), std::move(factors)};
}

} // namespace attn
