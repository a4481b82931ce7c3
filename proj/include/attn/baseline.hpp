#pragma once

// Reference decompositions for reconstruction comparisons. TT, TR and FCTN
// are fit as chain / ring / complete topologies by the same ALS as ATTN;
// Tucker has an inner core and is fit by HOOI.

#include "attn/attn_solver.hpp"
#include "attn/error.hpp"
#include "attn/tensor.hpp"
#include "attn/topology.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace attn {

enum class Method { tucker, tt, tr, fctn };

inline const char* to_string(Method m) {
    switch (m) {
    case Method::tucker: return "tucker";
    case Method::tt: return "tt";
    case Method::tr: return "tr";
    case Method::fctn: return "fctn";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "tucker") return Method::tucker;
    if (s == "tt") return Method::tt;
    if (s == "tr") return Method::tr;
    if (s == "fctn") return Method::fctn;
    throw Error(ErrorCode::invalid_argument, "unknown method '" + s + "'");
}

/// Number of rank entries each method takes for an order-N tensor.
inline std::size_t rank_arity(Method m, std::size_t order) {
    switch (m) {
    case Method::tucker: return order;
    case Method::tt: return order - 1;
    case Method::tr: return order;
    case Method::fctn: return order * (order - 1) / 2;
    }
    return 0;
}

struct BaselineSpec {
    Method method = Method::fctn;
    std::vector<std::size_t> ranks;  ///< FCTN: upper-triangle edge ranks, lexicographic
    std::size_t iter_max = 300;
    double tol = 1e-6;
    double ridge = 1e-12;
    std::uint64_t seed = 0;

    void validate(const Shape& shape) const {
        require(shape.size() >= 2, ErrorCode::invalid_argument, "baselines need order >= 2");
        require(ranks.size() == rank_arity(method, shape.size()), ErrorCode::invalid_argument,
                std::string(to_string(method)) + " expects " + std::to_string(rank_arity(method, shape.size())) +
                    " ranks for an order-" + std::to_string(shape.size()) + " tensor, got " +
                    std::to_string(ranks.size()));
        for (auto r : ranks) require(r >= 1, ErrorCode::invalid_argument, "ranks must be positive");
        if (method == Method::tucker)
            for (std::size_t n = 0; n < shape.size(); ++n)
                require(ranks[n] <= shape[n], ErrorCode::invalid_argument, "Tucker rank exceeds mode size");
        require(iter_max >= 1 && tol > 0, ErrorCode::invalid_argument, "iter_max and tol must be positive");
    }
};

struct TuckerModel {
    DenseTensor core;
    std::vector<Matrix> factors;  ///< I_n x R_n, orthonormal columns
};

struct BaselineResult {
    Method method = Method::fctn;
    DenseTensor reconstruction;
    double rse = 0.0;
    std::size_t storage = 0;
    std::size_t iterations = 0;
    bool converged = false;
    double seconds = 0.0;
    std::vector<double> rse_trace;
    std::optional<FactorSet> network;  ///< TT / TR / FCTN
    std::optional<TuckerModel> tucker;
    std::vector<std::size_t> effective_ranks;  ///< after clamping to what the data supports
};

/// t x_n M: multiplies mode n by the matrix M (new size M.rows()).
inline DenseTensor mode_product(const DenseTensor& t, const Matrix& m, std::size_t mode) {
    require(static_cast<std::size_t>(m.cols()) == t.dim(mode), ErrorCode::shape_mismatch, "mode product size mismatch");
    Shape out = t.shape();
    out[mode] = static_cast<std::size_t>(m.rows());
    return fold(m * mode_unfold(t, mode), mode, out);
}

namespace detail {

inline Matrix leading_left_vectors(const Matrix& a, std::size_t r) {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
}

inline DenseTensor tucker_reconstruct(const TuckerModel& m) {
    DenseTensor t = m.core;
    for (std::size_t n = 0; n < m.factors.size(); ++n) t = mode_product(t, m.factors[n], n);
    return t;
}

} // namespace detail

/// HOOI from a truncated-HOSVD start. Stops when the core norm changes by at
/// most tol relative to ||x|| (the fit error is ||x||^2 - ||core||^2).
inline BaselineResult tucker_hooi(const DenseTensor& x, const BaselineSpec& spec) {
    const std::size_t order = x.order();
    TuckerModel model;
    for (std::size_t n = 0; n < order; ++n)
        model.factors.push_back(detail::leading_left_vectors(mode_unfold(x, n), spec.ranks[n]));

    BaselineResult res;
    res.method = Method::tucker;
    const double x_norm = frobenius_norm(x);
    double last_core = -1.0;
    for (std::size_t it = 0; it < spec.iter_max; ++it) {
        for (std::size_t n = 0; n < order; ++n) {
            DenseTensor y = x;
            for (std::size_t m = 0; m < order; ++m)
                if (m != n) y = mode_product(y, model.factors[m].transpose(), m);
            model.factors[n] = detail::leading_left_vectors(mode_unfold(y, n), spec.ranks[n]);
        }
        model.core = x;
        for (std::size_t n = 0; n < order; ++n) model.core = mode_product(model.core, model.factors[n].transpose(), n);
        const double core_norm = frobenius_norm(model.core);
        const double err2 = std::max(0.0, x_norm * x_norm - core_norm * core_norm);
        res.rse_trace.push_back(x_norm > 0 ? std::sqrt(err2) / x_norm : 0.0);
        ++res.iterations;
        if (last_core >= 0 && std::abs(core_norm - last_core) <= spec.tol * x_norm) {
            res.converged = true;
            break;
        }
        last_core = core_norm;
    }
    res.reconstruction = detail::tucker_reconstruct(model);
    res.rse = rse(res.reconstruction, x);
    res.storage = model.core.size();
    for (const auto& u : model.factors) res.storage += static_cast<std::size_t>(u.size());
    res.effective_ranks = spec.ranks;
    res.tucker = std::move(model);
    return res;
}

/// Sequential truncated SVDs (TT-SVD), returned as chain-topology factors.
/// Ranks above what an unfolding supports are clamped.
inline FactorSet tt_svd(const DenseTensor& x, const std::vector<std::size_t>& ranks) {
    const std::size_t order = x.order();
    require(ranks.size() + 1 == order, ErrorCode::invalid_argument, "TT needs order - 1 ranks");
    std::vector<std::size_t> r(order + 1, 1);
    std::vector<DenseTensor> cores;  // (r_{n-1}, I_n, r_n)
    Matrix c = Eigen::Map<const Matrix>(x.data().data(), static_cast<Eigen::Index>(x.dim(0)),
                                        static_cast<Eigen::Index>(x.size() / x.dim(0)));
    for (std::size_t n = 0; n + 1 < order; ++n) {
        const auto rows = static_cast<Eigen::Index>(r[n] * x.dim(n));
        const Eigen::Index cols = c.size() / rows;
        const Matrix m = Eigen::Map<const Matrix>(c.data(), rows, cols);
        Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        r[n + 1] = std::min<std::size_t>(ranks[n], static_cast<std::size_t>(std::min(rows, cols)));
        const auto rn = static_cast<Eigen::Index>(r[n + 1]);
        const Matrix u = svd.matrixU().leftCols(rn);
        cores.emplace_back(Shape{r[n], x.dim(n), r[n + 1]}, std::vector<double>(u.data(), u.data() + u.size()));
        c = svd.singularValues().head(rn).asDiagonal() * svd.matrixV().leftCols(rn).transpose();
    }
    cores.emplace_back(Shape{r[order - 1], x.dim(order - 1), 1}, std::vector<double>(c.data(), c.data() + c.size()));

    std::vector<std::size_t> chain_ranks(r.begin() + 1, r.begin() + static_cast<std::ptrdiff_t>(order));
    const TopologyGraph g = TopologyGraph::chain(x.shape(), chain_ranks);
    std::vector<DenseTensor> factors;
    for (std::size_t n = 0; n < order; ++n) {
        // (r_{n-1}, I_n, r_n) -> (I_n, r_{n-1}, r_n); singleton modes do not move data
        factors.push_back(reshape(permute(cores[n], {1, 0, 2}), g.factor_shape(n)));
    }
    return {g, std::move(factors)};
}

namespace detail {

inline BaselineResult network_fit(const DenseTensor& x, const FactorSet& init, const BaselineSpec& spec) {
    AlsResult fit = als_fit(x, init, AlsOptions{spec.tol, spec.iter_max, spec.ridge});
    BaselineResult res;
    res.method = spec.method;
    res.reconstruction = contract_network(fit.factors);
    res.rse = fit.final_rse;
    res.storage = storage_cost(fit.factors);
    res.iterations = fit.sweeps;
    res.converged = fit.converged;
    res.rse_trace = std::move(fit.rse_trace);
    for (const Edge e : fit.factors.topology().all_edges())
        res.effective_ranks.push_back(fit.factors.topology().rank(e.i, e.j));
    res.network = std::move(fit.factors);
    return res;
}

/// Random factors scaled so the initial contraction has the norm of x.
inline FactorSet scaled_random(const DenseTensor& x, const TopologyGraph& g, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xba5e));
    FactorSet f = FactorSet::random(g, rng);
    const double tc = frobenius_norm(contract_network(f));
    const double xn = frobenius_norm(x);
    if (tc <= 0 || xn <= 0) return f;
    const double s = std::pow(xn / tc, 1.0 / static_cast<double>(f.n_factors()));
    std::vector<DenseTensor> factors = f.factors();
    for (auto& t : factors) t *= s;
    return {g, std::move(factors)};
}

} // namespace detail

inline BaselineResult decompose(const DenseTensor& x, const BaselineSpec& spec) {
    spec.validate(x.shape());
    const auto t0 = std::chrono::steady_clock::now();
    BaselineResult res;
    switch (spec.method) {
    case Method::tucker: res = tucker_hooi(x, spec); break;
    case Method::tt: res = detail::network_fit(x, tt_svd(x, spec.ranks), spec); break;
    case Method::tr:
        res = detail::network_fit(x, detail::scaled_random(x, TopologyGraph::ring(x.shape(), spec.ranks), spec.seed), spec);
        break;
    case Method::fctn:
        res = detail::network_fit(
            x, detail::scaled_random(x, TopologyGraph::from_edge_ranks(x.shape(), spec.ranks), spec.seed), spec);
        break;
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct ComparisonRow {
    std::string method;
    double rse = 0.0;
    double seconds = 0.0;
    std::size_t storage = 0;
};

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
    os << "Method,RSE,Time,StorageCost\n";
    for (const auto& r : rows) os << r.method << ',' << r.rse << ',' << r.seconds << ',' << r.storage << '\n';
}

} // namespace attn
