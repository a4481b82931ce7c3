#pragma once

// Multi-view subspace clustering with an adaptive tensor-network prior on the
// self-representation tensor, solved by linearized ADMM:
//
//   min_{Z,E,S}  lambda ||E||_{2,1} + (low-rank S via ATTN)
//   s.t.         X_v = X_v Z_v + E_v,   Z = S
//
// Z, S, W are I x I x V with frontal slice v belonging to view v.

#include "attn/attn_solver.hpp"
#include "attn/error.hpp"
#include "attn/tensor.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace attn {

using ReshapeDims = std::array<std::size_t, 4>;

/// (I/k, k, I/k, k) when k divides I, else the most nearly square factor
/// pair I1 <= I2 of I (1474 -> 22 x 67).
inline ReshapeDims choose_reshape_dims(std::size_t n_samples, std::size_t k) {
    require(n_samples >= 1, ErrorCode::invalid_argument, "no samples");
    if (k >= 2 && n_samples % k == 0) return {n_samples / k, k, n_samples / k, k};
    std::size_t a = 1;
    for (std::size_t d = 1; d * d <= n_samples; ++d)
        if (n_samples % d == 0) a = d;
    return {a, n_samples / a, a, n_samples / a};
}

struct MscProblem {
    std::vector<Matrix> views;  ///< X_v, C_v x I
    std::size_t n_clusters = 0;
    ReshapeDims reshape_dims{};

    [[nodiscard]] std::size_t n_samples() const { return views.empty() ? 0 : static_cast<std::size_t>(views[0].cols()); }
    [[nodiscard]] std::size_t n_views() const { return views.size(); }

    void validate() const {
        require(!views.empty(), ErrorCode::invalid_argument, "no views");
        const auto n = n_samples();
        for (const auto& x : views)
            require(static_cast<std::size_t>(x.cols()) == n, ErrorCode::shape_inconsistency,
                    "views disagree on the sample count");
        require(reshape_dims[0] * reshape_dims[1] == n && reshape_dims[2] * reshape_dims[3] == n,
                ErrorCode::invalid_argument, "reshape dims must satisfy I1*I2 = I3*I4 = I");
    }
};

enum class SStep {
    attn,   ///< topology-adaptive low-rank fit of Z + W/rho
    exact,  ///< S = Z + W/rho (unbounded capacity; isolates the ADMM plumbing)
};

struct MscConfig {
    double lambda = 0.1;
    double mu0 = 1e-5;
    double rho0 = 1e-4;
    double eta = 2.0;
    double tol = 1e-7;
    double mu_max = 1e10;
    double rho_max = 1e10;
    std::size_t iter_max = 200;
    std::size_t topology_refresh_interval = 5;
    std::size_t refit_sweeps = 5;   ///< ALS sweep cap for value-only re-fits between refreshes
    double refit_tol = 1e-12;       ///< their stopping tolerance; must sit well below tol
    SStep s_step = SStep::attn;
    AttnConfig attn = default_attn();

    static AttnConfig default_attn() {
        AttnConfig c;
        c.epsilon = 0.4;  // coarse fits keep the inner network small and the S-map stable
        c.iter_max_als = 50;
        c.increment_max = 16;
        return c;
    }

    void validate() const {
        require(lambda >= 0, ErrorCode::invalid_argument, "lambda must be nonnegative");
        require(mu0 > 0 && rho0 > 0 && tol > 0 && refit_tol > 0 && mu_max > 0 && rho_max > 0, ErrorCode::invalid_argument,
                "penalties and tolerance must be positive");
        require(eta > 1, ErrorCode::invalid_argument, "eta must exceed 1");
        require(iter_max >= 1 && topology_refresh_interval >= 1 && refit_sweeps >= 1, ErrorCode::invalid_argument,
                "iteration counts must be positive");
        attn.validate();
    }
};

struct AdmmState {
    std::vector<Matrix> z;  ///< I x I per view
    std::vector<Matrix> e;  ///< C_v x I per view (row blocks of the stacked E)
    std::vector<Matrix> y;  ///< C_v x I per view
    DenseTensor s;          ///< I x I x V
    DenseTensor w;          ///< I x I x V
    double mu = 0.0;
    double rho = 0.0;
    std::size_t t = 0;      ///< completed iterations
    std::optional<FactorSet> cached;  ///< last ATTN factors, reused between topology refreshes

    static AdmmState initial(const MscProblem& p, const MscConfig& cfg) {
        const auto n = static_cast<Eigen::Index>(p.n_samples());
        AdmmState st;
        for (const auto& x : p.views) {
            st.z.push_back(Matrix::Zero(n, n));
            st.e.push_back(Matrix::Zero(x.rows(), n));
            st.y.push_back(Matrix::Zero(x.rows(), n));
        }
        st.s = DenseTensor({p.n_samples(), p.n_samples(), p.n_views()});
        st.w = st.s;
        st.mu = cfg.mu0;
        st.rho = cfg.rho0;
        return st;
    }
};

namespace detail {

inline Matrix frontal(const DenseTensor& t, std::size_t v) {
    const auto n = static_cast<Eigen::Index>(t.dim(0));
    return Eigen::Map<const Matrix>(t.data().data() + v * t.dim(0) * t.dim(1), n, static_cast<Eigen::Index>(t.dim(1)));
}

inline void set_frontal(DenseTensor& t, std::size_t v, const Matrix& m) {
    std::copy(m.data(), m.data() + m.size(), t.data().begin() + static_cast<std::ptrdiff_t>(v * t.dim(0) * t.dim(1)));
}

inline DenseTensor stack_frontal(const std::vector<Matrix>& slices) {
    const auto n = static_cast<std::size_t>(slices.at(0).rows());
    DenseTensor t({n, static_cast<std::size_t>(slices[0].cols()), slices.size()});
    for (std::size_t v = 0; v < slices.size(); ++v) set_frontal(t, v, slices[v]);
    return t;
}

} // namespace detail

/// Closed-form minimizer of the Z_v subproblem:
/// (I + (mu/rho) X'X) Z = (X'Y + mu X'X - mu X'E - W_v)/rho + S_v.
inline Matrix update_z(const AdmmState& st, const MscProblem& p, std::size_t v) {
    const Matrix& x = p.views.at(v);
    const Matrix xtx = x.transpose() * x;
    const auto n = xtx.rows();
    const Matrix lhs = Matrix::Identity(n, n) + (st.mu / st.rho) * xtx;
    const Matrix rhs = (x.transpose() * st.y[v] + st.mu * xtx - st.mu * x.transpose() * st.e[v] -
                        detail::frontal(st.w, v)) / st.rho +
                       detail::frontal(st.s, v);
    Eigen::LLT<Matrix> llt(lhs);
    require(llt.info() == Eigen::Success, ErrorCode::numerical_failure, "Z-update system is not positive definite");
    return llt.solve(rhs);
}

/// Column-wise l2,1 shrinkage of a stacked matrix with threshold tau.
inline Matrix l21_shrink(const Matrix& d, double tau) {
    Matrix out = Matrix::Zero(d.rows(), d.cols());
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
        const double norm = d.col(c).norm();
        if (norm > tau) out.col(c) = ((norm - tau) / norm) * d.col(c);
    }
    return out;
}

/// E = prox_{(lambda/mu) ||.||_{2,1}}(D), D stacking X_v - X_v Z_v + Y_v/mu.
inline std::vector<Matrix> update_e(const AdmmState& st, const MscProblem& p, double lambda) {
    Eigen::Index rows = 0;
    for (const auto& x : p.views) rows += x.rows();
    const auto n = static_cast<Eigen::Index>(p.n_samples());
    Matrix d(rows, n);
    Eigen::Index off = 0;
    for (std::size_t v = 0; v < p.n_views(); ++v) {
        const Matrix& x = p.views[v];
        d.middleRows(off, x.rows()) = x - x * st.z[v] + st.y[v] / st.mu;
        off += x.rows();
    }
    const Matrix e = l21_shrink(d, lambda / st.mu);
    std::vector<Matrix> out;
    off = 0;
    for (const auto& x : p.views) {
        out.push_back(e.middleRows(off, x.rows()));
        off += x.rows();
    }
    return out;
}

inline void update_y(AdmmState& st, const MscProblem& p) {
    for (std::size_t v = 0; v < p.n_views(); ++v) {
        const Matrix& x = p.views[v];
        st.y[v] += st.mu * (x - x * st.z[v] - st.e[v]);
    }
}

inline void update_w(AdmmState& st) {
    const DenseTensor z = detail::stack_frontal(st.z);
    st.w += (z - st.s) * st.rho;
}

inline void update_penalties(AdmmState& st, const MscConfig& cfg) {
    st.mu = std::min(cfg.eta * st.mu, cfg.mu_max);
    st.rho = std::min(cfg.eta * st.rho, cfg.rho_max);
}

/// Y_v, W and the penalty schedule in one step (all primal variables current).
inline void update_multipliers(AdmmState& st, const MscProblem& p, const MscConfig& cfg) {
    update_y(st, p);
    update_w(st);
    update_penalties(st, cfg);
}

struct SUpdateInfo {
    bool full_search = false;  ///< topology and ranks re-learned this iteration
    double fit_rse = 0.0;      ///< RSE of S against Z + W/rho
    bool attn_converged = true;
    std::size_t sweeps = 0;
    std::size_t storage = 0;
    std::vector<std::size_t> rank_matrix;
    std::vector<Edge> pruned;
    std::size_t increments = 0;
};

/// S from the low-rank fit of F = Phi(Z + W/rho) on the 5th-order grid.
/// The first iteration runs the full search from a random FCTN. Iterations
/// 1 + t, 1 + 2t, ... re-score, prune and grow the cached network (warm
/// start, so S does not jump to an unrelated local fit); all others only
/// re-fit the factor values of the cached network.
inline SUpdateInfo update_s(AdmmState& st, const MscProblem& p, const MscConfig& cfg) {
    SUpdateInfo info;
    DenseTensor target = detail::stack_frontal(st.z);
    target += st.w * (1.0 / st.rho);
    if (cfg.s_step == SStep::exact) {
        st.s = std::move(target);
        return info;
    }
    const auto& d = p.reshape_dims;
    const Shape grid{d[0], d[1], d[2], d[3], p.n_views()};
    const DenseTensor f = reshape(target, grid);
    if (frobenius_norm(f) == 0.0) {
        st.s = DenseTensor(target.shape());
        return info;
    }

    const std::size_t iteration = st.t + 1;
    AttnConfig ac = cfg.attn;
    ac.rng_seed = derive_seed(cfg.attn.rng_seed, iteration);
    info.full_search = !st.cached || (iteration - 1) % cfg.topology_refresh_interval == 0;
    FactorSet factors;
    if (info.full_search) {
        AttnResult r = st.cached ? attn_search(f, *st.cached, ac) : attn_decompose(f, ac);
        info.attn_converged = r.converged;
        info.sweeps = r.sweeps_used;
        info.pruned = r.pruned_edges;
        info.increments = r.increments.size();
        factors = std::move(r.factors);
    } else {
        AlsOptions opt = AlsOptions::from(ac);
        opt.iter_max = cfg.refit_sweeps;
        opt.tol = cfg.refit_tol;
        AlsResult r = als_fit(f, *st.cached, opt);
        info.attn_converged = r.converged;
        info.sweeps = r.sweeps;
        factors = std::move(r.factors);
    }
    const DenseTensor approx = contract_network(factors);
    info.fit_rse = rse(approx, f);
    info.storage = storage_cost(factors);
    info.rank_matrix = factors.topology().rank_matrix();
    st.s = reshape(approx, target.shape());
    st.cached = std::move(factors);
    return info;
}

struct Residuals {
    double reconstruction = 0.0;  ///< max_v ||X_v - X_v Z_v - E_v||_inf
    double match = 0.0;           ///< max_v ||Z_v - S_v||_inf
};

inline Residuals residuals(const AdmmState& st, const MscProblem& p) {
    Residuals r;
    for (std::size_t v = 0; v < p.n_views(); ++v) {
        const Matrix& x = p.views[v];
        r.reconstruction = std::max(r.reconstruction, (x - x * st.z[v] - st.e[v]).cwiseAbs().maxCoeff());
        r.match = std::max(r.match, (st.z[v] - detail::frontal(st.s, v)).cwiseAbs().maxCoeff());
    }
    return r;
}

struct MscIteration {
    std::size_t iteration = 0;
    double reconstruction_error = 0.0;
    double match_error = 0.0;
    double mu = 0.0;  ///< penalty used during this iteration
    double rho = 0.0;
    SUpdateInfo s_info;
};

struct StageTimes {
    double z = 0.0, e = 0.0, y = 0.0, s = 0.0, w = 0.0;
};

struct MscResult {
    std::vector<Matrix> z;
    std::vector<MscIteration> trace;
    bool converged = false;
    std::size_t iterations = 0;
    StageTimes seconds;
    double wall_seconds = 0.0;
};

/// Update order per iteration: Z_v for every view, E, Y_v, S, W, penalties.
/// Stops once both residuals are <= tol.
inline MscResult solve(const MscProblem& p, const MscConfig& cfg) {
    p.validate();
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto since = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };
    const auto start = clock::now();

    AdmmState st = AdmmState::initial(p, cfg);
    MscResult out;
    for (std::size_t it = 0; it < cfg.iter_max; ++it) {
        MscIteration rec;
        rec.iteration = it + 1;
        rec.mu = st.mu;
        rec.rho = st.rho;

        auto t0 = clock::now();
        for (std::size_t v = 0; v < p.n_views(); ++v) st.z[v] = update_z(st, p, v);
        out.seconds.z += since(t0);

        t0 = clock::now();
        st.e = update_e(st, p, cfg.lambda);
        out.seconds.e += since(t0);

        t0 = clock::now();
        update_y(st, p);
        out.seconds.y += since(t0);

        t0 = clock::now();
        rec.s_info = update_s(st, p, cfg);
        out.seconds.s += since(t0);

        t0 = clock::now();
        update_w(st);
        update_penalties(st, cfg);
        out.seconds.w += since(t0);

        ++st.t;
        const Residuals r = residuals(st, p);
        rec.reconstruction_error = r.reconstruction;
        rec.match_error = r.match;
        out.trace.push_back(std::move(rec));
        if (std::max(r.reconstruction, r.match) <= cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = st.t;
    out.z = std::move(st.z);
    out.wall_seconds = since(start);
    return out;
}

/// M = (1/V) sum_v (|Z_v| + |Z_v'|).
inline Matrix build_affinity(const std::vector<Matrix>& z) {
    require(!z.empty(), ErrorCode::invalid_argument, "no coefficient matrices");
    const auto n = z[0].rows();
    Matrix m = Matrix::Zero(n, n);
    for (const auto& zv : z) {
        require(zv.rows() == n && zv.cols() == n, ErrorCode::shape_mismatch, "coefficient matrices must be I x I");
        m += zv.cwiseAbs();
    }
    m = (m + m.transpose().eval()) / static_cast<double>(z.size());
    return m;
}

} // namespace attn
