#pragma once

// Adaptive-topology tensor network fitting: FCTN alternating least squares,
// RSE-delta scoring and pruning of redundant edges, then greedy rank growth on
// the edges that survive.

#include "attn/error.hpp"
#include "attn/random.hpp"
#include "attn/tensor.hpp"
#include "attn/topology.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace attn {

struct AttnConfig {
    std::size_t r_init = 2;         ///< initial uniform edge rank (>= 2 keeps the network fully connected)
    double tol_als = 1e-6;          ///< sweep-to-sweep relative change that stops ALS
    std::size_t iter_max_als = 300;
    double epsilon = 1e-3;          ///< target RSE for the rank-growth loop
    std::size_t step_a = 1;         ///< rank added per committed increment
    std::size_t probe_sweeps = 3;   ///< ALS sweeps spent on each removal / growth probe
    double prune_gap_ratio = 5.0;   ///< gamma of the largest-ratio-gap pruning rule
    double delta_floor = 1e-6;      ///< deltas below this are treated as equal (ALS noise level)
    double ridge = 1e-12;           ///< Tikhonov term added to the normal equations
    double pad_scale = 1e-2;        ///< new slices ~ pad_scale * RMS(existing factor entries)
    std::size_t increment_max = 64; ///< cap on committed rank increments
    bool enable_pruning = true;
    bool enable_increment = true;
    std::uint64_t rng_seed = 0;

    void validate() const {
        require(r_init >= 2, ErrorCode::invalid_argument, "r_init must be >= 2");
        require(tol_als > 0 && epsilon > 0 && ridge > 0, ErrorCode::invalid_argument,
                "tol_als, epsilon and ridge must be positive");
        require(step_a >= 1, ErrorCode::invalid_argument, "step_a must be >= 1");
        require(prune_gap_ratio > 1.0, ErrorCode::invalid_argument, "prune_gap_ratio must exceed 1");
        require(delta_floor > 0, ErrorCode::invalid_argument, "delta_floor must be positive");
    }
};

struct AlsOptions {
    double tol = 1e-6;
    std::size_t iter_max = 300;
    double ridge = 1e-12;

    static AlsOptions from(const AttnConfig& cfg) { return {cfg.tol_als, cfg.iter_max_als, cfg.ridge}; }
    static AlsOptions probe(const AttnConfig& cfg) { return {0.0, cfg.probe_sweeps, cfg.ridge}; }
};

struct AlsResult {
    FactorSet factors;
    std::vector<double> rse_trace;  ///< RSE against the target after each sweep
    std::size_t sweeps = 0;
    bool converged = false;
    double final_rse = 0.0;
};

/// Alternating least squares over the factors of `init`, cycling n = 0..N-1.
/// Each block update solves min ||X_(n) - G_(1) A^{!=n}_(n)||_F through the
/// ridge-regularized normal equations.
inline AlsResult als_fit(const DenseTensor& x, const FactorSet& init, const AlsOptions& opt) {
    const auto& topo = init.topology();
    require(x.shape() == topo.mode_sizes(), ErrorCode::shape_mismatch,
            "tensor shape " + shape_string(x.shape()) + " does not match network modes " +
                shape_string(topo.mode_sizes()));
    require(opt.ridge > 0, ErrorCode::invalid_argument, "ridge must be positive");
    const double x_norm = frobenius_norm(x);
    require(x_norm > 0, ErrorCode::zero_norm, "cannot fit a zero tensor");

    const std::size_t n_modes = topo.n_factors();
    std::vector<Matrix> unfolded;
    unfolded.reserve(n_modes);
    for (std::size_t n = 0; n < n_modes; ++n) unfolded.push_back(mode_unfold(x, n));

    AlsResult result;
    result.factors = init;
    DenseTensor last = contract_network(init);

    for (std::size_t sweep = 0; sweep < opt.iter_max; ++sweep) {
        std::vector<DenseTensor> factors = result.factors.factors();
        Matrix reconstruction_unfolded;
        for (std::size_t n = 0; n < n_modes; ++n) {
            const FactorSet current(topo, factors);
            const Matrix a = leave_one_out_matrix(current, n);
            Matrix gram = a * a.transpose();
            gram.diagonal().array() += opt.ridge;
            const Matrix rhs = a * unfolded[n].transpose();
            Eigen::LDLT<Matrix> ldlt(gram);
            require(ldlt.info() == Eigen::Success, ErrorCode::numerical_failure,
                    "normal equations could not be factorized");
            const Matrix g = ldlt.solve(rhs).transpose();
            require(g.allFinite(), ErrorCode::numerical_failure, "non-finite factor update");
            std::copy(g.data(), g.data() + g.size(), factors[n].data().begin());
            if (n + 1 == n_modes) reconstruction_unfolded = g * a;
        }
        result.factors = FactorSet(topo, std::move(factors));
        DenseTensor fresh = fold(reconstruction_unfolded, n_modes - 1, x.shape());
        result.rse_trace.push_back(frobenius_distance(fresh, x) / x_norm);
        ++result.sweeps;

        const double last_norm = frobenius_norm(last);
        const double change = last_norm > 0 ? frobenius_distance(last, fresh) / last_norm
                                            : std::numeric_limits<double>::infinity();
        last = std::move(fresh);
        if (change <= opt.tol) {
            result.converged = true;
            break;
        }
    }
    result.final_rse = rse(last, x);
    return result;
}

inline AlsResult als_fit(const DenseTensor& x, const FactorSet& init, const AttnConfig& cfg) {
    return als_fit(x, init, AlsOptions::from(cfg));
}

struct EdgeDelta {
    Edge edge;
    double rse_without = 0.0;  ///< RSE after collapsing the edge and re-settling
    double delta = 0.0;        ///< rse_without - base RSE
};

struct EdgeScores {
    double base_rse = 0.0;
    std::vector<EdgeDelta> entries;  ///< one per present edge, lexicographic
};

/// For every present edge: collapse it to rank 1 (mean over its rank mode),
/// run probe_sweeps ALS sweeps, and record the RSE increase. `f` is not modified.
inline EdgeScores score_edges(const DenseTensor& x, const FactorSet& f, const AttnConfig& cfg) {
    EdgeScores scores;
    scores.base_rse = rse(contract_network(f), x);
    for (const Edge e : f.topology().present_edges()) {
        const FactorSet probe = collapse_edge_mean(f, e.i, e.j);
        const AlsResult settled = als_fit(x, probe, AlsOptions::probe(cfg));
        scores.entries.push_back({e, settled.final_rse, settled.final_rse - scores.base_rse});
    }
    return scores;
}

/// Largest-ratio-gap rule on the ascending deltas. Values are floored at
/// max(delta_floor, 1e-12) before ratios are taken; if the biggest ratio
/// between neighbours reaches prune_gap_ratio, every edge below the gap is
/// returned. At least one edge always survives.
inline std::vector<Edge> prune_redundant(const EdgeScores& scores, const AttnConfig& cfg) {
    std::vector<EdgeDelta> sorted = scores.entries;
    if (sorted.size() < 2) return {};
    std::stable_sort(sorted.begin(), sorted.end(), [](const EdgeDelta& a, const EdgeDelta& b) {
        return a.delta < b.delta || (a.delta == b.delta && a.edge < b.edge);
    });
    const double floor = std::max(cfg.delta_floor, 1e-12);
    double best_ratio = 0.0;
    std::size_t best_gap = 0;
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        const double ratio = std::max(sorted[k + 1].delta, floor) / std::max(sorted[k].delta, floor);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_gap = k;
        }
    }
    std::vector<Edge> pruned;
    if (best_ratio >= cfg.prune_gap_ratio)
        for (std::size_t k = 0; k <= best_gap; ++k) pruned.push_back(sorted[k].edge);
    std::sort(pruned.begin(), pruned.end());
    return pruned;
}

struct IncrementCandidate {
    Edge edge;
    double probe_rse = 0.0;   ///< RSE against the input after the probe sweeps (ranking key)
    double change_rse = 0.0;  ///< ||TC(probe) - TC(current)||_F / ||TC(current)||_F
};

struct IncrementStep {
    Edge edge;
    std::size_t new_rank = 0;
    double probe_rse = 0.0;
    std::vector<IncrementCandidate> candidates;
    double rse_after_refit = 0.0;
    std::size_t refit_sweeps = 0;
};

struct IncrementResult {
    FactorSet factors;
    std::vector<IncrementStep> steps;
    std::vector<double> rse_trace;
    std::size_t sweeps = 0;
    double final_rse = 0.0;
    bool converged = false;  ///< final_rse <= epsilon
};

/// Greedy rank growth on the edges of rank > 1 (pruned edges never regrow).
/// Each round probes every retained edge with step_a extra slices, commits
/// the candidate with the lowest probe RSE against x (lexicographic tie-break)
/// and refines the whole network with a full ALS fit.
inline IncrementResult greedy_rank_increment(const DenseTensor& x, const FactorSet& f, const AttnConfig& cfg) {
    IncrementResult out;
    out.factors = f;
    out.final_rse = rse(contract_network(f), x);

    for (std::size_t round = 0; round < cfg.increment_max && out.final_rse > cfg.epsilon; ++round) {
        const auto edges = out.factors.topology().present_edges();
        if (edges.empty()) break;
        const DenseTensor current = contract_network(out.factors);
        const double current_norm = frobenius_norm(current);

        IncrementStep step;
        std::optional<FactorSet> best;
        double best_rse = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < edges.size(); ++c) {
            const Edge e = edges[c];
            Rng rng(derive_seed(cfg.rng_seed, 0x1c0 + round, e.i * 1024 + e.j));
            const FactorSet grown = grow_edge(out.factors, e.i, e.j, cfg.step_a, rng, cfg.pad_scale);
            AlsResult probe = als_fit(x, grown, AlsOptions::probe(cfg));
            const DenseTensor probe_tc = contract_network(probe.factors);
            IncrementCandidate cand{e, probe.final_rse,
                                    current_norm > 0 ? frobenius_distance(probe_tc, current) / current_norm : 0.0};
            step.candidates.push_back(cand);
            if (cand.probe_rse < best_rse) {
                best_rse = cand.probe_rse;
                best = std::move(probe.factors);
                step.edge = e;
            }
        }
        step.probe_rse = best_rse;
        step.new_rank = best->topology().rank(step.edge.i, step.edge.j);

        AlsResult refit = als_fit(x, *best, cfg);
        out.factors = std::move(refit.factors);
        out.rse_trace.insert(out.rse_trace.end(), refit.rse_trace.begin(), refit.rse_trace.end());
        out.sweeps += refit.sweeps;
        out.final_rse = refit.final_rse;
        step.rse_after_refit = refit.final_rse;
        step.refit_sweeps = refit.sweeps;
        out.steps.push_back(std::move(step));
    }
    out.converged = out.final_rse <= cfg.epsilon;
    return out;
}

struct AttnResult {
    FactorSet factors;
    std::vector<double> rse_trace;  ///< every ALS sweep, all stages concatenated
    EdgeScores delta_table;
    std::vector<Edge> pruned_edges;
    std::vector<IncrementStep> increments;
    double initial_fit_rse = 0.0;
    double final_rse = 0.0;
    std::size_t sweeps_used = 0;
    bool converged = false;  ///< final_rse <= epsilon
};

/// Random uniform-rank FCTN, scaled so its contraction has the norm of x.
inline FactorSet initial_fctn(const DenseTensor& x, std::size_t rank, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xf17));
    FactorSet f = FactorSet::random(TopologyGraph::uniform(x.shape(), rank), rng);
    const double tc_norm = frobenius_norm(contract_network(f));
    const double x_norm = frobenius_norm(x);
    if (tc_norm <= 0 || x_norm <= 0) return f;
    const double s = std::pow(x_norm / tc_norm, 1.0 / static_cast<double>(f.n_factors()));
    std::vector<DenseTensor> factors = f.factors();
    for (auto& g : factors) g *= s;
    return {f.topology(), std::move(factors)};
}

/// Fit, score, prune and grow starting from an arbitrary network. The full
/// pipeline calls this with a random uniform FCTN; warm callers pass the
/// factors of a previous fit.
inline AttnResult attn_search(const DenseTensor& x, const FactorSet& init, const AttnConfig& cfg) {
    cfg.validate();
    AttnResult res;

    AlsResult fit = als_fit(x, init, cfg);
    res.rse_trace = fit.rse_trace;
    res.sweeps_used = fit.sweeps;
    res.initial_fit_rse = fit.final_rse;
    FactorSet current = std::move(fit.factors);

    if (cfg.enable_pruning && !current.topology().present_edges().empty()) {
        res.delta_table = score_edges(x, current, cfg);
        res.pruned_edges = prune_redundant(res.delta_table, cfg);
        if (!res.pruned_edges.empty()) {
            for (const Edge e : res.pruned_edges) current = collapse_edge_mean(current, e.i, e.j);
            AlsResult refit = als_fit(x, current, cfg);
            res.rse_trace.insert(res.rse_trace.end(), refit.rse_trace.begin(), refit.rse_trace.end());
            res.sweeps_used += refit.sweeps;
            current = std::move(refit.factors);
        }
    }

    if (cfg.enable_increment) {
        IncrementResult grown = greedy_rank_increment(x, current, cfg);
        res.rse_trace.insert(res.rse_trace.end(), grown.rse_trace.begin(), grown.rse_trace.end());
        res.sweeps_used += grown.sweeps;
        res.increments = std::move(grown.steps);
        current = std::move(grown.factors);
    }

    res.factors = std::move(current);
    res.final_rse = rse(contract_network(res.factors), x);
    res.converged = res.final_rse <= cfg.epsilon;
    return res;
}

/// Full pipeline: uniform FCTN init, ALS, edge scoring, pruning, greedy growth.
inline AttnResult attn_decompose(const DenseTensor& x, const AttnConfig& cfg) {
    cfg.validate();
    require(x.order() >= 3, ErrorCode::invalid_argument, "adaptive topology search needs order >= 3");
    return attn_search(x, initial_fctn(x, cfg.r_init, cfg.rng_seed), cfg);
}

} // namespace attn
