#pragma once

// External clustering metrics. Labels are arbitrary non-negative integers;
// everything goes through the contingency table, so relabeling either side
// never changes a value.

#include "attn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <vector>

namespace attn {

using Labels = std::vector<int>;

struct Contingency {
    std::vector<std::vector<double>> table;  ///< rows: true classes, cols: predicted clusters
    std::vector<double> row_sums;
    std::vector<double> col_sums;
    double n = 0.0;
};

namespace detail {

inline std::vector<std::size_t> compact_labels(const Labels& labels, std::size_t& n_distinct) {
    std::map<int, std::size_t> ids;
    for (int l : labels) ids.emplace(l, 0);
    std::size_t next = 0;
    for (auto& [label, id] : ids) id = next++;
    n_distinct = next;
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (int l : labels) out.push_back(ids.at(l));
    return out;
}

inline double choose2(double x) { return 0.5 * x * (x - 1.0); }

inline double entropy(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0) h -= (c / n) * std::log(c / n);
    return h;
}

} // namespace detail

inline Contingency contingency(const Labels& truth, const Labels& pred) {
    require(truth.size() == pred.size(), ErrorCode::shape_mismatch, "label sequences differ in length");
    require(!truth.empty(), ErrorCode::invalid_argument, "empty labeling");
    std::size_t kt = 0, kp = 0;
    const auto t = detail::compact_labels(truth, kt);
    const auto p = detail::compact_labels(pred, kp);
    Contingency c;
    c.table.assign(kt, std::vector<double>(kp, 0.0));
    c.row_sums.assign(kt, 0.0);
    c.col_sums.assign(kp, 0.0);
    for (std::size_t s = 0; s < t.size(); ++s) {
        c.table[t[s]][p[s]] += 1.0;
        c.row_sums[t[s]] += 1.0;
        c.col_sums[p[s]] += 1.0;
    }
    c.n = static_cast<double>(t.size());
    return c;
}

/// Minimum-cost assignment on a square cost matrix (Hungarian method with
/// potentials, O(n^3)). Returns the column assigned to each row.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j)
        if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

/// Best fraction of samples matched under a one-to-one cluster/class mapping.
inline double accuracy(const Labels& truth, const Labels& pred) {
    const Contingency c = contingency(truth, pred);
    const std::size_t k = std::max(c.row_sums.size(), c.col_sums.size());
    std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < c.row_sums.size(); ++i)
        for (std::size_t j = 0; j < c.col_sums.size(); ++j) cost[i][j] = -c.table[i][j];
    const auto assign = min_cost_assignment(cost);
    double hit = 0.0;
    for (std::size_t i = 0; i < k; ++i) hit -= cost[i][assign[i]];
    return hit / c.n;
}

struct PairwiseScores {
    double f_score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Pair-counting precision/recall: a pair is positive when both samples share
/// a predicted cluster, correct when they also share a true class.
inline PairwiseScores pairwise_prf(const Labels& truth, const Labels& pred) {
    require(truth.size() >= 2, ErrorCode::invalid_argument, "pair counting needs at least two samples");
    const Contingency c = contingency(truth, pred);
    double tp = 0.0, pred_pairs = 0.0, true_pairs = 0.0;
    for (const auto& row : c.table)
        for (double x : row) tp += detail::choose2(x);
    for (double x : c.col_sums) pred_pairs += detail::choose2(x);
    for (double x : c.row_sums) true_pairs += detail::choose2(x);
    PairwiseScores s;
    s.precision = pred_pairs > 0 ? tp / pred_pairs : 0.0;
    s.recall = true_pairs > 0 ? tp / true_pairs : 0.0;
    s.f_score = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

/// Mutual information over the arithmetic mean of the two entropies. When
/// both entropies vanish the partitions are both trivial: 1 if they agree,
/// which they always do then. A single zero entropy gives 0.
inline double nmi(const Labels& truth, const Labels& pred) {
    const Contingency c = contingency(truth, pred);
    const double ht = detail::entropy(c.row_sums, c.n);
    const double hp = detail::entropy(c.col_sums, c.n);
    if (ht <= 0.0 && hp <= 0.0) return 1.0;
    if (ht <= 0.0 || hp <= 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < c.row_sums.size(); ++i)
        for (std::size_t j = 0; j < c.col_sums.size(); ++j) {
            const double nij = c.table[i][j];
            if (nij > 0) mi += (nij / c.n) * std::log(nij * c.n / (c.row_sums[i] * c.col_sums[j]));
        }
    return std::clamp(mi / (0.5 * (ht + hp)), 0.0, 1.0);
}

/// Hubert-Arabie adjusted Rand index.
inline double adjusted_rand(const Labels& truth, const Labels& pred) {
    const Contingency c = contingency(truth, pred);
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& row : c.table)
        for (double x : row) sum_ij += detail::choose2(x);
    for (double x : c.row_sums) sum_a += detail::choose2(x);
    for (double x : c.col_sums) sum_b += detail::choose2(x);
    const double total = detail::choose2(c.n);
    const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;  // both partitions trivial in the same way
    return (sum_ij - expected) / (max_index - expected);
}

struct MetricSet {
    double f_score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double nmi = 0.0;
    double ar = 0.0;
    double acc = 0.0;
};

inline MetricSet evaluate(const Labels& truth, const Labels& pred) {
    const PairwiseScores p = pairwise_prf(truth, pred);
    return {p.f_score, p.precision, p.recall, nmi(truth, pred), adjusted_rand(truth, pred),
            accuracy(truth, pred)};
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Population standard deviation, matching "mean (std)" tables over trials.
inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    for (double x : xs) out.std += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(out.std / static_cast<double>(xs.size()));
    return out;
}

} // namespace attn
