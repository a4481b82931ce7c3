#pragma once

// Ng-Jordan-Weiss spectral clustering: normalized affinity, k leading
// eigenvectors, row normalization, then k-means++ with restarts.

#include "attn/error.hpp"
#include "attn/metrics.hpp"
#include "attn/random.hpp"
#include "attn/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace attn {

struct KMeansResult {
    Labels labels;
    Matrix centers;                  ///< k x d
    double objective = 0.0;          ///< sum of squared distances to the assigned center
    std::vector<double> objective_trace;  ///< after every assignment step
    std::size_t iterations = 0;
};

namespace detail {

inline Matrix kmeanspp_seed(const Matrix& pts, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(pts.rows());
    Matrix centers(static_cast<Eigen::Index>(k), pts.cols());
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.row(0) = pts.row(static_cast<Eigen::Index>(first(rng)));
    Vector d2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (std::size_t c = 1; c < k; ++c) {
        const double total = d2.sum();
        std::size_t pick = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2(static_cast<Eigen::Index>(i));
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centers.row(static_cast<Eigen::Index>(c)) = pts.row(static_cast<Eigen::Index>(pick));
        d2 = d2.cwiseMin((pts.rowwise() - centers.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
    }
    return centers;
}

inline double assign(const Matrix& pts, const Matrix& centers, Labels& labels, Vector& dist) {
    double obj = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        Eigen::Index best = 0;
        const double d = (centers.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&best);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        dist(i) = d;
        obj += d;
    }
    return obj;
}

} // namespace detail

/// Lloyd iterations from a k-means++ start. An empty cluster is reseeded with
/// the point farthest from its current center.
inline KMeansResult kmeans_single(const Matrix& pts, std::size_t k, Rng& rng, std::size_t max_iter = 300) {
    const auto n = static_cast<std::size_t>(pts.rows());
    require(k >= 1 && k <= n, ErrorCode::invalid_argument, "k must lie in [1, number of points]");
    KMeansResult r;
    r.centers = detail::kmeanspp_seed(pts, k, rng);
    r.labels.assign(n, 0);
    Vector dist(pts.rows());
    r.objective = detail::assign(pts, r.centers, r.labels, dist);
    r.objective_trace.push_back(r.objective);
    for (std::size_t it = 0; it < max_iter; ++it) {
        Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), pts.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(r.labels[i]) += pts.row(static_cast<Eigen::Index>(i));
            ++counts[static_cast<std::size_t>(r.labels[i])];
        }
        for (std::size_t c = 0; c < k; ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            if (counts[c] > 0) {
                r.centers.row(ci) = sums.row(ci) / static_cast<double>(counts[c]);
            } else {
                Eigen::Index far = 0;
                dist.maxCoeff(&far);
                r.centers.row(ci) = pts.row(far);
                dist(far) = 0.0;
            }
        }
        const Labels before = r.labels;
        r.objective = detail::assign(pts, r.centers, r.labels, dist);
        r.objective_trace.push_back(r.objective);
        ++r.iterations;
        if (r.labels == before) break;
    }
    return r;
}

/// Best of `restarts` seeded runs by objective; ties keep the earliest restart.
inline KMeansResult kmeans(const Matrix& pts, std::size_t k, std::uint64_t seed, std::size_t restarts = 20,
                           std::size_t max_iter = 300) {
    require(restarts >= 1, ErrorCode::invalid_argument, "need at least one k-means restart");
    std::optional<KMeansResult> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, 0x6b6d, r));
        KMeansResult run = kmeans_single(pts, k, rng, max_iter);
        if (!best || run.objective < best->objective) best = std::move(run);
    }
    return std::move(*best);
}

struct SpectralOptions {
    std::size_t restarts = 20;
    std::size_t max_iter = 300;
};

struct SpectralResult {
    Labels labels;
    Matrix embedding;  ///< row-normalized eigenvector rows, I x k
    double kmeans_objective = 0.0;
    bool isolated_vertices = false;  ///< some degree was floored at 1e-12
};

inline SpectralResult spectral_cluster(const Matrix& affinity, std::size_t k, std::uint64_t seed,
                                       const SpectralOptions& opt = {}) {
    require(affinity.rows() == affinity.cols(), ErrorCode::shape_mismatch, "affinity must be square");
    const auto n = static_cast<std::size_t>(affinity.rows());
    require(k >= 1 && k <= n, ErrorCode::invalid_argument, "k must lie in [1, number of samples]");
    require((affinity.array() >= 0).all(), ErrorCode::invalid_argument, "affinity must be nonnegative");
    require((affinity - affinity.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + affinity.cwiseAbs().maxCoeff()),
            ErrorCode::invalid_argument, "affinity must be symmetric");

    SpectralResult out;
    if (k == 1) {
        out.labels.assign(n, 0);
        out.embedding = Matrix::Ones(static_cast<Eigen::Index>(n), 1);
        return out;
    }
    Vector deg = affinity.rowwise().sum();
    for (Eigen::Index i = 0; i < deg.size(); ++i) {
        if (deg(i) < 1e-12) {
            deg(i) = 1e-12;
            out.isolated_vertices = true;
        }
    }
    const Vector inv_sqrt = deg.cwiseSqrt().cwiseInverse();
    // Smallest eigenvalues of I - D^-1/2 M D^-1/2 are the largest of the
    // normalized affinity; Eigen sorts ascending, so take the last k columns.
    Matrix normalized = inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
    normalized = 0.5 * (normalized + normalized.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(normalized);
    require(eig.info() == Eigen::Success, ErrorCode::numerical_failure, "eigendecomposition failed");
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix u = eig.eigenvectors().rightCols(kk);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double norm = u.row(i).norm();
        if (norm > 0) u.row(i) /= norm;
    }
    KMeansResult km = kmeans(u, k, seed, opt.restarts, opt.max_iter);
    out.labels = std::move(km.labels);
    out.embedding = std::move(u);
    out.kmeans_objective = km.objective;
    return out;
}

struct ClusterReport {
    Labels labels;
    std::optional<MetricSet> metrics;  ///< absent when no ground truth is known
    std::uint64_t seed = 0;
    std::size_t restarts = 0;
};

} // namespace attn
