#pragma once

// Seeded generators used by the tests, the acceptance harness and `attn_cli gen`.

#include "attn/dataset.hpp"
#include "attn/random.hpp"
#include "attn/tensor.hpp"
#include "attn/topology.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace attn {

struct PlantedNetwork {
    DenseTensor tensor;
    FactorSet factors;
};

/// Gaussian factors rescaled to exactly unit RMS, contracted into the tensor.
inline PlantedNetwork gen_planted_network(const TopologyGraph& topology, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x91a7));
    FactorSet f = FactorSet::random(topology, rng);
    std::vector<DenseTensor> factors = f.factors();
    for (auto& g : factors) {
        const double r = rms(g);
        if (r > 0) g *= 1.0 / r;
    }
    FactorSet planted(topology, std::move(factors));
    DenseTensor x = contract_network(planted);
    return {std::move(x), std::move(planted)};
}

struct MultiViewSpec {
    std::size_t k = 4;
    std::size_t per_cluster = 10;
    std::size_t views = 3;
    std::size_t subspace_dim = 3;
    std::size_t feature_dim = 30;  ///< rows of every view
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;
};

/// Union-of-subspaces data: per view and cluster an orthonormal basis of
/// subspace_dim columns; each sample is basis * N(0,1) coefficients plus
/// N(0, sigma^2) noise. Samples are ordered cluster by cluster.
inline MultiViewDataset gen_synthetic_multiview(const MultiViewSpec& spec) {
    require(spec.k >= 1 && spec.per_cluster >= 1 && spec.views >= 1 && spec.subspace_dim >= 1,
            ErrorCode::invalid_argument, "synthetic dataset parameters must be positive");
    require(spec.subspace_dim <= spec.feature_dim, ErrorCode::invalid_argument,
            "subspace_dim exceeds feature_dim");
    require(spec.noise_sigma >= 0, ErrorCode::invalid_argument, "noise_sigma must be nonnegative");

    const std::size_t n = spec.k * spec.per_cluster;
    const auto rows = static_cast<Eigen::Index>(spec.feature_dim);
    const auto d = static_cast<Eigen::Index>(spec.subspace_dim);

    MultiViewDataset ds;
    ds.name = "synthetic";
    ds.k = spec.k;
    ds.labels = Labels(n);
    for (std::size_t s = 0; s < n; ++s) (*ds.labels)[s] = static_cast<int>(s / spec.per_cluster);

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t v = 0; v < spec.views; ++v) {
        Rng rng(derive_seed(spec.seed, 0x5b5, v));
        Matrix x(rows, static_cast<Eigen::Index>(n));
        for (std::size_t c = 0; c < spec.k; ++c) {
            Matrix g(rows, d);
            for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
            const Matrix basis = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(rows, d);
            for (std::size_t s = 0; s < spec.per_cluster; ++s) {
                Vector coef(d);
                for (Eigen::Index i = 0; i < d; ++i) coef(i) = gauss(rng);
                x.col(static_cast<Eigen::Index>(c * spec.per_cluster + s)) = basis * coef;
            }
        }
        if (spec.noise_sigma > 0)
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += spec.noise_sigma * gauss(rng);
        ds.views.push_back(std::move(x));
    }
    return ds;
}

/// Deterministic 64x64x3 (rows, cols, channel) test card with values in
/// [0, 1]: smooth gradients, a disc, stripes and a checker patch, so it is
/// compressible but not exactly low rank.
inline DenseTensor synthetic_test_image(std::size_t height = 64, std::size_t width = 64) {
    DenseTensor img({height, width, 3});
    const double pi = std::numbers::pi;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t y = 0; y < height; ++y) {
                const double u = static_cast<double>(y) / static_cast<double>(height);
                const double w = static_cast<double>(x) / static_cast<double>(width);
                double v = 0.35 + 0.25 * std::sin(2 * pi * (u + 0.3 * c)) * std::cos(pi * (1.5 * w - 0.2 * c));
                const double du = u - 0.55, dw = w - 0.4;
                if (du * du + dw * dw < 0.06) v += 0.3 - 0.1 * static_cast<double>(c);
                if (w > 0.7) v += 0.12 * std::sin(2 * pi * 6 * u);
                if (u < 0.25 && w < 0.25 && ((y / 4 + x / 4) % 2 == 0)) v += 0.2;
                img.at({y, x, c}) = std::clamp(v, 0.0, 1.0);
            }
    return img;
}

} // namespace attn
