#include "attn/topology.hpp"
#include "attn/topology_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace attn;

namespace {

FactorSet random_network(Rng& rng, std::size_t order, std::size_t max_dim, std::size_t max_rank) {
    std::uniform_int_distribution<std::size_t> d(1, max_dim), r(1, max_rank);
    Shape modes(order);
    for (auto& m : modes) m = d(rng);
    std::vector<std::size_t> ranks(order * (order - 1) / 2);
    for (auto& x : ranks) x = r(rng);
    return FactorSet::random(TopologyGraph::from_edge_ranks(modes, ranks), rng);
}

void expect_close(const DenseTensor& a, const DenseTensor& b, double tol) {
    ASSERT_EQ(a.shape(), b.shape());
    const double scale = std::max(1.0, frobenius_norm(b));
    EXPECT_LE(frobenius_distance(a, b), tol * scale);
}

} // namespace

TEST(Topology, RankMatrixAndFactorShapes) {
    const auto g = TopologyGraph::from_edge_ranks({4, 5, 6}, {2, 3, 1});
    EXPECT_EQ(g.rank(0, 1), 2u);
    EXPECT_EQ(g.rank(2, 0), 3u);
    EXPECT_EQ(g.rank(1, 2), 1u);
    EXPECT_EQ(g.factor_shape(0), (Shape{4, 2, 3}));
    EXPECT_EQ(g.factor_shape(1), (Shape{5, 2, 1}));
    EXPECT_EQ(g.factor_shape(2), (Shape{6, 3, 1}));
    EXPECT_EQ(g.present_edges(), (std::vector<Edge>{{0, 1}, {0, 2}}));
    EXPECT_TRUE(g.is_connected());
    EXPECT_EQ(g.edge_index(2, 1), 2u);
}

TEST(Topology, ChainAndRing) {
    const auto c = TopologyGraph::chain({3, 3, 3, 3}, {2, 3, 4});
    EXPECT_EQ(c.present_edges(), (std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}}));
    const auto r = TopologyGraph::ring({3, 3, 3}, {2, 2, 2});
    EXPECT_EQ(r.present_edges().size(), 3u);
    EXPECT_THROW((void)TopologyGraph::ring({3, 3}, {2, 2}), Error);
}

TEST(Topology, RejectsAsymmetricRanks) {
    try {
        TopologyGraph g({2, 2}, {0, 2, 3, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(Topology, FactorSetShapeChecked) {
    const auto g = TopologyGraph::uniform({2, 2, 2}, 2);
    std::vector<DenseTensor> bad(3, DenseTensor({2, 2, 3}));
    try {
        FactorSet f(g, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    }
}

TEST(Topology, StorageCost) {
    const auto g = TopologyGraph::uniform({4, 4, 4}, 2);
    EXPECT_EQ(storage_cost(g), 48u);
    Rng rng(1);
    EXPECT_EQ(storage_cost(FactorSet::random(g, rng)), 48u);
}

// Property: raising any single edge rank never lowers the storage cost.
TEST(Topology, StorageMonotoneInRanks) {
    Rng rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        FactorSet f = random_network(rng, 3 + trial % 3, 4, 3);
        TopologyGraph g = f.topology();
        const auto edges = g.all_edges();
        const Edge e = edges[static_cast<std::size_t>(trial) % edges.size()];
        const std::size_t before = storage_cost(g);
        g.set_rank(e.i, e.j, g.rank(e.i, e.j) + 1);
        EXPECT_GT(storage_cost(g), before);
    }
}

TEST(Topology, ContractionMatchesNestedSum) {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const FactorSet f = random_network(rng, 2 + trial % 4, 3, 3);
        expect_close(contract_network(f), oracle::network(f), 1e-12);
    }
}

TEST(Topology, GreedyEqualsSequential) {
    Rng rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const FactorSet f = random_network(rng, 3 + trial % 3, 4, 3);
        expect_close(contract_network(f, ContractionOrder::greedy), contract_network(f, ContractionOrder::sequential),
                     1e-12);
    }
}

// Property: X_(n) = G^(n)_(1) * A^{!=n}_(n) for every factor.
TEST(Topology, LeaveOneOutFactorization) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const FactorSet f = random_network(rng, 3 + trial % 3, 3, 3);
        for (std::size_t n = 0; n < f.n_factors(); ++n) {
            const Matrix a = leave_one_out_matrix(f, n);
            const std::size_t rank_prod = f.factor(n).size() / f.topology().mode_size(n);
            EXPECT_EQ(static_cast<std::size_t>(a.rows()), rank_prod);
            const Matrix g = mode_unfold(f.factor(n), 0);
            const Matrix xn = mode_unfold(contract_network(f), n);
            EXPECT_LE((xn - g * a).norm(), 1e-11 * std::max(1.0, xn.norm()));
        }
    }
}

// Collapsing an edge whose rank modes are constant leaves the contraction unchanged.
TEST(Topology, CollapseConstantEdgeIsExact) {
    Rng rng(6);
    const auto g1 = TopologyGraph::from_edge_ranks({3, 3, 3}, {2, 1, 2});
    const FactorSet small = FactorSet::random(g1, rng);
    // Embed (0,2) at rank 3 with identical slices, scaled by 1/3 on one side.
    auto g3 = g1;
    g3.set_rank(0, 2, 3);
    std::vector<DenseTensor> factors;
    for (std::size_t n = 0; n < 3; ++n) factors.push_back(DenseTensor(g3.factor_shape(n)));
    for (std::size_t n = 0; n < 3; ++n) {
        oracle::for_each_index(g3.factor_shape(n), [&](const auto& i) {
            auto src = i;
            double w = 1.0;
            if (n == 0) src[g3.rank_mode(0, 2)] = 0, w = 1.0 / 3.0;
            if (n == 2) src[g3.rank_mode(2, 0)] = 0;
            factors[n].at(i) = w * small.factor(n).at(src);
        });
    }
    const FactorSet wide(g3, factors);
    expect_close(contract_network(wide), contract_network(small), 1e-12);
    const FactorSet collapsed = collapse_edge_mean(wide, 0, 2);
    EXPECT_EQ(collapsed.topology().rank(0, 2), 1u);
    // mean over the rank mode divides factor 0 by 3 and leaves factor 2 as is;
    // undo the 1/3 to recover the small network.
    expect_close(contract_network(collapsed) * 3.0, contract_network(small), 1e-12);
}

TEST(Topology, GrowEdgeWithZeroPadIsExact) {
    Rng rng(7);
    const FactorSet f = random_network(rng, 4, 3, 2);
    const FactorSet g = grow_edge(f, 1, 3, 2, rng, 0.0);
    EXPECT_EQ(g.topology().rank(1, 3), f.topology().rank(1, 3) + 2);
    expect_close(contract_network(g), contract_network(f), 1e-12);
}

TEST(Topology, DisconnectedFlag) {
    Rng rng(8);
    const auto g = TopologyGraph::from_edge_ranks({2, 2, 2, 2}, {2, 1, 1, 1, 1, 2});
    const FactorSet f = FactorSet::random(g, rng);
    EXPECT_FALSE(f.connected());
    expect_close(contract_network(f), oracle::network(f), 1e-12);
}

TEST(TopologyIo, RoundTrip) {
    Rng rng(9);
    const FactorSet f = random_network(rng, 4, 3, 3);
    const auto dir = std::filesystem::temp_directory_path() / "attn_topology_io_test";
    std::filesystem::remove_all(dir);
    save_factor_set(dir, f);
    EXPECT_EQ(load_factor_set(dir), f);
    std::filesystem::remove_all(dir);
}
