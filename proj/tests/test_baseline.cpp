#include "attn/baseline.hpp"
#include "attn/synthetic.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace attn;

TEST(Baseline, ArityTable) {
    EXPECT_EQ(rank_arity(Method::tucker, 4), 4u);
    EXPECT_EQ(rank_arity(Method::tt, 4), 3u);
    EXPECT_EQ(rank_arity(Method::tr, 4), 4u);
    EXPECT_EQ(rank_arity(Method::fctn, 4), 6u);
    EXPECT_EQ(parse_method("tucker"), Method::tucker);
    EXPECT_THROW((void)parse_method("cp"), Error);
}

TEST(Baseline, ArityMismatchRejected) {
    const DenseTensor x = DenseTensor::filled({3, 3, 3}, 1.0);
    for (auto [m, n] : {std::pair{Method::tt, 3}, {Method::tucker, 2}, {Method::tr, 2}, {Method::fctn, 2}}) {
        BaselineSpec spec{m, std::vector<std::size_t>(static_cast<std::size_t>(n), 2)};
        try {
            (void)decompose(x, spec);
            FAIL() << to_string(m);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
        }
    }
    BaselineSpec too_big{Method::tucker, {4, 2, 2}};
    EXPECT_THROW((void)decompose(x, too_big), Error);
}

TEST(Baseline, TuckerFullRankIsExact) {
    Rng rng(1);
    const DenseTensor x = DenseTensor::random_normal({3, 4, 5}, rng);
    const BaselineResult r = decompose(x, {Method::tucker, {3, 4, 5}});
    EXPECT_LE(r.rse, 1e-10);
    EXPECT_EQ(r.storage, 60u + 9u + 16u + 25u);
    ASSERT_TRUE(r.tucker);
    for (const auto& u : r.tucker->factors)
        EXPECT_LE((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm(), 1e-10);
}

TEST(Baseline, TuckerLowRankFit) {
    Rng rng(2);
    const DenseTensor core = DenseTensor::random_normal({2, 2, 2}, rng);
    DenseTensor x = core;
    for (std::size_t n = 0; n < 3; ++n) x = mode_product(x, Matrix::Random(5, 2), n);
    const BaselineResult r = decompose(x, {Method::tucker, {2, 2, 2}});
    EXPECT_LE(r.rse, 1e-10);
}

TEST(Baseline, TtRecoversChainExactly) {
    const auto planted = gen_planted_network(TopologyGraph::chain({4, 4, 4, 4}, {2, 2, 2}), 3);
    const BaselineResult r = decompose(planted.tensor, {Method::tt, {2, 2, 2}});
    EXPECT_LE(r.rse, 1e-6);
    EXPECT_EQ(r.storage, 4u * 2 + 4u * 4 + 4u * 4 + 4u * 2);
}

TEST(Baseline, TtSvdAloneIsExactAtFullRank) {
    Rng rng(4);
    const DenseTensor x = DenseTensor::random_normal({2, 3, 2}, rng);
    const FactorSet f = tt_svd(x, {2, 2});
    EXPECT_LE(rse(contract_network(f), x), 1e-12);
}

TEST(Baseline, TrRankOneIsOuterProduct) {
    const auto planted = gen_planted_network(TopologyGraph::uniform({3, 4, 5}, 1), 5);
    const BaselineResult r = decompose(planted.tensor, {Method::tr, {1, 1, 1}});
    EXPECT_LE(r.rse, 1e-8);
}

TEST(Baseline, FctnFitsItsOwnModel) {
    const auto planted = gen_planted_network(TopologyGraph::uniform({3, 3, 3}, 2), 6);
    BaselineSpec spec{Method::fctn, {2, 2, 2}};
    spec.tol = 1e-10;
    spec.iter_max = 1000;
    const BaselineResult r = decompose(planted.tensor, spec);
    ASSERT_TRUE(r.network);
    EXPECT_EQ(r.storage, storage_cost(*r.network));
    EXPECT_LE(r.rse, 0.2);  // random init; loose sanity bound only
}

TEST(Baseline, ComparisonCsv) {
    std::ostringstream os;
    write_comparison_csv(os, {{"TT", 0.5, 1.25, 40}});
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "Method,RSE,Time,StorageCost");
    EXPECT_NE(os.str().find("TT,0.5,1.25,40"), std::string::npos);
}
