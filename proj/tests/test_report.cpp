#include "attn/report.hpp"
#include "attn/synthetic.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace attn;

TEST(Report, StripTimingIsRecursive) {
    const json j = {{"a", 1}, {"timing", {{"s", 2.0}}}, {"nested", {{"timing", 3}, {"b", json::array({json{{"timing", 1}, {"c", 4}}})}}}};
    const json s = strip_timing(j);
    EXPECT_FALSE(s.contains("timing"));
    EXPECT_FALSE(s["nested"].contains("timing"));
    EXPECT_FALSE(s["nested"]["b"][0].contains("timing"));
    EXPECT_EQ(s["nested"]["b"][0]["c"], 4);
}

TEST(Report, AttnReportFieldsAndDeterminism) {
    const auto planted = gen_planted_network(TopologyGraph::uniform({3, 3, 3}, 2), 1);
    AttnConfig cfg;
    cfg.rng_seed = 4;
    const json a = attn_report(attn_decompose(planted.tensor, cfg), cfg);
    const json b = attn_report(attn_decompose(planted.tensor, cfg), cfg);
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_EQ(a["schema"], kReportSchema);
    for (const char* key : {"delta_table", "pruned_edges", "increments", "rank_matrix", "storage_cost", "rse_trace"})
        EXPECT_TRUE(a.contains(key)) << key;
}

TEST(Report, BaselineTimingSeparated) {
    const auto planted = gen_planted_network(TopologyGraph::uniform({3, 3, 3}, 1), 2);
    const BaselineSpec spec{Method::tucker, {1, 1, 1}};
    const BaselineResult r = decompose(planted.tensor, spec);
    const json j = baseline_report(r, spec);
    EXPECT_TRUE(j.contains("timing"));
    BaselineResult r2 = decompose(planted.tensor, spec);
    r2.seconds += 1.0;
    EXPECT_EQ(strip_timing(j), strip_timing(baseline_report(r2, spec)));
}

TEST(Report, HashesAreStable) {
    const auto dir = std::filesystem::temp_directory_path() / "attn_hash_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "sub");
    write_json(dir / "a.json", json{{"x", 1}});
    write_json(dir / "sub" / "b.json", json{{"y", 2}});
    const std::string h1 = fnv1a_path(dir);
    EXPECT_EQ(h1.size(), 16u);
    EXPECT_EQ(fnv1a_path(dir), h1);
    write_json(dir / "a.json", json{{"x", 2}});
    EXPECT_NE(fnv1a_path(dir), h1);
    EXPECT_EQ(read_json(dir / "sub" / "b.json")["y"], 2);
    std::filesystem::remove_all(dir);
}
