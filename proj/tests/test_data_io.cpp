#include "attn/dataset.hpp"
#include "attn/image.hpp"
#include "attn/synthetic.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace attn;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

ErrorCode load_error(const fs::path& dir) {
    try {
        (void)load_dataset(dir);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "load_dataset did not throw";
    return ErrorCode::numerical_failure;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

MultiViewDataset small_dataset() {
    MultiViewSpec spec;
    spec.k = 3;
    spec.per_cluster = 4;
    spec.views = 2;
    spec.feature_dim = 6;
    spec.subspace_dim = 2;
    spec.seed = 5;
    return gen_synthetic_multiview(spec);
}

} // namespace

TEST(Dataset, BinaryRoundTripIsExact) {
    TempDir tmp("attn_ds_bin");
    const MultiViewDataset ds = small_dataset();
    save_dataset(tmp.path(), ds);
    const MultiViewDataset back = load_dataset(tmp.path());
    EXPECT_EQ(back.name, ds.name);
    EXPECT_EQ(back.k, ds.k);
    ASSERT_EQ(back.views.size(), ds.views.size());
    for (std::size_t v = 0; v < ds.views.size(); ++v) EXPECT_EQ(back.views[v], ds.views[v]);
    EXPECT_EQ(back.labels, ds.labels);
}

TEST(Dataset, CsvMatchesBinary) {
    TempDir a("attn_ds_csv_a"), b("attn_ds_csv_b");
    const MultiViewDataset ds = small_dataset();
    save_dataset(a.path(), ds, ViewEncoding::f64le);
    save_dataset(b.path(), ds, ViewEncoding::csv);
    const auto x = load_dataset(a.path()), y = load_dataset(b.path());
    for (std::size_t v = 0; v < ds.views.size(); ++v) EXPECT_EQ(x.views[v], y.views[v]);
}

TEST(Dataset, ColumnCountMismatch) {
    TempDir tmp("attn_ds_cols");
    detail::write_csv_matrix(tmp.path() / "v.csv", Matrix::Ones(2, 3));
    write_text(tmp.path() / "manifest.json",
               R"({"name":"x","k":2,"I":5,"V":1,"views":[{"file":"v.csv","rows":2,"cols":5,"encoding":"csv"}]})");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::shape_inconsistency);
    write_text(tmp.path() / "manifest.json",
               R"({"name":"x","k":2,"I":5,"V":1,"views":[{"file":"v.csv","rows":2,"cols":3,"encoding":"csv"}]})");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::shape_inconsistency);
}

TEST(Dataset, BinarySizeMismatch) {
    TempDir tmp("attn_ds_binsize");
    detail::write_f64_matrix(tmp.path() / "v.f64", Matrix::Ones(2, 3));
    write_text(tmp.path() / "manifest.json",
               R"({"name":"x","k":2,"I":4,"V":1,"views":[{"file":"v.f64","rows":2,"cols":4}]})");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::shape_inconsistency);
}

TEST(Dataset, ManifestErrors) {
    TempDir tmp("attn_ds_manifest");
    write_text(tmp.path() / "manifest.json", "{ not json");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::manifest_parse);
    write_text(tmp.path() / "manifest.json", R"({"name":"x","I":4,"V":1,"views":[]})");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::manifest_parse);
    write_text(tmp.path() / "manifest.json",
               R"({"name":"x","k":2,"I":3,"V":1,"views":[{"file":"v","rows":2,"cols":3,"encoding":"npy"}]})");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::manifest_parse);
    write_text(tmp.path() / "manifest.json", R"({"name":"x","k":2,"I":3,"V":2,"views":[]})");
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::shape_inconsistency);
}

TEST(Dataset, LabelRange) {
    TempDir tmp("attn_ds_labels");
    MultiViewDataset ds = small_dataset();
    save_dataset(tmp.path(), ds);
    Labels bad = *ds.labels;
    bad[0] = 3;
    write_labels(tmp.path() / "labels.txt", bad);
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::label_range);
    bad.pop_back();
    bad[0] = 0;
    write_labels(tmp.path() / "labels.txt", bad);
    EXPECT_EQ(load_error(tmp.path()), ErrorCode::shape_inconsistency);
}

TEST(Dataset, CsvParsesOddWhitespace) {
    TempDir tmp("attn_ds_ws");
    write_text(tmp.path() / "m.csv", "1, 2.5 ,-3e-2\r\n\n4,5,6\n");
    const Matrix m = detail::read_csv_matrix(tmp.path() / "m.csv", 2, 3);
    EXPECT_EQ(m(0, 1), 2.5);
    EXPECT_EQ(m(0, 2), -0.03);
    EXPECT_EQ(m(1, 2), 6.0);
    write_text(tmp.path() / "m.csv", "1,x\n");
    EXPECT_THROW((void)detail::read_csv_matrix(tmp.path() / "m.csv", 1, 2), Error);
}

TEST(Generator, MultiviewShapesAndLabels) {
    MultiViewSpec spec;
    const MultiViewDataset ds = gen_synthetic_multiview(spec);
    EXPECT_EQ(ds.n_samples(), spec.k * spec.per_cluster);
    EXPECT_EQ(ds.n_views(), spec.views);
    for (const auto& v : ds.views) EXPECT_EQ(static_cast<std::size_t>(v.rows()), spec.feature_dim);
    ASSERT_TRUE(ds.labels);
    for (std::size_t s = 0; s < ds.n_samples(); ++s) EXPECT_EQ((*ds.labels)[s], static_cast<int>(s / spec.per_cluster));
    validate(ds);
}

// Noise-free samples of one cluster span exactly subspace_dim dimensions.
TEST(Generator, ClustersLieInSubspaces) {
    MultiViewSpec spec;
    spec.noise_sigma = 0.0;
    const MultiViewDataset ds = gen_synthetic_multiview(spec);
    for (const auto& v : ds.views)
        for (std::size_t c = 0; c < spec.k; ++c) {
            const Matrix block = v.middleCols(static_cast<Eigen::Index>(c * spec.per_cluster),
                                              static_cast<Eigen::Index>(spec.per_cluster));
            Eigen::JacobiSVD<Matrix> svd(block);
            const auto& s = svd.singularValues();
            EXPECT_GT(s(static_cast<Eigen::Index>(spec.subspace_dim) - 1), 1e-6);
            EXPECT_LT(s(static_cast<Eigen::Index>(spec.subspace_dim)), 1e-10 * s(0));
        }
}

TEST(Generator, Deterministic) {
    MultiViewSpec spec;
    spec.seed = 3;
    EXPECT_EQ(gen_synthetic_multiview(spec).views[1], gen_synthetic_multiview(spec).views[1]);
    const auto g = TopologyGraph::uniform({3, 3, 3}, 2);
    EXPECT_EQ(gen_planted_network(g, 1).tensor, gen_planted_network(g, 1).tensor);
    EXPECT_NE(gen_planted_network(g, 1).tensor, gen_planted_network(g, 2).tensor);
}

TEST(Generator, PlantedFactorsHaveUnitRms) {
    const auto p = gen_planted_network(TopologyGraph::chain({4, 4, 4, 4}, {3, 3, 3}), 0);
    for (const auto& f : p.factors.factors()) EXPECT_NEAR(rms(f), 1.0, 1e-12);
    EXPECT_EQ(contract_network(p.factors), p.tensor);
}

TEST(Image, PpmReshapeToFifthOrder) {
    TempDir tmp("attn_img");
    DenseTensor img({256, 256, 3});
    for (std::size_t y = 0; y < 256; ++y)
        for (std::size_t x = 0; x < 256; ++x)
            for (std::size_t c = 0; c < 3; ++c) img.at({y, x, c}) = static_cast<double>((y + 3 * x + 50 * c) % 256) / 255.0;
    write_ppm(tmp.path() / "img.ppm", img);
    const DenseTensor t = load_image_tensor(tmp.path() / "img.ppm", Shape{16, 16, 16, 16, 3});
    EXPECT_EQ(t.shape(), (Shape{16, 16, 16, 16, 3}));
    EXPECT_NEAR(t.at({1, 2, 3, 4, 2}), img.at({1 + 16 * 2, 3 + 16 * 4, 2}), 1e-15);
    EXPECT_NEAR(t.at({15, 15, 15, 15, 0}), img.at({255, 255, 0}), 1e-15);
    try {
        (void)load_image_tensor(tmp.path() / "img.ppm", Shape{16, 16, 16, 16, 4});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    }
}

TEST(Image, BlackImageIsZero) {
    TempDir tmp("attn_img_black");
    write_ppm(tmp.path() / "black.ppm", DenseTensor({8, 4, 3}));
    const DenseTensor t = read_ppm(tmp.path() / "black.ppm");
    EXPECT_EQ(t.shape(), (Shape{8, 4, 3}));
    EXPECT_EQ(frobenius_norm(t), 0.0);
}

TEST(Image, RejectsOtherFormats) {
    TempDir tmp("attn_img_bad");
    write_text(tmp.path() / "a.pgm", "P5\n2 2\n255\nabcd");
    try {
        (void)read_ppm(tmp.path() / "a.pgm");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unsupported_format);
    }
    write_text(tmp.path() / "b.ppm", "P6\n# comment\n2 2\n65535\n");
    try {
        (void)read_ppm(tmp.path() / "b.ppm");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unsupported_format);
    }
}

TEST(Image, SyntheticImageInRange) {
    const DenseTensor img = synthetic_test_image();
    EXPECT_EQ(img.shape(), (Shape{64, 64, 3}));
    for (double v : img.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}
