#pragma once

// Multi-view dataset container. A dataset is a directory:
//
//   manifest.json   {"name", "k", "I", "V", "views": [{"file", "rows", "cols", "encoding"}],
//                    "labels": "labels.txt" (optional)}
//   view files      encoding "f64le": raw little-endian doubles, column-major
//                   encoding "csv":   one matrix row per line
//   labels.txt      one integer per line, I lines
//
// Views are C_v x I: one column per sample.

#include "attn/error.hpp"
#include "attn/metrics.hpp"
#include "attn/tensor.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace attn {

struct MultiViewDataset {
    std::string name;
    std::size_t k = 0;
    std::vector<Matrix> views;
    std::optional<Labels> labels;

    [[nodiscard]] std::size_t n_samples() const { return views.empty() ? 0 : static_cast<std::size_t>(views[0].cols()); }
    [[nodiscard]] std::size_t n_views() const { return views.size(); }
};

enum class ViewEncoding { f64le, csv };

inline void validate(const MultiViewDataset& ds) {
    require(!ds.views.empty(), ErrorCode::shape_inconsistency, "dataset has no views");
    require(ds.k >= 1, ErrorCode::invalid_argument, "cluster count k must be positive");
    const auto n = ds.views[0].cols();
    require(n >= 1, ErrorCode::shape_inconsistency, "dataset has no samples");
    for (std::size_t v = 0; v < ds.views.size(); ++v)
        require(ds.views[v].cols() == n && ds.views[v].rows() >= 1, ErrorCode::shape_inconsistency,
                "view " + std::to_string(v) + " has " + std::to_string(ds.views[v].cols()) + " samples, expected " +
                    std::to_string(n));
    if (ds.labels) {
        require(ds.labels->size() == static_cast<std::size_t>(n), ErrorCode::shape_inconsistency,
                "label count does not match sample count");
        for (int l : *ds.labels)
            require(l >= 0 && static_cast<std::size_t>(l) < ds.k, ErrorCode::label_range,
                    "label " + std::to_string(l) + " outside [0, k)");
    }
}

namespace detail {

inline Matrix read_f64_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(is.tellg());
    require(bytes == rows * cols * sizeof(double), ErrorCode::shape_inconsistency,
            path.filename().string() + " holds " + std::to_string(bytes / sizeof(double)) + " values, manifest says " +
                std::to_string(rows) + "x" + std::to_string(cols));
    is.seekg(0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(bytes));
    require(static_cast<bool>(is), ErrorCode::io_failure, "short read from " + path.string());
    return m;
}

inline Matrix read_csv_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    std::vector<std::vector<double>> data;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            double value = 0;
            auto [next, ec] = std::from_chars(p, end, value);
            require(ec == std::errc(), ErrorCode::format_error, "bad number in " + path.filename().string());
            row.push_back(value);
            p = next;
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p < end) {
                require(*p == ',', ErrorCode::format_error, "expected ',' in " + path.filename().string());
                ++p;
            }
        }
        data.push_back(std::move(row));
    }
    require(data.size() == rows, ErrorCode::shape_inconsistency,
            path.filename().string() + " has " + std::to_string(data.size()) + " rows, manifest says " +
                std::to_string(rows));
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        require(data[r].size() == cols, ErrorCode::shape_inconsistency,
                path.filename().string() + " row " + std::to_string(r) + " has " + std::to_string(data[r].size()) +
                    " columns, manifest says " + std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r][c];
    }
    return m;
}

inline std::string format_double(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
    return {buf, end};
}

inline void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot open " + path.string());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) os << ',';
            os << format_double(m(r, c));
        }
        os << '\n';
    }
    require(static_cast<bool>(os), ErrorCode::io_failure, "write failed: " + path.string());
}

inline void write_f64_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    require(static_cast<bool>(os), ErrorCode::io_failure, "write failed: " + path.string());
}

} // namespace detail

inline Labels read_labels(const std::filesystem::path& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    Labels out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        int value = 0;
        const char* b = line.data();
        const char* e = b + line.size();
        while (b < e && (*b == ' ' || *b == '\t')) ++b;
        auto [p, ec] = std::from_chars(b, e, value);
        require(ec == std::errc(), ErrorCode::format_error, "bad label line '" + line + "' in " + path.string());
        out.push_back(value);
    }
    return out;
}

inline void write_labels(const std::filesystem::path& path, const Labels& labels) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot open " + path.string());
    for (int l : labels) os << l << '\n';
}

inline MultiViewDataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream is(manifest_path);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + manifest_path.string());

    MultiViewDataset ds;
    std::vector<std::tuple<std::string, std::size_t, std::size_t, ViewEncoding>> entries;
    std::optional<std::string> labels_file;
    std::size_t declared_i = 0, declared_v = 0;
    try {
        const auto j = nlohmann::json::parse(is);
        ds.name = j.value("name", dir.filename().string());
        ds.k = j.at("k").get<std::size_t>();
        declared_i = j.at("I").get<std::size_t>();
        declared_v = j.at("V").get<std::size_t>();
        for (const auto& v : j.at("views")) {
            const auto enc = v.value("encoding", std::string("f64le"));
            require(enc == "f64le" || enc == "csv", ErrorCode::manifest_parse, "unknown view encoding '" + enc + "'");
            entries.emplace_back(v.at("file").get<std::string>(), v.at("rows").get<std::size_t>(),
                                 v.at("cols").get<std::size_t>(), enc == "csv" ? ViewEncoding::csv : ViewEncoding::f64le);
        }
        if (j.contains("labels") && !j.at("labels").is_null()) labels_file = j.at("labels").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::manifest_parse, manifest_path.string() + ": " + e.what());
    }

    require(entries.size() == declared_v, ErrorCode::shape_inconsistency,
            "manifest declares V = " + std::to_string(declared_v) + " but lists " + std::to_string(entries.size()) +
                " views");
    for (const auto& [file, rows, cols, enc] : entries) {
        require(cols == declared_i, ErrorCode::shape_inconsistency,
                "view " + file + " has " + std::to_string(cols) + " columns, manifest declares I = " +
                    std::to_string(declared_i));
        ds.views.push_back(enc == ViewEncoding::csv ? detail::read_csv_matrix(dir / file, rows, cols)
                                                    : detail::read_f64_matrix(dir / file, rows, cols));
    }
    if (labels_file) ds.labels = read_labels(dir / *labels_file);
    validate(ds);
    return ds;
}

inline void save_dataset(const std::filesystem::path& dir, const MultiViewDataset& ds,
                         ViewEncoding encoding = ViewEncoding::f64le) {
    validate(ds);
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["name"] = ds.name;
    j["k"] = ds.k;
    j["I"] = ds.n_samples();
    j["V"] = ds.n_views();
    j["views"] = nlohmann::json::array();
    for (std::size_t v = 0; v < ds.views.size(); ++v) {
        const bool csv = encoding == ViewEncoding::csv;
        const std::string file = "view" + std::to_string(v) + (csv ? ".csv" : ".f64");
        if (csv)
            detail::write_csv_matrix(dir / file, ds.views[v]);
        else
            detail::write_f64_matrix(dir / file, ds.views[v]);
        j["views"].push_back({{"file", file},
                              {"rows", ds.views[v].rows()},
                              {"cols", ds.views[v].cols()},
                              {"encoding", csv ? "csv" : "f64le"}});
    }
    if (ds.labels) {
        write_labels(dir / "labels.txt", *ds.labels);
        j["labels"] = "labels.txt";
    }
    std::ofstream os(dir / "manifest.json");
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot write manifest in " + dir.string());
    os << j.dump(2) << '\n';
}

} // namespace attn
