#pragma once

// FactorSet on disk: network.json plus one raw tensor file per factor.
//
//   {"format": "attn-network", "version": 1, "n_factors": N,
//    "mode_sizes": [...], "ranks": [[...], ...], "factors": ["factor0.tensor", ...]}

#include "attn/error.hpp"
#include "attn/tensor_io.hpp"
#include "attn/topology.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace attn {

inline constexpr int kNetworkFormatVersion = 1;

inline nlohmann::json rank_matrix_json(const TopologyGraph& g) {
    const std::size_t n = g.n_factors();
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < n; ++j) row.push_back(i == j ? 0 : g.rank(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void save_factor_set(const std::filesystem::path& dir, const FactorSet& f) {
    std::filesystem::create_directories(dir);
    const auto& g = f.topology();
    nlohmann::json j;
    j["format"] = "attn-network";
    j["version"] = kNetworkFormatVersion;
    j["n_factors"] = g.n_factors();
    j["mode_sizes"] = g.mode_sizes();
    j["ranks"] = rank_matrix_json(g);
    j["factors"] = nlohmann::json::array();
    for (std::size_t n = 0; n < f.n_factors(); ++n) {
        const std::string name = "factor" + std::to_string(n) + ".tensor";
        save_tensor(dir / name, f.factor(n));
        j["factors"].push_back(name);
    }
    std::ofstream os(dir / "network.json");
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot write " + (dir / "network.json").string());
    os << j.dump(2) << '\n';
}

inline FactorSet load_factor_set(const std::filesystem::path& dir) {
    const auto path = dir / "network.json";
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    Shape modes;
    std::vector<std::size_t> ranks;
    std::vector<std::string> files;
    try {
        const auto j = nlohmann::json::parse(is);
        require(j.at("format") == "attn-network", ErrorCode::manifest_parse, "not an attn-network manifest");
        require(j.at("version") == kNetworkFormatVersion, ErrorCode::manifest_parse, "unsupported network version");
        const auto n = j.at("n_factors").get<std::size_t>();
        modes = j.at("mode_sizes").get<Shape>();
        const auto rows = j.at("ranks").get<std::vector<std::vector<std::size_t>>>();
        files = j.at("factors").get<std::vector<std::string>>();
        require(modes.size() == n && rows.size() == n && files.size() == n, ErrorCode::manifest_parse,
                "network manifest lists inconsistent factor counts");
        for (const auto& row : rows) {
            require(row.size() == n, ErrorCode::manifest_parse, "rank matrix is not square");
            ranks.insert(ranks.end(), row.begin(), row.end());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::manifest_parse, path.string() + ": " + e.what());
    }
    TopologyGraph g(modes, ranks);
    std::vector<DenseTensor> factors;
    for (const auto& file : files) factors.push_back(load_tensor(dir / file));
    return {g, std::move(factors)};
}

} // namespace attn
