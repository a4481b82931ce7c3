#pragma once

// JSON reports and CSV traces. Every wall-clock quantity lives under a
// "timing" key so reruns can be compared with strip_timing().

#include "attn/attn_solver.hpp"
#include "attn/baseline.hpp"
#include "attn/cluster.hpp"
#include "attn/metrics.hpp"
#include "attn/msc.hpp"
#include "attn/topology_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace attn {

using json = nlohmann::json;

inline constexpr const char* kReportSchema = "attn-report/1";

inline json to_json(const AttnConfig& c) {
    return {{"r_init", c.r_init},
            {"tol_als", c.tol_als},
            {"iter_max_als", c.iter_max_als},
            {"epsilon", c.epsilon},
            {"step_a", c.step_a},
            {"probe_sweeps", c.probe_sweeps},
            {"prune_gap_ratio", c.prune_gap_ratio},
            {"delta_floor", c.delta_floor},
            {"ridge", c.ridge},
            {"pad_scale", c.pad_scale},
            {"increment_max", c.increment_max},
            {"enable_pruning", c.enable_pruning},
            {"enable_increment", c.enable_increment},
            {"rng_seed", c.rng_seed}};
}

inline json to_json(Edge e) { return json::array({e.i, e.j}); }

inline json to_json(const EdgeScores& s) {
    json entries = json::array();
    for (const auto& d : s.entries)
        entries.push_back({{"edge", to_json(d.edge)}, {"rse_without", d.rse_without}, {"delta", d.delta}});
    return {{"base_rse", s.base_rse}, {"entries", std::move(entries)}};
}

inline json to_json(const IncrementStep& s) {
    json cands = json::array();
    for (const auto& c : s.candidates)
        cands.push_back({{"edge", to_json(c.edge)}, {"probe_rse", c.probe_rse}, {"change_rse", c.change_rse}});
    return {{"edge", to_json(s.edge)},
            {"new_rank", s.new_rank},
            {"probe_rse", s.probe_rse},
            {"rse_after_refit", s.rse_after_refit},
            {"refit_sweeps", s.refit_sweeps},
            {"candidates", std::move(cands)}};
}

inline json attn_report(const AttnResult& r, const AttnConfig& cfg) {
    json pruned = json::array();
    for (const Edge e : r.pruned_edges) pruned.push_back(to_json(e));
    json incs = json::array();
    for (const auto& s : r.increments) incs.push_back(to_json(s));
    return {{"schema", kReportSchema},
            {"kind", "decompose"},
            {"method", "attn"},
            {"config", to_json(cfg)},
            {"mode_sizes", r.factors.topology().mode_sizes()},
            {"initial_fit_rse", r.initial_fit_rse},
            {"final_rse", r.final_rse},
            {"converged", r.converged},
            {"sweeps_used", r.sweeps_used},
            {"edge_count", r.factors.topology().all_edges().size()},
            {"delta_table", to_json(r.delta_table)},
            {"pruned_edges", std::move(pruned)},
            {"increments", std::move(incs)},
            {"rank_matrix", rank_matrix_json(r.factors.topology())},
            {"storage_cost", storage_cost(r.factors)},
            {"connected", r.factors.connected()},
            {"rse_trace", r.rse_trace}};
}

inline json baseline_report(const BaselineResult& r, const BaselineSpec& spec) {
    json j = {{"schema", kReportSchema},
              {"kind", "decompose"},
              {"method", to_string(r.method)},
              {"config",
               {{"ranks", spec.ranks}, {"iter_max", spec.iter_max}, {"tol", spec.tol}, {"seed", spec.seed}}},
              {"effective_ranks", r.effective_ranks},
              {"final_rse", r.rse},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"storage_cost", r.storage},
              {"rse_trace", r.rse_trace},
              {"timing", {{"seconds", r.seconds}}}};
    if (r.network) j["rank_matrix"] = rank_matrix_json(r.network->topology());
    return j;
}

inline json to_json(const MetricSet& m) {
    return {{"f_score", m.f_score}, {"precision", m.precision}, {"recall", m.recall},
            {"nmi", m.nmi},         {"ar", m.ar},               {"acc", m.acc}};
}

inline json to_json(const MscConfig& c) {
    return {{"lambda", c.lambda},
            {"mu0", c.mu0},
            {"rho0", c.rho0},
            {"eta", c.eta},
            {"tol", c.tol},
            {"mu_max", c.mu_max},
            {"rho_max", c.rho_max},
            {"iter_max", c.iter_max},
            {"topology_refresh_interval", c.topology_refresh_interval},
            {"refit_sweeps", c.refit_sweeps},
            {"refit_tol", c.refit_tol},
            {"s_step", c.s_step == SStep::attn ? "attn" : "exact"},
            {"attn", to_json(c.attn)}};
}

inline json msc_diagnostics(const MscResult& r) {
    json iters = json::array();
    for (const auto& it : r.trace) {
        json s = {{"full_search", it.s_info.full_search},
                  {"fit_rse", it.s_info.fit_rse},
                  {"attn_converged", it.s_info.attn_converged},
                  {"sweeps", it.s_info.sweeps},
                  {"storage", it.s_info.storage},
                  {"increments", it.s_info.increments}};
        json pruned = json::array();
        for (const Edge e : it.s_info.pruned) pruned.push_back(to_json(e));
        s["pruned"] = std::move(pruned);
        iters.push_back({{"iteration", it.iteration},
                         {"reconstruction_error", it.reconstruction_error},
                         {"match_error", it.match_error},
                         {"mu", it.mu},
                         {"rho", it.rho},
                         {"s_update", std::move(s)}});
    }
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"trace", std::move(iters)},
            {"timing",
             {{"wall_seconds", r.wall_seconds},
              {"z_seconds", r.seconds.z},
              {"e_seconds", r.seconds.e},
              {"y_seconds", r.seconds.y},
              {"s_seconds", r.seconds.s},
              {"w_seconds", r.seconds.w}}}};
}

/// Removes every "timing" member, recursively.
inline json strip_timing(json j) {
    if (j.is_object()) {
        j.erase("timing");
        for (auto& [key, value] : j.items()) value = strip_timing(value);
    } else if (j.is_array()) {
        for (auto& value : j) value = strip_timing(value);
    }
    return j;
}

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
inline std::string fnv1a_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (is) {
        is.read(buf, sizeof buf);
        for (std::streamsize k = 0; k < is.gcount(); ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

/// Hash of a directory's regular files, visited in sorted path order.
inline std::string fnv1a_path(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) return fnv1a_file(path);
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(path))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string joined;
    for (const auto& f : files) joined += std::filesystem::relative(f, path).generic_string() + ":" + fnv1a_file(f) + ";";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : joined) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot write " + path.string());
    os << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
    }
}

inline void write_rse_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot write " + path.string());
    os << "sweep,rse\n";
    for (std::size_t k = 0; k < trace.size(); ++k) os << k + 1 << ',' << trace[k] << '\n';
}

inline void write_residual_trace_csv(const std::filesystem::path& path, const MscResult& r) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot write " + path.string());
    os << "iteration,reconstruction_error,match_error,mu,rho,s_fit_rse,topology_search\n";
    for (const auto& it : r.trace)
        os << it.iteration << ',' << it.reconstruction_error << ',' << it.match_error << ',' << it.mu << ','
           << it.rho << ',' << it.s_info.fit_rse << ',' << (it.s_info.full_search ? 1 : 0) << '\n';
}

} // namespace attn
