// attn_cli: decomposition runs, clustering runs and sweeps, metrics, data generation.

#include "attn/attn.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace attn;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

fs::path default_out_dir() {
    if (const char* env = std::getenv("ATTN_OUT_DIR"); env && *env) return env;
    return "attn_out";
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(item, &used);
            require(used == item.size(), ErrorCode::invalid_argument, "bad integer '" + item + "'");
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::invalid_argument, "bad integer list '" + s + "'");
        }
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            require(used == item.size(), ErrorCode::invalid_argument, "bad number '" + item + "'");
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::invalid_argument, "bad number list '" + s + "'");
        }
    }
    return out;
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int k = 0; k < argc; ++k) {
        if (k) s += ' ';
        s += argv[k];
    }
    return s;
}

struct Manifest {
    json j;

    Manifest(const std::string& command, const std::string& args) {
        j = {{"schema", kReportSchema}, {"kind", "run-manifest"}, {"command", command}, {"argv", args},
             {"inputs", json::object()}, {"outputs", json::array()}, {"timing", json::object()}};
    }
    void input(const fs::path& p) { j["inputs"][p.string()] = fnv1a_path(p); }
    void output(const fs::path& p) { j["outputs"].push_back(p.filename().string()); }
};

int finish(bool converged, bool allow_nonconverged) {
    if (converged) return 0;
    std::cerr << "warning: run did not converge" << (allow_nonconverged ? " (allowed)" : "") << '\n';
    return allow_nonconverged ? 0 : 1;
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
    std::string input;
    std::string reshape;
    std::string method = "attn";
    std::string ranks;
    std::size_t r_init = 2;
    double epsilon = 1e-3;
    std::uint64_t seed = 0;
    std::size_t iter_max = 300;
    double tol = 1e-6;
    double gap = 5.0;
    bool no_prune = false;
    bool no_increment = false;
    bool allow_nonconverged = false;
    std::string out;
};

std::vector<std::size_t> expand_ranks(const std::string& text, Method m, const Shape& shape) {
    const std::size_t arity = rank_arity(m, shape.size());
    if (text == "full") {
        if (m == Method::tucker) return shape;
        if (m == Method::tt) {
            std::vector<std::size_t> r(arity);
            std::size_t left = 1;
            for (std::size_t n = 0; n < arity; ++n) {
                left *= shape[n];
                const std::size_t right = shape_product(shape) / left;
                r[n] = std::min(left, right);
            }
            return r;
        }
        throw Error(ErrorCode::invalid_argument, "--ranks full is only defined for tucker and tt");
    }
    require(!text.empty(), ErrorCode::invalid_argument, "--ranks is required for baseline methods");
    auto r = parse_sizes(text);
    if (r.size() == 1) r.assign(arity, r[0]);
    return r;
}

int cmd_decompose(const DecomposeArgs& a, const std::string& argv) {
    const auto t0 = clock_type::now();
    const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
    fs::create_directories(out);
    Manifest manifest("decompose", argv);
    manifest.input(a.input);

    std::optional<Shape> grid;
    if (!a.reshape.empty()) grid = parse_sizes(a.reshape);
    const DenseTensor x = load_image_tensor(a.input, grid);

    json report;
    DenseTensor reconstruction;
    double rse_value = 0.0;
    std::size_t storage = 0;
    bool converged = false;
    std::vector<double> trace;

    if (a.method == "attn") {
        AttnConfig cfg;
        cfg.r_init = a.r_init;
        cfg.epsilon = a.epsilon;
        cfg.rng_seed = a.seed;
        cfg.iter_max_als = a.iter_max;
        cfg.tol_als = a.tol;
        cfg.prune_gap_ratio = a.gap;
        cfg.enable_pruning = !a.no_prune;
        cfg.enable_increment = !a.no_increment;
        const auto ts = clock_type::now();
        AttnResult r = attn_decompose(x, cfg);
        report = attn_report(r, cfg);
        report["timing"] = {{"seconds", seconds_since(ts)}};
        reconstruction = contract_network(r.factors);
        rse_value = r.final_rse;
        storage = storage_cost(r.factors);
        converged = r.converged;
        trace = r.rse_trace;
        save_factor_set(out / "network", r.factors);
        manifest.output(out / "network");
    } else {
        BaselineSpec spec;
        spec.method = parse_method(a.method);
        spec.ranks = expand_ranks(a.ranks, spec.method, x.shape());
        spec.iter_max = a.iter_max;
        spec.tol = a.tol;
        spec.seed = a.seed;
        BaselineResult r = decompose(x, spec);
        report = baseline_report(r, spec);
        reconstruction = r.reconstruction;
        rse_value = r.rse;
        storage = r.storage;
        converged = r.converged;
        trace = r.rse_trace;
        if (r.network) {
            save_factor_set(out / "network", *r.network);
            manifest.output(out / "network");
        }
        if (r.tucker) {
            save_tensor(out / "tucker_core.tensor", r.tucker->core);
            for (std::size_t n = 0; n < r.tucker->factors.size(); ++n)
                save_tensor(out / ("tucker_u" + std::to_string(n) + ".tensor"), from_matrix(r.tucker->factors[n]));
            manifest.output(out / "tucker_core.tensor");
        }
    }
    report["input"] = {{"path", a.input}, {"shape", x.shape()}, {"fnv1a", fnv1a_file(a.input)}};

    write_json(out / "report.json", report);
    save_tensor(out / "reconstruction.tensor", reconstruction);
    write_rse_trace_csv(out / "rse_trace.csv", trace);
    {
        std::ofstream csv(out / "comparison.csv");
        write_comparison_csv(csv, {{a.method, rse_value, seconds_since(t0), storage}});
    }
    for (const char* f : {"report.json", "reconstruction.tensor", "rse_trace.csv", "comparison.csv"})
        manifest.output(out / f);

    manifest.j["config"] = report["config"];
    manifest.j["seeds"] = {{"seed", a.seed}};
    manifest.j["converged"] = converged;
    manifest.j["timing"] = {{"total_seconds", seconds_since(t0)}};
    write_json(out / "manifest.json", manifest.j);

    std::cout << a.method << "  RSE " << rse_value << "  time " << seconds_since(t0) << " s  storage " << storage
              << '\n';
    return finish(converged, a.allow_nonconverged);
}

// ------------------------------------------------------------------ cluster

struct ClusterArgs {
    std::string dataset;
    double lambda = 0.1;
    double epsilon = 0.4;
    std::string reshape;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::size_t iter_max = 200;
    std::string sweep;
    std::string s_step = "attn";
    bool allow_nonconverged = false;
    std::string out;
};

struct TrialOutcome {
    json report;
    std::optional<MetricSet> metrics;
    bool converged = false;
};

TrialOutcome run_trial(const MultiViewDataset& ds, const MscProblem& problem, MscConfig cfg, std::uint64_t seed,
                       const fs::path& dir, std::size_t trial, Manifest& manifest) {
    cfg.attn.rng_seed = derive_seed(seed, 0xa77, trial);
    const std::uint64_t cluster_seed = derive_seed(seed, 0xc1, trial);
    MscResult r = solve(problem, cfg);
    const Matrix m = build_affinity(r.z);
    SpectralResult sc = spectral_cluster(m, ds.k, cluster_seed);

    TrialOutcome t;
    t.converged = r.converged;
    const std::string tag = "trial" + std::to_string(trial);
    write_labels(dir / (tag + "_labels.txt"), sc.labels);
    write_residual_trace_csv(dir / (tag + "_residuals.csv"), r);
    manifest.output(dir / (tag + "_labels.txt"));
    manifest.output(dir / (tag + "_residuals.csv"));
    {
        save_tensor(dir / (tag + "_affinity.tensor"), from_matrix(m));
        manifest.output(dir / (tag + "_affinity.tensor"));
    }
    t.report = {{"trial", trial},
                {"attn_seed", cfg.attn.rng_seed},
                {"cluster_seed", cluster_seed},
                {"restarts", SpectralOptions{}.restarts},
                {"isolated_vertices", sc.isolated_vertices},
                {"solver", msc_diagnostics(r)}};
    if (ds.labels) {
        t.metrics = evaluate(*ds.labels, sc.labels);
        t.report["metrics"] = to_json(*t.metrics);
    }
    return t;
}

json summarize(const std::vector<TrialOutcome>& trials) {
    json summary = json::object();
    if (trials.empty() || !trials[0].metrics) return summary;
    const auto field = [&](auto pick) {
        std::vector<double> xs;
        for (const auto& t : trials) xs.push_back(pick(*t.metrics));
        const MeanStd ms = mean_std(xs);
        return json{{"mean", ms.mean}, {"std", ms.std}};
    };
    summary["f_score"] = field([](const MetricSet& m) { return m.f_score; });
    summary["precision"] = field([](const MetricSet& m) { return m.precision; });
    summary["recall"] = field([](const MetricSet& m) { return m.recall; });
    summary["nmi"] = field([](const MetricSet& m) { return m.nmi; });
    summary["ar"] = field([](const MetricSet& m) { return m.ar; });
    summary["acc"] = field([](const MetricSet& m) { return m.acc; });
    return summary;
}

int cmd_cluster(const ClusterArgs& a, const std::string& argv) {
    const auto t0 = clock_type::now();
    const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
    fs::create_directories(out);
    Manifest manifest("cluster", argv);
    manifest.input(a.dataset);

    const MultiViewDataset ds = load_dataset(a.dataset);
    MscProblem problem{ds.views, ds.k, choose_reshape_dims(ds.n_samples(), ds.k)};
    if (!a.reshape.empty()) {
        const auto d = parse_sizes(a.reshape);
        require(d.size() == 4, ErrorCode::invalid_argument, "--reshape takes four sizes I1,I2,I3,I4");
        problem.reshape_dims = {d[0], d[1], d[2], d[3]};
    }
    require(a.trials >= 1, ErrorCode::invalid_argument, "--trials must be positive");

    MscConfig base;
    base.lambda = a.lambda;
    base.attn.epsilon = a.epsilon;
    base.iter_max = a.iter_max;
    require(a.s_step == "attn" || a.s_step == "exact", ErrorCode::invalid_argument, "--s-step is attn or exact");
    base.s_step = a.s_step == "attn" ? SStep::attn : SStep::exact;

    std::string sweep_param;
    std::vector<double> sweep_values;
    if (!a.sweep.empty()) {
        const auto eq = a.sweep.find('=');
        require(eq != std::string::npos, ErrorCode::invalid_argument, "--sweep takes name=v1,v2,...");
        sweep_param = a.sweep.substr(0, eq);
        require(sweep_param == "lambda" || sweep_param == "epsilon", ErrorCode::invalid_argument,
                "--sweep supports lambda and epsilon");
        sweep_values = parse_doubles(a.sweep.substr(eq + 1));
        require(!sweep_values.empty(), ErrorCode::invalid_argument, "--sweep needs at least one value");
    }

    json report = {{"schema", kReportSchema},
                   {"kind", "cluster"},
                   {"dataset", {{"name", ds.name}, {"k", ds.k}, {"I", ds.n_samples()}, {"V", ds.n_views()},
                                {"has_labels", ds.labels.has_value()}}},
                   {"reshape_dims", problem.reshape_dims},
                   {"seed", a.seed},
                   {"trials", a.trials}};
    bool all_converged = true;

    const auto run_setting = [&](const MscConfig& cfg, const fs::path& dir) {
        fs::create_directories(dir);
        std::vector<TrialOutcome> outcomes;
        for (std::size_t t = 0; t < a.trials; ++t) {
            outcomes.push_back(run_trial(ds, problem, cfg, a.seed, dir, t, manifest));
            all_converged = all_converged && outcomes.back().converged;
        }
        json per_trial = json::array();
        for (auto& o : outcomes) per_trial.push_back(std::move(o.report));
        return std::make_pair(std::move(per_trial), summarize(outcomes));
    };

    if (sweep_values.empty()) {
        auto [per_trial, summary] = run_setting(base, out);
        report["config"] = to_json(base);
        report["per_trial"] = std::move(per_trial);
        if (ds.labels) report["summary"] = summary;
        if (ds.labels) {
            std::cout << "ACC " << summary["acc"]["mean"].get<double>() << " (" << summary["acc"]["std"].get<double>()
                      << ")  NMI " << summary["nmi"]["mean"].get<double>() << " ("
                      << summary["nmi"]["std"].get<double>() << ")\n";
        } else {
            std::cout << "labels written; no ground truth, metrics omitted\n";
        }
    } else {
        std::ofstream csv(out / "sweep.csv");
        csv << sweep_param << ",f_score,precision,recall,nmi,ar,acc,acc_std,nmi_std\n";
        report["sweep"] = {{"parameter", sweep_param}, {"rows", json::array()}};
        for (std::size_t k = 0; k < sweep_values.size(); ++k) {
            MscConfig cfg = base;
            (sweep_param == "lambda" ? cfg.lambda : cfg.attn.epsilon) = sweep_values[k];
            auto [per_trial, summary] = run_setting(cfg, out / (sweep_param + "_" + std::to_string(k)));
            report["sweep"]["rows"].push_back(
                {{"value", sweep_values[k]}, {"config", to_json(cfg)}, {"per_trial", per_trial}, {"summary", summary}});
            csv << sweep_values[k];
            if (ds.labels) {
                for (const char* f : {"f_score", "precision", "recall", "nmi", "ar", "acc"})
                    csv << ',' << summary[f]["mean"].get<double>();
                csv << ',' << summary["acc"]["std"].get<double>() << ',' << summary["nmi"]["std"].get<double>();
            } else {
                csv << ",,,,,,,,";
            }
            csv << '\n';
        }
        manifest.output(out / "sweep.csv");
        std::cout << "sweep over " << sweep_param << ": " << sweep_values.size() << " rows written to "
                  << (out / "sweep.csv").string() << '\n';
    }
    report["converged"] = all_converged;
    report["timing"] = {{"total_seconds", seconds_since(t0)}};
    write_json(out / "report.json", report);
    manifest.output(out / "report.json");

    manifest.j["config"] = report.contains("config") ? report["config"] : to_json(base);
    manifest.j["seeds"] = {{"seed", a.seed}, {"trials", a.trials}};
    manifest.j["converged"] = all_converged;
    manifest.j["timing"] = {{"total_seconds", seconds_since(t0)}};
    write_json(out / "manifest.json", manifest.j);
    return finish(all_converged, a.allow_nonconverged);
}

// ------------------------------------------------------------------ metrics

int cmd_metrics(const std::string& truth_path, const std::string& pred_path, const std::string& out_path) {
    const Labels truth = read_labels(truth_path);
    const Labels pred = read_labels(pred_path);
    json j = {{"schema", kReportSchema}, {"kind", "metrics"}, {"n", truth.size()}};
    j["metrics"] = to_json(evaluate(truth, pred));
    if (out_path.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json(out_path, j);
    return 0;
}

// ---------------------------------------------------------------------- gen

struct GenArgs {
    std::string kind = "multiview";
    MultiViewSpec mv;
    bool csv = false;
    std::string modes = "4,4,4,4";
    std::string ranks = "3,1,1,3,1,3";
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen(GenArgs a) {
    require(!a.out.empty(), ErrorCode::invalid_argument, "--out is required");
    if (a.kind == "multiview") {
        a.mv.seed = a.seed;
        save_dataset(a.out, gen_synthetic_multiview(a.mv), a.csv ? ViewEncoding::csv : ViewEncoding::f64le);
    } else if (a.kind == "image") {
        write_ppm(a.out, synthetic_test_image());
    } else if (a.kind == "planted") {
        const Shape modes = parse_sizes(a.modes);
        const TopologyGraph g = TopologyGraph::from_edge_ranks(modes, parse_sizes(a.ranks));
        save_tensor(a.out, gen_planted_network(g, a.seed).tensor);
    } else {
        throw Error(ErrorCode::invalid_argument, "--kind is multiview, image or planted");
    }
    std::cout << "wrote " << a.out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive-topology tensor networks: decomposition and multi-view clustering"};
    app.require_subcommand(1);

    DecomposeArgs dec;
    auto* d = app.add_subcommand("decompose", "fit a tensor with ATTN or a baseline decomposition");
    d->add_option("input", dec.input, "raw tensor file or 8-bit PPM image")->required()->check(CLI::ExistingFile);
    d->add_option("--reshape", dec.reshape, "reshape before fitting, e.g. 16,16,16,16,3");
    d->add_option("--method", dec.method, "attn, fctn, tt, tr or tucker")
        ->check(CLI::IsMember({"attn", "fctn", "tt", "tr", "tucker"}));
    d->add_option("--ranks", dec.ranks, "one value, a full list, or 'full' (tucker, tt)");
    d->add_option("--r-init", dec.r_init, "initial uniform rank for attn");
    d->add_option("--epsilon", dec.epsilon, "target RSE for attn");
    d->add_option("--seed", dec.seed);
    d->add_option("--iter-max", dec.iter_max);
    d->add_option("--tol", dec.tol);
    d->add_option("--gap", dec.gap, "pruning gap ratio");
    d->add_flag("--no-prune", dec.no_prune);
    d->add_flag("--no-increment", dec.no_increment);
    d->add_flag("--allow-nonconverged", dec.allow_nonconverged);
    d->add_option("--out", dec.out, "output directory (default $ATTN_OUT_DIR or ./attn_out)");

    ClusterArgs cl;
    auto* c = app.add_subcommand("cluster", "multi-view subspace clustering on a dataset directory");
    c->add_option("dataset", cl.dataset, "dataset directory with manifest.json")->required()->check(CLI::ExistingDirectory);
    c->add_option("--lambda", cl.lambda);
    c->add_option("--epsilon", cl.epsilon, "target RSE of the inner tensor-network fit");
    c->add_option("--reshape", cl.reshape, "I1,I2,I3,I4 with I1*I2 = I3*I4 = I");
    c->add_option("--trials", cl.trials);
    c->add_option("--seed", cl.seed);
    c->add_option("--iter-max", cl.iter_max);
    c->add_option("--sweep", cl.sweep, "lambda=v1,v2,... or epsilon=v1,v2,...");
    c->add_option("--s-step", cl.s_step, "attn or exact");
    c->add_flag("--allow-nonconverged", cl.allow_nonconverged);
    c->add_option("--out", cl.out, "output directory (default $ATTN_OUT_DIR or ./attn_out)");

    std::string truth, pred, metrics_out;
    auto* m = app.add_subcommand("metrics", "compare two label files");
    m->add_option("truth", truth)->required()->check(CLI::ExistingFile);
    m->add_option("pred", pred)->required()->check(CLI::ExistingFile);
    m->add_option("--out", metrics_out, "write JSON here instead of stdout");

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "write synthetic inputs");
    g->add_option("--kind", gen.kind, "multiview, image or planted")
        ->check(CLI::IsMember({"multiview", "image", "planted"}));
    g->add_option("--k", gen.mv.k);
    g->add_option("--per-cluster", gen.mv.per_cluster);
    g->add_option("--views", gen.mv.views);
    g->add_option("--dim", gen.mv.subspace_dim, "subspace dimension");
    g->add_option("--feature-dim", gen.mv.feature_dim);
    g->add_option("--sigma", gen.mv.noise_sigma);
    g->add_flag("--csv", gen.csv, "write views as CSV instead of f64 binary");
    g->add_option("--modes", gen.modes, "planted: mode sizes");
    g->add_option("--ranks", gen.ranks, "planted: upper-triangle edge ranks");
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out);

    CLI11_PARSE(app, argc, argv);
    const std::string args = join_args(argc, argv);
    try {
        if (*d) return cmd_decompose(dec, args);
        if (*c) return cmd_cluster(cl, args);
        if (*m) return cmd_metrics(truth, pred, metrics_out);
        if (*g) return cmd_gen(gen);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
