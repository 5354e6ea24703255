#pragma once

// Command-line front end. Exit status: 0 success, 1 usage error, 2 runtime
// failure. Every output file is written atomically.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "abn/data.hpp"
#include "abn/experiments.hpp"
#include "abn/graph.hpp"
#include "abn/io.hpp"
#include "abn/rng.hpp"
#include "abn/score.hpp"
#include "abn/search.hpp"
#include "abn/svg.hpp"

namespace abn::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kFailure = 2;

namespace detail {

struct PriorFlags {
    std::string kind = "st";
    std::string si_truth;
    std::string prior_config;
    double wi_variance = 1000.0;
    double st_df = 1.0;
    double st_scale = 2.5;
    double st_intercept_scale = 10.0;
    double si_variance = 0.1;

    Prior resolve() const {
        if (!prior_config.empty()) return prior_from_json(io::parse_json_file(prior_config));
        Prior p;
        if (kind == "wi") p = WeakGaussian{wi_variance};
        else if (kind == "st") p = StudentT{st_df, st_scale, st_intercept_scale};
        else p = StrongGaussian{si_variance};
        validate(p);
        return p;
    }
};

inline std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace detail

/// Parses `args` (program name first) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Additive Bayesian network structure learning for binary data", "abn_forge"};
    app.require_subcommand(1, 1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Sample a dataset from network parameters");
    std::string params_path, data_out;
    int n_obs = 0;
    std::uint64_t seed = 1;
    simulate->add_option("--params", params_path, "Parameter JSON")->required();
    simulate->add_option("--n-obs", n_obs, "Number of observations")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "Random seed")->required();
    simulate->add_option("--out", data_out, "Output dataset CSV")->required();

    // score
    auto* score = app.add_subcommand("score", "Score every (node, parent set) of a dataset");
    std::string data_path, cache_out;
    int max_parents = -1;
    detail::PriorFlags pf;
    score->add_option("--data", data_path, "Dataset CSV")->required();
    score->add_option("--prior", pf.kind, "Prior family")->check(CLI::IsMember({"wi", "st", "si"}));
    score->add_option("--si-truth", pf.si_truth, "True parameters JSON (SI prior)");
    score->add_option("--prior-config", pf.prior_config, "Prior JSON (overrides --prior)");
    score->add_option("--max-parents", max_parents, "Parent-set size limit");
    score->add_option("--wi-variance", pf.wi_variance, "WI prior variance");
    score->add_option("--st-df", pf.st_df, "ST degrees of freedom");
    score->add_option("--st-scale", pf.st_scale, "ST slope scale");
    score->add_option("--st-intercept-scale", pf.st_intercept_scale, "ST intercept scale");
    score->add_option("--si-variance", pf.si_variance, "SI prior variance");
    score->add_option("--out", cache_out, "Output score cache CSV")->required();

    // search
    auto* search = app.add_subcommand("search", "Exact highest-scoring DAG from a score cache");
    std::string cache_path, dag_out;
    search->add_option("--cache", cache_path, "Score cache CSV")->required();
    search->add_option("--out", dag_out, "Output DAG JSON")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Compare an estimated graph against the truth");
    std::string truth_path, estimate_path;
    bool skeleton_only = false;
    evaluate->add_option("--truth", truth_path, "True graph JSON")->required();
    evaluate->add_option("--estimate", estimate_path, "Estimated graph JSON")->required();
    evaluate->add_flag("--skeleton-only", skeleton_only, "Ignore edge orientation");

    // study
    auto* study = app.add_subcommand("study", "Run a simulation study");
    std::string config_path, results_out, runs_dir;
    std::optional<std::uint64_t> study_seed;
    unsigned threads = 0;
    study->add_option("--config", config_path, "Study config JSON")->required();
    study->add_option("--seed", study_seed, "Master seed (overrides the config)");
    study->add_option("--out", results_out, "Output results CSV")->required();
    study->add_option("--runs-dir", runs_dir, "Directory for per-replicate graphs and data");
    study->add_option("--threads", threads, "Worker count (default: ABN_FORGE_THREADS or all cores)");

    // summarize
    auto* summarize_cmd = app.add_subcommand("summarize", "Per-cell quartiles of a results CSV");
    std::string results_in, summary_out, svg_out;
    summarize_cmd->add_option("--in", results_in, "Results CSV")->required();
    summarize_cmd->add_option("--out", summary_out, "Output summary CSV")->required();
    summarize_cmd->add_option("--svg", svg_out, "Also write an SVG figure");

    // plot
    auto* plot = app.add_subcommand("plot", "SVG figure from a summary CSV");
    std::string summary_in, plot_out;
    plot->add_option("--summary", summary_in, "Summary CSV")->required();
    plot->add_option("--out", plot_out, "Output SVG")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    auto write_svg = [&](const std::vector<SummaryRow>& rows, const std::string& path) {
        if (rows.empty()) err << "warning: summary is empty; writing bare axes\n";
        io::write_text_atomic(path, svg::summary_plot(rows));
    };

    try {
        if (*simulate) {
            const AbnParams params = io::params_from_json(io::parse_json_file(params_path));
            Rng rng(seed);
            const Dataset data = sample(params, n_obs, rng);
            io::write_text_atomic(data_out, io::to_csv(data));
            out << "simulated " << data.n_obs << " observations of " << data.n_vars
                << " variables -> " << data_out << "\n";
        } else if (*score) {
            const Dataset data = io::dataset_from_csv(io::read_text(data_path));
            const Prior prior = pf.resolve();
            std::optional<AbnParams> truth;
            if (!pf.si_truth.empty()) truth = io::params_from_json(io::parse_json_file(pf.si_truth));
            if (std::holds_alternative<StrongGaussian>(prior) && !truth) {
                err << "error: the SI prior needs --si-truth\n";
                return kUsage;
            }
            const int limit = max_parents < 0 ? data.n_vars - 1 : max_parents;
            const ScoreCache cache = build_score_cache(data, prior, limit, truth ? &*truth : nullptr);
            io::write_text_atomic(cache_out, io::to_csv(cache));
            for (const auto& d : cache.diagnostics) err << "warning: " << d << "\n";
            out << "scored " << cache.size() << " parent sets with prior " << prior_name(prior);
            if (const auto* st = std::get_if<StudentT>(&prior))
                out << " (slope scale " << st->scale << ", intercept scale " << st->intercept_scale << ")";
            out << " -> " << cache_out << "\n";
        } else if (*search) {
            const ScoreCache cache = io::cache_from_csv(io::read_text(cache_path));
            const SearchResult r = exact_search(cache);
            io::write_text_atomic(dag_out, io::to_json(r.dag).dump(2) + "\n");
            out << "total_score=" << io::format_double(r.total_score) << " edges=" << r.dag.edge_count()
                << " -> " << dag_out << "\n";
        } else if (*evaluate) {
            const Cpdag truth = io::cpdag_from_json(io::parse_json_file(truth_path));
            const Cpdag estimate = io::cpdag_from_json(io::parse_json_file(estimate_path));
            const Metrics m = compare(estimate, truth, skeleton_only);
            out << "tpr=" << detail::fixed3(m.tpr) << " fpr=" << detail::fixed3(m.fpr)
                << " true_edges=" << m.true_edges << " predicted_edges=" << m.predicted_edges << "\n";
        } else if (*study) {
            StudyConfig config = config_from_json(io::parse_json_file(config_path));
            if (study_seed) config.master_seed = *study_seed;
            RunOptions opt;
            opt.threads = threads > 0 ? threads : default_threads();
            if (!runs_dir.empty()) opt.runs_dir = runs_dir;
            const auto rows = run_study(config, opt);
            io::write_text_atomic(results_out, results_to_csv(rows));
            io::write_text_atomic(results_out + ".timing.csv", timings_to_csv(rows));
            int failed = 0;
            for (const auto& r : rows) failed += r.note.starts_with("error") ? 1 : 0;
            out << "study " << config.study << ": " << rows.size() << " rows (" << failed
                << " failed) -> " << results_out << "\n";
        } else if (*summarize_cmd) {
            const auto rows = summarize(results_from_csv(io::read_text(results_in)));
            io::write_text_atomic(summary_out, summary_to_csv(rows));
            if (!svg_out.empty()) write_svg(rows, svg_out);
            out << "summarized " << rows.size() << " cells -> " << summary_out << "\n";
        } else if (*plot) {
            const auto rows = summary_from_csv(io::read_text(summary_in));
            write_svg(rows, plot_out);
            out << "plotted " << rows.size() << " cells -> " << plot_out << "\n";
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace abn::cli
