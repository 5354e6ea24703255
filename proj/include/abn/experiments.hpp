#pragma once

// Seeded simulation studies: draw a random network, sample data from it,
// score and search under each prior, and compare essential graphs.
//
// Every (study, cell, replicate) task gets its own stream from derive_rng, so
// tasks can run in any order or on any number of workers and still produce
// the same rows.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "abn/data.hpp"
#include "abn/graph.hpp"
#include "abn/io.hpp"
#include "abn/rng.hpp"
#include "abn/score.hpp"
#include "abn/search.hpp"

namespace abn {

struct StudyConfig {
    std::string study = "separation";  // "separation" or "lindley"
    int n_nodes = 5;
    std::vector<double> densities{0.8};
    std::vector<int> sample_sizes{100, 500, 1000, 10000};
    int replicates = 50;
    std::vector<Prior> priors{WeakGaussian{}, StudentT{}};
    double edge_coef = 5.0;
    double intercept = 0.0;
    int max_parents = -1;  // negative: n_nodes - 1
    std::uint64_t master_seed = 1;
};

struct ResultRow {
    std::string study;
    std::string prior_name;
    int n_nodes = 0;
    double density = 0.0;
    int n_obs = 0;
    int replicate = 0;
    double tpr = std::numeric_limits<double>::quiet_NaN();
    double fpr = std::numeric_limits<double>::quiet_NaN();
    int edges_true = 0;
    int edges_fitted = 0;
    double normalized_parents = std::numeric_limits<double>::quiet_NaN();
    double wall_time_ms = 0.0;
    std::string note;

    double tnr() const { return 1.0 - fpr; }
};

inline void validate(const StudyConfig& c) {
    if (c.study != "separation" && c.study != "lindley")
        throw std::invalid_argument("study must be 'separation' or 'lindley'");
    if (c.n_nodes < 1 || c.n_nodes > kMaxNodes)
        throw std::invalid_argument("n_nodes must be in [1, 24]");
    if (c.replicates < 0) throw std::invalid_argument("replicates must be non-negative");
    for (double d : c.densities)
        if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("densities must lie in (0, 1]");
    for (int n : c.sample_sizes)
        if (n < 1) throw std::invalid_argument("sample sizes must be at least 1");
    if (c.priors.empty()) throw std::invalid_argument("at least one prior is required");
    for (const auto& p : c.priors) validate(p);
    if (!std::isfinite(c.edge_coef) || !std::isfinite(c.intercept))
        throw std::invalid_argument("edge_coef and intercept must be finite");
}

// ---------------------------------------------------------------------------
// Config JSON

inline nlohmann::json prior_to_json(const Prior& p) {
    if (const auto* wi = std::get_if<WeakGaussian>(&p)) return {{"type", "WI"}, {"variance", wi->variance}};
    if (const auto* st = std::get_if<StudentT>(&p))
        return {{"type", "ST"}, {"df", st->df}, {"scale", st->scale}, {"intercept_scale", st->intercept_scale}};
    return {{"type", "SI"}, {"variance", std::get<StrongGaussian>(p).variance}};
}

/// Accepts "WI" / "ST" / "SI" (any case) or an object with "type" and hyperparameters.
inline Prior prior_from_json(const nlohmann::json& j) {
    std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
    std::transform(type.begin(), type.end(), type.begin(), [](unsigned char ch) { return std::toupper(ch); });
    auto field = [&j](const char* key, double fallback) {
        return j.is_object() && j.contains(key) ? j.at(key).get<double>() : fallback;
    };
    Prior p;
    if (type == "WI") {
        p = WeakGaussian{field("variance", 1000.0)};
    } else if (type == "ST") {
        p = StudentT{field("df", 1.0), field("scale", 2.5), field("intercept_scale", 10.0)};
    } else if (type == "SI") {
        p = StrongGaussian{field("variance", 0.1)};
    } else {
        throw std::invalid_argument("unknown prior type '" + type + "'");
    }
    validate(p);
    return p;
}

inline StudyConfig config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    c.study = j.value("study", c.study);
    if (c.study == "lindley") {
        c.densities = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
        c.sample_sizes = {1000};
        c.n_nodes = 10;
        c.priors = {WeakGaussian{}, StudentT{}, StrongGaussian{}};
    }
    c.n_nodes = j.value("n_nodes", c.n_nodes);
    if (j.contains("densities")) c.densities = j.at("densities").get<std::vector<double>>();
    if (j.contains("sample_sizes")) c.sample_sizes = j.at("sample_sizes").get<std::vector<int>>();
    c.replicates = j.value("replicates", c.replicates);
    if (j.contains("priors")) {
        c.priors.clear();
        for (const auto& p : j.at("priors")) c.priors.push_back(prior_from_json(p));
    }
    c.edge_coef = j.value("edge_coef", c.edge_coef);
    c.intercept = j.value("intercept", c.intercept);
    c.max_parents = j.value("max_parents", c.max_parents);
    c.master_seed = j.value("master_seed", c.master_seed);
    validate(c);
    return c;
}

inline nlohmann::json to_json(const StudyConfig& c) {
    nlohmann::json priors = nlohmann::json::array();
    for (const auto& p : c.priors) priors.push_back(prior_to_json(p));
    return {{"study", c.study},           {"n_nodes", c.n_nodes},       {"densities", c.densities},
            {"sample_sizes", c.sample_sizes}, {"replicates", c.replicates}, {"priors", priors},
            {"edge_coef", c.edge_coef},   {"intercept", c.intercept},   {"max_parents", c.max_parents},
            {"master_seed", c.master_seed}};
}

// ---------------------------------------------------------------------------
// Runner

struct RunOptions {
    unsigned threads = 1;
    /// When set, each task writes truth.json, params.json, data.csv and one
    /// estimate_<prior>.json under <runs_dir>/<study>/<cell>/<replicate>/.
    std::optional<std::filesystem::path> runs_dir;
};

/// Worker count: hardware concurrency, capped by ABN_FORGE_THREADS when set.
inline unsigned default_threads() {
    unsigned n = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ABN_FORGE_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
        }
    }
    return n;
}

inline std::string cell_label(double density, int n_obs) {
    return "d" + io::format_double(density) + "_N" + std::to_string(n_obs);
}

namespace detail {

struct StudyTask {
    double density;
    int n_obs;
    int replicate;
};

inline std::vector<ResultRow> run_task(const StudyConfig& c, const StudyTask& t,
                                       const RunOptions& opt) {
    const std::string label = c.study + "/" + cell_label(t.density, t.n_obs);
    std::vector<ResultRow> rows;
    auto base_row = [&](const Prior& p) {
        ResultRow r;
        r.study = c.study;
        r.prior_name = std::string(prior_name(p));
        r.n_nodes = c.n_nodes;
        r.density = t.density;
        r.n_obs = t.n_obs;
        r.replicate = t.replicate;
        return r;
    };

    try {
        Rng rng = derive_rng(c.master_seed, label, static_cast<std::uint64_t>(t.replicate));
        const Dag truth = random_dag(c.n_nodes, t.density, rng);
        const AbnParams params = AbnParams::uniform(truth, c.edge_coef, c.intercept);
        const Dataset data = sample(params, t.n_obs, rng);
        const Cpdag truth_cpdag = to_cpdag(truth);
        const int max_parents = c.max_parents < 0 ? c.n_nodes - 1 : c.max_parents;

        std::filesystem::path dir;
        if (opt.runs_dir) {
            dir = *opt.runs_dir / c.study / cell_label(t.density, t.n_obs) / std::to_string(t.replicate);
            io::write_text_atomic(dir / "truth.json", io::to_json(truth).dump(2) + "\n");
            io::write_text_atomic(dir / "params.json", io::to_json(params).dump(2) + "\n");
            io::write_text_atomic(dir / "data.csv", io::to_csv(data));
        }

        for (const Prior& prior : c.priors) {
            ResultRow r = base_row(prior);
            const auto start = std::chrono::steady_clock::now();
            try {
                const ScoreCache cache = build_score_cache(data, prior, max_parents, &params);
                const SearchResult found = exact_search(cache);
                const Cpdag estimate = to_cpdag(found.dag);
                const Metrics m = compare(estimate, truth_cpdag);
                r.tpr = m.tpr;
                r.fpr = m.fpr;
                r.edges_true = truth_cpdag.edge_count();
                r.edges_fitted = estimate.edge_count();
                if (r.edges_true > 0)
                    r.normalized_parents = static_cast<double>(r.edges_fitted) / r.edges_true;
                else
                    r.note = "no true edges";
                if (!cache.diagnostics.empty())
                    r.note += (r.note.empty() ? "" : "; ") + std::to_string(cache.diagnostics.size()) +
                              " failed fits";
                if (opt.runs_dir)
                    io::write_text_atomic(dir / ("estimate_" + r.prior_name + ".json"),
                                          io::to_json(found.dag).dump(2) + "\n");
            } catch (const std::exception& e) {
                r.note = std::string("error: ") + e.what();
            }
            r.wall_time_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
            rows.push_back(std::move(r));
        }
    } catch (const std::exception& e) {
        for (const Prior& prior : c.priors) {
            ResultRow r = base_row(prior);
            r.note = std::string("error: ") + e.what();
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace detail

/// Runs every (density, sample size, replicate) task and returns rows sorted
/// by (prior position in the config, density, sample size, replicate).
inline std::vector<ResultRow> run_study(const StudyConfig& c, const RunOptions& opt = {}) {
    validate(c);
    std::vector<detail::StudyTask> tasks;
    for (double d : c.densities)
        for (int n : c.sample_sizes)
            for (int r = 0; r < c.replicates; ++r) tasks.push_back({d, n, r});

    std::vector<std::vector<ResultRow>> out(tasks.size());
    const unsigned workers = std::max(1U, std::min<unsigned>(opt.threads, static_cast<unsigned>(tasks.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) out[i] = detail::run_task(c, tasks[i], opt);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++)
                    out[i] = detail::run_task(c, tasks[i], opt);
            });
    }

    std::map<std::string, std::size_t> prior_rank;
    for (std::size_t i = 0; i < c.priors.size(); ++i)
        prior_rank.emplace(std::string(prior_name(c.priors[i])), i);

    std::vector<ResultRow> rows;
    for (auto& v : out)
        for (auto& r : v) rows.push_back(std::move(r));
    std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
        return std::tuple(prior_rank[a.prior_name], a.density, a.n_obs, a.replicate) <
               std::tuple(prior_rank[b.prior_name], b.density, b.n_obs, b.replicate);
    });
    return rows;
}

/// Data-separation study: dense random networks, WI and ST priors, TPR/FPR
/// across sample sizes.
inline std::vector<ResultRow> run_separation_study(StudyConfig c, const RunOptions& opt = {}) {
    c.study = "separation";
    for (const auto& p : c.priors)
        if (std::holds_alternative<StrongGaussian>(p))
            throw std::invalid_argument("the separation study compares WI and ST priors only");
    return run_study(c, opt);
}

/// Lindley study: networks across edge densities, WI/ST/SI priors, and the
/// fitted-to-true essential-graph edge ratio.
inline std::vector<ResultRow> run_lindley_study(StudyConfig c, const RunOptions& opt = {}) {
    c.study = "lindley";
    return run_study(c, opt);
}

// ---------------------------------------------------------------------------
// Results CSV. Wall time varies between runs, so it goes to a separate file
// and the results file stays byte-identical for a fixed config and seed.

inline constexpr std::string_view kResultsHeader =
    "study,prior,n_nodes,density,n_obs,replicate,tpr,fpr,tnr,edges_true,edges_fitted,"
    "normalized_parents,note";

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch == '\n' ? ' ' : ch;
    }
    return q + '"';
}

inline std::string results_to_csv(const std::vector<ResultRow>& rows) {
    std::string out(kResultsHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += r.study + ',' + r.prior_name + ',' + std::to_string(r.n_nodes) + ',' +
               io::format_double(r.density) + ',' + std::to_string(r.n_obs) + ',' +
               std::to_string(r.replicate) + ',' + io::format_double(r.tpr) + ',' +
               io::format_double(r.fpr) + ',' + io::format_double(r.tnr()) + ',' +
               std::to_string(r.edges_true) + ',' + std::to_string(r.edges_fitted) + ',' +
               io::format_double(r.normalized_parents) + ',' + csv_field(r.note) + '\n';
    }
    return out;
}

inline std::string timings_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = "study,prior,density,n_obs,replicate,wall_time_ms\n";
    for (const auto& r : rows)
        out += r.study + ',' + r.prior_name + ',' + io::format_double(r.density) + ',' +
               std::to_string(r.n_obs) + ',' + std::to_string(r.replicate) + ',' +
               io::format_double(r.wall_time_ms) + '\n';
    return out;
}

namespace detail {

// Splits one CSV record honouring double-quoted fields.
inline std::vector<std::string> split_quoted(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                out.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back();
        } else {
            out.back() += ch;
        }
    }
    return out;
}

}  // namespace detail

inline std::vector<ResultRow> results_from_csv(std::string_view text) {
    const auto rows = io::lines(text);
    if (rows.empty() || rows[0] != kResultsHeader)
        throw std::invalid_argument("results CSV has an unexpected header");
    std::vector<ResultRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c = detail::split_quoted(rows[i]);
        if (c.size() != 13)
            throw std::invalid_argument("results row " + std::to_string(i) + " needs 13 cells");
        ResultRow r;
        r.study = c[0];
        r.prior_name = c[1];
        r.n_nodes = static_cast<int>(io::parse_int(c[2]));
        r.density = io::parse_double(c[3]);
        r.n_obs = static_cast<int>(io::parse_int(c[4]));
        r.replicate = static_cast<int>(io::parse_int(c[5]));
        r.tpr = io::parse_double(c[6]);
        r.fpr = io::parse_double(c[7]);
        r.edges_true = static_cast<int>(io::parse_int(c[9]));
        r.edges_fitted = static_cast<int>(io::parse_int(c[10]));
        r.normalized_parents = io::parse_double(c[11]);
        r.note = c[12];
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summary: per (study, prior, density, n_obs) cell.

struct Spread {
    int count = 0;
    double min = std::numeric_limits<double>::quiet_NaN();
    double q1 = min, median = min, q3 = min, max = min, mean = min;
};

/// Quartiles by linear interpolation between order statistics; NaNs skipped.
inline Spread spread(std::vector<double> v) {
    std::erase_if(v, [](double x) { return std::isnan(x); });
    Spread s;
    s.count = static_cast<int>(v.size());
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    auto quantile = [&v](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    s.min = v.front();
    s.max = v.back();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    double total = 0;
    for (double x : v) total += x;
    s.mean = total / static_cast<double>(v.size());
    return s;
}

struct SummaryRow {
    std::string study;
    std::string prior_name;
    double density = 0.0;
    int n_obs = 0;
    int rows = 0;
    Spread tpr, fpr, normalized_parents;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::string, double, int>;
    std::map<Key, std::vector<const ResultRow*>> cells;
    for (const auto& r : rows) cells[{r.study, r.prior_name, r.density, r.n_obs}].push_back(&r);

    std::vector<SummaryRow> out;
    for (const auto& [key, members] : cells) {
        SummaryRow s;
        std::tie(s.study, s.prior_name, s.density, s.n_obs) = key;
        s.rows = static_cast<int>(members.size());
        std::vector<double> tpr, fpr, np;
        for (const ResultRow* r : members) {
            tpr.push_back(r->tpr);
            fpr.push_back(r->fpr);
            np.push_back(r->normalized_parents);
        }
        s.tpr = spread(std::move(tpr));
        s.fpr = spread(std::move(fpr));
        s.normalized_parents = spread(std::move(np));
        out.push_back(std::move(s));
    }
    return out;
}

inline constexpr std::string_view kSummaryHeader =
    "study,prior,density,n_obs,rows,"
    "tpr_count,tpr_min,tpr_q1,tpr_median,tpr_q3,tpr_max,tpr_mean,"
    "fpr_count,fpr_min,fpr_q1,fpr_median,fpr_q3,fpr_max,fpr_mean,"
    "np_count,np_min,np_q1,np_median,np_q3,np_max,np_mean";

inline std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
    std::string out(kSummaryHeader);
    out += '\n';
    auto put = [&out](const Spread& s) {
        out += ',' + std::to_string(s.count);
        for (double v : {s.min, s.q1, s.median, s.q3, s.max, s.mean}) out += ',' + io::format_double(v);
    };
    for (const auto& r : rows) {
        out += r.study + ',' + r.prior_name + ',' + io::format_double(r.density) + ',' +
               std::to_string(r.n_obs) + ',' + std::to_string(r.rows);
        put(r.tpr);
        put(r.fpr);
        put(r.normalized_parents);
        out += '\n';
    }
    return out;
}

inline std::vector<SummaryRow> summary_from_csv(std::string_view text) {
    const auto rows = io::lines(text);
    if (rows.empty() || rows[0] != kSummaryHeader)
        throw std::invalid_argument("summary CSV has an unexpected header");
    std::vector<SummaryRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c = io::split(rows[i]);
        if (c.size() != 26)
            throw std::invalid_argument("summary row " + std::to_string(i) + " needs 26 cells");
        SummaryRow s;
        s.study = c[0];
        s.prior_name = c[1];
        s.density = io::parse_double(c[2]);
        s.n_obs = static_cast<int>(io::parse_int(c[3]));
        s.rows = static_cast<int>(io::parse_int(c[4]));
        auto get = [&c](std::size_t at) {
            Spread sp;
            sp.count = static_cast<int>(io::parse_int(c[at]));
            sp.min = io::parse_double(c[at + 1]);
            sp.q1 = io::parse_double(c[at + 2]);
            sp.median = io::parse_double(c[at + 3]);
            sp.q3 = io::parse_double(c[at + 4]);
            sp.max = io::parse_double(c[at + 5]);
            sp.mean = io::parse_double(c[at + 6]);
            return sp;
        };
        s.tpr = get(5);
        s.fpr = get(12);
        s.normalized_parents = get(19);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace abn
