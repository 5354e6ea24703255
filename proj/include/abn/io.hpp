#pragma once

// File formats: graph and parameter JSON, dataset and score-cache CSV, plus
// atomic text writes and round-trip number formatting.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "abn/data.hpp"
#include "abn/graph.hpp"
#include "abn/score.hpp"

namespace abn::io {

using json = nlohmann::json;

/// Thrown for unreadable or malformed input; the message names the path.
class FileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
    if (s == "nan" || s == "NaN" || s == "NA" || s.empty())
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf" || s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file, then renames it over `path`.
inline void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FileError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw FileError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Non-empty lines with any trailing '\r' removed.
inline std::vector<std::string> lines(std::string_view text) {
    std::vector<std::string> out;
    for (auto& l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        if (!l.empty()) out.push_back(std::move(l));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graphs: {"n": 4, "edges": [[0, 2], ...]}; essential graphs add "undirected".

inline json to_json(const Dag& dag) {
    json edges = json::array();
    for (auto [from, to] : dag.edges()) edges.push_back({from, to});
    return json{{"n", dag.n}, {"edges", edges}};
}

inline json to_json(const Cpdag& g) {
    json edges = json::array(), undirected = json::array();
    for (auto [a, b] : g.directed) edges.push_back({a, b});
    for (auto [a, b] : g.undirected) undirected.push_back({a, b});
    return json{{"n", g.n}, {"edges", edges}, {"undirected", undirected}};
}

namespace detail {

inline std::pair<int, int> node_pair(const json& e, int n) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("edge must be a [from, to] pair");
    const int a = e[0].get<int>(), b = e[1].get<int>();
    if (a < 0 || a >= n || b < 0 || b >= n || a == b)
        throw std::invalid_argument("edge endpoint out of range");
    return {a, b};
}

}  // namespace detail

inline Dag dag_from_json(const json& j) {
    const int n = j.at("n").get<int>();
    if (n < 1 || n > kMaxNodes) throw std::invalid_argument("node count must be in [1, 24]");
    if (j.contains("undirected") && !j.at("undirected").empty())
        throw std::invalid_argument("graph has undirected edges; expected a DAG");
    Dag dag(n);
    for (const auto& e : j.at("edges")) {
        const auto [a, b] = detail::node_pair(e, n);
        dag.add_edge(a, b);
    }
    validate(dag);
    return dag;
}

/// Reads either an essential graph or a DAG; a DAG is converted with to_cpdag().
inline Cpdag cpdag_from_json(const json& j) {
    if (!j.contains("undirected")) return to_cpdag(dag_from_json(j));
    Cpdag g;
    g.n = j.at("n").get<int>();
    if (g.n < 1 || g.n > kMaxNodes) throw std::invalid_argument("node count must be in [1, 24]");
    for (const auto& e : j.at("edges")) g.directed.insert(detail::node_pair(e, g.n));
    for (const auto& e : j.at("undirected")) {
        const auto [a, b] = detail::node_pair(e, g.n);
        g.undirected.emplace(std::min(a, b), std::max(a, b));
    }
    for (auto [a, b] : g.directed)
        if (g.undirected.contains({std::min(a, b), std::max(a, b)}) || g.directed.contains({b, a}))
            throw std::invalid_argument("pair appears with two orientations");
    return g;
}

inline json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw FileError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Parameters: {"n":…, "edges":[{"from":…,"to":…,"coef":…}], "intercepts":[…]}

inline json to_json(const AbnParams& p) {
    json edges = json::array();
    for (const auto& [e, c] : p.edge_coef) edges.push_back({{"from", e.first}, {"to", e.second}, {"coef", c}});
    return json{{"n", p.dag.n}, {"edges", edges}, {"intercepts", p.intercept}};
}

inline AbnParams params_from_json(const json& j) {
    AbnParams p;
    const int n = j.at("n").get<int>();
    if (n < 1 || n > kMaxNodes) throw std::invalid_argument("node count must be in [1, 24]");
    p.dag = Dag(n);
    for (const auto& e : j.at("edges")) {
        const int from = e.at("from").get<int>(), to = e.at("to").get<int>();
        if (from < 0 || from >= n || to < 0 || to >= n || from == to)
            throw std::invalid_argument("edge endpoint out of range");
        p.dag.add_edge(from, to);
        p.edge_coef[{from, to}] = e.at("coef").get<double>();
    }
    if (j.contains("intercepts"))
        p.intercept = j.at("intercepts").get<std::vector<double>>();
    else
        p.intercept.assign(static_cast<std::size_t>(n), 0.0);
    validate(p);
    return p;
}

// ---------------------------------------------------------------------------
// Dataset CSV: header X1..Xn, rows of 0/1.

inline std::string to_csv(const Dataset& d) {
    std::string out;
    out.reserve(static_cast<std::size_t>(d.n_obs + 1) * static_cast<std::size_t>(2 * d.n_vars + 1));
    for (int k = 0; k < d.n_vars; ++k) {
        if (k) out += ',';
        out += 'X';
        out += std::to_string(k + 1);
    }
    out += '\n';
    for (int i = 0; i < d.n_obs; ++i) {
        for (int k = 0; k < d.n_vars; ++k) {
            if (k) out += ',';
            out += static_cast<char>('0' + d(i, k));
        }
        out += '\n';
    }
    return out;
}

inline Dataset dataset_from_csv(std::string_view text) {
    const auto rows = lines(text);
    if (rows.empty()) throw std::invalid_argument("dataset CSV is empty");
    const auto header = split(rows[0]);
    const int n = static_cast<int>(header.size());
    if (n < 1 || n > kMaxNodes) throw std::invalid_argument("variable count must be in [1, 24]");
    Dataset d(n, static_cast<int>(rows.size()) - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cells = split(rows[i]);
        if (static_cast<int>(cells.size()) != n)
            throw std::invalid_argument("row " + std::to_string(i) + " has the wrong number of cells");
        for (int k = 0; k < n; ++k) {
            if (cells[k] != "0" && cells[k] != "1")
                throw std::invalid_argument("row " + std::to_string(i) + " has a non-binary value");
            d(static_cast<int>(i) - 1, k) = cells[k] == "1" ? 1 : 0;
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Score cache CSV: node,parent_mask,log_score,converged,separation

inline std::string to_csv(const ScoreCache& cache) {
    std::string out = "node,parent_mask,log_score,converged,separation\n";
    cache.for_each([&](int j, NodeMask m, const CacheEntry& e) {
        out += std::to_string(j) + ',' + std::to_string(m) + ',' + format_double(e.log_score) + ',' +
               (e.converged ? "1" : "0") + ',' + std::string(to_string(e.separation)) + '\n';
    });
    return out;
}

/// Node count and max_parents are inferred; every entry they imply must be present.
inline ScoreCache cache_from_csv(std::string_view text) {
    const auto rows = lines(text);
    if (rows.empty() || rows[0] != "node,parent_mask,log_score,converged,separation")
        throw std::invalid_argument("score cache CSV has an unexpected header");
    struct Row {
        int node;
        NodeMask mask;
        CacheEntry entry;
    };
    std::vector<Row> parsed;
    int n = 0, max_parents = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c = split(rows[i]);
        if (c.size() != 5) throw std::invalid_argument("cache row " + std::to_string(i) + " needs 5 cells");
        const auto node = parse_int(c[0]);
        const auto mask = parse_int(c[1]);
        if (node < 0 || node >= kMaxNodes || mask < 0 || mask > static_cast<long long>(low_bits(kMaxNodes)))
            throw std::invalid_argument("cache row " + std::to_string(i) + " is out of range");
        Row r{static_cast<int>(node), static_cast<NodeMask>(mask),
              CacheEntry{parse_double(c[2]), c[3] == "1", separation_from_string(c[4])}};
        if (std::isnan(r.entry.log_score)) r.entry.log_score = -std::numeric_limits<double>::infinity();
        n = std::max({n, r.node + 1, static_cast<int>(std::bit_width(r.mask))});
        max_parents = std::max(max_parents, popcount(r.mask));
        parsed.push_back(r);
    }
    if (n == 0) throw std::invalid_argument("score cache CSV has no entries");
    ScoreCache cache(n, max_parents);
    if (parsed.size() != cache.size())
        throw std::invalid_argument("score cache CSV is incomplete: expected " +
                                    std::to_string(cache.size()) + " entries");
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(n),
                                        std::vector<bool>(std::size_t{1} << (n - 1), false));
    for (const auto& r : parsed) {
        if (!cache.contains(r.node, r.mask))
            throw std::invalid_argument("score cache CSV has an invalid (node, parent_mask) entry");
        auto slot = seen[r.node][compress_mask(r.mask, r.node)];
        if (slot) throw std::invalid_argument("score cache CSV has a duplicate entry");
        slot = true;
        cache.set(r.node, r.mask, r.entry);
    }
    return cache;
}

}  // namespace abn::io
