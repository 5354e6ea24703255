#include <gtest/gtest.h>

#include <filesystem>

#include "abn/io.hpp"

using namespace abn;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("abn_forge_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = uniform(rng, -1e6, 1e6) * std::pow(10.0, uniform(rng, -20, 20));
        EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(-INFINITY), "-inf");
    EXPECT_TRUE(std::isnan(io::parse_double(io::format_double(NAN))));
    EXPECT_THROW(io::parse_double("1.5x"), std::invalid_argument);
    EXPECT_THROW(io::parse_int("2.0"), std::invalid_argument);
}

TEST(ReadText, MissingFileNamesPath) {
    try {
        io::read_text("/nonexistent/abn/file.csv");
        FAIL();
    } catch (const io::FileError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/abn/file.csv"), std::string::npos);
    }
}

TEST(WriteTextAtomic, CreatesDirectoriesAndLeavesNoTemp) {
    const auto dir = scratch("write");
    const auto path = dir / "a" / "b.txt";
    io::write_text_atomic(path, "hello\n");
    EXPECT_EQ(io::read_text(path), "hello\n");
    io::write_text_atomic(path, "again\n");
    EXPECT_EQ(io::read_text(path), "again\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "a" / "b.txt.tmp"));
    std::filesystem::remove_all(dir);
}

TEST(GraphJson, DagRoundTrip) {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const Dag d = random_dag(6, 0.5, rng);
        EXPECT_EQ(io::dag_from_json(io::to_json(d)), d);
        EXPECT_EQ(io::cpdag_from_json(io::to_json(d)), to_cpdag(d));
        const Cpdag g = to_cpdag(d);
        EXPECT_EQ(io::cpdag_from_json(io::to_json(g)), g);
    }
}

TEST(GraphJson, RejectsBadGraphs) {
    using nlohmann::json;
    EXPECT_THROW(io::dag_from_json(json{{"n", 3}, {"edges", {{0, 1}, {1, 2}, {2, 0}}}}), std::invalid_argument);
    EXPECT_THROW(io::dag_from_json(json{{"n", 3}, {"edges", {{0, 3}}}}), std::invalid_argument);
    EXPECT_THROW(io::dag_from_json(json{{"n", 3}, {"edges", {{1, 1}}}}), std::invalid_argument);
    EXPECT_THROW(io::cpdag_from_json(json{{"n", 3}, {"edges", {{0, 1}}}, {"undirected", {{1, 0}}}}),
                 std::invalid_argument);
}

TEST(ParamsJson, RoundTripAndDefaults) {
    Dag d(3);
    d.add_edge(0, 2);
    d.add_edge(1, 2);
    AbnParams p = AbnParams::uniform(d, 5.0, -0.5);
    p.edge_coef[{1, 2}] = -1.25;
    const AbnParams back = io::params_from_json(io::to_json(p));
    EXPECT_EQ(back.dag, p.dag);
    EXPECT_EQ(back.intercept, p.intercept);
    EXPECT_EQ(back.edge_coef, p.edge_coef);

    const nlohmann::json bare = {{"n", 2}, {"edges", {{{"from", 0}, {"to", 1}, {"coef", 5}}}}};
    EXPECT_EQ(io::params_from_json(bare).intercept, (std::vector<double>{0, 0}));
    nlohmann::json bad = bare;
    bad["intercepts"] = {1.0};
    EXPECT_THROW(io::params_from_json(bad), std::invalid_argument);
}

TEST(DatasetCsv, RoundTripAndValidation) {
    Rng rng(3);
    Dag d(3);
    d.add_edge(0, 1);
    const Dataset data = sample(AbnParams::uniform(d, 2.0), 50, rng);
    const std::string text = io::to_csv(data);
    EXPECT_EQ(text.substr(0, 9), "X1,X2,X3\n");
    EXPECT_EQ(io::dataset_from_csv(text), data);
    EXPECT_EQ(io::dataset_from_csv("A,B\r\n0,1\r\n1,1\r\n").n_obs, 2);
    EXPECT_THROW(io::dataset_from_csv("X1,X2\n0,2\n"), std::invalid_argument);
    EXPECT_THROW(io::dataset_from_csv("X1,X2\n0\n"), std::invalid_argument);
    EXPECT_THROW(io::dataset_from_csv(""), std::invalid_argument);
}

TEST(CacheCsv, RoundTripIsBitExact) {
    Rng rng(4);
    Dag d(4);
    d.add_edge(0, 1);
    d.add_edge(1, 2);
    const Dataset data = sample(AbnParams::uniform(d, 3.0), 80, rng);
    for (int limit : {1, 3}) {
        ScoreCache cache = build_score_cache(data, StudentT{}, limit);
        cache.set(3, 0, CacheEntry{});  // a failed entry survives as -inf
        const std::string text = io::to_csv(cache);
        const ScoreCache back = io::cache_from_csv(text);
        EXPECT_EQ(back, cache);
        EXPECT_EQ(io::to_csv(back), text);
    }
}

TEST(CacheCsv, RejectsIncompleteOrDuplicate) {
    const std::string header = "node,parent_mask,log_score,converged,separation\n";
    EXPECT_THROW(io::cache_from_csv("wrong\n"), std::invalid_argument);
    EXPECT_THROW(io::cache_from_csv(header), std::invalid_argument);
    // n=2 needs (0,0), (0,2), (1,0), (1,1)
    const std::string full = header + "0,0,-1,1,none\n0,2,-1,1,none\n1,0,-1,1,none\n1,1,-1,1,none\n";
    EXPECT_NO_THROW(io::cache_from_csv(full));
    EXPECT_THROW(io::cache_from_csv(header + "0,0,-1,1,none\n0,2,-1,1,none\n1,0,-1,1,none\n"),
                 std::invalid_argument);
    EXPECT_THROW(io::cache_from_csv(header + "0,0,-1,1,none\n0,0,-1,1,none\n1,0,-1,1,none\n1,1,-1,1,none\n"),
                 std::invalid_argument);
    EXPECT_THROW(io::cache_from_csv(header + "0,1,-1,1,none\n0,2,-1,1,none\n1,0,-1,1,none\n1,1,-1,1,none\n"),
                 std::invalid_argument);
}
