#include "idxadvis/catalog.hpp"
#include "idxadvis/error.hpp"
#include "idxadvis/features.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace idxadvis;

namespace {

Catalog tu_catalog() {
    return Catalog({TableInfo{"t", 1000, {{"a", DataType::Int, 1000}, {"b", DataType::Int, 50}}},
                    TableInfo{"u", 500, {{"c", DataType::Int, 500}, {"d", DataType::Int, 10}}}},
                   "tu");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::set<ColumnRef> where_columns(const QueryShape& s) {
    std::set<ColumnRef> out;
    for (const auto& p : s.where_predicates)
        for (const auto& c : p.columns) out.insert({p.table, c});
    return out;
}

}  // namespace

TEST(ParseQuery, SingleTableFilter) {
    Catalog c = tu_catalog();
    auto s = parse_query("SELECT * FROM t WHERE t.a = 5", c);
    ASSERT_EQ(s.where_predicates.size(), 1u);
    EXPECT_EQ(s.where_predicates[0].table, "t");
    EXPECT_EQ(s.where_predicates[0].columns, std::vector<std::string>{"a"});
    EXPECT_EQ(s.where_predicates[0].text, "t.a = 5");
    EXPECT_TRUE(s.join_columns.empty());
    EXPECT_TRUE(s.group_by.empty());
    EXPECT_TRUE(s.order_by.empty());
}

TEST(ParseQuery, JoinGroupOrder) {
    Catalog c = Catalog::load(oracle::data_path("tpch_catalog.json"));
    auto s = parse_query(
        "SELECT l_returnflag, count(*) FROM lineitem JOIN orders ON l_orderkey = o_orderkey "
        "GROUP BY l_returnflag ORDER BY l_returnflag",
        c);
    std::set<ColumnRef> joins(s.join_columns.begin(), s.join_columns.end());
    EXPECT_EQ(joins, (std::set<ColumnRef>{{"lineitem", "l_orderkey"}, {"orders", "o_orderkey"}}));
    EXPECT_EQ(s.group_by, (std::vector<ColumnRef>{{"lineitem", "l_returnflag"}}));
    EXPECT_EQ(s.order_by, (std::vector<ColumnRef>{{"lineitem", "l_returnflag"}}));
}

TEST(ParseQuery, SubqueryContributes) {
    Catalog c = tu_catalog();
    auto s = parse_query("SELECT a FROM t WHERE b IN (SELECT c FROM u WHERE d > 1)", c);
    auto w = where_columns(s);
    EXPECT_TRUE(w.count({"t", "b"}));
    EXPECT_TRUE(w.count({"u", "d"}));
    bool found = false;
    for (const auto& p : s.where_predicates)
        if (p.table == "u" && p.text == "d > 1") found = true;
    EXPECT_TRUE(found);
    EXPECT_EQ(s.all_columns, (std::set<ColumnRef>{{"t", "a"}, {"t", "b"}, {"u", "c"}, {"u", "d"}}));
}

TEST(ParseQuery, Errors) {
    Catalog c = tu_catalog();
    EXPECT_THROW(parse_query("SELEC a FROM t", c), ParseError);
    EXPECT_THROW(parse_query("SELECT zz FROM t", c), UnknownColumn);
    EXPECT_THROW(parse_query("SELECT a FROM nowhere", c), UnknownColumn);
}

TEST(Selectivity, AlwaysTrue) {
    Catalog c = tu_catalog();
    SimulatedSelectivity sel(c);
    EXPECT_DOUBLE_EQ(sel.estimate("t", "1 = 1"), 1.0);
}

TEST(Selectivity, UniqueKeyEquality) {
    Catalog c = tu_catalog();
    SimulatedSelectivity sel(c);
    EXPECT_DOUBLE_EQ(sel.estimate("t", "a = 17"), 1.0 / 1000.0);
}

TEST(Selectivity, ConjunctionMultiplies) {
    // b has ndv 50 -> IN of 25 values is 0.5; d has ndv 10 -> IN of 2 values is 0.2
    Catalog c = Catalog({TableInfo{"t", 1000, {{"b", DataType::Int, 50}, {"d", DataType::Int, 10}}}});
    SimulatedSelectivity sel(c);
    std::string in25 = "b IN (";
    for (int i = 1; i <= 25; ++i) in25 += (i > 1 ? ", " : "") + std::to_string(i);
    in25 += ")";
    EXPECT_DOUBLE_EQ(sel.estimate("t", in25), 0.5);
    EXPECT_DOUBLE_EQ(sel.estimate("t", "d IN (1, 2)"), 0.2);
    EXPECT_NEAR(sel.estimate("t", in25 + " AND d IN (1, 2)"), 0.1, 1e-12);
}

TEST(Selectivity, ModelClauses) {
    Catalog c = tu_catalog();
    SimulatedSelectivity sel(c);
    EXPECT_DOUBLE_EQ(sel.estimate("t", "a > 10"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(sel.estimate("t", "b BETWEEN 1 AND 4"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(sel.estimate("u", "d IN (1, 2, 3)"), 0.3);
    EXPECT_DOUBLE_EQ(sel.estimate("t", "abs(a) = 3"), 0.5);
}

TEST(Features, SinglePredicate) {
    Catalog c = tu_catalog();
    SimulatedSelectivity sel(c);
    auto f = extract_workload_features(workload_from_text("SELECT a FROM t WHERE b = 3"), c, sel);
    EXPECT_EQ(f.where_selectivities.size(), 1u);
    EXPECT_TRUE(f.join_freq.empty());
    EXPECT_TRUE(f.groupby_freq.empty());
    EXPECT_TRUE(f.orderby_freq.empty());
    EXPECT_DOUBLE_EQ(f.where_selectivities[0].selectivity, 1.0 / 50.0);
}

TEST(Features, JoinFrequencyCounts) {
    Catalog c = tu_catalog();
    SimulatedSelectivity sel(c);
    auto f = extract_workload_features(
        workload_from_text("SELECT * FROM t JOIN u ON t.a = u.c; SELECT b FROM t, u WHERE a = c AND d = 1"), c, sel);
    EXPECT_EQ(f.join_freq.at({"t", "a"}), 2u);
    EXPECT_EQ(f.join_freq.at({"u", "c"}), 2u);
}

TEST(Features, TpchSubsetPredicateAverage) {
    Catalog c = Catalog::load(oracle::data_path("tpch_catalog.json"));
    Workload w = load_workload(oracle::data_path("tpch19.sql"));
    ASSERT_EQ(w.queries.size(), 19u);
    std::size_t total = 0, lo = SIZE_MAX, hi = 0;
    for (const auto& q : w.queries) {
        std::size_t n = parse_query(q, c).where_predicate_count();
        total += n;
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    EXPECT_NEAR(static_cast<double>(total) / 19.0, 2.11, 0.01);
    EXPECT_EQ(lo, 1u);
}

TEST(Features, JsonRoundTrip) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    SimulatedSelectivity sel(c);
    auto f = extract_workload_features(load_workload(oracle::data_path("corpus.sql")), c, sel);
    auto back = WorkloadFeatures::from_json_text(f.to_json_text());
    EXPECT_EQ(back.to_json_text(), f.to_json_text());
}

TEST(Features, DeterministicAndAdditive) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    SimulatedSelectivity sel(c);
    Workload w = load_workload(oracle::data_path("corpus.sql"));
    auto f1 = extract_workload_features(w, c, sel);
    auto f2 = extract_workload_features(w, c, sel);
    EXPECT_EQ(f1.to_json_text(), f2.to_json_text());

    // frequencies of a concatenated workload are the sum of the halves
    Workload a{"a", {w.queries.begin(), w.queries.begin() + 20}};
    Workload b{"b", {w.queries.begin() + 20, w.queries.end()}};
    auto fa = extract_workload_features(a, c, sel);
    auto fb = extract_workload_features(b, c, sel);
    auto sum = [](auto x, const auto& y) {
        for (const auto& [k, v] : y) x[k] += v;
        return x;
    };
    EXPECT_EQ(f1.join_freq, sum(fa.join_freq, fb.join_freq));
    EXPECT_EQ(f1.groupby_freq, sum(fa.groupby_freq, fb.groupby_freq));
    EXPECT_EQ(f1.orderby_freq, sum(fa.orderby_freq, fb.orderby_freq));
    EXPECT_EQ(f1.per_query_columns.size(), w.queries.size());
}

TEST(Features, CorpusMatchesReferenceParser) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    Workload w = load_workload(oracle::data_path("corpus.sql"));
    auto golden = nlohmann::json::parse(slurp(oracle::data_path("corpus_shapes.json")));
    ASSERT_GE(w.queries.size(), 40u);
    ASSERT_EQ(golden.size(), w.queries.size());
    auto pairs = [](const auto& list) {
        std::vector<std::vector<std::string>> out;
        for (const auto& [t, col] : list) out.push_back({t, col});
        return out;
    };
    using Rows = std::vector<std::vector<std::string>>;
    for (std::size_t i = 0; i < w.queries.size(); ++i) {
        SCOPED_TRACE(w.queries[i]);
        auto s = parse_query(w.queries[i], c);
        const auto& g = golden[i];
        auto joins = pairs(s.join_columns);
        std::sort(joins.begin(), joins.end());
        auto wc = where_columns(s);
        EXPECT_EQ(std::vector<std::string>(s.tables.begin(), s.tables.end()), g["tables"].get<std::vector<std::string>>());
        EXPECT_EQ(joins, g["join_columns"].get<Rows>());
        EXPECT_EQ(pairs(wc), g["where_columns"].get<Rows>());
        EXPECT_EQ(pairs(s.group_by), g["group_by"].get<Rows>());
        EXPECT_EQ(pairs(s.order_by), g["order_by"].get<Rows>());
        EXPECT_EQ(pairs(s.all_columns), g["all_columns"].get<Rows>());
    }
}

TEST(Features, CorpusSnapshot) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    SimulatedSelectivity sel(c);
    std::string got = extract_workload_features(load_workload(oracle::data_path("corpus.sql")), c, sel).to_json_text();
    std::string path = oracle::data_path("corpus_features.json");
    if (const char* u = std::getenv("IDXADVIS_UPDATE_GOLDEN"); u && std::string(u) == "1") {
        std::ofstream(path, std::ios::binary) << got;
        GTEST_SKIP() << "snapshot rewritten";
    }
    EXPECT_EQ(got, slurp(path));
}
