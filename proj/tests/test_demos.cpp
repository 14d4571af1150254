#include "idxadvis/demos.hpp"
#include "idxadvis/error.hpp"
#include "idxadvis/llm.hpp"
#include "idxadvis/sim_backend.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace idxadvis;

namespace {

WorkloadFeatures two_column_features() {
    WorkloadFeatures f;
    f.groupby_freq[{"t", "a"}] = 4;
    f.groupby_freq[{"t", "b"}] = 2;
    f.per_query_columns = {{ColumnStat{"t", "a", 100, 1000, DataType::Int}, ColumnStat{"t", "b", 100, 1000, DataType::Int}}};
    return f;
}

Demonstration demo(const std::string& id, const std::string& schema, std::vector<std::pair<double, double>> pairs) {
    Demonstration d;
    d.id = id;
    d.schema_id = schema;
    pairs.resize(kDefaultMetaLength, {0.0, 0.0});
    d.meta.pairs = std::move(pairs);
    d.default_label = {IndexAction::create(IndexDef{"t", {"a"}})};
    return d;
}

class Scripted final : public LLMBackend {
public:
    explicit Scripted(std::string text) : text_(std::move(text)) {}
    std::string name() const override { return "scripted"; }
    std::vector<std::string> complete(const ChatRequest& r) override {
        return std::vector<std::string>(r.n_samples, text_);
    }

private:
    std::string text_;
};

}  // namespace

TEST(MetaFeature, SingleColumnSelfNormalises) {
    WorkloadFeatures f;
    f.join_freq[{"t", "a"}] = 1;
    f.per_query_columns = {{ColumnStat{"t", "a", 37, 100, DataType::Int}}};
    auto m = build_meta_feature(f);
    ASSERT_EQ(m.pairs.size(), kDefaultMetaLength);
    EXPECT_EQ(m.pairs[0], (std::pair<double, double>{1.0, 1.0}));
    for (std::size_t i = 1; i < m.pairs.size(); ++i) EXPECT_EQ(m.pairs[i], (std::pair<double, double>{0.0, 0.0}));
}

TEST(MetaFeature, TwoColumnsHandNormalised) {
    auto m = build_meta_feature(two_column_features());
    EXPECT_EQ(m.pairs[0], (std::pair<double, double>{1.0, 1.0}));
    EXPECT_EQ(m.pairs[1], (std::pair<double, double>{0.5, 1.0}));
}

TEST(MetaFeature, EmptyIsZero) {
    auto m = build_meta_feature(WorkloadFeatures{}, 5);
    EXPECT_EQ(m.pairs, (std::vector<std::pair<double, double>>(5, {0.0, 0.0})));
    EXPECT_THROW(build_meta_feature(WorkloadFeatures{}, 0), ConfigError);
}

TEST(Cosine, Properties) {
    auto x = build_meta_feature(two_column_features());
    EXPECT_NEAR(cosine_similarity(x, x), 1.0, 1e-12);
    MetaFeature e1{{{1.0, 0.0}}}, e2{{{0.0, 1.0}}};
    EXPECT_DOUBLE_EQ(cosine_similarity(e1, e2), 0.0);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        MetaFeature a, b;
        for (int i = 0; i < 6; ++i) {
            a.pairs.push_back({u(gen), u(gen)});
            b.pairs.push_back({u(gen), u(gen)});
        }
        double c = cosine_similarity(a, b);
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0);
        EXPECT_DOUBLE_EQ(c, cosine_similarity(b, a));
    }
}

TEST(Match, SingleDemoAnyStrategy) {
    DemoPool pool{{demo("only", "s", {{1.0, 1.0}})}};
    MetaFeature q = build_meta_feature(two_column_features());
    for (auto st : {MatchStrategy::Cosine, MatchStrategy::Random, MatchStrategy::KMeans}) {
        MatchOptions o;
        o.strategy = st;
        auto r = match_demonstrations(pool, q, o);
        ASSERT_EQ(r.size(), 1u);
        EXPECT_EQ(r[0].id, "only");
    }
}

TEST(Match, IdenticalMetaRanksFirst) {
    MetaFeature q = build_meta_feature(two_column_features());
    DemoPool pool{{demo("far", "s", {{0.1, 1.0}, {1.0, 0.1}}), demo("near", "s", {{1.0, 0.9}, {0.4, 1.0}})}};
    Demonstration same = demo("same", "s", {});
    same.meta = q;
    pool.demonstrations.push_back(same);
    auto r = match_demonstrations(pool, q, MatchOptions{});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].id, "same");
    EXPECT_EQ(r[1].id, "near");
}

TEST(Match, ExcludeSchema) {
    DemoPool pool{{demo("a", "tpch", {{1.0, 1.0}}), demo("b", "tpch", {{0.5, 1.0}}), demo("c", "shop", {{1.0, 0.2}})}};
    MatchOptions o;
    o.exclude_schema = "tpch";
    auto r = match_demonstrations(pool, build_meta_feature(two_column_features()), o);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].id, "c");
    o.exclude_schema = "shop";
    DemoPool only_shop{{demo("c", "shop", {{1.0, 0.2}})}};
    EXPECT_THROW(match_demonstrations(only_shop, build_meta_feature(two_column_features()), o), MatchEmpty);
    EXPECT_THROW(match_demonstrations(DemoPool{}, build_meta_feature(two_column_features()), MatchOptions{}), MatchEmpty);
}

TEST(Match, RandomIsSeededPermutation) {
    DemoPool pool;
    for (int i = 0; i < 12; ++i) pool.demonstrations.push_back(demo("d" + std::to_string(i), "s", {{0.1 * i, 1.0}}));
    MatchOptions o;
    o.strategy = MatchStrategy::Random;
    o.seed = 4;
    auto q = build_meta_feature(two_column_features());
    auto r1 = match_demonstrations(pool, q, o);
    auto r2 = match_demonstrations(pool, q, o);
    ASSERT_EQ(r1.size(), 12u);
    EXPECT_EQ(r1, r2);
}

TEST(SelectLabel, Cases) {
    IndexDef a{"t", {"a"}}, b{"t", {"b"}}, c{"t", {"c"}};
    Demonstration d = demo("x", "s", {});
    d.default_label = {IndexAction::create(a), IndexAction::create(b)};
    d.refined_labels = {{{c}, {IndexAction::drop(c), IndexAction::create(a), IndexAction::create(b)}},
                        {{a, c}, {IndexAction::drop(c), IndexAction::create(b)}}};
    EXPECT_EQ(select_label(d, {}), d.default_label);
    EXPECT_EQ(select_label(d, {a, c}), d.refined_labels[1].actions);
    EXPECT_EQ(select_label(d, {c}), d.refined_labels[0].actions);
    Demonstration plain = demo("y", "s", {});
    EXPECT_EQ(select_label(plain, {IndexDef{"q", {"z"}}}), plain.default_label);
    EXPECT_DOUBLE_EQ(jaccard({a, b}, {b, c}), 1.0 / 3.0);
}

TEST(Synthesis, MockIsReproducible) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    MockLLM llm(7);
    SynthesisOptions o;
    o.seed = 7;
    auto q1 = synthesize_queries(llm, c, 5, o);
    auto q2 = synthesize_queries(llm, c, 5, o);
    EXPECT_EQ(q1.size(), 5u);
    EXPECT_EQ(q1, q2);
    for (const auto& q : q1) EXPECT_NO_THROW(parse_query(q, c)) << q;
}

TEST(Synthesis, NoSqlThrows) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    Scripted llm("I am unable to help with that.");
    EXPECT_THROW(synthesize_queries(llm, c, 3, SynthesisOptions{}), NoQueriesParsed);
    EXPECT_THROW(extract_sql_blocks("no statements here"), NoQueriesParsed);
}

TEST(Synthesis, FencedStatements) {
    auto q = extract_sql_blocks("Here:\n```sql\nSELECT 1;\nSELECT a FROM t;\n```\nand\n```sql\nSELECT b FROM t\n```\n");
    EXPECT_EQ(q.size(), 3u);
}

TEST(Filter, TemplateInvalidAndKept) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    SimulatedBackend b(c);
    std::string tmpl = "SELECT c_name FROM customers WHERE c_city = 'Oslo'";
    auto r = validate_and_filter({"SELECT c_name FROM customers WHERE c_city = 'Paris'", "SELEC broken FROM",
                                  "SELECT o_id, o_total FROM orders WHERE o_date > DATE '2024-01-01' ORDER BY o_total"},
                                 b, {tmpl});
    EXPECT_EQ(r.similar, 1u);
    EXPECT_EQ(r.invalid, 1u);
    ASSERT_EQ(r.kept.size(), 1u);
    EXPECT_NE(r.kept[0].find("orders"), std::string::npos);
    EXPECT_DOUBLE_EQ(query_similarity(tmpl, tmpl), 1.0);
}

TEST(Pool, OneSmallWorkload) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    SimulatedBackend b(c);
    MockLLM llm(2);
    PoolConfig pc;
    pc.seed = 2;
    pc.workloads = 1;
    pc.workload_size_min = 3;
    pc.workload_size_max = 3;
    pc.queries_per_schema = 10;
    pc.budget_grid = {0.3};
    auto r = build_pool(b, llm, pc);
    ASSERT_EQ(r.pool.demonstrations.size(), 1u);
    EXPECT_FALSE(r.pool.demonstrations[0].default_label.empty());
    EXPECT_EQ(r.pool.demonstrations[0].schema_id, "shop");
}

TEST(Pool, NothingSurvives) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    SimulatedBackend b(c);
    Scripted llm("```sql\nSELECT nonsense FROM nowhere;\n```");
    PoolConfig pc;
    pc.queries_per_schema = 5;
    auto r = build_pool(b, llm, pc);
    EXPECT_TRUE(r.pool.empty());
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Pool, JsonlRoundTripAndDeterminism) {
    Catalog c = Catalog::load(oracle::data_path("shop_catalog.json"));
    auto p1 = oracle::mock_pool(c, 9, 2);
    auto p2 = oracle::mock_pool(c, 9, 2);
    EXPECT_EQ(p1.to_jsonl(), p2.to_jsonl());
    auto back = DemoPool::from_jsonl(p1.to_jsonl());
    EXPECT_EQ(back.demonstrations, p1.demonstrations);
    EXPECT_THROW(DemoPool::from_jsonl(p1.to_jsonl() + p1.to_jsonl()), ConfigError);
    EXPECT_THROW(DemoPool::from_jsonl("{not json}\n"), ConfigError);
}
