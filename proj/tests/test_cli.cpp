#include "idxadvis/error.hpp"
#include "idxadvis/heuristics.hpp"
#include "idxadvis/pipeline.hpp"
#include "idxadvis/sim_backend.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace idxadvis;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class TempDir {
public:
    TempDir() {
        static int n = 0;
        path_ = fs::temp_directory_path() / ("idxadvis-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::function<std::optional<std::string>(const std::string&)> env_of(std::map<std::string, std::string> vars) {
    return [vars](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

// Shared shop pool written once per test binary.
const std::string& shop_pool_path() {
    static TempDir dir;
    static std::string path = [] {
        std::string p = (dir / "shop_pool.jsonl").string();
        oracle::mock_pool(Catalog::load(oracle::data_path("shop_catalog.json")), 5).save(p);
        return p;
    }();
    return path;
}

AdvisorConfig shop_config(const std::string& workload = "regression/shop_w2.sql") {
    AdvisorConfig c;
    c.catalog = oracle::data_path("shop_catalog.json");
    c.workload = oracle::data_path(workload);
    c.demos = shop_pool_path();
    return c;
}

int quiet(const std::function<int()>& f) {
    std::streambuf* old = std::cerr.rdbuf(nullptr);
    int rc = 0;
    try {
        rc = f();
    } catch (...) {
        std::cerr.rdbuf(old);
        throw;
    }
    std::cerr.rdbuf(old);
    return rc;
}

}  // namespace

TEST(Config, Precedence) {
    TempDir dir;
    spit(dir / "cfg.json", R"({"samples": 4, "temperature": 0.2, "storage-pct": 0.25, "zero_shot": true})");
    auto env = env_of({{"IDXADVIS_SAMPLES", "2"}, {"IDXADVIS_MAX_ITERS", "3"}, {"IDXADVIS_TEMPERATURE", "0.9"},
                       {"IDXADVIS_SEED", "17"}});
    auto c = resolve_config({{"samples", "6"}}, (dir / "cfg.json").string(), env);
    EXPECT_EQ(c.samples, 6u);                // flag beats file and environment
    EXPECT_DOUBLE_EQ(c.temperature, 0.2);   // file beats environment
    EXPECT_DOUBLE_EQ(c.storage_pct, 0.25);  // dashed and underscored keys are the same setting
    EXPECT_TRUE(c.zero_shot);
    EXPECT_EQ(c.max_iters, 3u);  // environment only
    EXPECT_EQ(c.seed, 17u);
    AdvisorConfig d = resolve_config({}, "", env_of({}));
    EXPECT_EQ(d.samples, 8u);
    EXPECT_EQ(d.max_iters, 4u);
    EXPECT_DOUBLE_EQ(d.temperature, 0.6);
}

TEST(Config, Rejections) {
    TempDir dir;
    auto none = env_of({});
    EXPECT_THROW(resolve_config({{"bogus", "1"}}, "", none), ConfigError);
    EXPECT_THROW(resolve_config({{"samples", "many"}}, "", none), ConfigError);
    EXPECT_THROW(resolve_config({{"storage_pct", "1.5"}}, "", none).validate(), ConfigError);
    EXPECT_THROW(resolve_config({{"samples", "0"}}, "", none).validate(), ConfigError);
    EXPECT_THROW(resolve_config({{"match", "nearest"}}, "", none).validate(), ConfigError);
    spit(dir / "bad.json", "[1, 2]");
    EXPECT_THROW(resolve_config({}, (dir / "bad.json").string(), none), ConfigError);
    EXPECT_THROW(resolve_config({}, (dir / "missing.json").string(), none), ConfigError);
    for (const auto& k : config_keys()) EXPECT_NE(k, "");
}

TEST(Config, EchoHidesSecrets) {
    AdvisorConfig c;
    c.token = "sk-very-secret";
    c.dsn = "postgresql://u:pw@h/db";
    std::string echo = c.echo_json();
    EXPECT_EQ(echo.find("sk-very-secret"), std::string::npos);
    EXPECT_EQ(echo.find("pw@"), std::string::npos);
}

TEST(Advise, ReportArithmetic) {
    TempDir dir;
    AdvisorConfig c = shop_config();
    c.out = (dir / "report.json").string();
    ASSERT_EQ(quiet([&] { return cmd_advise(c); }), 0);
    auto j = nlohmann::json::parse(slurp(c.out));
    double base = j["baseline_cost"], fin = j["final_cost"];
    EXPECT_GT(base, 0.0);
    EXPECT_NEAR(j["relative_reduction"].get<double>(), (base - fin) / base, 1e-12);
    EXPECT_GT(j["relative_reduction"].get<double>(), 0.0);
    EXPECT_LE(j["size_mb"].get<double>(), j["budget_mb"].get<double>());
    EXPECT_NEAR(j["budget_mb"].get<double>(), 0.3 * j["database_size_mb"].get<double>(), 1e-9);
    EXPECT_FALSE(j.contains("runtime_s"));

    // the emitted DDL, evaluated on its own, reproduces the reported cost and size
    SimulatedBackend b(Catalog::load(c.catalog));
    Workload w = load_workload(c.workload);
    auto ev = evaluate_ddl(b, w, slurp(dir / "report.sql"), 0.3);
    EXPECT_DOUBLE_EQ(ev.current.total, fin);
    EXPECT_NEAR(ev.size_mb, j["size_mb"].get<double>(), 1e-9);
    EXPECT_EQ(ev.parse_warnings, 0u);

    double best = base;
    for (const auto& it : j["iterations"]) best = std::min(best, it["chosen_cost"].get<double>());
    EXPECT_DOUBLE_EQ(best, fin);
    auto metrics = nlohmann::json::parse(slurp(dir / "report.metrics.json"));
    EXPECT_GE(metrics["runtime_s"].get<double>(), 0.0);
    std::string trace = slurp(dir / "report.trace.jsonl");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), static_cast<long>(j["iterations"].size()));
}

TEST(Advise, Reproducible) {
    TempDir dir;
    std::string first;
    for (int i = 0; i < 2; ++i) {
        AdvisorConfig c = shop_config("regression/shop_w4.sql");
        c.seed = 9;
        c.out = (dir / ("r" + std::to_string(i) + ".json")).string();
        ASSERT_EQ(quiet([&] { return cmd_advise(c); }), 0);
        std::string all = slurp(c.out) + slurp(sidecar_path(c.out, ".sql")) + slurp(sidecar_path(c.out, ".trace.jsonl"));
        if (i == 0) first = all;
        else EXPECT_EQ(all, first);
    }
}

TEST(Advise, TinyBudgetGivesEmptyDdl) {
    TempDir dir;
    AdvisorConfig c = shop_config();
    c.storage_pct = 1e-6;
    c.out = (dir / "tiny.json").string();
    ASSERT_EQ(quiet([&] { return cmd_advise(c); }), 0);
    auto j = nlohmann::json::parse(slurp(c.out));
    EXPECT_TRUE(j["ddl"].empty());
    EXPECT_DOUBLE_EQ(j["relative_reduction"].get<double>(), 0.0);
}

TEST(Advise, ZeroShotNeedsNoPool) {
    TempDir dir;
    AdvisorConfig c = shop_config();
    c.demos.clear();
    c.zero_shot = true;
    c.out = (dir / "z.json").string();
    ASSERT_EQ(quiet([&] { return cmd_advise(c); }), 0);
    EXPECT_TRUE(nlohmann::json::parse(slurp(c.out))["demonstrations"].empty());
    c.zero_shot = false;
    EXPECT_THROW(cmd_advise(c), ConfigError);
}

TEST(Eval, EmptyDdlAndRepeatability) {
    TempDir dir;
    AdvisorConfig c = shop_config();
    c.out = (dir / "e1.json").string();
    ASSERT_EQ(cmd_eval(c, ""), 0);
    auto j = nlohmann::json::parse(slurp(c.out));
    EXPECT_DOUBLE_EQ(j["relative_reduction"].get<double>(), 0.0);
    spit(dir / "x.sql", "CREATE INDEX ON orders (o_cust);\nCREATE INDEX ON customers (c_city);\n");
    c.out = (dir / "e2.json").string();
    cmd_eval(c, (dir / "x.sql").string());
    c.out = (dir / "e3.json").string();
    cmd_eval(c, (dir / "x.sql").string());
    EXPECT_EQ(slurp(dir / "e2.json"), slurp(dir / "e3.json"));
}

TEST(Eval, GreedyDdlMatchesExhaustiveOptimum) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = oracle::make_micro_instance(seed);
        SimulatedBackend b(m.catalog);
        auto cands = generate_candidates(extract_workload_features(m.workload, m.catalog, b.selectivity()), 2);
        double all = 0.0;
        for (const auto& d : cands.candidates) all += b.index_size_mb(d);
        double frac = std::min(1.0, (all + 1.0) / b.database_size_mb());
        auto s = b.open_session();
        auto chosen = greedy_advisor(*s, m.workload, cands, frac * b.database_size_mb());
        std::vector<IndexAction> acts;
        for (const auto& d : chosen) acts.push_back(IndexAction::create(d));
        auto ev = evaluate_ddl(b, m.workload, render_actions(acts), frac);
        auto opt = oracle::exhaustive_optimum(b, m.workload, cands.candidates, frac * b.database_size_mb());
        EXPECT_NEAR(relative_cost_reduction(ev.baseline, ev.current),
                    relative_cost_reduction(ev.baseline.total, opt.cost), 1e-12)
            << "seed " << seed;
    }
}

TEST(Labels, OneBudgetOneLabel) {
    TempDir dir;
    AdvisorConfig c = shop_config("regression/shop_w1.sql");
    c.grid = {0.3};
    c.out = (dir / "l1.json").string();
    ASSERT_EQ(cmd_labels(c), 0);
    auto j = nlohmann::json::parse(slurp(c.out));
    ASSERT_EQ(j["labels"].size(), 1u);
    EXPECT_FALSE(j["labels"][0]["default_label"].empty());
    c.out = (dir / "l2.json").string();
    cmd_labels(c);
    EXPECT_EQ(slurp(dir / "l1.json"), slurp(dir / "l2.json"));
}

TEST(BuildDemos, DeterministicPool) {
    TempDir dir;
    AdvisorConfig c;
    c.catalog = oracle::data_path("shop_catalog.json");
    c.seed = 3;
    c.workloads = 2;
    c.queries_per_schema = 16;
    c.grid = {0.2, 0.3};
    c.out = (dir / "p1.jsonl").string();
    ASSERT_EQ(quiet([&] { return cmd_build_demos(c); }), 0);
    c.out = (dir / "p2.jsonl").string();
    ASSERT_EQ(quiet([&] { return cmd_build_demos(c); }), 0);
    EXPECT_EQ(slurp(dir / "p1.jsonl"), slurp(dir / "p2.jsonl"));
    EXPECT_GE(DemoPool::load((dir / "p1.jsonl").string()).demonstrations.size(), 1u);
}

TEST(BuildDemos, UnreachableLiveEngine) {
    AdvisorConfig c;
    c.backend = "live";
    c.dsn = "postgresql://nobody@127.0.0.1:1/none?connect_timeout=2";
    c.out = "/dev/null";
    try {
        quiet([&] { return cmd_build_demos(c); });
        FAIL() << "expected a backend error";
    } catch (const BackendError& e) {
        EXPECT_EQ(exit_code_for(e), 3);
    }
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
    EXPECT_EQ(exit_code_for(ParseError("x")), 2);
    EXPECT_EQ(exit_code_for(MatchEmpty("x")), 2);
    EXPECT_EQ(exit_code_for(NoQueriesParsed("x")), 2);
    EXPECT_EQ(exit_code_for(BackendError("x")), 3);
    EXPECT_EQ(exit_code_for(LLMError("x")), 4);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

#ifdef IDXADVIS_CLI
namespace {
int run_cli(const std::string& args) {
    int status = std::system((std::string(IDXADVIS_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST(Binary, ExitCodes) {
    TempDir dir;
    std::string common = "--catalog " + oracle::data_path("shop_catalog.json") + " --workload " +
                         oracle::data_path("regression/shop_w1.sql");
    EXPECT_EQ(run_cli("advise " + common + " --demos " + shop_pool_path() + " --out " + (dir / "a.json").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "a.sql"));
    EXPECT_EQ(run_cli("advise " + common + " --demos " + shop_pool_path() + " --storage-pct 2"), 2);
    EXPECT_EQ(run_cli("advise " + common + " --demos " + shop_pool_path() + " --mode cross-schema"), 2);
    EXPECT_EQ(run_cli("advise " + common + " --zero-shot --backend live --dsn postgresql://x@127.0.0.1:1/none"), 3);
    EXPECT_EQ(run_cli("advise " + common + " --zero-shot --llm http --endpoint http://127.0.0.1:1/v1/chat/completions "
                      "--out " + (dir / "b.json").string()), 4);
    EXPECT_TRUE(fs::exists(dir / "b.json"));
    EXPECT_EQ(run_cli("eval " + common + " --out " + (dir / "e.json").string()), 0);
    EXPECT_EQ(run_cli("no-such-command"), 2);
    EXPECT_EQ(run_cli("--help"), 0);
}
#endif
