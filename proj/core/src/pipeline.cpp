#include "idxadvis/pipeline.hpp"

#include "idxadvis/error.hpp"
#include "idxadvis/live_backend.hpp"
#include "idxadvis/sim_backend.hpp"
#include "json_util.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace idxadvis {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

std::string normalize_key(std::string key) {
    for (auto& c : key)
        if (c == '-') c = '_';
    return to_lower(key);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "' expects a number, got '" + v + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        auto n = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    std::string l = to_lower(v);
    if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
    if (l == "0" || l == "false" || l == "no" || l == "off") return false;
    throw ConfigError("setting '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> parse_grid(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(" []");
        auto e = item.find_last_not_of(" []");
        if (b == std::string::npos) continue;
        out.push_back(parse_double(key, item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw ConfigError("setting '" + key + "' is empty");
    return out;
}

void assign(AdvisorConfig& c, const std::string& key, const std::string& v) {
    if (key == "workload") c.workload = v;
    else if (key == "catalog") c.catalog = v;
    else if (key == "dsn") c.dsn = v;
    else if (key == "backend") c.backend = to_lower(v);
    else if (key == "storage_pct") c.storage_pct = parse_double(key, v);
    else if (key == "llm") c.llm = to_lower(v);
    else if (key == "model") c.model = v;
    else if (key == "endpoint") c.endpoint = v;
    else if (key == "token") c.token = v;
    else if (key == "llm_timeout") c.llm_timeout_s = static_cast<int>(parse_uint(key, v));
    else if (key == "samples") c.samples = parse_uint(key, v);
    else if (key == "temperature") c.temperature = parse_double(key, v);
    else if (key == "max_tokens") c.max_tokens = parse_uint(key, v);
    else if (key == "max_iters") c.max_iters = parse_uint(key, v);
    else if (key == "vote") c.vote = parse_bool(key, v);
    else if (key == "demos") c.demos = v;
    else if (key == "match") c.match = to_lower(v);
    else if (key == "kmeans_k") c.kmeans_k = parse_uint(key, v);
    else if (key == "mode") c.mode = to_lower(v);
    else if (key == "exclude_schema") c.exclude_schema = v;
    else if (key == "zero_shot") c.zero_shot = parse_bool(key, v);
    else if (key == "seed") c.seed = parse_uint(key, v);
    else if (key == "out") c.out = v;
    else if (key == "threads") c.threads = parse_uint(key, v);
    else if (key == "grid") c.grid = parse_grid(key, v);
    else if (key == "max_width") c.max_width = parse_uint(key, v);
    else if (key == "queries_per_schema") c.queries_per_schema = parse_uint(key, v);
    else if (key == "workloads") c.workloads = parse_uint(key, v);
    else if (key == "workload_size_min") c.workload_size_min = parse_uint(key, v);
    else if (key == "workload_size_max") c.workload_size_max = parse_uint(key, v);
    else if (key == "templates") c.templates = v;
    else if (key == "similarity_threshold") c.similarity_threshold = parse_double(key, v);
    else if (key == "timeout_factor") c.timeout_factor = parse_double(key, v);
    else if (key == "count") c.count = parse_uint(key, v);
    else throw ConfigError("unknown setting '" + key + "'");
}

std::string json_scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (const auto& x : v) out += (out.empty() ? "" : ",") + json_scalar_text(x);
        return out;
    }
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    return v.dump();
}

double budget_mb_for(const WhatIfBackend& backend, double storage_pct) {
    return storage_pct * backend.database_size_mb();
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_file(out, text);
}

}  // namespace

// ---------------------------------------------------------------- configuration

void AdvisorConfig::validate() const {
    if (!(storage_pct > 0.0 && storage_pct <= 1.0)) throw ConfigError("storage_pct must be in (0, 1]");
    if (samples < 1) throw ConfigError("samples must be >= 1");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (backend != "sim" && backend != "live") throw ConfigError("backend must be 'sim' or 'live'");
    if (llm != "mock" && llm != "http") throw ConfigError("llm must be 'mock' or 'http'");
    if (mode != "in-schema" && mode != "cross-schema") throw ConfigError("mode must be 'in-schema' or 'cross-schema'");
    parse_match_strategy(match);
    if (kmeans_k < 1) throw ConfigError("kmeans_k must be >= 1");
    if (max_width < 1) throw ConfigError("max_width must be >= 1");
    for (double g : grid)
        if (!(g > 0.0 && g <= 1.0)) throw ConfigError("grid budgets must be in (0, 1]");
    if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0))
        throw ConfigError("similarity_threshold must be in [0, 1]");
    if (!(timeout_factor > 0.0)) throw ConfigError("timeout_factor must be > 0");
}

std::string AdvisorConfig::echo_json() const {
    nlohmann::json j = {
        {"workload", workload},
        {"catalog", catalog},
        {"dsn", dsn.empty() ? "" : "<set>"},
        {"backend", backend},
        {"storage_pct", storage_pct},
        {"llm", llm},
        {"model", model},
        {"samples", samples},
        {"temperature", temperature},
        {"max_iters", max_iters},
        {"vote", vote},
        {"demos", demos},
        {"match", match},
        {"kmeans_k", kmeans_k},
        {"mode", mode},
        {"exclude_schema", exclude_schema},
        {"zero_shot", zero_shot},
        {"seed", seed},
    };
    if (llm == "http") j["endpoint"] = endpoint;
    return j.dump();
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "workload", "catalog", "dsn", "backend", "storage_pct", "llm", "model", "endpoint", "token",
        "llm_timeout", "samples", "temperature", "max_tokens", "max_iters", "vote", "demos", "match",
        "kmeans_k", "mode", "exclude_schema", "zero_shot", "seed", "out", "threads", "grid", "max_width",
        "queries_per_schema", "workloads", "workload_size_min", "workload_size_max", "templates",
        "similarity_threshold", "timeout_factor", "count"};
    return keys;
}

std::optional<std::string> process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

AdvisorConfig resolve_config(const std::map<std::string, std::string>& flags, const std::string& config_file,
                             const std::function<std::optional<std::string>(const std::string&)>& getenv) {
    AdvisorConfig c;
    if (getenv) {
        for (const auto& key : config_keys()) {
            std::string var = "IDXADVIS_";
            for (char ch : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            if (auto v = getenv(var)) assign(c, key, *v);
        }
    }
    if (!config_file.empty()) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_file(config_file));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file '" + config_file + "' is not valid JSON: " + e.what());
        }
        if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [k, v] : doc.items()) assign(c, normalize_key(k), json_scalar_text(v));
    }
    for (const auto& [k, v] : flags) assign(c, normalize_key(k), v);
    c.validate();
    return c;
}

std::unique_ptr<WhatIfBackend> make_backend(const AdvisorConfig& config) {
    if (config.backend == "live") {
        if (config.dsn.empty()) throw ConfigError("the live backend needs --dsn");
        return LiveBackend::connect(config.dsn);
    }
    if (config.catalog.empty()) throw ConfigError("the simulated backend needs --catalog");
    return std::make_unique<SimulatedBackend>(Catalog::load(config.catalog));
}

std::unique_ptr<LLMBackend> make_llm(const AdvisorConfig& config) {
    if (config.llm == "http") {
        if (config.model.empty()) throw ConfigError("the http model backend needs --model");
        return std::make_unique<HttpLLM>(config.endpoint, config.model, config.token, config.llm_timeout_s);
    }
    return std::make_unique<MockLLM>(config.seed);
}

// ---------------------------------------------------------------- advise

AdviseResult advise(const WhatIfBackend& backend, LLMBackend& llm, const Workload& workload, const DemoPool* pool,
                    const AdvisorConfig& config) {
    config.validate();
    auto start = std::chrono::steady_clock::now();
    AdviseResult r;
    r.workload_name = workload.name;
    r.queries = workload.queries.size();
    r.backend = config.backend;
    r.database_size_mb = backend.database_size_mb();
    r.budget_mb = budget_mb_for(backend, config.storage_pct);

    WorkloadFeatures features = extract_workload_features(workload, backend.catalog(), backend.selectivity());

    std::vector<Demonstration> ranked;
    if (!config.zero_shot) {
        if (!pool) throw ConfigError("a demonstration pool is required unless zero-shot is set");
        MatchOptions mo;
        mo.strategy = parse_match_strategy(config.match);
        mo.seed = config.seed;
        mo.kmeans_k = config.kmeans_k;
        if (!config.exclude_schema.empty())
            mo.exclude_schema = config.exclude_schema;
        else if (config.mode == "cross-schema")
            mo.exclude_schema = backend.catalog().schema_id();
        ranked = match_demonstrations(*pool, build_meta_feature(features), mo);
        for (const auto& d : ranked) r.matched_demos.push_back(d.id);
    }

    OptimizeInputs in;
    in.backend = &backend;
    in.llm = &llm;
    in.workload = &workload;
    in.features = &features;
    in.ranked_demos = std::move(ranked);
    in.budget_fraction = config.storage_pct;

    OptimizeConfig oc;
    oc.max_iters = config.max_iters;
    oc.sampling = {config.temperature, config.samples, config.max_tokens};
    oc.use_voting = config.vote;
    oc.demos_per_prompt = config.zero_shot ? 0 : 2;
    oc.threads = config.threads;

    r.optimize = self_optimize(in, r.budget_mb, oc);
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::string advise_report_json(const AdviseResult& r, const AdvisorConfig& config) {
    const auto& o = r.optimize;
    nlohmann::json j;
    j["workload"] = r.workload_name;
    j["queries"] = r.queries;
    j["backend"] = r.backend;
    j["database_size_mb"] = r.database_size_mb;
    j["budget_mb"] = r.budget_mb;
    j["baseline_cost"] = o.baseline_cost;
    j["final_cost"] = o.cost;
    j["relative_reduction"] = relative_cost_reduction(o.baseline_cost, o.cost);
    j["size_mb"] = o.size_mb;
    auto ddl = nlohmann::json::array();
    for (const auto& a : o.actions) ddl.push_back(render_action(a));
    j["ddl"] = std::move(ddl);
    j["actions"] = actions_to_json(o.actions);
    auto trace = nlohmann::json::array();
    std::istringstream lines(trace_to_jsonl(o.trace));
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) trace.push_back(nlohmann::json::parse(line));
    j["iterations"] = std::move(trace);
    j["demonstrations"] = r.matched_demos;
    j["aborted"] = o.aborted;
    if (o.aborted) j["error"] = o.error;
    j["config"] = nlohmann::json::parse(config.echo_json());
    return j.dump(2) + "\n";
}

std::string sidecar_path(const std::string& out, const std::string& suffix) {
    std::string stem = out;
    auto slash = stem.find_last_of('/');
    auto dot = stem.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) stem.erase(dot);
    return stem + suffix;
}

int cmd_advise(const AdvisorConfig& config) {
    if (config.workload.empty()) throw ConfigError("advise needs --workload");
    auto backend = make_backend(config);
    auto llm = make_llm(config);
    Workload workload = load_workload(config.workload);
    std::optional<DemoPool> pool;
    if (!config.zero_shot) {
        if (config.demos.empty()) throw ConfigError("advise needs --demos (or --zero-shot)");
        pool = DemoPool::load(config.demos);
    }
    AdviseResult r = advise(*backend, *llm, workload, pool ? &*pool : nullptr, config);

    std::string report = advise_report_json(r, config);
    emit(config.out, report);
    if (!config.out.empty() && config.out != "-") {
        write_file(sidecar_path(config.out, ".sql"), render_actions(r.optimize.actions));
        write_file(sidecar_path(config.out, ".trace.jsonl"), trace_to_jsonl(r.optimize.trace));
        nlohmann::json metrics = {{"runtime_s", r.runtime_s}, {"iterations", r.optimize.trace.size()}};
        write_file(sidecar_path(config.out, ".metrics.json"), metrics.dump(2) + "\n");
    }
    std::cerr << "runtime " << r.runtime_s << " s, reduction "
              << relative_cost_reduction(r.optimize.baseline_cost, r.optimize.cost) << "\n";
    if (r.optimize.aborted) {
        std::cerr << "model error, best-so-far reported: " << r.optimize.error << "\n";
        return 4;
    }
    return 0;
}

// ---------------------------------------------------------------- eval

EvalResult evaluate_ddl(const WhatIfBackend& backend, const Workload& workload, const std::string& ddl_text,
                        double storage_pct) {
    EvalResult r;
    r.workload_name = workload.name;
    r.database_size_mb = backend.database_size_mb();
    r.budget_mb = budget_mb_for(backend, storage_pct);
    ParsedActions parsed = parse_actions(ddl_text, backend.catalog());
    r.parse_warnings = parsed.warnings;
    r.indexes = apply_actions(parsed.actions, {});

    r.baseline = backend.open_session()->estimate(workload);
    auto session = open_session_with(backend, r.indexes);
    r.current = session->estimate(workload);
    r.size_mb = session->total_size_mb();
    return r;
}

std::string eval_report_json(const EvalResult& r) {
    nlohmann::json j;
    j["workload"] = r.workload_name;
    j["database_size_mb"] = r.database_size_mb;
    j["budget_mb"] = r.budget_mb;
    j["size_mb"] = r.size_mb;
    j["within_budget"] = r.size_mb <= r.budget_mb;
    j["baseline_cost"] = r.baseline.total;
    j["final_cost"] = r.current.total;
    j["relative_reduction"] = relative_cost_reduction(r.baseline, r.current);
    j["per_query_cost"] = r.current.per_query_cost;
    j["used_indexes"] = r.current.used_indexes;
    j["indexes"] = set_to_json(r.indexes);
    j["parse_warnings"] = r.parse_warnings;
    return j.dump(2) + "\n";
}

int cmd_eval(const AdvisorConfig& config, const std::string& ddl_path) {
    if (config.workload.empty()) throw ConfigError("eval needs --workload");
    auto backend = make_backend(config);
    Workload workload = load_workload(config.workload);
    std::string ddl = ddl_path.empty() ? std::string{} : read_file(ddl_path);
    EvalResult r = evaluate_ddl(*backend, workload, ddl, config.storage_pct);
    emit(config.out, eval_report_json(r));
    return 0;
}

// ---------------------------------------------------------------- labels

WorkloadLabels collect_labels(const WhatIfBackend& backend, const Workload& workload, const std::vector<double>& grid,
                              std::size_t max_width) {
    WorkloadLabels out;
    out.workload_name = workload.name;
    WorkloadFeatures features = extract_workload_features(workload, backend.catalog(), backend.selectivity());
    CandidateSet candidates = generate_candidates(features, max_width);
    for (double b : grid) {
        out.budgets.push_back(b);
        out.labels.push_back(collect_default_label(backend, workload, candidates, grid, b));
    }
    return out;
}

std::string labels_json(const WorkloadLabels& w) {
    nlohmann::json j;
    j["workload"] = w.workload_name;
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < w.labels.size(); ++i) {
        const auto& l = w.labels[i];
        nlohmann::json e;
        e["budget"] = w.budgets[i];
        e["baseline_cost"] = l.baseline_cost;
        e["cost"] = l.cost;
        e["default_label"] = actions_to_json(l.actions);
        auto refined = nlohmann::json::array();
        for (std::size_t k = 0; k < l.pool.size(); ++k) {
            if (k == l.best_index || l.pool[k].indexes == l.best) continue;
            refined.push_back({{"origin", l.pool[k].origin},
                               {"cost", l.pool[k].cost},
                               {"initial_state", set_to_json(l.pool[k].indexes)},
                               {"actions", actions_to_json(make_refined_label(l.pool[k].indexes, l.best))}});
        }
        e["refined_labels"] = std::move(refined);
        arr.push_back(std::move(e));
    }
    j["labels"] = std::move(arr);
    return j.dump(2) + "\n";
}

int cmd_labels(const AdvisorConfig& config) {
    if (config.workload.empty()) throw ConfigError("labels needs --workload");
    auto backend = make_backend(config);
    Workload workload = load_workload(config.workload);
    emit(config.out, labels_json(collect_labels(*backend, workload, config.grid, config.max_width)));
    return 0;
}

// ---------------------------------------------------------------- pool and workload generation

int cmd_build_demos(const AdvisorConfig& config) {
    if (config.out.empty()) throw ConfigError("build-demos needs --out");
    auto backend = make_backend(config);
    auto llm = make_llm(config);
    PoolConfig pc;
    pc.queries_per_schema = config.queries_per_schema;
    pc.workloads = config.workloads;
    pc.workload_size_min = config.workload_size_min;
    pc.workload_size_max = config.workload_size_max;
    pc.budget_grid = config.grid;
    pc.seed = config.seed;
    pc.max_width = config.max_width;
    pc.filter = {config.similarity_threshold, config.timeout_factor};
    if (!config.templates.empty()) pc.benchmark_templates = load_workload(config.templates).queries;
    PoolBuildResult r = build_pool(*backend, *llm, pc);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    r.pool.save(config.out);
    std::cerr << r.pool.demonstrations.size() << " demonstrations written to " << config.out << "\n";
    return 0;
}

int cmd_gen_workload(const AdvisorConfig& config) {
    auto backend = make_backend(config);
    auto llm = make_llm(config);
    SynthesisOptions so;
    so.seed = config.seed;
    std::vector<std::string> templates;
    if (!config.templates.empty()) {
        templates = load_workload(config.templates).queries;
        so.example_queries = templates;
    }
    auto queries = synthesize_queries(*llm, backend->catalog(), config.count, so);
    FilterResult f =
        validate_and_filter(queries, *backend, templates, {config.similarity_threshold, config.timeout_factor});
    if (f.kept.empty()) throw NoQueriesParsed("no generated query survived validation");
    std::string text;
    for (const auto& q : f.kept) text += q + ";\n";
    emit(config.out, text);
    std::cerr << f.kept.size() << " queries kept (" << f.invalid << " invalid, " << f.similar << " similar, "
              << f.timed_out << " too expensive)\n";
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const LLMError*>(&e)) return 4;
    if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const EstimatorUnavailable*>(&e) ||
        dynamic_cast<const PredicateError*>(&e))
        return 3;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const UnknownColumn*>(&e) || dynamic_cast<const AmbiguousColumn*>(&e) ||
        dynamic_cast<const MatchEmpty*>(&e) || dynamic_cast<const NoQueriesParsed*>(&e) ||
        dynamic_cast<const NotFound*>(&e) || dynamic_cast<const DuplicateIndex*>(&e))
        return 2;
    return 1;
}

}  // namespace idxadvis
