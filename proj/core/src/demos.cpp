#include "idxadvis/demos.hpp"

#include "idxadvis/error.hpp"
#include "json_util.hpp"
#include "prompt_format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace idxadvis {

namespace {

void shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[gen() % i]);
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

// Nearest-center assignment; ties go to the lower center index.
std::size_t nearest(const std::vector<std::vector<double>>& centers, const std::vector<double>& x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        double d = squared_distance(centers[c], x);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                                        std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    std::vector<std::vector<double>> centers{points[gen() % points.size()]};
    while (centers.size() < k) {
        std::vector<double> d2(points.size());
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = squared_distance(points[i], centers[nearest(centers, points[i])]);
            total += d2[i];
        }
        if (total <= 0.0) break;
        double r = uniform() * total;
        std::size_t pick = points.size() - 1;
        for (std::size_t i = 0; i < points.size(); ++i) {
            r -= d2[i];
            if (r < 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(points[pick]);
    }
    std::vector<std::size_t> assign(points.size(), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t c = nearest(centers, points[i]);
            if (c != assign[i]) changed = true;
            assign[i] = c;
        }
        if (!changed) break;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            std::vector<double> sum(points.front().size(), 0.0);
            std::size_t n = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (assign[i] != c) continue;
                for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += points[i][j];
                ++n;
            }
            if (n == 0) continue;
            for (auto& s : sum) s /= static_cast<double>(n);
            centers[c] = std::move(sum);
        }
    }
    return centers;
}

nlohmann::json demo_to_json(const Demonstration& d) {
    auto meta = nlohmann::json::array();
    for (const auto& [f, n] : d.meta.pairs) meta.push_back({f, n});
    auto refined = nlohmann::json::array();
    for (const auto& r : d.refined_labels)
        refined.push_back({{"initial_state", set_to_json(r.initial_state)}, {"actions", actions_to_json(r.actions)}});
    nlohmann::json j;
    j["id"] = d.id;
    j["schema_id"] = d.schema_id;
    j["budget"] = d.budget;
    j["meta"] = std::move(meta);
    j["features"] = nlohmann::json::parse(d.features_text);
    j["default_label"] = actions_to_json(d.default_label);
    j["refined_labels"] = std::move(refined);
    return j;
}

Demonstration demo_from_json(const nlohmann::json& j) {
    Demonstration d;
    d.id = j.at("id").get<std::string>();
    d.schema_id = j.at("schema_id").get<std::string>();
    d.budget = j.value("budget", 0.0);
    for (const auto& p : j.at("meta")) d.meta.pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    d.features_text = j.at("features").dump(1);
    d.default_label = actions_from_json(j.at("default_label"));
    for (const auto& r : j.at("refined_labels"))
        d.refined_labels.push_back({set_from_json(r.at("initial_state")), actions_from_json(r.at("actions"))});
    for (const auto& a : d.default_label)
        if (a.kind != ActionKind::Create) throw ConfigError("demonstration " + d.id + ": default label has a DROP");
    return d;
}

std::vector<std::string> sql_tokens(const std::string& sql) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < sql.size()) {
        unsigned char c = static_cast<unsigned char>(sql[i]);
        if (std::isspace(c)) {
            ++i;
        } else if (c == '\'') {
            std::size_t j = i + 1;
            while (j < sql.size()) {
                if (sql[j] == '\'' && j + 1 < sql.size() && sql[j + 1] == '\'') {
                    j += 2;
                    continue;
                }
                if (sql[j] == '\'') break;
                ++j;
            }
            out.emplace_back("?");
            i = j + 1;
        } else if (std::isdigit(c)) {
            std::size_t j = i;
            while (j < sql.size() && (std::isdigit(static_cast<unsigned char>(sql[j])) || sql[j] == '.')) ++j;
            out.emplace_back("?");
            i = j;
        } else if (std::isalpha(c) || c == '_') {
            std::size_t j = i;
            while (j < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_')) ++j;
            out.push_back(to_lower(sql.substr(i, j - i)));
            i = j;
        } else {
            out.emplace_back(1, static_cast<char>(c));
            ++i;
        }
    }
    return out;
}

std::string key_suffix(const std::string& column) {
    auto us = column.find('_');
    return us == std::string::npos ? column : column.substr(us + 1);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::pair<ColumnRef, ColumnRef>> join_keys(const Catalog& catalog) {
    std::vector<std::pair<ColumnRef, ColumnRef>> out;
    const auto& tables = catalog.tables();
    for (std::size_t a = 0; a < tables.size(); ++a)
        for (std::size_t b = a + 1; b < tables.size(); ++b)
            for (const auto& ca : tables[a].columns)
                for (const auto& cb : tables[b].columns) {
                    std::string sa = key_suffix(ca.name);
                    if (sa != key_suffix(cb.name)) continue;
                    if (!ends_with(sa, "key") && !ends_with(sa, "id")) continue;
                    out.push_back({{tables[a].name, ca.name}, {tables[b].name, cb.name}});
                }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- meta-feature

std::vector<double> MetaFeature::flatten() const {
    std::vector<double> v;
    v.reserve(pairs.size() * 2);
    for (const auto& [f, n] : pairs) {
        v.push_back(f);
        v.push_back(n);
    }
    return v;
}

MetaFeature build_meta_feature(const WorkloadFeatures& features, std::size_t k) {
    if (k == 0) throw ConfigError("meta-feature length must be >= 1");
    std::map<ColumnRef, std::uint64_t> ndv;
    for (const auto& cols : features.per_query_columns)
        for (const auto& c : cols) ndv[{c.table, c.column}] = c.ndv;

    std::vector<std::pair<double, double>> raw;
    double max_f = 0.0, max_n = 0.0;
    for (const auto& [col, f] : column_frequencies(features)) {
        double n = ndv.count(col) ? static_cast<double>(ndv[col]) : 0.0;
        raw.emplace_back(static_cast<double>(f), n);
        max_f = std::max(max_f, static_cast<double>(f));
        max_n = std::max(max_n, n);
    }
    for (auto& [f, n] : raw) {
        f = max_f > 0 ? f / max_f : 0.0;
        n = max_n > 0 ? n / max_n : 0.0;
    }
    std::sort(raw.begin(), raw.end(), std::greater<>());
    raw.resize(k, {0.0, 0.0});
    return MetaFeature{std::move(raw)};
}

double cosine_similarity(const MetaFeature& a, const MetaFeature& b) {
    auto x = a.flatten();
    auto y = b.flatten();
    std::size_t n = std::max(x.size(), y.size());
    x.resize(n, 0.0);
    y.resize(n, 0.0);
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx <= 0.0 || ny <= 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

// ---------------------------------------------------------------- pool IO

std::string DemoPool::to_jsonl() const {
    std::string out;
    for (const auto& d : demonstrations) out += demo_to_json(d).dump() + "\n";
    return out;
}

DemoPool DemoPool::from_jsonl(const std::string& text) {
    DemoPool pool;
    std::set<std::string> ids;
    std::istringstream is(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(is, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            Demonstration d = demo_from_json(nlohmann::json::parse(line));
            if (!ids.insert(d.id).second) throw ConfigError("duplicate demonstration id '" + d.id + "'");
            pool.demonstrations.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("demonstration pool line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pool;
}

DemoPool DemoPool::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read demonstration pool '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str());
}

void DemoPool::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write demonstration pool '" + path + "'");
    out << to_jsonl();
}

// ---------------------------------------------------------------- matching

MatchStrategy parse_match_strategy(const std::string& name) {
    std::string n = to_lower(name);
    if (n == "cosine") return MatchStrategy::Cosine;
    if (n == "random") return MatchStrategy::Random;
    if (n == "kmeans" || n == "k-means") return MatchStrategy::KMeans;
    throw ConfigError("unknown match strategy '" + name + "'");
}

std::string_view to_string(MatchStrategy strategy) {
    switch (strategy) {
        case MatchStrategy::Cosine: return "cosine";
        case MatchStrategy::Random: return "random";
        case MatchStrategy::KMeans: return "kmeans";
    }
    return "cosine";
}

std::vector<Demonstration> match_demonstrations(const DemoPool& pool, const MetaFeature& meta,
                                                const MatchOptions& options) {
    std::vector<const Demonstration*> eligible;
    for (const auto& d : pool.demonstrations)
        if (!options.exclude_schema || d.schema_id != *options.exclude_schema) eligible.push_back(&d);
    if (eligible.empty()) throw MatchEmpty("no demonstrations left to match against");

    auto by_cosine = [&](std::vector<const Demonstration*> v) {
        std::vector<std::pair<double, const Demonstration*>> scored;
        for (const auto* d : v) scored.emplace_back(cosine_similarity(meta, d->meta), d);
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second->id < b.second->id;
        });
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = scored[i].second;
        return v;
    };

    std::vector<const Demonstration*> ranked;
    switch (options.strategy) {
        case MatchStrategy::Cosine:
            ranked = by_cosine(eligible);
            break;
        case MatchStrategy::Random: {
            std::vector<std::size_t> order(eligible.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            shuffle(order, options.seed);
            for (auto i : order) ranked.push_back(eligible[i]);
            break;
        }
        case MatchStrategy::KMeans: {
            std::vector<std::vector<double>> points;
            std::size_t dim = meta.pairs.size() * 2;
            for (const auto* d : eligible) {
                auto p = d->meta.flatten();
                dim = std::max(dim, p.size());
                points.push_back(std::move(p));
            }
            for (auto& p : points) p.resize(dim, 0.0);
            auto q = meta.flatten();
            q.resize(dim, 0.0);
            std::size_t k = std::clamp<std::size_t>(options.kmeans_k, 1, points.size());
            auto centers = kmeans(points, k, options.seed);
            std::size_t target = nearest(centers, q);
            std::vector<std::size_t> members;
            std::vector<const Demonstration*> rest;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (nearest(centers, points[i]) == target)
                    members.push_back(i);
                else
                    rest.push_back(eligible[i]);
            }
            shuffle(members, options.seed ^ 0x5bd1e995ULL);
            for (auto i : members) ranked.push_back(eligible[i]);
            for (const auto* d : by_cosine(rest)) ranked.push_back(d);
            break;
        }
    }
    std::vector<Demonstration> out;
    out.reserve(ranked.size());
    for (const auto* d : ranked) out.push_back(*d);
    return out;
}

double jaccard(const IndexSet& a, const IndexSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& d : a) inter += b.count(d);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

RefinedLabel select_label_with_state(const Demonstration& demo, const IndexSet& existing) {
    if (existing.empty() || demo.refined_labels.empty()) return {{}, demo.default_label};
    const RefinedLabel* best = nullptr;
    double best_j = -1.0;
    for (const auto& r : demo.refined_labels) {
        double j = jaccard(r.initial_state, existing);
        if (j > best_j || (j == best_j && r.actions.size() < best->actions.size())) {
            best = &r;
            best_j = j;
        }
    }
    return *best;
}

std::vector<IndexAction> select_label(const Demonstration& demo, const IndexSet& existing) {
    return select_label_with_state(demo, existing).actions;
}

// ---------------------------------------------------------------- synthesis

ChatRequest build_synthesis_prompt(const Catalog& catalog, std::size_t n, const SynthesisOptions& options) {
    ChatRequest req;
    req.n_samples = 1;
    req.temperature = 0.8;
    req.system_text = std::string("You are an expert in writing analytical SQL. ") + fmt::kGenerationTask +
                      ". Write diverse, valid SELECT queries for the given schema: combine selective filters, "
                      "joins along the join keys, GROUP BY and ORDER BY. Use only the listed tables and columns. "
                      "Return the queries in one ```sql code block, each terminated by a semicolon.";
    std::ostringstream os;
    os << fmt::kSchema << "\n";
    for (const auto& t : catalog.tables()) {
        os << "- " << t.name << " (rows=" << t.rows << "):";
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            os << (i ? ", " : " ") << t.columns[i].name << " " << to_string(t.columns[i].type)
               << " ndv=" << t.columns[i].ndv;
        os << "\n";
    }
    os << fmt::kJoinKeys << "\n";
    auto keys = join_keys(catalog);
    if (keys.empty()) os << "none\n";
    for (const auto& [a, b] : keys) os << "- " << a.first << "." << a.second << " = " << b.first << "." << b.second << "\n";
    os << fmt::kValues << "\n"
       << "- integer columns hold values 1..ndv\n"
       << "- date columns fall between 1992-01-01 and 1998-12-31\n"
       << "- text columns hold values like 'value_<k>'\n";
    os << fmt::kExamples << "\n";
    if (options.example_queries.empty()) os << "none\n";
    for (const auto& q : options.example_queries) os << "```sql\n" << q << ";\n```\n";
    os << fmt::kRequest << "\n";
    os << "Dialect: " << options.dialect << "\n";
    if (!options.tables.empty()) {
        os << "Focus tables: ";
        for (std::size_t i = 0; i < options.tables.size(); ++i) os << (i ? ", " : "") << options.tables[i];
        os << "\n";
    }
    os << "Generate " << n << " queries. Random seed hint: " << options.seed << "\n";
    req.user_text = os.str();
    return req;
}

std::vector<std::string> extract_sql_blocks(const std::string& completion) {
    std::vector<std::string> bodies;
    for (std::size_t at = completion.find("```"); at != std::string::npos;) {
        std::size_t body = completion.find('\n', at);
        if (body == std::string::npos) break;
        std::size_t close = completion.find("```", body);
        if (close == std::string::npos) break;
        bodies.push_back(completion.substr(body + 1, close - body - 1));
        at = completion.find("```", close + 3);
    }
    std::vector<std::string> out;
    for (const auto& body : bodies)
        for (auto& s : split_sql_statements(body)) {
            std::string lower = to_lower(s.substr(0, 16));
            if (lower.rfind("select", 0) == 0 || lower.rfind("with", 0) == 0 || lower.rfind("(", 0) == 0)
                out.push_back(std::move(s));
        }
    if (out.empty()) throw NoQueriesParsed("completion contains no fenced SQL query");
    return out;
}

std::vector<std::string> synthesize_queries(LLMBackend& llm, const Catalog& catalog, std::size_t n,
                                            const SynthesisOptions& options) {
    ChatRequest req = build_synthesis_prompt(catalog, n, options);
    auto completions = chat(llm, req);
    std::vector<std::string> out;
    for (const auto& c : completions) {
        std::vector<std::string> qs;
        try {
            qs = extract_sql_blocks(c);
        } catch (const NoQueriesParsed&) {
            continue;
        }
        for (auto& q : qs)
            if (out.size() < n) out.push_back(std::move(q));
    }
    if (out.empty()) throw NoQueriesParsed("the model returned no SQL queries");
    return out;
}

// ---------------------------------------------------------------- filtering

double query_similarity(const std::string& a, const std::string& b) {
    auto ta = sql_tokens(a);
    auto tb = sql_tokens(b);
    std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

FilterResult validate_and_filter(const std::vector<std::string>& queries, const WhatIfBackend& backend,
                                 const std::vector<std::string>& benchmark_templates, const FilterOptions& options) {
    FilterResult result;
    auto session = backend.open_session();
    std::vector<std::pair<std::string, double>> valid;
    for (const auto& q : queries) {
        double cost = 0.0;
        try {
            cost = session->estimate(Workload{"probe", {q}}).total;
        } catch (const Error&) {
            ++result.invalid;
            continue;
        }
        bool similar = std::any_of(benchmark_templates.begin(), benchmark_templates.end(), [&](const std::string& t) {
            return query_similarity(q, t) >= options.similarity_threshold;
        });
        if (similar) {
            ++result.similar;
            continue;
        }
        valid.emplace_back(q, cost);
    }
    if (valid.empty()) return result;
    std::vector<double> costs;
    for (const auto& [q, c] : valid) costs.push_back(c);
    std::sort(costs.begin(), costs.end());
    std::size_t mid = costs.size() / 2;
    double median = costs.size() % 2 ? costs[mid] : 0.5 * (costs[mid - 1] + costs[mid]);
    for (auto& [q, c] : valid) {
        if (c > options.timeout_factor * median) {
            ++result.timed_out;
            continue;
        }
        result.kept.push_back(std::move(q));
    }
    return result;
}

// ---------------------------------------------------------------- pool construction

Demonstration make_demonstration(std::string id, const Catalog& catalog, const WorkloadFeatures& features,
                                 const DefaultLabel& label, double budget) {
    Demonstration d;
    d.id = std::move(id);
    d.schema_id = catalog.schema_id();
    d.meta = build_meta_feature(features);
    d.features_text = features.to_json_text();
    d.default_label = label.actions;
    d.budget = budget;
    for (std::size_t i = 0; i < label.pool.size(); ++i) {
        if (i == label.best_index || label.pool[i].indexes.empty()) continue;
        if (label.pool[i].indexes == label.best) continue;
        d.refined_labels.push_back({label.pool[i].indexes, make_refined_label(label.pool[i].indexes, label.best)});
    }
    return d;
}

PoolBuildResult build_pool(const WhatIfBackend& backend, LLMBackend& llm, const PoolConfig& config) {
    PoolBuildResult result;
    const Catalog& catalog = backend.catalog();
    std::mt19937_64 gen(config.seed);
    std::vector<std::string> table_names;
    for (const auto& t : catalog.tables()) table_names.push_back(t.name);
    if (table_names.empty()) throw ConfigError("catalog has no tables");

    std::vector<std::string> generated;
    std::set<std::string> distinct;
    std::size_t batches = (config.queries_per_schema + 9) / 10;
    for (std::size_t round = 0; generated.size() < config.queries_per_schema && round < 4 * batches + 2; ++round) {
        SynthesisOptions opts;
        opts.seed = config.seed * 1000003ULL + round;
        std::size_t n_tables = 1 + gen() % std::min<std::size_t>(3, table_names.size());
        std::vector<std::size_t> idx(table_names.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle(idx, gen());
        for (std::size_t i = 0; i < n_tables; ++i) opts.tables.push_back(table_names[idx[i]]);
        std::sort(opts.tables.begin(), opts.tables.end());
        if (!config.benchmark_templates.empty())
            opts.example_queries.push_back(config.benchmark_templates[gen() % config.benchmark_templates.size()]);
        std::size_t want = std::min<std::size_t>(10, config.queries_per_schema - generated.size());
        try {
            for (auto& q : synthesize_queries(llm, catalog, want, opts))
                if (distinct.insert(q).second) generated.push_back(std::move(q));
        } catch (const NoQueriesParsed& e) {
            result.warnings.push_back(std::string("generation round produced no queries: ") + e.what());
        }
    }

    FilterResult filtered = validate_and_filter(generated, backend, config.benchmark_templates, config.filter);
    result.queries = filtered.kept;
    if (filtered.invalid + filtered.similar + filtered.timed_out > 0)
        result.warnings.push_back("filtered out " + std::to_string(filtered.invalid) + " invalid, " +
                                  std::to_string(filtered.similar) + " benchmark-like and " +
                                  std::to_string(filtered.timed_out) + " too expensive queries");
    if (result.queries.empty()) {
        result.warnings.push_back("no generated query survived filtering; the pool is empty");
        return result;
    }

    std::size_t lo = std::max<std::size_t>(1, std::min(config.workload_size_min, config.workload_size_max));
    std::size_t hi = std::max(lo, config.workload_size_max);
    for (std::size_t w = 0; w < config.workloads; ++w) {
        std::size_t size = std::min(lo + gen() % (hi - lo + 1), result.queries.size());
        std::vector<std::size_t> idx(result.queries.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle(idx, gen());
        Workload wl;
        wl.name = catalog.schema_id() + "-w" + std::to_string(w);
        for (std::size_t i = 0; i < size; ++i) wl.queries.push_back(result.queries[idx[i]]);

        WorkloadFeatures features = extract_workload_features(wl, catalog, backend.selectivity());
        CandidateSet candidates = generate_candidates(features, config.max_width);
        for (double b : config.budget_grid) {
            DefaultLabel label = collect_default_label(backend, wl, candidates, config.budget_grid, b);
            std::string id = wl.name + "-b" + std::to_string(static_cast<int>(std::lround(b * 100)));
            result.pool.demonstrations.push_back(make_demonstration(id, catalog, features, label, b));
        }
    }
    return result;
}

}  // namespace idxadvis
