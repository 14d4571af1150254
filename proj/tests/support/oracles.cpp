#include "oracles.hpp"

#include "idxadvis/error.hpp"
#include "idxadvis/llm.hpp"
#include "idxadvis/sim_backend.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

namespace oracle {

std::string data_path(const std::string& name) {
    return std::string(IDXADVIS_TEST_DATA) + "/" + name;
}

// ---------------------------------------------------------------- cost model

namespace {

double width_bytes(DataType t) {
    switch (t) {
        case DataType::Int: return 4;
        case DataType::BigInt: return 8;
        case DataType::Date: return 4;
        case DataType::Decimal: return 8;
        case DataType::Text: return 16;
    }
    return 16;
}

bool leads_with(const IndexDef& idx, const std::vector<std::string>& cols) {
    if (cols.empty() || cols.size() > idx.columns.size()) return false;
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (idx.columns[i] != cols[i]) return false;
    return true;
}

}  // namespace

double index_size_mb(const Catalog& catalog, const IndexDef& def) {
    const TableInfo* t = catalog.find_table(def.table);
    double bytes = 8;
    for (const auto& c : def.columns) bytes += width_bytes(t->find_column(c)->type);
    return static_cast<double>(t->rows) * bytes / (1024.0 * 1024.0);
}

double query_cost(const Catalog& catalog, const QueryShape& shape, const SelectivityEstimator& sel,
                  const std::vector<IndexDef>& indexes) {
    double total = 0.0;
    for (const auto& table : shape.tables) {
        double rows = static_cast<double>(catalog.find_table(table)->rows);
        // column -> selectivity of the plain single-column predicates on it
        std::map<std::string, double> p;
        for (const auto& w : shape.where_predicates) {
            if (w.table != table || !w.indexable || w.columns.size() != 1) continue;
            double s = sel.estimate(w);
            p[w.columns[0]] = p.count(w.columns[0]) ? p[w.columns[0]] * s : s;
        }
        std::vector<std::string> joins, group, order;
        for (const auto& [t, c] : shape.join_columns)
            if (t == table) joins.push_back(c);
        for (const auto& [t, c] : shape.group_by)
            if (t == table) group.push_back(c);
        for (const auto& [t, c] : shape.order_by)
            if (t == table) order.push_back(c);

        double access = rows;
        bool join_hit = false, sort_hit = false;
        for (const auto& idx : indexes) {
            if (idx.table != table) continue;
            if (p.count(idx.columns[0])) {
                double matched = 1.0;
                for (const auto& c : idx.columns) {
                    if (!p.count(c)) break;
                    matched *= p[c];
                }
                // an index scan slower than the table scan is never chosen
                access = std::min(access, 0.5 * rows * matched + std::log2(rows + 2));
            }
            if (std::count(joins.begin(), joins.end(), idx.columns[0])) join_hit = true;
            if (leads_with(idx, group) || leads_with(idx, order)) sort_hit = true;
        }
        if (join_hit) access *= 0.8;
        if (sort_hit) access *= 0.9;
        total += std::max(1.0, access);
    }
    return total;
}

double workload_cost(const Catalog& catalog, const Workload& workload, const std::vector<IndexDef>& indexes) {
    SimulatedSelectivity sel(catalog);
    double total = 0.0;
    for (const auto& q : workload.queries) total += query_cost(catalog, parse_query(q, catalog), sel, indexes);
    return total;
}

// ---------------------------------------------------------------- voting

namespace {

struct Def {
    std::string table;
    std::vector<std::string> cols;
    std::string name() const {
        std::string n = table;
        for (const auto& c : cols) n += "_" + c;
        return n + "_idx";
    }
    bool operator<(const Def& o) const { return std::tie(table, cols) < std::tie(o.table, o.cols); }
};

bool strict_prefix(const Def& a, const Def& b) {
    if (a.table != b.table || a.cols.size() >= b.cols.size()) return false;
    for (std::size_t i = 0; i < a.cols.size(); ++i)
        if (a.cols[i] != b.cols[i]) return false;
    return true;
}

}  // namespace

std::vector<IndexAction> reference_vote(const std::vector<std::vector<IndexAction>>& samples) {
    std::map<Def, int> creates, drops;
    for (const auto& sample : samples) {
        std::set<Def> seen_c, seen_d;
        for (const auto& a : sample) {
            Def d{a.def.table, a.def.columns};
            (a.kind == ActionKind::Create ? seen_c : seen_d).insert(d);
        }
        for (const auto& d : seen_c) ++creates[d];
        for (const auto& d : seen_d) ++drops[d];
    }

    std::vector<IndexAction> out;
    // drops: more than one recommendation
    for (const auto& [d, n] : drops)
        if (n > 1) out.push_back(IndexAction::drop(IndexDef{d.table, d.cols}));

    // creates: all single-column ones, multi-column ones recommended more than once
    std::map<Def, int> kept;
    for (const auto& [d, n] : creates)
        if (d.cols.size() == 1 || n > 1) kept[d] = n;

    // fold prefixes into their extensions until no prefix pair remains
    for (;;) {
        std::vector<std::pair<Def, Def>> pairs;
        for (const auto& [a, na] : kept)
            for (const auto& [b, nb] : kept)
                if (strict_prefix(a, b)) pairs.emplace_back(a, b);
        if (pairs.empty()) break;
        auto key = [&](const std::pair<Def, Def>& pr) {
            return std::make_tuple(pr.first.cols.size(), pr.first.name(), -kept[pr.second], pr.second.cols.size(),
                                   pr.second.name());
        };
        auto best = *std::min_element(pairs.begin(), pairs.end(),
                                      [&](const auto& x, const auto& y) { return key(x) < key(y); });
        kept[best.second] += kept[best.first];
        kept.erase(best.first);
    }

    std::vector<std::pair<Def, int>> ranked(kept.begin(), kept.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        return std::make_tuple(-x.second, x.first.cols.size(), x.first.name()) <
               std::make_tuple(-y.second, y.first.cols.size(), y.first.name());
    });
    for (const auto& [d, n] : ranked) out.push_back(IndexAction::create(IndexDef{d.table, d.cols}));
    return out;
}

bool has_prefix_pair(const std::vector<IndexAction>& actions) {
    for (const auto& a : actions)
        for (const auto& b : actions)
            if (a.kind == ActionKind::Create && b.kind == ActionKind::Create &&
                strict_prefix(Def{a.def.table, a.def.columns}, Def{b.def.table, b.def.columns}))
                return true;
    return false;
}

// ---------------------------------------------------------------- exhaustive search

Optimum exhaustive_optimum(const WhatIfBackend& backend, const Workload& workload,
                           const std::vector<IndexDef>& candidates, double budget_mb) {
    if (candidates.size() > 16) throw std::invalid_argument("too many candidates to enumerate");
    auto probe = backend.open_session();
    std::vector<double> sizes;
    for (const auto& c : candidates) sizes.push_back(probe->size_estimate_mb(c));

    Optimum best;
    best.cost = backend.open_session()->estimate(workload).total;
    for (std::uint32_t mask = 1; mask < (1u << candidates.size()); ++mask) {
        IndexSet set;
        double size = 0.0;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (mask & (1u << i)) {
                set.insert(candidates[i]);
                size += sizes[i];
            }
        if (size > budget_mb) continue;
        double cost = open_session_with(backend, set)->estimate(workload).total;
        if (cost < best.cost) best = {set, cost, size};
    }
    return best;
}

// ---------------------------------------------------------------- micro instances

namespace {

std::string literal_for(DataType t, std::mt19937_64& gen) {
    switch (t) {
        case DataType::Date: return "DATE '2024-0" + std::to_string(1 + gen() % 9) + "-1" + std::to_string(gen() % 9) + "'";
        case DataType::Text: return "'v" + std::to_string(gen() % 100) + "'";
        case DataType::Decimal: return std::to_string(gen() % 1000) + ".5";
        default: return std::to_string(gen() % 1000);
    }
}

std::string predicate_for(const std::string& col, DataType t, std::mt19937_64& gen) {
    switch (gen() % 4) {
        case 0: return col + " = " + literal_for(t, gen);
        case 1: return col + " > " + literal_for(t, gen);
        case 2: return col + " BETWEEN " + literal_for(t, gen) + " AND " + literal_for(t, gen);
        default:
            return col + " IN (" + literal_for(t, gen) + ", " + literal_for(t, gen) + ", " + literal_for(t, gen) +
                   ")";
    }
}

MicroInstance try_micro(std::uint64_t seed) {
    std::mt19937_64 gen(seed * 7919 + 17);
    const std::vector<DataType> types{DataType::Int, DataType::BigInt, DataType::Date, DataType::Decimal,
                                      DataType::Text};
    std::size_t n_tables = 2 + gen() % 2;
    std::vector<TableInfo> tables;
    for (std::size_t i = 0; i < n_tables; ++i) {
        TableInfo t;
        t.name = std::string(1, static_cast<char>('a' + i)) + "tab";
        std::uint64_t rows_choices[] = {2000, 50000, 400000, 3000000};
        t.rows = rows_choices[gen() % 4];
        std::string p(1, static_cast<char>('a' + i));
        t.columns.push_back({p + "_id", DataType::Int, t.rows});
        t.columns.push_back({p + "_ref", DataType::Int, std::max<std::uint64_t>(1, t.rows / (2 + gen() % 50))});
        for (int k = 0; k < 3; ++k) {
            DataType type = types[gen() % types.size()];
            std::uint64_t ndv = std::max<std::uint64_t>(2, t.rows / (1 + gen() % 2000));
            t.columns.push_back({p + "_c" + std::to_string(k), type, std::min(ndv, t.rows)});
        }
        tables.push_back(std::move(t));
    }
    MicroInstance m;
    m.seed = seed;
    m.catalog = Catalog(tables, "micro" + std::to_string(seed));
    m.workload.name = "micro-" + std::to_string(seed);

    std::size_t n_queries = 2 + gen() % 3;
    for (std::size_t q = 0; q < n_queries; ++q) {
        const TableInfo& t = tables[gen() % tables.size()];
        const ColumnInfo& c1 = t.columns[2 + gen() % 3];
        std::string sql;
        if (gen() % 3 == 0) {
            const TableInfo& u = tables[(&t - tables.data() + 1) % tables.size()];
            sql = "SELECT count(*) FROM " + t.name + " JOIN " + u.name + " ON " + t.columns[1].name + " = " +
                  u.columns[0].name + " WHERE " + predicate_for(c1.name, c1.type, gen);
        } else {
            sql = "SELECT * FROM " + t.name + " WHERE " + predicate_for(c1.name, c1.type, gen);
            if (gen() % 2) {
                const ColumnInfo& c2 = t.columns[gen() % t.columns.size()];
                if (c2.name != c1.name) sql += " AND " + predicate_for(c2.name, c2.type, gen);
            }
            if (gen() % 3 == 0) sql += " ORDER BY " + c1.name;
        }
        m.workload.queries.push_back(sql);
    }
    const double pcts[] = {0.02, 0.04, 0.08, 0.15, 0.3};
    m.storage_pct = pcts[gen() % 5];
    return m;
}

}  // namespace

MicroInstance make_micro_instance(std::uint64_t seed) {
    // resample until the candidate set is small enough to enumerate
    for (std::uint64_t attempt = 0;; ++attempt) {
        MicroInstance m = try_micro(seed * 1000 + attempt);
        SimulatedSelectivity sel(m.catalog);
        auto f = extract_workload_features(m.workload, m.catalog, sel);
        auto n = generate_candidates(f, 2).candidates.size();
        if (n >= 2 && n <= 6) {
            m.seed = seed;
            return m;
        }
    }
}

// ---------------------------------------------------------------- regression suite

std::vector<SuiteEntry> regression_suite() {
    auto shop = std::make_shared<const Catalog>(Catalog::load(data_path("shop_catalog.json")));
    auto tpch = std::make_shared<const Catalog>(Catalog::load(data_path("tpch_catalog.json")));
    std::vector<SuiteEntry> out;
    for (const char* w : {"shop_w1", "shop_w2", "shop_w3", "shop_w4"}) {
        Workload wl = load_workload(data_path(std::string("regression/") + w + ".sql"));
        wl.name = w;
        out.push_back({w, shop, wl});
    }
    Workload t = load_workload(data_path("tpch19.sql"));
    t.name = "tpch19";
    out.push_back({"tpch19", tpch, t});
    return out;
}

DemoPool mock_pool(const Catalog& catalog, std::uint64_t seed, std::size_t workloads) {
    SimulatedBackend backend(catalog);
    MockLLM llm(seed);
    PoolConfig pc;
    pc.seed = seed;
    pc.workloads = workloads;
    pc.queries_per_schema = 24;
    pc.budget_grid = {0.1, 0.2, 0.3};
    return build_pool(backend, llm, pc).pool;
}

}  // namespace oracle
