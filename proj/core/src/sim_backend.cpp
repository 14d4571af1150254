#include "idxadvis/sim_backend.hpp"

#include "idxadvis/error.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace idxadvis {

namespace {

constexpr double kJoinFactor = 0.8;
constexpr double kSortFactor = 0.9;

class SimulatedSession final : public WhatIfSession {
public:
    explicit SimulatedSession(const SimulatedBackend& backend) : backend_(backend) {}

    HypoIndex create(const IndexDef& def) override {
        validate(def, backend_.catalog());
        if (contains(def)) throw DuplicateIndex("index already exists: " + def.name());
        HypoIndex h{def, backend_.index_size_mb(def), "sim:" + std::to_string(next_id_++)};
        existing_.push_back(h);
        return h;
    }

    void drop(const IndexDef& def) override {
        auto it = std::find_if(existing_.begin(), existing_.end(),
                               [&](const HypoIndex& h) { return h.def == def; });
        if (it == existing_.end()) throw NotFound("no such hypothetical index: " + def.name());
        existing_.erase(it);
    }

    CostReport estimate(const Workload& workload) override {
        std::vector<IndexDef> defs;
        defs.reserve(existing_.size());
        for (const auto& h : existing_) defs.push_back(h.def);
        CostReport report;
        report.per_query_cost.reserve(workload.queries.size());
        for (const auto& q : workload.queries) {
            auto analyzed = backend_.analyze(q);
            double c = backend_.query_cost(*analyzed, defs, &report.used_indexes);
            report.per_query_cost.push_back(c);
            report.total += c;
        }
        return report;
    }

    double size_estimate_mb(const IndexDef& def) override {
        validate(def, backend_.catalog());
        return backend_.index_size_mb(def);
    }

private:
    const SimulatedBackend& backend_;
    std::uint64_t next_id_ = 1;
};

}  // namespace

SimulatedBackend::SimulatedBackend(Catalog catalog)
    : catalog_(std::move(catalog)), selectivity_(catalog_) {}

std::unique_ptr<WhatIfSession> SimulatedBackend::open_session() const {
    return std::make_unique<SimulatedSession>(*this);
}

double SimulatedBackend::index_size_mb(const IndexDef& def) const {
    const TableInfo* t = catalog_.find_table(def.table);
    if (!t) throw UnknownColumn("unknown table '" + def.table + "'");
    double width = kRowOverheadBytes;
    for (const auto& c : def.columns) {
        const ColumnInfo* info = t->find_column(c);
        if (!info) throw UnknownColumn("unknown column '" + def.table + "." + c + "'");
        width += type_width(info->type);
    }
    return static_cast<double>(t->rows) * width / kBytesPerMb;
}

std::shared_ptr<const AnalyzedQuery> SimulatedBackend::analyze(const std::string& sql) const {
    {
        std::shared_lock lock(cache_mutex_);
        if (auto it = cache_.find(sql); it != cache_.end()) return it->second;
    }
    QueryShape shape = parse_query(sql, catalog_);
    auto q = std::make_shared<AnalyzedQuery>();
    for (const auto& table : shape.tables) {
        TableAccess access;
        access.table = table;
        access.rows = static_cast<double>(catalog_.find_table(table)->rows);
        for (const auto& p : shape.where_predicates) {
            if (p.table != table || !p.indexable) continue;
            double s = selectivity_.estimate(p);
            auto [it, inserted] = access.predicate_sel.emplace(p.columns.front(), s);
            if (!inserted) it->second *= s;
        }
        for (const auto& [t, c] : shape.join_columns)
            if (t == table) access.join_columns.push_back(c);
        for (const auto& [t, c] : shape.group_by)
            if (t == table) access.group_by.push_back(c);
        for (const auto& [t, c] : shape.order_by)
            if (t == table) access.order_by.push_back(c);
        q->tables.push_back(std::move(access));
    }
    std::unique_lock lock(cache_mutex_);
    auto [it, inserted] = cache_.emplace(sql, std::move(q));
    return it->second;
}

double SimulatedBackend::query_cost(const AnalyzedQuery& query, const std::vector<IndexDef>& indexes,
                                    std::set<std::string>* used) const {
    auto is_prefix = [](const std::vector<std::string>& cols, const IndexDef& idx) {
        return !cols.empty() && cols.size() <= idx.columns.size() &&
               std::equal(cols.begin(), cols.end(), idx.columns.begin());
    };

    double total = 0.0;
    for (const auto& t : query.tables) {
        double access = t.rows;
        const IndexDef* chosen = nullptr;
        const IndexDef* join_credit = nullptr;
        const IndexDef* sort_credit = nullptr;
        for (const auto& idx : indexes) {
            if (idx.table != t.table) continue;
            if (t.predicate_sel.count(idx.columns.front())) {
                double sel = 1.0;
                for (const auto& c : idx.columns) {
                    auto it = t.predicate_sel.find(c);
                    if (it == t.predicate_sel.end()) break;
                    sel *= it->second;
                }
                double c = 0.5 * t.rows * sel + std::log2(t.rows + 2.0);
                if (c < access || (chosen && c == access && idx < *chosen)) {
                    access = c;
                    chosen = &idx;
                }
            }
            if (!join_credit && std::find(t.join_columns.begin(), t.join_columns.end(),
                                          idx.columns.front()) != t.join_columns.end())
                join_credit = &idx;
            if (!sort_credit && (is_prefix(t.group_by, idx) || is_prefix(t.order_by, idx)))
                sort_credit = &idx;
        }
        if (join_credit) access *= kJoinFactor;
        if (sort_credit) access *= kSortFactor;
        access = std::max(access, 1.0);
        total += access;
        if (used) {
            for (const IndexDef* d : {chosen, join_credit, sort_credit})
                if (d) used->insert(d->name());
        }
    }
    return total;
}

}  // namespace idxadvis
