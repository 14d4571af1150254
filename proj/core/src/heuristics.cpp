#include "idxadvis/heuristics.hpp"

#include "idxadvis/error.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>

namespace idxadvis {

namespace {

bool improves(double before, double after) { return after < before - 1e-9 * std::max(1.0, before); }

void add_candidate(CandidateSet& set, IndexDef def, Clause clause) {
    if (set.provenance.emplace(def, clause).second) set.candidates.push_back(std::move(def));
}

struct ClauseColumns {
    std::vector<std::pair<ColumnRef, Clause>> ordered;  // first-appearance order, distinct
    std::set<ColumnRef> leads;                          // WHERE or JOIN

    void add(const ColumnRef& c, Clause clause) {
        bool seen = std::any_of(ordered.begin(), ordered.end(),
                                [&](const auto& e) { return e.first == c; });
        if (!seen) ordered.emplace_back(c, clause);
        if (clause == Clause::Where || clause == Clause::Join) leads.insert(c);
    }
};

ClauseColumns clause_columns(const QueryShape& shape) {
    ClauseColumns cc;
    for (const auto& p : shape.where_predicates)
        for (const auto& c : p.columns) cc.add({p.table, c}, Clause::Where);
    for (const auto& c : shape.join_columns) cc.add(c, Clause::Join);
    for (const auto& c : shape.group_by) cc.add(c, Clause::GroupBy);
    for (const auto& c : shape.order_by) cc.add(c, Clause::OrderBy);
    return cc;
}

double workload_cost(WhatIfSession& session, const Workload& workload) {
    return session.estimate(workload).total;
}

}  // namespace

std::string_view to_string(Clause clause) {
    switch (clause) {
        case Clause::Where: return "where";
        case Clause::Join: return "join";
        case Clause::GroupBy: return "group";
        case Clause::OrderBy: return "order";
    }
    return "where";
}

CandidateSet generate_candidates(const WorkloadFeatures& features, std::size_t max_width) {
    if (max_width == 0) max_width = 1;
    CandidateSet set;
    std::vector<ClauseColumns> per_query;
    for (const auto& shape : features.shapes) per_query.push_back(clause_columns(shape));

    if (per_query.empty()) {
        for (const auto& w : features.where_selectivities)
            for (const auto& c : w.columns) add_candidate(set, {w.table, {c}}, Clause::Where);
        for (const auto& [c, n] : features.join_freq) add_candidate(set, {c.first, {c.second}}, Clause::Join);
        for (const auto& [c, n] : features.groupby_freq)
            add_candidate(set, {c.first, {c.second}}, Clause::GroupBy);
        for (const auto& [c, n] : features.orderby_freq)
            add_candidate(set, {c.first, {c.second}}, Clause::OrderBy);
        return set;
    }

    for (const auto& cc : per_query)
        for (const auto& [c, clause] : cc.ordered) add_candidate(set, {c.first, {c.second}}, clause);

    for (const auto& cc : per_query) {
        std::vector<std::pair<IndexDef, Clause>> frontier;
        for (const auto& [c, clause] : cc.ordered)
            if (cc.leads.count(c)) frontier.push_back({{c.first, {c.second}}, clause});
        for (std::size_t width = 2; width <= max_width; ++width) {
            std::vector<std::pair<IndexDef, Clause>> next;
            for (const auto& [def, clause] : frontier) {
                for (const auto& [c, unused] : cc.ordered) {
                    if (c.first != def.table) continue;
                    if (std::find(def.columns.begin(), def.columns.end(), c.second) != def.columns.end())
                        continue;
                    IndexDef wider = def;
                    wider.columns.push_back(c.second);
                    next.push_back({wider, clause});
                }
            }
            if (next.empty()) break;
            for (const auto& [def, clause] : next) add_candidate(set, def, clause);
            frontier = std::move(next);
        }
    }
    return set;
}

std::vector<IndexDef> greedy_advisor(WhatIfSession& session, const Workload& workload,
                                     const CandidateSet& candidates, double budget_mb) {
    std::vector<IndexDef> chosen;
    double current = workload_cost(session, workload);
    while (true) {
        const IndexDef* best = nullptr;
        double best_cost = current;
        for (const auto& def : candidates.candidates) {
            if (session.contains(def)) continue;
            if (!(session.total_size_mb() + session.size_estimate_mb(def) <= budget_mb)) continue;
            session.create(def);
            double c = workload_cost(session, workload);
            session.drop(def);
            if (improves(best_cost, c) && improves(current, c)) {
                best_cost = c;
                best = &def;
            }
        }
        if (!best) break;
        session.create(*best);
        chosen.push_back(*best);
        current = best_cost;
    }
    return chosen;
}

std::vector<IndexDef> density_advisor(WhatIfSession& session, const Workload& workload,
                                      const CandidateSet& candidates, double budget_mb) {
    double baseline = workload_cost(session, workload);
    struct Ranked {
        const IndexDef* def;
        double density;
        double size;
    };
    std::vector<Ranked> ranked;
    for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
        const auto& def = candidates.candidates[i];
        if (session.contains(def)) continue;
        double size = session.size_estimate_mb(def);
        session.create(def);
        double benefit = baseline - workload_cost(session, workload);
        session.drop(def);
        if (!improves(baseline, baseline - benefit)) continue;
        ranked.push_back({&def, benefit / std::max(size, 1e-12), size});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.density > b.density; });

    std::vector<IndexDef> chosen;
    for (const auto& r : ranked) {
        if (!(session.total_size_mb() + r.size <= budget_mb)) continue;
        session.create(*r.def);
        chosen.push_back(*r.def);
    }
    return chosen;
}

DefaultLabel collect_default_label(const WhatIfBackend& backend, const Workload& workload,
                                   const CandidateSet& candidates,
                                   const std::vector<double>& budget_grid, double target) {
    auto in_grid = std::any_of(budget_grid.begin(), budget_grid.end(),
                               [&](double b) { return std::abs(b - target) < 1e-9; });
    if (!in_grid) throw ConfigError("label target budget is not part of the budget grid");
    std::vector<double> grid;
    for (double b : budget_grid)
        if (b <= target + 1e-9) grid.push_back(b);
    std::sort(grid.begin(), grid.end());

    double db_mb = backend.database_size_mb();
    double target_mb = target * db_mb;

    DefaultLabel label;
    auto add_member = [&](IndexSet s, std::string origin) {
        for (const auto& m : label.pool)
            if (m.indexes == s) return;
        label.pool.push_back({std::move(s), std::move(origin), 0.0, 0.0});
    };

    for (double b : grid) {
        std::string tag = "@" + std::to_string(b).substr(0, 4);
        for (int advisor = 0; advisor < 2; ++advisor) {
            auto session = backend.open_session();
            if (advisor == 0)
                greedy_advisor(*session, workload, candidates, b * db_mb);
            else
                density_advisor(*session, workload, candidates, b * db_mb);
            std::string name = (advisor == 0 ? "greedy" : "density") + tag;
            IndexSet native = session->index_set();
            add_member(native, name);
            greedy_advisor(*session, workload, candidates, target_mb);
            add_member(session->index_set(), name + "+ext");
        }
    }

    {
        auto empty = backend.open_session();
        label.baseline_cost = workload_cost(*empty, workload);
    }
    for (auto& m : label.pool) {
        auto session = open_session_with(backend, m.indexes);
        m.cost = workload_cost(*session, workload);
        m.size_mb = session->total_size_mb();
    }
    auto better = [](const LabelPoolMember& a, const LabelPoolMember& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.indexes.size() != b.indexes.size()) return a.indexes.size() < b.indexes.size();
        if (a.size_mb != b.size_mb) return a.size_mb < b.size_mb;
        return a.indexes < b.indexes;
    };
    label.best_index = 0;
    for (std::size_t i = 1; i < label.pool.size(); ++i)
        if (better(label.pool[i], label.pool[label.best_index])) label.best_index = i;

    const auto& best = label.pool[label.best_index];
    label.best = best.indexes;
    label.cost = best.cost;
    for (const auto& d : best.indexes) label.actions.push_back(IndexAction::create(d));
    return label;
}

std::vector<IndexAction> make_refined_label(const IndexSet& suboptimal, const IndexSet& optimal) {
    std::vector<IndexAction> out;
    for (const auto& d : suboptimal)
        if (!optimal.count(d)) out.push_back(IndexAction::drop(d));
    for (const auto& d : optimal)
        if (!suboptimal.count(d)) out.push_back(IndexAction::create(d));
    return out;
}

std::string actions_to_json_text(const std::vector<IndexAction>& actions) {
    return actions_to_json(actions).dump(1);
}

std::vector<IndexAction> actions_from_json_text(const std::string& text) {
    try {
        return actions_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("labels: malformed JSON: ") + e.what());
    }
}

}  // namespace idxadvis
