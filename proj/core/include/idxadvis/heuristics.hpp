#pragma once

#include "idxadvis/features.hpp"
#include "idxadvis/index.hpp"
#include "idxadvis/whatif.hpp"

#include <map>
#include <string>
#include <vector>

namespace idxadvis {

enum class Clause { Where, Join, GroupBy, OrderBy };
std::string_view to_string(Clause clause);

struct CandidateSet {
    std::vector<IndexDef> candidates;
    std::map<IndexDef, Clause> provenance;  // clause of the leading column

    bool contains(const IndexDef& def) const { return provenance.count(def) != 0; }
};

/// Single columns from every WHERE/JOIN/GROUP BY/ORDER BY feature, then
/// same-table column sequences that co-occur in one query, led by a WHERE or
/// JOIN column, up to `max_width`. Co-occurrence needs `features.shapes`;
/// features read back from JSON yield single-column candidates only.
CandidateSet generate_candidates(const WorkloadFeatures& features, std::size_t max_width = 2);

/// Bottom-up greedy: each round adds the candidate with the largest workload
/// cost reduction that still fits. `budget_mb` bounds the session's total
/// hypothetical size, so a pre-populated session is extended rather than
/// restarted. Returns the added defs in selection order; they stay in the
/// session.
std::vector<IndexDef> greedy_advisor(WhatIfSession& session, const Workload& workload,
                                     const CandidateSet& candidates, double budget_mb);

/// Ranks candidates by solo benefit per MB and admits them while they fit.
/// Leaves the chosen defs registered in the session.
std::vector<IndexDef> density_advisor(WhatIfSession& session, const Workload& workload,
                                      const CandidateSet& candidates, double budget_mb);

struct LabelPoolMember {
    IndexSet indexes;
    std::string origin;  // e.g. "greedy@0.2+ext"
    double cost = 0.0;
    double size_mb = 0.0;
};

struct DefaultLabel {
    std::vector<IndexAction> actions;  // CREATE only
    IndexSet best;
    double baseline_cost = 0.0;
    double cost = 0.0;
    std::vector<LabelPoolMember> pool;  // distinct sets, evaluation order
    std::size_t best_index = 0;
};

/// Runs both advisors at every grid budget up to `target` (fractions of the
/// database size), extends each result greedily to the target budget and
/// keeps the cheapest set. Throws ConfigError when `target` is not in the
/// grid.
DefaultLabel collect_default_label(const WhatIfBackend& backend, const Workload& workload,
                                   const CandidateSet& candidates,
                                   const std::vector<double>& budget_grid, double target);

/// DROPs for suboptimal minus optimal, then CREATEs for optimal minus
/// suboptimal, each in def order.
std::vector<IndexAction> make_refined_label(const IndexSet& suboptimal, const IndexSet& optimal);

/// Label JSON: [{"action": "create"|"drop", "table": ..., "columns": [...]}].
std::string actions_to_json_text(const std::vector<IndexAction>& actions);
std::vector<IndexAction> actions_from_json_text(const std::string& text);

}  // namespace idxadvis
