#include "idxadvis/whatif.hpp"

#include "idxadvis/error.hpp"

#include <algorithm>

namespace idxadvis {

double relative_cost_reduction(double baseline_total, double current_total) {
    if (!(baseline_total > 0.0))
        throw ZeroBaseline("baseline workload cost must be positive");
    return (baseline_total - current_total) / baseline_total;
}

double relative_cost_reduction(const CostReport& baseline, const CostReport& current) {
    return relative_cost_reduction(baseline.total, current.total);
}

bool WhatIfSession::contains(const IndexDef& def) const {
    return std::any_of(existing_.begin(), existing_.end(),
                       [&](const HypoIndex& h) { return h.def == def; });
}

IndexSet WhatIfSession::index_set() const {
    IndexSet s;
    for (const auto& h : existing_) s.insert(h.def);
    return s;
}

double WhatIfSession::total_size_mb() const {
    double total = 0.0;
    for (const auto& h : existing_) total += h.est_size_mb;
    return total;
}

HypoIndex hypo_create(WhatIfSession& session, const IndexDef& def) { return session.create(def); }

void hypo_drop(WhatIfSession& session, const IndexDef& def) { session.drop(def); }

CostReport estimate_workload_cost(WhatIfSession& session, const Workload& workload) {
    return session.estimate(workload);
}

std::unique_ptr<WhatIfSession> open_session_with(const WhatIfBackend& backend,
                                                 const IndexSet& indexes) {
    auto session = backend.open_session();
    for (const auto& def : indexes) session->create(def);
    return session;
}

}  // namespace idxadvis
