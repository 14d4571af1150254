#pragma once

#include "idxadvis/catalog.hpp"
#include "idxadvis/features.hpp"
#include "idxadvis/index.hpp"

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace idxadvis {

/// A hypothetical index registered with a session.
struct HypoIndex {
    IndexDef def;
    double est_size_mb = 0.0;
    std::string id;  // backend handle
};

/// Estimated workload cost under a session's hypothetical configuration.
struct CostReport {
    std::vector<double> per_query_cost;
    double total = 0.0;
    std::set<std::string> used_indexes;
};

/// (baseline.total - current.total) / baseline.total. Negative values mean a
/// regression. Throws ZeroBaseline when baseline.total <= 0.
double relative_cost_reduction(const CostReport& baseline, const CostReport& current);
double relative_cost_reduction(double baseline_total, double current_total);

enum class BackendKind { Simulated, Live };

/// Single-owner handle over a set of hypothetical indexes. Two sessions never
/// observe each other's indexes.
class WhatIfSession {
public:
    virtual ~WhatIfSession() = default;

    /// Registers a hypothetical index. Throws DuplicateIndex, UnknownColumn,
    /// BackendError.
    virtual HypoIndex create(const IndexDef& def) = 0;
    /// Throws NotFound when `def` is not registered.
    virtual void drop(const IndexDef& def) = 0;
    virtual CostReport estimate(const Workload& workload) = 0;
    /// Size the index would occupy, without registering it.
    virtual double size_estimate_mb(const IndexDef& def) = 0;

    const std::vector<HypoIndex>& existing() const { return existing_; }
    bool contains(const IndexDef& def) const;
    IndexSet index_set() const;
    double total_size_mb() const;

protected:
    std::vector<HypoIndex> existing_;
};

class WhatIfBackend {
public:
    virtual ~WhatIfBackend() = default;
    virtual BackendKind kind() const = 0;
    virtual std::unique_ptr<WhatIfSession> open_session() const = 0;
    virtual const Catalog& catalog() const = 0;
    virtual double database_size_mb() const = 0;
    virtual const SelectivityEstimator& selectivity() const = 0;
};

// Free-function forms of the session operations.
HypoIndex hypo_create(WhatIfSession& session, const IndexDef& def);
void hypo_drop(WhatIfSession& session, const IndexDef& def);
CostReport estimate_workload_cost(WhatIfSession& session, const Workload& workload);

/// Opens a session and registers `indexes` in order.
std::unique_ptr<WhatIfSession> open_session_with(const WhatIfBackend& backend,
                                                 const IndexSet& indexes);

}  // namespace idxadvis
