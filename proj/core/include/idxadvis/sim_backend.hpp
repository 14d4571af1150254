#pragma once

#include "idxadvis/whatif.hpp"

#include <map>
#include <memory>
#include <shared_mutex>

namespace idxadvis {

/// Per-table view of one query, precomputed for the simulated cost model.
struct TableAccess {
    std::string table;
    double rows = 0.0;
    std::map<std::string, double> predicate_sel;  // indexable column -> selectivity
    std::vector<std::string> join_columns;
    std::vector<std::string> group_by;
    std::vector<std::string> order_by;
};

struct AnalyzedQuery {
    std::vector<TableAccess> tables;
};

/// Deterministic what-if backend over catalog statistics.
///
/// For a query q and index set I, each table t of q costs:
///   rows(t) when no index has its leading column under a WHERE predicate,
///   otherwise min over such indexes of 0.5 * rows(t) * sel(matched prefix) + log2(rows(t) + 2);
/// x0.8 when a join column of t leads some index, x0.9 when the GROUP BY or
/// ORDER BY columns of t are a prefix of some index; floored at 1.0.
/// Index size is rows(t) * (sum of column widths + 8 bytes).
///
/// Shareable across threads; sessions are not.
class SimulatedBackend final : public WhatIfBackend {
public:
    explicit SimulatedBackend(Catalog catalog);
    SimulatedBackend(const SimulatedBackend&) = delete;
    SimulatedBackend& operator=(const SimulatedBackend&) = delete;

    BackendKind kind() const override { return BackendKind::Simulated; }
    std::unique_ptr<WhatIfSession> open_session() const override;
    const Catalog& catalog() const override { return catalog_; }
    double database_size_mb() const override { return catalog_.database_size_mb(); }
    const SelectivityEstimator& selectivity() const override { return selectivity_; }

    double index_size_mb(const IndexDef& def) const;
    /// Parsed and cached; throws ParseError / UnknownColumn.
    std::shared_ptr<const AnalyzedQuery> analyze(const std::string& sql) const;

    /// Cost of one analyzed query under `indexes`; names of chosen and
    /// credited indexes are added to `used` when non-null.
    double query_cost(const AnalyzedQuery& query, const std::vector<IndexDef>& indexes,
                      std::set<std::string>* used) const;

private:
    Catalog catalog_;
    SimulatedSelectivity selectivity_;
    mutable std::shared_mutex cache_mutex_;
    mutable std::map<std::string, std::shared_ptr<const AnalyzedQuery>> cache_;
};

}  // namespace idxadvis
