#pragma once

#include "idxadvis/catalog.hpp"
#include "idxadvis/sql_ast.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace idxadvis {

/// (table, column), both lower-case.
using ColumnRef = std::pair<std::string, std::string>;

std::string to_string(const ColumnRef& c);

/// A workload: an ordered list of single-SELECT SQL texts.
struct Workload {
    std::string name;
    std::vector<std::string> queries;
};

/// Reads a workload file: either JSON {name, queries:[...]} or plain text
/// with queries separated by ';'.
Workload load_workload(const std::string& path);
Workload workload_from_text(const std::string& text, std::string name = "workload");
std::vector<std::string> split_sql_statements(const std::string& text);

/// One WHERE predicate attributed to a table. Top-level conjuncts of a query
/// that restrict the same column set of the same table instance are merged
/// into one predicate (texts joined with AND) and probed as a unit.
struct WherePredicate {
    std::string table;
    std::vector<std::string> columns;  // columns of `table` referenced, first-appearance order
    std::string text;                  // as written in the query (whitespace collapsed)
    std::string key;                   // alias-free canonical form used for de-duplication
    std::string probe_sql;             // SELECT * FROM <instances> WHERE <text>
    std::vector<std::string> probe_tables;  // base tables in the probe FROM list
    /// True when every leaf compares one bare column of `table` against a
    /// column-free value, i.e. a plain B-tree index on that column can serve it.
    bool indexable = false;

    friend bool operator==(const WherePredicate& a, const WherePredicate& b) {
        return a.table == b.table && a.columns == b.columns && a.text == b.text &&
               a.indexable == b.indexable && a.probe_sql == b.probe_sql;
    }
};

struct QueryShape {
    std::set<std::string> tables;
    std::vector<WherePredicate> where_predicates;
    std::vector<ColumnRef> join_columns;  // distinct, first-appearance order
    std::vector<ColumnRef> group_by;
    std::vector<ColumnRef> order_by;
    std::set<ColumnRef> all_columns;

    /// Number of distinct WHERE predicates (a predicate spanning several
    /// tables counts once).
    std::size_t where_predicate_count() const;
};

/// Parses one SELECT and classifies its columns by clause. Subqueries and
/// CTE bodies contribute to the same shape.
QueryShape parse_query(const std::string& sql, const Catalog& catalog);

/// Selectivity source for WHERE predicates.
class SelectivityEstimator {
public:
    virtual ~SelectivityEstimator() = default;
    /// Fraction of rows satisfying the predicate, in [0, 1].
    virtual double estimate(const WherePredicate& predicate) const = 0;
};

/// Column-value model over catalog statistics: equality 1/ndv, range 1/3,
/// LIKE prefix 1/10, IN(k) min(1, k/ndv), conjunctions multiply, anything
/// else 1/2.
class SimulatedSelectivity final : public SelectivityEstimator {
public:
    explicit SimulatedSelectivity(const Catalog& catalog) : catalog_(&catalog) {}
    double estimate(const WherePredicate& predicate) const override;
    /// Probes "SELECT * FROM <table> WHERE <predicate>".
    double estimate(const std::string& table, const std::string& predicate_text) const;
    /// Model applied to a resolved expression.
    double expression_selectivity(const sql::Expr& expr) const;

private:
    double probe(const std::string& probe_sql) const;
    const Catalog* catalog_;
};

double estimate_selectivity(const WherePredicate& predicate, const SelectivityEstimator& engine);

struct SelectivityEntry {
    std::string predicate;
    std::string table;
    std::vector<std::string> columns;
    double selectivity = 1.0;
    bool indexable = false;

    friend bool operator==(const SelectivityEntry&, const SelectivityEntry&) = default;
};

struct WorkloadFeatures {
    std::vector<std::vector<ColumnStat>> per_query_columns;
    std::vector<SelectivityEntry> where_selectivities;
    std::map<ColumnRef, std::uint64_t> join_freq;
    std::map<ColumnRef, std::uint64_t> groupby_freq;
    std::map<ColumnRef, std::uint64_t> orderby_freq;
    std::map<std::string, std::uint64_t> table_rows;
    /// Parsed shapes, one per query (not part of the serialized form).
    std::vector<QueryShape> shapes;

    bool empty() const;
    /// Canonical JSON serialization (sorted keys, stable field order).
    std::string to_json_text() const;
    static WorkloadFeatures from_json_text(const std::string& text);
};

WorkloadFeatures extract_workload_features(const Workload& workload, const Catalog& catalog,
                                           const SelectivityEstimator& estimator);

/// Occurrence count of each (table, column) across WHERE, JOIN, GROUP BY
/// and ORDER BY features.
std::map<ColumnRef, std::uint64_t> column_frequencies(const WorkloadFeatures& features);

}  // namespace idxadvis
