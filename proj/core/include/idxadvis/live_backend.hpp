#pragma once

#include "idxadvis/whatif.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace idxadvis {

/// Minimal SQL connection: runs one statement and returns the rows as
/// '|'-separated text. Throws BackendError on failure.
class SqlConnection {
public:
    virtual ~SqlConnection() = default;
    virtual std::vector<std::string> query(const std::string& sql) = 0;
};

/// Persistent `psql` child process. Hypothetical indexes live inside the
/// server session, so one connection is one what-if session.
class PsqlConnection final : public SqlConnection {
public:
    explicit PsqlConnection(std::string dsn, std::string psql_binary = "psql");
    ~PsqlConnection() override;
    PsqlConnection(const PsqlConnection&) = delete;
    PsqlConnection& operator=(const PsqlConnection&) = delete;

    std::vector<std::string> query(const std::string& sql) override;

private:
    void write_all(const std::string& data);
    bool read_line(std::string& line);

    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

using ConnectionFactory = std::function<std::unique_ptr<SqlConnection>()>;

/// What-if backend over a PostgreSQL server with the HypoPG extension.
/// Costs are EXPLAIN total costs; sizes come from hypopg_relation_size.
class LiveBackend final : public WhatIfBackend {
public:
    /// Connects once to verify the server and read catalog statistics.
    explicit LiveBackend(ConnectionFactory factory);
    static std::unique_ptr<LiveBackend> connect(const std::string& dsn);

    BackendKind kind() const override { return BackendKind::Live; }
    std::unique_ptr<WhatIfSession> open_session() const override;
    const Catalog& catalog() const override { return catalog_; }
    double database_size_mb() const override { return database_size_mb_; }
    const SelectivityEstimator& selectivity() const override { return *selectivity_; }

    /// Reads table/column statistics (reltuples, n_distinct, types).
    static Catalog load_catalog(SqlConnection& conn);

private:
    ConnectionFactory factory_;
    Catalog catalog_;
    double database_size_mb_ = 0.0;
    std::unique_ptr<SelectivityEstimator> selectivity_;
};

/// Selectivity from the planner's row estimate of the probe query.
class ExplainSelectivity final : public SelectivityEstimator {
public:
    ExplainSelectivity(ConnectionFactory factory, const Catalog& catalog);
    double estimate(const WherePredicate& predicate) const override;

private:
    ConnectionFactory factory_;
    const Catalog* catalog_;
    mutable std::mutex mutex_;
    mutable std::unique_ptr<SqlConnection> conn_;
};

/// Total cost and index names from an EXPLAIN (FORMAT JSON) document.
struct ExplainSummary {
    double total_cost = 0.0;
    double plan_rows = 0.0;
    std::vector<std::string> index_names;
};
ExplainSummary parse_explain_json(const std::string& json_text);

}  // namespace idxadvis
