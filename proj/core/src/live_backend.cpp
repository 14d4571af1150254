#include "idxadvis/live_backend.hpp"

#include "idxadvis/error.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <map>
#include <numeric>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace idxadvis {

namespace {

constexpr const char* kEndMarker = "__IDXADVIS_END__";

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

void collect_plan(const nlohmann::json& node, ExplainSummary& out) {
    if (node.contains("Index Name")) out.index_names.push_back(node["Index Name"].get<std::string>());
    if (node.contains("Plans"))
        for (const auto& child : node["Plans"]) collect_plan(child, out);
}

}  // namespace

ExplainSummary parse_explain_json(const std::string& json_text) {
    ExplainSummary s;
    try {
        auto doc = nlohmann::json::parse(json_text);
        const auto& plan = doc.is_array() ? doc.at(0).at("Plan") : doc.at("Plan");
        s.total_cost = plan.at("Total Cost").get<double>();
        s.plan_rows = plan.value("Plan Rows", 0.0);
        collect_plan(plan, s);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("cannot parse EXPLAIN output: ") + e.what());
    }
    return s;
}

// ---------------------------------------------------------------- psql

PsqlConnection::PsqlConnection(std::string dsn, std::string psql_binary) {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw BackendError(std::string("pipe failed: ") + std::strerror(errno));
    pid_ = fork();
    if (pid_ < 0) throw BackendError(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(out_pipe[1], STDERR_FILENO);
        close(in_pipe[1]);
        close(out_pipe[0]);
        execlp(psql_binary.c_str(), psql_binary.c_str(), dsn.c_str(), "-X", "-q", "-A", "-t",
               "-v", "ON_ERROR_STOP=0", static_cast<char*>(nullptr));
        std::fprintf(stdout, "ERROR: cannot exec %s\n%s\n", psql_binary.c_str(), kEndMarker);
        std::fflush(stdout);
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    std::signal(SIGPIPE, SIG_IGN);
    query("SELECT 1");  // surfaces connection errors eagerly
}

PsqlConnection::~PsqlConnection() {
    if (to_child_ >= 0) {
        const std::string quit = "\\q\n";
        [[maybe_unused]] auto n = ::write(to_child_, quit.data(), quit.size());
        close(to_child_);
    }
    if (from_child_ >= 0) close(from_child_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
}

void PsqlConnection::write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        auto n = ::write(to_child_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError("lost connection to psql");
        }
        off += static_cast<std::size_t>(n);
    }
}

bool PsqlConnection::read_line(std::string& line) {
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return true;
        }
        char chunk[4096];
        auto n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::vector<std::string> PsqlConnection::query(const std::string& sql) {
    std::string stmt = sql;
    while (!stmt.empty() && (stmt.back() == ';' || std::isspace(static_cast<unsigned char>(stmt.back()))))
        stmt.pop_back();
    write_all(stmt + ";\n\\echo " + kEndMarker + "\n");
    std::vector<std::string> rows;
    std::string error;
    std::string line;
    for (;;) {
        if (!read_line(line)) throw BackendError("psql exited unexpectedly" +
                                                 (error.empty() ? "" : ": " + error));
        if (line == kEndMarker) break;
        if (line.rfind("ERROR:", 0) == 0 || line.rfind("psql:", 0) == 0 ||
            line.rfind("FATAL:", 0) == 0) {
            if (error.empty()) error = line;
            continue;
        }
        rows.push_back(line);
    }
    if (!error.empty()) throw BackendError(error);
    return rows;
}

// ---------------------------------------------------------------- sessions

namespace {

class LiveSession final : public WhatIfSession {
public:
    LiveSession(std::unique_ptr<SqlConnection> conn, const Catalog& catalog)
        : conn_(std::move(conn)), catalog_(catalog) {
        conn_->query("CREATE EXTENSION IF NOT EXISTS hypopg");
        conn_->query("SELECT hypopg_reset()");
    }
    ~LiveSession() override {
        try {
            conn_->query("SELECT hypopg_reset()");
        } catch (const Error&) {
        }
    }

    HypoIndex create(const IndexDef& def) override {
        validate(def, catalog_);
        if (contains(def)) throw DuplicateIndex("index already exists: " + def.name());
        auto [oid, size] = register_index(def);
        HypoIndex h{def, size, oid};
        existing_.push_back(h);
        oid_to_name_[oid] = def.name();
        return h;
    }

    void drop(const IndexDef& def) override {
        auto it = std::find_if(existing_.begin(), existing_.end(),
                               [&](const HypoIndex& h) { return h.def == def; });
        if (it == existing_.end()) throw NotFound("no such hypothetical index: " + def.name());
        conn_->query("SELECT hypopg_drop_index(" + it->id + ")");
        oid_to_name_.erase(it->id);
        existing_.erase(it);
    }

    CostReport estimate(const Workload& workload) override {
        CostReport report;
        for (const auto& q : workload.queries) {
            auto summary = parse_explain_json(join_lines(conn_->query("EXPLAIN (FORMAT JSON) " + q)));
            report.per_query_cost.push_back(summary.total_cost);
            report.total += summary.total_cost;
            for (const auto& name : summary.index_names) report.used_indexes.insert(canonical(name));
        }
        return report;
    }

    double size_estimate_mb(const IndexDef& def) override {
        validate(def, catalog_);
        auto [oid, size] = register_index(def);
        conn_->query("SELECT hypopg_drop_index(" + oid + ")");
        return size;
    }

private:
    std::pair<std::string, double> register_index(const IndexDef& def) {
        std::string cols;
        for (std::size_t i = 0; i < def.columns.size(); ++i) cols += (i ? ", " : "") + def.columns[i];
        auto rows = conn_->query("SELECT indexrelid FROM hypopg_create_index('CREATE INDEX ON " +
                                 def.table + " (" + cols + ")')");
        if (rows.empty()) throw BackendError("hypopg_create_index returned no rows");
        std::string oid = rows.front();
        auto size_rows = conn_->query("SELECT hypopg_relation_size(" + oid + ")");
        if (size_rows.empty()) throw BackendError("hypopg_relation_size returned no rows");
        return {oid, std::stod(size_rows.front()) / kBytesPerMb};
    }

    // HypoPG names look like "<16384>btree_lineitem_l_orderkey".
    std::string canonical(const std::string& plan_name) const {
        if (plan_name.size() > 2 && plan_name[0] == '<') {
            auto close = plan_name.find('>');
            if (close != std::string::npos) {
                auto it = oid_to_name_.find(plan_name.substr(1, close - 1));
                if (it != oid_to_name_.end()) return it->second;
            }
        }
        return plan_name;
    }

    std::unique_ptr<SqlConnection> conn_;
    const Catalog& catalog_;
    std::map<std::string, std::string> oid_to_name_;
};

}  // namespace

LiveBackend::LiveBackend(ConnectionFactory factory) : factory_(std::move(factory)) {
    auto conn = factory_();
    catalog_ = load_catalog(*conn);
    auto size = conn->query("SELECT pg_database_size(current_database())");
    if (size.empty()) throw BackendError("cannot read database size");
    database_size_mb_ = std::stod(size.front()) / kBytesPerMb;
    selectivity_ = std::make_unique<ExplainSelectivity>(factory_, catalog_);
}

std::unique_ptr<LiveBackend> LiveBackend::connect(const std::string& dsn) {
    return std::make_unique<LiveBackend>(
        [dsn]() -> std::unique_ptr<SqlConnection> { return std::make_unique<PsqlConnection>(dsn); });
}

std::unique_ptr<WhatIfSession> LiveBackend::open_session() const {
    return std::make_unique<LiveSession>(factory_(), catalog_);
}

Catalog LiveBackend::load_catalog(SqlConnection& conn) {
    auto split = [](const std::string& line) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            auto bar = line.find('|', start);
            parts.push_back(line.substr(start, bar - start));
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
        return parts;
    };
    std::map<std::string, TableInfo> tables;
    for (const auto& line : conn.query(
             "SELECT c.relname, GREATEST(c.reltuples, 0)::bigint FROM pg_class c "
             "JOIN pg_namespace n ON n.oid = c.relnamespace "
             "WHERE c.relkind = 'r' AND n.nspname = current_schema() ORDER BY c.relname")) {
        auto p = split(line);
        if (p.size() < 2) continue;
        TableInfo t;
        t.name = p[0];
        t.rows = std::stoull(p[1]);
        tables.emplace(t.name, std::move(t));
    }
    for (const auto& line : conn.query(
             "SELECT c.table_name, c.column_name, c.data_type, COALESCE(s.n_distinct, -1) "
             "FROM information_schema.columns c LEFT JOIN pg_stats s "
             "ON s.schemaname = c.table_schema AND s.tablename = c.table_name "
             "AND s.attname = c.column_name WHERE c.table_schema = current_schema() "
             "ORDER BY c.table_name, c.ordinal_position")) {
        auto p = split(line);
        if (p.size() < 4) continue;
        auto it = tables.find(p[0]);
        if (it == tables.end()) continue;
        double nd = std::stod(p[3]);
        auto rows = static_cast<double>(it->second.rows);
        // negative n_distinct is a fraction of the row count
        std::uint64_t ndv = static_cast<std::uint64_t>(nd < 0 ? -nd * rows : nd);
        it->second.columns.push_back(ColumnInfo{p[1], parse_data_type(p[2]), std::max<std::uint64_t>(ndv, 1)});
    }
    std::vector<TableInfo> list;
    for (auto& [name, t] : tables) list.push_back(std::move(t));
    return Catalog(std::move(list), "live");
}

// ---------------------------------------------------------------- selectivity

ExplainSelectivity::ExplainSelectivity(ConnectionFactory factory, const Catalog& catalog)
    : factory_(std::move(factory)), catalog_(&catalog) {}

double ExplainSelectivity::estimate(const WherePredicate& predicate) const {
    double denom = 1.0;
    for (const auto& t : predicate.probe_tables) {
        const TableInfo* info = catalog_->find_table(t);
        if (!info) throw PredicateError("unknown table '" + t + "'");
        denom *= std::max<double>(1.0, static_cast<double>(info->rows));
    }
    std::lock_guard lock(mutex_);
    try {
        if (!conn_) conn_ = factory_();
    } catch (const Error& e) {
        throw EstimatorUnavailable(e.what());
    }
    ExplainSummary s;
    try {
        s = parse_explain_json(join_lines(conn_->query("EXPLAIN (FORMAT JSON) " + predicate.probe_sql)));
    } catch (const Error& e) {
        throw PredicateError(std::string("probe failed: ") + e.what());
    }
    return std::clamp(s.plan_rows / denom, 0.0, 1.0);
}

}  // namespace idxadvis
