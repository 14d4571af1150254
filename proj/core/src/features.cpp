#include "idxadvis/features.hpp"

#include "idxadvis/error.hpp"
#include "query_shape_internal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace idxadvis {

using sql::Expr;
using sql::ExprKind;

// ---------------------------------------------------------------- workloads

std::vector<std::string> split_sql_statements(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    bool in_string = false;
    bool in_line_comment = false;
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_line_comment) {
            if (c == '\n') in_line_comment = false;
            current.push_back(c);
            continue;
        }
        if (!in_string && c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
            in_line_comment = true;
            current.push_back(c);
            continue;
        }
        if (c == '\'') in_string = !in_string;
        if (!in_string) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ';' && depth <= 0) {
                out.push_back(current);
                current.clear();
                continue;
            }
        }
        current.push_back(c);
    }
    out.push_back(current);

    std::vector<std::string> trimmed;
    for (auto& s : out) {
        // strip comment-only / blank fragments
        std::string body;
        std::istringstream lines(s);
        std::string line;
        bool has_code = false;
        while (std::getline(lines, line)) {
            auto first = line.find_first_not_of(" \t\r");
            if (first != std::string::npos && line.compare(first, 2, "--") != 0) has_code = true;
            body += line + "\n";
        }
        if (!has_code) continue;
        auto b = body.find_first_not_of(" \t\r\n");
        auto e = body.find_last_not_of(" \t\r\n");
        trimmed.push_back(body.substr(b, e - b + 1));
    }
    return trimmed;
}

Workload workload_from_text(const std::string& text, std::string name) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("workload: invalid JSON: ") + e.what());
        }
        Workload w;
        w.name = doc.value("name", name);
        if (!doc.contains("queries") || !doc["queries"].is_array())
            throw ConfigError("workload: missing 'queries' array");
        for (const auto& q : doc["queries"]) w.queries.push_back(q.get<std::string>());
        if (w.queries.empty()) throw ConfigError("workload: no queries");
        return w;
    }
    Workload w;
    w.name = std::move(name);
    w.queries = split_sql_statements(text);
    if (w.queries.empty()) throw ConfigError("workload: no queries");
    return w;
}

Workload load_workload(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open workload file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (auto dot = base.find('.'); dot != std::string::npos) base.resize(dot);
    return workload_from_text(ss.str(), base);
}

// ---------------------------------------------------------------- selectivity

namespace {

constexpr double kUnknownSel = 0.5;
constexpr double kRangeSel = 1.0 / 3.0;
constexpr double kPrefixLikeSel = 0.1;

bool is_bound_column(const Expr& e) {
    return e.kind == ExprKind::Column && !e.bound_table.empty();
}

bool is_constant(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Number:
        case ExprKind::String:
        case ExprKind::Null:
        case ExprKind::Bool:
        case ExprKind::TypedLiteral:
            return true;
        case ExprKind::Unary:
            return e.op != "not" && is_constant(*e.children[0]);
        case ExprKind::Binary:
            return (e.op == "+" || e.op == "-" || e.op == "*" || e.op == "/" || e.op == "||") &&
                   is_constant(*e.children[0]) && is_constant(*e.children[1]);
        case ExprKind::Function:
            return std::all_of(e.children.begin(), e.children.end(),
                               [](const auto& c) { return is_constant(*c); });
        case ExprKind::Subquery:
            return true;  // scalar subquery: a single value from the outer block's view
        default:
            return false;
    }
}

std::optional<double> numeric_value(const Expr& e) {
    if (e.kind == ExprKind::Number) return std::stod(e.text);
    if (e.kind == ExprKind::Unary && e.op == "-") {
        if (auto v = numeric_value(*e.children[0])) return -*v;
    }
    return std::nullopt;
}

// Folds comparisons between two literals; nullopt if not foldable.
std::optional<bool> fold_comparison(const std::string& op, const Expr& l, const Expr& r) {
    int cmp = 0;
    if (auto a = numeric_value(l), b = numeric_value(r); a && b) {
        cmp = *a < *b ? -1 : (*a > *b ? 1 : 0);
    } else if (l.kind == ExprKind::String && r.kind == ExprKind::String) {
        cmp = l.text.compare(r.text);
        cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
    } else {
        return std::nullopt;
    }
    if (op == "=") return cmp == 0;
    if (op == "<>") return cmp != 0;
    if (op == "<") return cmp < 0;
    if (op == ">") return cmp > 0;
    if (op == "<=") return cmp <= 0;
    if (op == ">=") return cmp >= 0;
    return std::nullopt;
}

}  // namespace

double SimulatedSelectivity::expression_selectivity(const Expr& e) const {
    auto ndv_of = [&](const Expr& col) {
        const ColumnInfo* c = catalog_->find_column(col.bound_table, col.bound_column);
        return std::max<double>(1.0, c ? static_cast<double>(c->ndv) : 1.0);
    };
    auto clamp = [](double s) { return std::clamp(s, 0.0, 1.0); };

    switch (e.kind) {
        case ExprKind::Bool:
            return e.text == "true" ? 1.0 : 0.0;
        case ExprKind::Unary:
            if (e.op == "not") return clamp(1.0 - expression_selectivity(*e.children[0]));
            return kUnknownSel;
        case ExprKind::Binary: {
            if (e.op == "and")
                return clamp(expression_selectivity(*e.children[0]) *
                             expression_selectivity(*e.children[1]));
            if (e.op == "or") {
                double a = expression_selectivity(*e.children[0]);
                double b = expression_selectivity(*e.children[1]);
                return clamp(a + b - a * b);
            }
            const Expr& l = *e.children[0];
            const Expr& r = *e.children[1];
            if (auto folded = fold_comparison(e.op, l, r)) return *folded ? 1.0 : 0.0;
            const Expr* col = nullptr;
            if (is_bound_column(l) && is_constant(r))
                col = &l;
            else if (is_bound_column(r) && is_constant(l))
                col = &r;
            if (!col) return kUnknownSel;
            if (e.op == "=") return clamp(1.0 / ndv_of(*col));
            if (e.op == "<>") return clamp(1.0 - 1.0 / ndv_of(*col));
            if (e.op == "<" || e.op == ">" || e.op == "<=" || e.op == ">=") return kRangeSel;
            if ((e.op == "like" || e.op == "ilike") && col == &l && r.kind == ExprKind::String) {
                bool prefix = !r.text.empty() && r.text[0] != '%' && r.text[0] != '_';
                double s = prefix ? kPrefixLikeSel : kUnknownSel;
                return e.negated ? 1.0 - s : s;
            }
            return kUnknownSel;
        }
        case ExprKind::Between: {
            if (!is_bound_column(*e.children[0])) return kUnknownSel;
            return e.negated ? 1.0 - kRangeSel : kRangeSel;
        }
        case ExprKind::InList: {
            if (!is_bound_column(*e.children[0])) return kUnknownSel;
            double k = static_cast<double>(e.children.size() - 1);
            double s = std::min(1.0, k / ndv_of(*e.children[0]));
            return e.negated ? 1.0 - s : s;
        }
        default:
            return kUnknownSel;
    }
}

double SimulatedSelectivity::probe(const std::string& probe_sql) const {
    std::shared_ptr<sql::SelectStmt> stmt;
    try {
        stmt = sql::parse_select(probe_sql);
        detail::analyze_statement(*stmt, probe_sql, *catalog_);
    } catch (const Error& e) {
        throw PredicateError(std::string("probe query failed: ") + e.what());
    }
    const auto& where = stmt->cores.front().where;
    if (!where) return 1.0;
    return std::clamp(expression_selectivity(*where), 0.0, 1.0);
}

double SimulatedSelectivity::estimate(const WherePredicate& predicate) const {
    for (const auto& t : predicate.probe_tables) {
        const TableInfo* info = catalog_->find_table(t);
        if (!info) throw PredicateError("unknown table '" + t + "'");
    }
    return probe(predicate.probe_sql);
}

double SimulatedSelectivity::estimate(const std::string& table,
                                      const std::string& predicate_text) const {
    const TableInfo* info = catalog_->find_table(table);
    if (!info) throw PredicateError("unknown table '" + table + "'");
    if (info->rows == 0) throw PredicateError("table '" + table + "' has no rows");
    return probe("SELECT * FROM " + info->name + " WHERE " + predicate_text);
}

double estimate_selectivity(const WherePredicate& predicate, const SelectivityEstimator& engine) {
    return std::clamp(engine.estimate(predicate), 0.0, 1.0);
}

// ---------------------------------------------------------------- features

bool WorkloadFeatures::empty() const {
    return where_selectivities.empty() && join_freq.empty() && groupby_freq.empty() &&
           orderby_freq.empty();
}

WorkloadFeatures extract_workload_features(const Workload& workload, const Catalog& catalog,
                                           const SelectivityEstimator& estimator) {
    WorkloadFeatures f;
    f.shapes.reserve(workload.queries.size());
    for (const auto& q : workload.queries) f.shapes.push_back(parse_query(q, catalog));

    for (const auto& shape : f.shapes) {
        std::vector<ColumnStat> cols;
        for (const auto& [t, c] : shape.all_columns) cols.push_back(catalog.column_stat(t, c));
        f.per_query_columns.push_back(std::move(cols));

        for (const auto& p : shape.where_predicates) {
            SelectivityEntry entry;
            entry.predicate = p.text;
            entry.table = p.table;
            entry.columns = p.columns;
            entry.indexable = p.indexable;
            entry.selectivity = estimate_selectivity(p, estimator);
            f.where_selectivities.push_back(std::move(entry));
        }
        for (const auto& c : shape.join_columns) ++f.join_freq[c];
        for (const auto& c : shape.group_by) ++f.groupby_freq[c];
        for (const auto& c : shape.order_by) ++f.orderby_freq[c];
        for (const auto& t : shape.tables) f.table_rows[t] = catalog.find_table(t)->rows;
    }
    return f;
}

std::map<ColumnRef, std::uint64_t> column_frequencies(const WorkloadFeatures& features) {
    std::map<ColumnRef, std::uint64_t> freq;
    for (const auto& w : features.where_selectivities)
        for (const auto& c : w.columns) ++freq[{w.table, c}];
    for (const auto* m : {&features.join_freq, &features.groupby_freq, &features.orderby_freq})
        for (const auto& [col, n] : *m) freq[col] += n;
    return freq;
}

namespace {

nlohmann::json freq_to_json(const std::map<ColumnRef, std::uint64_t>& m) {
    auto arr = nlohmann::json::array();
    for (const auto& [c, n] : m) arr.push_back({{"table", c.first}, {"column", c.second}, {"count", n}});
    return arr;
}

std::map<ColumnRef, std::uint64_t> freq_from_json(const nlohmann::json& arr) {
    std::map<ColumnRef, std::uint64_t> m;
    for (const auto& e : arr)
        m[{e.at("table").get<std::string>(), e.at("column").get<std::string>()}] =
            e.at("count").get<std::uint64_t>();
    return m;
}

}  // namespace

std::string WorkloadFeatures::to_json_text() const {
    nlohmann::json doc;
    auto pq = nlohmann::json::array();
    for (const auto& cols : per_query_columns) {
        auto arr = nlohmann::json::array();
        for (const auto& c : cols)
            arr.push_back({{"table", c.table},
                           {"column", c.column},
                           {"ndv", c.ndv},
                           {"rows", c.rows},
                           {"type", std::string(to_string(c.data_type))}});
        pq.push_back(std::move(arr));
    }
    doc["per_query_columns"] = std::move(pq);
    auto ws = nlohmann::json::array();
    for (const auto& w : where_selectivities) {
        // fixed precision keeps the serialization byte-stable
        double rounded = std::round(w.selectivity * 1e12) / 1e12;
        ws.push_back({{"predicate", w.predicate},
                      {"table", w.table},
                      {"columns", w.columns},
                      {"selectivity", rounded},
                      {"indexable", w.indexable}});
    }
    doc["where_selectivities"] = std::move(ws);
    doc["join_freq"] = freq_to_json(join_freq);
    doc["groupby_freq"] = freq_to_json(groupby_freq);
    doc["orderby_freq"] = freq_to_json(orderby_freq);
    doc["table_rows"] = table_rows;
    return doc.dump(1);
}

WorkloadFeatures WorkloadFeatures::from_json_text(const std::string& text) {
    WorkloadFeatures f;
    try {
        auto doc = nlohmann::json::parse(text);
        for (const auto& arr : doc.at("per_query_columns")) {
            std::vector<ColumnStat> cols;
            for (const auto& c : arr)
                cols.push_back(ColumnStat{c.at("table").get<std::string>(),
                                          c.at("column").get<std::string>(),
                                          c.at("ndv").get<std::uint64_t>(),
                                          c.at("rows").get<std::uint64_t>(),
                                          parse_data_type(c.at("type").get<std::string>())});
            f.per_query_columns.push_back(std::move(cols));
        }
        for (const auto& w : doc.at("where_selectivities")) {
            SelectivityEntry e;
            e.predicate = w.at("predicate").get<std::string>();
            e.table = w.at("table").get<std::string>();
            e.columns = w.at("columns").get<std::vector<std::string>>();
            e.selectivity = w.at("selectivity").get<double>();
            e.indexable = w.value("indexable", false);
            f.where_selectivities.push_back(std::move(e));
        }
        f.join_freq = freq_from_json(doc.at("join_freq"));
        f.groupby_freq = freq_from_json(doc.at("groupby_freq"));
        f.orderby_freq = freq_from_json(doc.at("orderby_freq"));
        f.table_rows = doc.at("table_rows").get<std::map<std::string, std::uint64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("features: malformed JSON: ") + e.what());
    }
    return f;
}

}  // namespace idxadvis
