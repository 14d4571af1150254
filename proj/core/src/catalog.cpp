#include "idxadvis/catalog.hpp"

#include "idxadvis/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace idxadvis {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

DataType parse_data_type(std::string_view name) {
    std::string n = to_lower(name);
    if (auto paren = n.find('('); paren != std::string::npos) n.resize(paren);
    while (!n.empty() && n.back() == ' ') n.pop_back();
    if (n == "int" || n == "integer" || n == "int4" || n == "smallint" || n == "int2" ||
        n == "serial")
        return DataType::Int;
    if (n == "bigint" || n == "int8" || n == "bigserial" || n == "timestamp" ||
        n == "timestamptz")
        return DataType::BigInt;
    if (n == "date") return DataType::Date;
    if (n == "decimal" || n == "numeric" || n == "double" || n == "double precision" ||
        n == "float" || n == "float8" || n == "real" || n == "money")
        return DataType::Decimal;
    return DataType::Text;
}

std::string_view to_string(DataType type) {
    switch (type) {
        case DataType::Int: return "int";
        case DataType::BigInt: return "bigint";
        case DataType::Date: return "date";
        case DataType::Decimal: return "decimal";
        case DataType::Text: return "text";
    }
    return "text";
}

std::uint32_t type_width(DataType type) {
    switch (type) {
        case DataType::Int: return 4;
        case DataType::BigInt: return 8;
        case DataType::Date: return 4;
        case DataType::Decimal: return 8;
        case DataType::Text: return 16;
    }
    return 16;
}

const ColumnInfo* TableInfo::find_column(std::string_view column) const {
    for (const auto& c : columns)
        if (c.name == column) return &c;
    return nullptr;
}

std::uint32_t TableInfo::row_width() const {
    std::uint32_t w = kRowOverheadBytes;
    for (const auto& c : columns) w += type_width(c.type);
    return w;
}

Catalog::Catalog(std::vector<TableInfo> tables, std::string schema_id)
    : tables_(std::move(tables)), schema_id_(std::move(schema_id)) {
    for (std::size_t i = 0; i < tables_.size(); ++i) {
        auto& t = tables_[i];
        t.name = to_lower(t.name);
        for (auto& c : t.columns) {
            c.name = to_lower(c.name);
            if (c.ndv > t.rows) c.ndv = t.rows;
        }
        if (!by_name_.emplace(t.name, i).second)
            throw ConfigError("catalog: duplicate table '" + t.name + "'");
    }
}

Catalog Catalog::from_json_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("catalog: invalid JSON: ") + e.what());
    }
    if (!doc.contains("tables") || !doc["tables"].is_array())
        throw ConfigError("catalog: missing 'tables' array");

    std::vector<TableInfo> tables;
    try {
        for (const auto& jt : doc["tables"]) {
            TableInfo t;
            t.name = jt.at("name").get<std::string>();
            t.rows = jt.at("rows").get<std::uint64_t>();
            for (const auto& jc : jt.at("columns")) {
                ColumnInfo c;
                c.name = jc.at("name").get<std::string>();
                c.type = parse_data_type(jc.value("type", std::string("int")));
                c.ndv = jc.value("ndv", t.rows);
                t.columns.push_back(std::move(c));
            }
            tables.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("catalog: malformed table entry: ") + e.what());
    }
    return Catalog(std::move(tables), doc.value("schema", std::string{}));
}

Catalog Catalog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open catalog file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Catalog c = from_json_text(ss.str());
    if (c.schema_id_.empty()) {
        auto slash = path.find_last_of('/');
        std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
        if (auto dot = base.find('.'); dot != std::string::npos) base.resize(dot);
        c.schema_id_ = base;
    }
    return c;
}

std::string Catalog::to_json_text() const {
    nlohmann::json doc;
    doc["schema"] = schema_id_;
    doc["tables"] = nlohmann::json::array();
    for (const auto& t : tables_) {
        nlohmann::json jt{{"name", t.name}, {"rows", t.rows}};
        jt["columns"] = nlohmann::json::array();
        for (const auto& c : t.columns)
            jt["columns"].push_back(
                {{"name", c.name}, {"type", std::string(to_string(c.type))}, {"ndv", c.ndv}});
        doc["tables"].push_back(std::move(jt));
    }
    return doc.dump(2);
}

const TableInfo* Catalog::find_table(std::string_view table) const {
    auto it = by_name_.find(table);
    if (it != by_name_.end()) return &tables_[it->second];
    std::string lower = to_lower(table);
    it = by_name_.find(lower);
    return it == by_name_.end() ? nullptr : &tables_[it->second];
}

const ColumnInfo* Catalog::find_column(std::string_view table, std::string_view column) const {
    const TableInfo* t = find_table(table);
    if (!t) return nullptr;
    if (const auto* c = t->find_column(column)) return c;
    return t->find_column(to_lower(column));
}

std::vector<std::string> Catalog::tables_with_column(std::string_view column) const {
    std::vector<std::string> out;
    std::string lower = to_lower(column);
    for (const auto& t : tables_)
        if (t.find_column(lower)) out.push_back(t.name);
    return out;
}

ColumnStat Catalog::column_stat(std::string_view table, std::string_view column) const {
    const TableInfo* t = find_table(table);
    const ColumnInfo* c = t ? t->find_column(to_lower(column)) : nullptr;
    if (!c) throw UnknownColumn(std::string(table) + "." + std::string(column));
    return ColumnStat{t->name, c->name, c->ndv, t->rows, c->type};
}

double Catalog::database_size_mb() const {
    double bytes = 0.0;
    for (const auto& t : tables_) bytes += static_cast<double>(t.rows) * t.row_width();
    return bytes / kBytesPerMb;
}

}  // namespace idxadvis
