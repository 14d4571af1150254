#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idxadvis {

enum class DataType { Int, BigInt, Date, Decimal, Text };

/// Parses a catalog type name ("int", "integer", "varchar(25)", ...).
/// Unrecognised names map to Text.
DataType parse_data_type(std::string_view name);
std::string_view to_string(DataType type);

/// Fixed storage width in bytes used by the simulated size model.
std::uint32_t type_width(DataType type);

/// Per-row bookkeeping bytes added to every index entry and heap row.
inline constexpr std::uint32_t kRowOverheadBytes = 8;

struct ColumnStat {
    std::string table;
    std::string column;
    std::uint64_t ndv = 0;
    std::uint64_t rows = 0;
    DataType data_type = DataType::Int;

    friend bool operator==(const ColumnStat&, const ColumnStat&) = default;
};

struct ColumnInfo {
    std::string name;
    DataType type = DataType::Int;
    std::uint64_t ndv = 0;
};

struct TableInfo {
    std::string name;
    std::uint64_t rows = 0;
    std::vector<ColumnInfo> columns;

    const ColumnInfo* find_column(std::string_view column) const;
    /// Heap row width: sum of column widths plus row overhead.
    std::uint32_t row_width() const;
};

/// Schema catalog with per-column statistics. Table and column names are
/// stored lower-case; lookups are case-insensitive.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<TableInfo> tables, std::string schema_id = {});

    static Catalog from_json_text(std::string_view text);
    static Catalog load(const std::string& path);
    std::string to_json_text() const;

    const std::string& schema_id() const { return schema_id_; }
    void set_schema_id(std::string id) { schema_id_ = std::move(id); }

    const std::vector<TableInfo>& tables() const { return tables_; }
    const TableInfo* find_table(std::string_view table) const;
    const ColumnInfo* find_column(std::string_view table, std::string_view column) const;
    /// Every table that owns a column of that name.
    std::vector<std::string> tables_with_column(std::string_view column) const;

    ColumnStat column_stat(std::string_view table, std::string_view column) const;

    /// Catalog-derived database size: sum over tables of rows x row width.
    double database_size_mb() const;

private:
    std::vector<TableInfo> tables_;
    std::map<std::string, std::size_t, std::less<>> by_name_;
    std::string schema_id_;
};

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;

std::string to_lower(std::string_view s);

}  // namespace idxadvis
