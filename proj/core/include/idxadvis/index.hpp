#pragma once

#include <compare>
#include <set>
#include <string>
#include <vector>

namespace idxadvis {

class Catalog;

/// An ordered-column B-tree index on one table.
struct IndexDef {
    std::string table;
    std::vector<std::string> columns;

    /// Canonical name "<table>_<col1>_..._<colk>_idx".
    std::string name() const;
    std::size_t width() const { return columns.size(); }
    /// True when `other` is on the same table and this def's columns are a
    /// strict leading prefix of `other`'s.
    bool is_strict_prefix_of(const IndexDef& other) const;

    friend auto operator<=>(const IndexDef&, const IndexDef&) = default;
    friend bool operator==(const IndexDef&, const IndexDef&) = default;
};

/// Throws UnknownColumn / ConfigError when the def does not fit the catalog
/// (unknown table or column, empty or repeated columns).
void validate(const IndexDef& def, const Catalog& catalog);

enum class ActionKind { Create, Drop };

struct IndexAction {
    ActionKind kind = ActionKind::Create;
    IndexDef def;

    static IndexAction create(IndexDef d) { return {ActionKind::Create, std::move(d)}; }
    static IndexAction drop(IndexDef d) { return {ActionKind::Drop, std::move(d)}; }

    friend auto operator<=>(const IndexAction&, const IndexAction&) = default;
    friend bool operator==(const IndexAction&, const IndexAction&) = default;
};

using IndexSet = std::set<IndexDef>;

/// Applies actions to a state: DROPs remove, CREATEs insert.
IndexSet apply_actions(const std::vector<IndexAction>& actions, IndexSet state);

/// Canonical DDL: "CREATE INDEX <name> ON <table> (<cols>);" / "DROP INDEX <name>;".
std::string render_action(const IndexAction& action);
std::string render_actions(const std::vector<IndexAction>& actions);

}  // namespace idxadvis
