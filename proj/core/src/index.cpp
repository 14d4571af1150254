#include "idxadvis/index.hpp"

#include "idxadvis/catalog.hpp"
#include "idxadvis/error.hpp"

#include <algorithm>

namespace idxadvis {

std::string IndexDef::name() const {
    std::string n = table;
    for (const auto& c : columns) n += "_" + c;
    return n + "_idx";
}

bool IndexDef::is_strict_prefix_of(const IndexDef& other) const {
    if (table != other.table || columns.size() >= other.columns.size()) return false;
    return std::equal(columns.begin(), columns.end(), other.columns.begin());
}

void validate(const IndexDef& def, const Catalog& catalog) {
    if (def.columns.empty()) throw ConfigError("index on '" + def.table + "' has no columns");
    if (!catalog.find_table(def.table)) throw UnknownColumn("unknown table '" + def.table + "'");
    for (std::size_t i = 0; i < def.columns.size(); ++i) {
        if (!catalog.find_column(def.table, def.columns[i]))
            throw UnknownColumn("unknown column '" + def.table + "." + def.columns[i] + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (def.columns[i] == def.columns[j])
                throw ConfigError("index " + def.name() + " repeats column " + def.columns[i]);
    }
}

IndexSet apply_actions(const std::vector<IndexAction>& actions, IndexSet state) {
    for (const auto& a : actions) {
        if (a.kind == ActionKind::Drop)
            state.erase(a.def);
        else
            state.insert(a.def);
    }
    return state;
}

std::string render_action(const IndexAction& action) {
    if (action.kind == ActionKind::Drop) return "DROP INDEX " + action.def.name() + ";";
    std::string cols;
    for (std::size_t i = 0; i < action.def.columns.size(); ++i) {
        if (i) cols += ", ";
        cols += action.def.columns[i];
    }
    return "CREATE INDEX " + action.def.name() + " ON " + action.def.table + " (" + cols + ");";
}

std::string render_actions(const std::vector<IndexAction>& actions) {
    std::string out;
    for (const auto& a : actions) out += render_action(a) + "\n";
    return out;
}

}  // namespace idxadvis
