#pragma once

#include "idxadvis/error.hpp"
#include "idxadvis/index.hpp"

#include <json.hpp>

namespace idxadvis {

inline nlohmann::json def_to_json(const IndexDef& d) {
    return {{"table", d.table}, {"columns", d.columns}};
}

inline IndexDef def_from_json(const nlohmann::json& j) {
    return IndexDef{j.at("table").get<std::string>(), j.at("columns").get<std::vector<std::string>>()};
}

inline nlohmann::json action_to_json(const IndexAction& a) {
    return {{"action", a.kind == ActionKind::Create ? "create" : "drop"},
            {"table", a.def.table},
            {"columns", a.def.columns}};
}

inline IndexAction action_from_json(const nlohmann::json& j) {
    auto kind = j.at("action").get<std::string>();
    if (kind != "create" && kind != "drop") throw ConfigError("unknown action '" + kind + "'");
    IndexDef d = def_from_json(j);
    return kind == "create" ? IndexAction::create(std::move(d)) : IndexAction::drop(std::move(d));
}

inline nlohmann::json actions_to_json(const std::vector<IndexAction>& actions) {
    auto arr = nlohmann::json::array();
    for (const auto& a : actions) arr.push_back(action_to_json(a));
    return arr;
}

inline std::vector<IndexAction> actions_from_json(const nlohmann::json& arr) {
    std::vector<IndexAction> out;
    for (const auto& j : arr) out.push_back(action_from_json(j));
    return out;
}

inline nlohmann::json set_to_json(const IndexSet& s) {
    auto arr = nlohmann::json::array();
    for (const auto& d : s) arr.push_back(def_to_json(d));
    return arr;
}

inline IndexSet set_from_json(const nlohmann::json& arr) {
    IndexSet s;
    for (const auto& j : arr) s.insert(def_from_json(j));
    return s;
}

}  // namespace idxadvis
