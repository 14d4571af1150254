#include "idxadvis/llm.hpp"

#include "idxadvis/error.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <regex>
#include <set>

namespace idxadvis {

std::uint64_t ChatRequest::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    mix(system_text);
    mix(user_text);
    return h;
}

std::vector<std::string> chat(LLMBackend& backend, const ChatRequest& request) {
    if (request.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (request.n_samples < 1) throw ConfigError("n_samples must be >= 1");
    auto out = backend.complete(request);
    if (out.size() != request.n_samples)
        throw LLMError(backend.name() + " returned " + std::to_string(out.size()) + " completions, expected " +
                       std::to_string(request.n_samples));
    bool any = std::any_of(out.begin(), out.end(), [](const std::string& s) {
        return s.find_first_not_of(" \t\r\n") != std::string::npos;
    });
    if (!any) throw EmptyCompletion(backend.name() + " returned only empty completions");
    return out;
}

// ---------------------------------------------------------------- DDL text

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Lower-cases, strips quotes and any schema qualifier.
std::string clean_name(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '"'), s.end());
    if (auto dot = s.rfind('.'); dot != std::string::npos) s = s.substr(dot + 1);
    return to_lower(s);
}

bool is_identifier(const std::string& s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

// Key part -> column name, or empty when it is an expression.
std::string key_column(std::string item) {
    item = to_lower(trim(item));
    static const std::regex suffix(R"(\s+(asc|desc|nulls\s+first|nulls\s+last)\s*$)");
    for (std::string prev; prev != item;) {
        prev = item;
        item = trim(std::regex_replace(item, suffix, ""));
    }
    item.erase(std::remove(item.begin(), item.end(), '"'), item.end());
    if (auto dot = item.rfind('.'); dot != std::string::npos) item = item.substr(dot + 1);
    return is_identifier(item) ? item : std::string{};
}

std::vector<std::string> split_top_level(const std::string& s) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

std::vector<RawDdl> extract_ddl(const std::string& text) {
    static const std::regex create_re(
        R"(\bcreate\s+(?:unique\s+)?index\s+(?:concurrently\s+)?(?:if\s+not\s+exists\s+)?)"
        R"((?:("?[\w.]+"?)\s+)?on\s+(?:only\s+)?("?[\w.]+"?)\s*(?:using\s+\w+\s*)?)"
        R"(\(((?:[^()]|\([^()]*\))*)\))",
        std::regex::icase);
    static const std::regex create_start(R"(\bcreate\s+(?:unique\s+)?index\b)", std::regex::icase);
    static const std::regex drop_re(
        R"(\bdrop\s+index\s+(?:concurrently\s+)?(?:if\s+exists\s+)?("?[\w.]+"?(?:\s*,\s*"?[\w.]+"?)*))",
        std::regex::icase);
    static const std::regex drop_start(R"(\bdrop\s+index\b)", std::regex::icase);

    std::vector<std::pair<std::size_t, RawDdl>> found;
    std::set<std::size_t> covered;

    for (auto it = std::sregex_iterator(text.begin(), text.end(), create_re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        RawDdl d;
        d.kind = ActionKind::Create;
        if (m[1].matched) d.name = clean_name(m[1].str());
        if (d.name == "on") d.name.clear();
        d.table = clean_name(m[2].str());
        for (const auto& part : split_top_level(m[3].str())) {
            std::string col = key_column(part);
            if (col.empty()) {
                d.malformed = true;
                d.columns.clear();
                break;
            }
            d.columns.push_back(col);
        }
        auto pos = static_cast<std::size_t>(m.position(0));
        covered.insert(pos);
        found.emplace_back(pos, std::move(d));
    }
    for (auto it = std::sregex_iterator(text.begin(), text.end(), drop_re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto pos = static_cast<std::size_t>(m.position(0));
        covered.insert(pos);
        std::size_t k = 0;
        for (const auto& part : split_top_level(m[1].str())) {
            RawDdl d;
            d.kind = ActionKind::Drop;
            d.name = clean_name(trim(part));
            found.emplace_back(pos + k++, std::move(d));
        }
    }
    for (const auto* re : {&create_start, &drop_start}) {
        for (auto it = std::sregex_iterator(text.begin(), text.end(), *re); it != std::sregex_iterator(); ++it) {
            auto pos = static_cast<std::size_t>(it->position(0));
            if (covered.count(pos)) continue;
            RawDdl d;
            d.kind = re == &create_start ? ActionKind::Create : ActionKind::Drop;
            d.malformed = true;
            found.emplace_back(pos, std::move(d));
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<RawDdl> out;
    for (auto& [pos, d] : found) out.push_back(std::move(d));
    return out;
}

std::optional<IndexDef> decode_index_name(const std::string& raw_name, const Catalog& catalog) {
    std::string name = clean_name(raw_name);
    const std::string suffix = "_idx";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
        return std::nullopt;
    std::string body = name.substr(0, name.size() - suffix.size());

    std::vector<const TableInfo*> tables;
    for (const auto& t : catalog.tables()) tables.push_back(&t);
    std::sort(tables.begin(), tables.end(),
              [](const TableInfo* a, const TableInfo* b) { return a->name.size() > b->name.size(); });

    for (const TableInfo* t : tables) {
        if (body.size() <= t->name.size() + 1 || body.compare(0, t->name.size(), t->name) != 0 ||
            body[t->name.size()] != '_')
            continue;
        std::string rest = body.substr(t->name.size() + 1);
        std::vector<const ColumnInfo*> cols;
        for (const auto& c : t->columns) cols.push_back(&c);
        std::sort(cols.begin(), cols.end(),
                  [](const ColumnInfo* a, const ColumnInfo* b) { return a->name.size() > b->name.size(); });

        std::vector<std::string> picked;
        std::function<bool(std::size_t)> split = [&](std::size_t pos) {
            if (pos == rest.size()) return !picked.empty();
            for (const ColumnInfo* c : cols) {
                const auto& n = c->name;
                if (rest.compare(pos, n.size(), n) != 0) continue;
                std::size_t end = pos + n.size();
                if (end != rest.size() && rest[end] != '_') continue;
                if (std::find(picked.begin(), picked.end(), n) != picked.end()) continue;
                picked.push_back(n);
                if (split(end == rest.size() ? end : end + 1)) return true;
                picked.pop_back();
            }
            return false;
        };
        if (split(0)) return IndexDef{t->name, picked};
    }
    return std::nullopt;
}

ParsedActions parse_actions(const std::string& text, const Catalog& catalog, const IndexSet& existing) {
    ParsedActions out;
    std::set<IndexAction> seen;
    for (const auto& raw : extract_ddl(text)) {
        if (raw.malformed) {
            ++out.warnings;
            continue;
        }
        IndexAction action;
        action.kind = raw.kind;
        if (raw.kind == ActionKind::Create) {
            action.def = IndexDef{raw.table, raw.columns};
            try {
                validate(action.def, catalog);
            } catch (const Error&) {
                ++out.warnings;
                continue;
            }
        } else {
            auto hit = std::find_if(existing.begin(), existing.end(),
                                    [&](const IndexDef& d) { return d.name() == raw.name; });
            if (hit != existing.end()) {
                action.def = *hit;
            } else if (auto decoded = decode_index_name(raw.name, catalog)) {
                action.def = *decoded;
            } else {
                ++out.warnings;
                continue;
            }
        }
        if (seen.insert(action).second) out.actions.push_back(std::move(action));
    }
    return out;
}

}  // namespace idxadvis
