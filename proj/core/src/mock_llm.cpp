#include "idxadvis/llm.hpp"

#include "prompt_format.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

namespace idxadvis {

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return uniform() < p; }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(gen_() % n); }
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::size_t>(hi - lo + 1)));
    }

private:
    std::mt19937_64 gen_;
};

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t digest, std::size_t sample) {
    std::uint64_t x = seed ^ (digest * 0x9E3779B97F4A7C15ULL) ^ ((sample + 1) * 0xBF58476D1CE4E5B9ULL);
    x ^= x >> 31;
    x *= 0x94D049BB133111EBULL;
    return x ^ (x >> 29);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) lines.push_back(line);
    return lines;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Lines under `header` up to the next line starting with '#'.
std::vector<std::string> section(const std::vector<std::string>& lines, std::size_t from, std::size_t to,
                                 const std::string& header) {
    std::vector<std::string> out;
    for (std::size_t i = from; i < to; ++i) {
        if (lines[i] != header) continue;
        for (std::size_t j = i + 1; j < to && !starts_with(lines[j], "#"); ++j) out.push_back(lines[j]);
        break;
    }
    return out;
}

std::string joined(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
}

struct ColumnFacts {
    std::uint64_t ndv = 0;
    std::uint64_t rows = 0;
    std::string type;
    double score = 0.0;
    bool lead = false;    // plain WHERE or JOIN column
    bool filter = false;  // plain WHERE column
    std::set<std::size_t> queries;
};

using Key = std::pair<std::string, std::string>;

struct AdviseInput {
    std::map<Key, ColumnFacts> columns;
    std::map<std::string, std::uint64_t> rows;
    std::vector<RawDdl> existing;
    double remaining_mb = 0.0;
    bool has_history = false;
    std::set<std::string> last_used;
    std::vector<std::vector<RawDdl>> demo_labels;
};

AdviseInput read_advise_prompt(const std::string& user) {
    static const std::regex col_re(R"((\w+)\.(\w+) \(ndv=(\d+), rows=(\d+), type=(\w+)\))");
    static const std::regex where_re(R"(^- (\w+)\(([^)]*)\) selectivity=([-+0-9.eE]+) kind=(\w+):)");
    static const std::regex freq_re(R"(^- (\w+)\.(\w+): (\d+)$)");
    static const std::regex rows_re(R"(^- (\w+): (\d+)$)");
    static const std::regex num_re(R"(([0-9]+(?:\.[0-9]+)?))");

    AdviseInput in;
    auto lines = split_lines(user);
    std::size_t input_at = lines.size();
    std::vector<std::size_t> demo_at;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i] == fmt::kInput) input_at = i;
        if (starts_with(lines[i], fmt::kDemo)) demo_at.push_back(i);
    }
    for (std::size_t d = 0; d < demo_at.size(); ++d) {
        std::size_t end = d + 1 < demo_at.size() ? demo_at[d + 1] : input_at;
        std::string label;
        bool in_label = false;
        for (std::size_t i = demo_at[d]; i < end; ++i) {
            if (lines[i] == fmt::kLabel) in_label = true;
            else if (in_label) label += lines[i] + "\n";
        }
        in.demo_labels.push_back(extract_ddl(label));
    }

    std::size_t n = lines.size();
    auto cols = section(lines, input_at, n, fmt::kColumns);
    for (std::size_t q = 0; q < cols.size(); ++q) {
        for (auto it = std::sregex_iterator(cols[q].begin(), cols[q].end(), col_re); it != std::sregex_iterator();
             ++it) {
            auto& f = in.columns[{(*it)[1].str(), (*it)[2].str()}];
            f.ndv = std::stoull((*it)[3].str());
            f.rows = std::stoull((*it)[4].str());
            f.type = (*it)[5].str();
            f.queries.insert(q);
        }
    }
    for (const auto& line : section(lines, input_at, n, fmt::kWhere)) {
        std::smatch m;
        if (!std::regex_search(line, m, where_re)) continue;
        double sel = std::stod(m[3].str());
        bool plain = m[4].str() == "column";
        std::vector<std::string> names;
        std::istringstream is(m[2].str());
        for (std::string c; std::getline(is, c, ',');) {
            c.erase(std::remove(c.begin(), c.end(), ' '), c.end());
            if (!c.empty()) names.push_back(c);
        }
        for (std::size_t i = 0; i < names.size(); ++i) {
            auto& f = in.columns[{m[1].str(), names[i]}];
            if (plain) {
                f.score += (i == 0 ? 1.0 : 0.5) * (1.0 + 2.0 * (1.0 - sel));
                f.lead = true;
                f.filter = true;
            } else {
                f.score += 0.2;
            }
        }
    }
    auto freq = [&](const char* header, double weight, bool lead) {
        for (const auto& line : section(lines, input_at, n, header)) {
            std::smatch m;
            if (!std::regex_match(line, m, freq_re)) continue;
            auto& f = in.columns[{m[1].str(), m[2].str()}];
            f.score += weight * std::stod(m[3].str());
            f.lead = f.lead || lead;
        }
    };
    freq(fmt::kJoin, 1.0, true);
    freq(fmt::kGroup, 0.5, false);
    freq(fmt::kOrder, 0.5, false);
    for (const auto& line : section(lines, input_at, n, fmt::kRows)) {
        std::smatch m;
        if (std::regex_match(line, m, rows_re)) in.rows[m[1].str()] = std::stoull(m[2].str());
    }
    in.existing = extract_ddl(joined(section(lines, input_at, n, fmt::kExisting)));
    auto storage = section(lines, input_at, n, fmt::kStorage);
    if (!storage.empty()) {
        std::smatch m;
        if (std::regex_search(storage.front(), m, num_re)) in.remaining_mb = std::stod(m[1].str());
    }
    auto history = section(lines, input_at, n, fmt::kHistory);
    if (!history.empty() && history.front() != "none") {
        in.has_history = true;
        const std::string& last = history.back();
        auto at = last.rfind("used:");
        if (at != std::string::npos) {
            std::istringstream is(last.substr(at + 5));
            for (std::string u; std::getline(is, u, ',');) {
                u.erase(std::remove(u.begin(), u.end(), ' '), u.end());
                if (!u.empty() && u != "none") in.last_used.insert(u);
            }
        }
    }
    for (auto& [key, f] : in.columns) {
        std::uint64_t rows = f.rows ? f.rows : (in.rows.count(key.first) ? in.rows[key.first] : 0);
        if (rows > 0) f.score *= (1.0 + 0.5 * static_cast<double>(f.ndv) / static_cast<double>(rows));
        f.score *= std::log10(static_cast<double>(rows) + 10.0);
    }
    return in;
}

double index_mb(const AdviseInput& in, const std::string& table, const std::vector<std::string>& cols) {
    std::uint64_t rows = 0;
    double width = kRowOverheadBytes;
    for (const auto& c : cols) {
        auto it = in.columns.find({table, c});
        if (it == in.columns.end() || it->second.type.empty()) return 0.0;
        rows = std::max(rows, it->second.rows);
        width += type_width(parse_data_type(it->second.type));
    }
    if (auto r = in.rows.find(table); r != in.rows.end()) rows = std::max(rows, r->second);
    return static_cast<double>(rows) * width / kBytesPerMb;
}

std::string render_create(const std::string& table, const std::vector<std::string>& cols) {
    std::string s = "CREATE INDEX ON " + table + " (";
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? ", " : "") + cols[i];
    return s + ");";
}

std::string advise_sample(const AdviseInput& in, std::size_t min_count, bool first, double temperature,
                          bool greedy, Rng& rng) {
    using Def = std::pair<std::string, std::vector<std::string>>;
    std::set<Def> present;
    for (const auto& e : in.existing)
        if (!e.malformed) present.insert({e.table, e.columns});

    double remaining = in.remaining_mb;
    std::vector<std::string> drops;
    if (in.has_history) {
        for (const auto& e : in.existing) {
            if (e.malformed) continue;
            std::string name = e.name.empty() ? IndexDef{e.table, e.columns}.name() : e.name;
            if (in.last_used.count(name)) continue;
            if (!greedy && !rng.chance(0.7)) continue;
            drops.push_back("DROP INDEX " + name + ";");
            present.erase({e.table, e.columns});
            remaining += index_mb(in, e.table, e.columns);
        }
    }

    std::int64_t target = first ? static_cast<std::int64_t>(std::max<std::size_t>(min_count, 1)) : 2;
    if (!greedy) target += rng.between(-1, 2);
    target = std::max<std::int64_t>(target, 1);

    std::vector<Key> ranked;
    for (const auto& [k, f] : in.columns)
        if (f.score > 0.0) ranked.push_back(k);
    std::stable_sort(ranked.begin(), ranked.end(), [&](const Key& a, const Key& b) {
        return in.columns.at(a).score > in.columns.at(b).score;
    });

    // Storage nearly spent: swap weaker indexes out for the strongest lead column that no longer fits.
    auto lead_score = [&](const std::string& table, const std::string& col) {
        auto it = in.columns.find({table, col});
        return it == in.columns.end() ? 0.0 : it->second.score;
    };
    if (in.has_history) {
        for (const auto& key : ranked) {
            if (!in.columns.at(key).lead) continue;
            Def want{key.first, {key.second}};
            bool covered = std::any_of(present.begin(), present.end(), [&](const Def& d) {
                return d.first == key.first && d.second.front() == key.second;
            });
            if (covered) continue;
            double need = index_mb(in, want.first, want.second);
            if (need <= remaining) break;
            if (!greedy && !rng.chance(0.7)) break;
            double score = in.columns.at(key).score;
            std::vector<std::pair<double, Def>> weaker;
            for (const auto& d : present) {
                double s = lead_score(d.first, d.second.front());
                if (s < score) weaker.push_back({s, d});
            }
            std::sort(weaker.begin(), weaker.end());
            double freed = 0.0;
            std::size_t take = 0;
            while (take < weaker.size() && remaining + freed < need)
                freed += index_mb(in, weaker[take].second.first, weaker[take].second.second), ++take;
            if (remaining + freed < need) break;
            for (std::size_t i = 0; i < take; ++i) {
                const Def& d = weaker[i].second;
                drops.push_back("DROP INDEX " + IndexDef{d.first, d.second}.name() + ";");
                present.erase(d);
            }
            remaining += freed;
            break;
        }
    }

    std::vector<Def> proposals;
    for (std::size_t d = 0; d < in.demo_labels.size(); ++d) {
        if (greedy && d > 0) break;
        for (const auto& r : in.demo_labels[d]) {
            if (r.malformed || r.kind != ActionKind::Create) continue;
            bool known = std::all_of(r.columns.begin(), r.columns.end(),
                                     [&](const std::string& c) { return in.columns.count({r.table, c}) != 0; });
            if (!known) continue;
            if (!greedy && !rng.chance(0.5)) continue;
            proposals.push_back({r.table, r.columns});
        }
    }
    for (const auto& key : ranked) {
        if (!greedy && key != ranked.front() && rng.chance(0.35 * temperature)) continue;
        const auto& f = in.columns.at(key);
        std::vector<Key> partners;
        for (const auto& other : ranked) {
            if (other == key || other.first != key.first) continue;
            const auto& g = in.columns.at(other);
            bool together = std::any_of(g.queries.begin(), g.queries.end(),
                                        [&](std::size_t q) { return f.queries.count(q) != 0; });
            if (together) partners.push_back(other);
        }
        Def def{key.first, {key.second}};
        if (!partners.empty()) {
            if (greedy) {
                const auto& p = in.columns.at(partners.front());
                if (f.filter && p.filter) def.second.push_back(partners.front().second);
            } else if (rng.chance(0.5 * temperature)) {
                const Key& p = partners[rng.below(std::min<std::size_t>(3, partners.size()))];
                def.second.push_back(p.second);
                if (in.columns.at(p).lead && rng.chance(0.3 * temperature))
                    std::swap(def.second[0], def.second[1]);
            }
        }
        proposals.push_back(def);
    }

    std::vector<std::string> creates;
    std::set<Def> chosen;
    for (const auto& def : proposals) {
        if (static_cast<std::int64_t>(creates.size()) >= target) break;
        if (present.count(def) || chosen.count(def)) continue;
        double size = index_mb(in, def.first, def.second);
        if (size > remaining) continue;
        remaining -= size;
        chosen.insert(def);
        creates.push_back(render_create(def.first, def.second));
    }

    std::ostringstream os;
    os << "Based on the workload features, the following index changes are recommended.\n```sql\n";
    for (const auto& d : drops) os << d << "\n";
    for (const auto& c : creates) os << c << "\n";
    os << "```\n";
    return os.str();
}

// ---------------------------------------------------------------- generation

struct GenColumn {
    std::string name;
    std::string type;
    std::uint64_t ndv = 1;
};

struct GenTable {
    std::string name;
    std::vector<GenColumn> columns;
};

struct GenInput {
    std::vector<GenTable> tables;
    std::vector<std::pair<Key, Key>> joins;
    std::set<std::string> focus;
    std::size_t count = 5;
};

GenInput read_generation_prompt(const std::string& user) {
    static const std::regex table_re(R"(^- (\w+) \(rows=(\d+)\): (.*)$)");
    static const std::regex col_re(R"((\w+) (\w+) ndv=(\d+))");
    static const std::regex join_re(R"(^- (\w+)\.(\w+) = (\w+)\.(\w+)$)");
    static const std::regex count_re(R"(Generate (\d+) )");
    static const std::regex focus_re(R"(^Focus tables: (.*)$)");

    GenInput in;
    auto lines = split_lines(user);
    for (const auto& line : section(lines, 0, lines.size(), fmt::kSchema)) {
        std::smatch m;
        if (!std::regex_match(line, m, table_re)) continue;
        GenTable t{m[1].str(), {}};
        std::string rest = m[3].str();
        for (auto it = std::sregex_iterator(rest.begin(), rest.end(), col_re); it != std::sregex_iterator(); ++it)
            t.columns.push_back({(*it)[1].str(), (*it)[2].str(), std::max<std::uint64_t>(1, std::stoull((*it)[3].str()))});
        if (!t.columns.empty()) in.tables.push_back(std::move(t));
    }
    for (const auto& line : section(lines, 0, lines.size(), fmt::kJoinKeys)) {
        std::smatch m;
        if (std::regex_match(line, m, join_re)) in.joins.push_back({{m[1].str(), m[2].str()}, {m[3].str(), m[4].str()}});
    }
    for (const auto& line : section(lines, 0, lines.size(), fmt::kRequest)) {
        std::smatch m;
        if (std::regex_search(line, m, count_re)) in.count = std::stoull(m[1].str());
        if (std::regex_match(line, m, focus_re)) {
            std::istringstream is(m[1].str());
            for (std::string t; std::getline(is, t, ',');) {
                t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
                if (!t.empty()) in.focus.insert(t);
            }
        }
    }
    return in;
}

std::string predicate(const std::string& table, const GenColumn& c, Rng& rng) {
    std::string col = table + "." + c.name;
    auto ndv = static_cast<std::int64_t>(c.ndv);
    DataType type = parse_data_type(c.type);
    switch (type) {
        case DataType::Int:
        case DataType::BigInt: {
            std::int64_t v = rng.between(1, ndv);
            switch (rng.below(3)) {
                case 0: return col + " = " + std::to_string(v);
                case 1: return col + " between " + std::to_string(v) + " and " + std::to_string(v + rng.between(1, 50));
                default:
                    return col + " in (" + std::to_string(v) + ", " + std::to_string(rng.between(1, ndv)) + ", " +
                           std::to_string(rng.between(1, ndv)) + ")";
            }
        }
        case DataType::Decimal:
            return col + (rng.chance(0.5) ? " < " : " > ") + std::to_string(rng.between(1, 1000)) + ".00";
        case DataType::Date: {
            std::string d = "date '" + std::to_string(rng.between(1992, 1998)) + "-0" +
                            std::to_string(rng.between(1, 9)) + "-01'";
            if (rng.chance(0.5)) return col + " >= " + d;
            return col + " between " + d + " and " + d + " + interval '1' year";
        }
        case DataType::Text:
            if (rng.chance(0.5)) return col + " = 'value_" + std::to_string(rng.between(1, ndv)) + "'";
            return col + " like 'val" + std::to_string(rng.between(0, 9)) + "%'";
    }
    return col + " is not null";
}

std::string generate_query(const GenInput& in, Rng& rng) {
    std::vector<const GenTable*> pool;
    for (const auto& t : in.tables)
        if (in.focus.empty() || in.focus.count(t.name)) pool.push_back(&t);
    if (pool.empty())
        for (const auto& t : in.tables) pool.push_back(&t);
    const GenTable& a = *pool[rng.below(pool.size())];
    auto col = [&](const GenTable& t) -> const GenColumn& { return t.columns[rng.below(t.columns.size())]; };
    auto ref = [](const GenTable& t, const GenColumn& c) { return t.name + "." + c.name; };

    std::vector<const std::pair<Key, Key>*> joins;
    for (const auto& j : in.joins)
        if (j.first.first == a.name || j.second.first == a.name) joins.push_back(&j);

    std::size_t shape = rng.below(joins.empty() ? 3 : 6);
    if (shape < 3) {
        const GenColumn& g = col(a);
        std::string where = predicate(a.name, col(a), rng);
        if (rng.chance(0.5)) where += " and " + predicate(a.name, col(a), rng);
        if (shape == 0) return "select " + ref(a, g) + ", " + ref(a, col(a)) + " from " + a.name + " where " + where;
        if (shape == 1)
            return "select " + ref(a, g) + ", count(*) from " + a.name + " where " + where + " group by " + ref(a, g) +
                   " order by " + ref(a, g);
        return "select * from " + a.name + " where " + where + " order by " + ref(a, g) + " limit 100";
    }
    const auto& j = *joins[rng.below(joins.size())];
    bool a_first = j.first.first == a.name;
    const Key& ka = a_first ? j.first : j.second;
    const Key& kb = a_first ? j.second : j.first;
    const GenTable* b = nullptr;
    for (const auto& t : in.tables)
        if (t.name == kb.first) b = &t;
    if (!b) return "select * from " + a.name + " where " + predicate(a.name, col(a), rng);
    std::string on = ka.first + "." + ka.second + " = " + kb.first + "." + kb.second;
    if (shape == 3)
        return "select " + ref(a, col(a)) + ", " + ref(*b, col(*b)) + " from " + a.name + " join " + b->name + " on " +
               on + " where " + predicate(a.name, col(a), rng) + " and " + predicate(b->name, col(*b), rng);
    if (shape == 4) {
        const GenColumn& g = col(*b);
        return "select " + ref(*b, g) + ", count(*) from " + a.name + " join " + b->name + " on " + on + " where " +
               predicate(a.name, col(a), rng) + " group by " + ref(*b, g) + " order by " + ref(*b, g);
    }
    return "select " + ref(a, col(a)) + " from " + a.name + " where " + ka.first + "." + ka.second + " in (select " +
           kb.first + "." + kb.second + " from " + b->name + " where " + predicate(b->name, col(*b), rng) + ") and " +
           predicate(a.name, col(a), rng);
}

std::string generation_sample(const GenInput& in, Rng& rng) {
    if (in.tables.empty()) return "The schema is empty, so no queries can be written.";
    std::ostringstream os;
    os << "Here are the generated queries.\n```sql\n";
    for (std::size_t i = 0; i < in.count; ++i) os << generate_query(in, rng) << ";\n";
    os << "```\n";
    return os.str();
}

}  // namespace

std::vector<std::string> MockLLM::complete(const ChatRequest& request) {
    std::uint64_t digest = request.digest();
    std::vector<std::string> out;
    out.reserve(request.n_samples);
    if (request.system_text.find(fmt::kGenerationTask) != std::string::npos) {
        GenInput in = read_generation_prompt(request.user_text);
        for (std::size_t s = 0; s < request.n_samples; ++s) {
            Rng rng(sample_seed(seed_, digest, s));
            out.push_back(generation_sample(in, rng));
        }
        return out;
    }
    static const std::regex min_re(R"(at least (\d+) indexes)");
    std::smatch m;
    bool first = std::regex_search(request.system_text, m, min_re);
    std::size_t min_count = first ? std::stoull(m[1].str()) : 0;
    AdviseInput in = read_advise_prompt(request.user_text);
    for (std::size_t s = 0; s < request.n_samples; ++s) {
        Rng rng(sample_seed(seed_, digest, s));
        bool greedy = s == 0 || request.temperature <= 0.0;
        out.push_back(advise_sample(in, min_count, first, request.temperature, greedy, rng));
    }
    return out;
}

}  // namespace idxadvis
