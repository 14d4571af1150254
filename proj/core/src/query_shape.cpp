#include "idxadvis/error.hpp"
#include "idxadvis/features.hpp"
#include "query_shape_internal.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace idxadvis {

using sql::Expr;
using sql::ExprKind;
using sql::ExprPtr;
using sql::FromItem;
using sql::FromItemPtr;
using sql::SelectCore;
using sql::SelectStmt;

std::string to_string(const ColumnRef& c) { return c.first + "." + c.second; }

std::size_t QueryShape::where_predicate_count() const {
    std::set<std::string> keys;
    for (const auto& p : where_predicates) keys.insert(p.key);
    return keys.size();
}

namespace {

struct Binding {
    std::string alias;  // visible name (table name when unaliased)
    std::string table;  // base table; empty for derived tables / CTE references
    std::vector<std::string> outputs;  // derived output columns; "*" = unknown
    int instance = -1;
    int depth = 0;
};

struct Scope {
    const Scope* parent = nullptr;
    int depth = 0;
    std::vector<Binding> bindings;
    const std::vector<sql::SelectItem>* items = nullptr;
};

using CteEnv = std::map<std::string, std::vector<std::string>>;

struct Resolved {
    bool base = false;  // resolved to a catalog column
    std::string table;
    std::string column;
    std::string alias;
    int instance = -1;
    int depth = 0;
};

struct RawAtom {
    std::string table;
    std::string alias;
    std::vector<std::string> columns;
    std::string text;
    std::string key;
    std::vector<std::pair<std::string, std::string>> probe_from;  // (table, alias)
    bool indexable = false;
    bool single_instance = false;
};

std::string join_strings(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

class Analyzer {
public:
    Analyzer(const Catalog& catalog, const std::string& sql) : catalog_(catalog), sql_(sql) {}

    void run(const SelectStmt& stmt) {
        CteEnv env;
        analyze_stmt(stmt, nullptr, env);
        finalize();
    }

    QueryShape shape;

private:
    // ------------------------------------------------------------ statements

    std::vector<std::string> analyze_stmt(const SelectStmt& stmt, const Scope* parent,
                                          const CteEnv& outer_env) {
        CteEnv env = outer_env;
        for (const auto& cte : stmt.ctes) {
            auto outputs = analyze_stmt(*cte.body, parent, env);
            if (!cte.column_aliases.empty()) outputs = cte.column_aliases;
            env[cte.name] = outputs;
        }
        std::vector<std::string> outputs;
        std::vector<std::unique_ptr<Scope>> scopes;
        for (std::size_t i = 0; i < stmt.cores.size(); ++i) {
            auto scope = std::make_unique<Scope>();
            auto out = analyze_core(stmt.cores[i], parent, env, *scope);
            if (i == 0) outputs = std::move(out);
            scopes.push_back(std::move(scope));
        }
        for (const auto& item : stmt.order_by) {
            if (stmt.cores.size() == 1 && !stmt.cores[0].nested) {
                handle_sort_key(item.expr, *scopes[0], env, /*group=*/false);
            }
            // ORDER BY over a set operation names output columns only
        }
        return outputs;
    }

    std::vector<std::string> analyze_core(const SelectCore& core, const Scope* parent,
                                          const CteEnv& env, Scope& scope) {
        scope.parent = parent;
        scope.depth = parent ? parent->depth + 1 : 0;
        scope.items = &core.items;
        if (core.nested) return analyze_stmt(*core.nested, parent, env);

        std::vector<ExprPtr> on_conditions;
        std::vector<std::pair<std::vector<Binding>, std::vector<Binding>>> using_sides;
        std::vector<std::vector<std::string>> using_cols;
        for (const auto& item : core.from)
            bind_from(item, scope, env, on_conditions, using_sides, using_cols);

        for (std::size_t i = 0; i < using_cols.size(); ++i) {
            for (const auto& col : using_cols[i]) {
                for (const auto* side : {&using_sides[i].first, &using_sides[i].second}) {
                    for (const auto& b : *side) {
                        if (!b.table.empty() && catalog_.find_column(b.table, col)) {
                            add_join_column({b.table, col});
                            shape.all_columns.insert({b.table, col});
                            break;
                        }
                    }
                }
            }
        }

        for (const auto& cond : on_conditions) process_condition(cond, scope, env);

        std::vector<std::string> outputs;
        for (const auto& item : core.items) {
            walk(item.expr, scope, env, false);
            if (!item.alias.empty())
                outputs.push_back(item.alias);
            else if (item.expr->kind == ExprKind::Column)
                outputs.push_back(item.expr->text);
            else if (item.expr->kind == ExprKind::Star)
                outputs.push_back("*");
            else if (item.expr->kind == ExprKind::Function)
                outputs.push_back(item.expr->op);
            else
                outputs.push_back("?column?");
        }

        if (core.where) process_condition(core.where, scope, env);
        for (const auto& g : core.group_by) handle_sort_key(g, scope, env, /*group=*/true);
        if (core.having) walk(core.having, scope, env, true);
        return outputs;
    }

    void bind_from(const FromItemPtr& item, Scope& scope, const CteEnv& env,
                   std::vector<ExprPtr>& on_conditions,
                   std::vector<std::pair<std::vector<Binding>, std::vector<Binding>>>& using_sides,
                   std::vector<std::vector<std::string>>& using_cols) {
        switch (item->kind) {
            case FromItem::Kind::Table: {
                Binding b;
                b.alias = item->alias.empty() ? item->table : item->alias;
                b.depth = scope.depth;
                if (auto it = env.find(item->table); it != env.end()) {
                    b.outputs = item->column_aliases.empty() ? it->second : item->column_aliases;
                } else if (const TableInfo* t = catalog_.find_table(item->table)) {
                    b.table = t->name;
                    b.instance = next_instance_++;
                    shape.tables.insert(t->name);
                } else {
                    throw UnknownColumn("unknown table '" + item->table + "'");
                }
                scope.bindings.push_back(std::move(b));
                break;
            }
            case FromItem::Kind::Derived: {
                // derived tables see the enclosing scope, not their siblings
                auto outputs = analyze_stmt(*item->derived, scope.parent, env);
                Binding b;
                b.alias = item->alias;
                b.outputs = item->column_aliases.empty() ? outputs : item->column_aliases;
                b.depth = scope.depth;
                scope.bindings.push_back(std::move(b));
                break;
            }
            case FromItem::Kind::Join: {
                std::size_t before = scope.bindings.size();
                bind_from(item->left, scope, env, on_conditions, using_sides, using_cols);
                std::size_t mid = scope.bindings.size();
                bind_from(item->right, scope, env, on_conditions, using_sides, using_cols);
                std::vector<Binding> left(scope.bindings.begin() + before,
                                          scope.bindings.begin() + mid);
                std::vector<Binding> right(scope.bindings.begin() + mid, scope.bindings.end());
                if (item->on) on_conditions.push_back(item->on);
                std::vector<std::string> cols = item->using_columns;
                if (item->natural) {
                    for (const auto& lb : left) {
                        if (lb.table.empty()) continue;
                        for (const auto& c : catalog_.find_table(lb.table)->columns)
                            for (const auto& rb : right)
                                if (!rb.table.empty() && catalog_.find_column(rb.table, c.name))
                                    cols.push_back(c.name);
                    }
                }
                if (!cols.empty()) {
                    using_sides.emplace_back(std::move(left), std::move(right));
                    using_cols.push_back(std::move(cols));
                }
                break;
            }
        }
    }

    // ------------------------------------------------------------ resolution

    std::optional<Resolved> resolve(Expr& col, const Scope& scope, bool lenient) {
        if (!col.qualifier.empty()) {
            for (const Scope* s = &scope; s; s = s->parent) {
                for (const auto& b : s->bindings) {
                    if (b.alias != col.qualifier) continue;
                    return resolve_in_binding(col, b, /*must=*/true);
                }
            }
            // qualifier may name a base table that was aliased
            throw UnknownColumn("unknown table or alias '" + col.qualifier + "' for column '" +
                                col.text + "'");
        }
        for (const Scope* s = &scope; s; s = s->parent) {
            std::vector<const Binding*> hits;
            for (const auto& b : s->bindings) {
                if (binding_has(b, col.text)) hits.push_back(&b);
            }
            if (hits.size() > 1) {
                // a derived "*" wildcard is weaker than a concrete match
                std::vector<const Binding*> concrete;
                for (auto* h : hits)
                    if (!h->table.empty() || std::find(h->outputs.begin(), h->outputs.end(),
                                                       col.text) != h->outputs.end())
                        concrete.push_back(h);
                if (concrete.size() == 1) return resolve_in_binding(col, *concrete[0], true);
                throw AmbiguousColumn("column '" + col.text + "' is ambiguous");
            }
            if (hits.size() == 1) return resolve_in_binding(col, *hits[0], true);
        }
        if (lenient && is_select_alias(scope, col.text)) return std::nullopt;
        throw UnknownColumn("unknown column '" + col.text + "'");
    }

    bool binding_has(const Binding& b, const std::string& column) const {
        if (!b.table.empty()) return catalog_.find_column(b.table, column) != nullptr;
        for (const auto& o : b.outputs)
            if (o == column || o == "*") return true;
        return false;
    }

    std::optional<Resolved> resolve_in_binding(Expr& col, const Binding& b, bool must) {
        if (!binding_has(b, col.text)) {
            if (!must) return std::nullopt;
            throw UnknownColumn("unknown column '" + col.qualifier + "." + col.text + "'");
        }
        Resolved r;
        r.alias = b.alias;
        r.depth = b.depth;
        if (!b.table.empty()) {
            r.base = true;
            r.table = b.table;
            r.column = catalog_.find_column(b.table, col.text)->name;
            r.instance = b.instance;
            col.bound_table = r.table;
            col.bound_column = r.column;
            col.bound_instance = r.instance;
            shape.all_columns.insert({r.table, r.column});
            instance_alias_[r.instance] = {r.table, r.alias};
            instance_depth_[r.instance] = r.depth;
        }
        return r;
    }

    static bool is_select_alias(const Scope& scope, const std::string& name) {
        if (!scope.items) return false;
        for (const auto& item : *scope.items)
            if (item.alias == name) return true;
        return false;
    }

    // ------------------------------------------------------------ expressions

    void walk(const ExprPtr& e, const Scope& scope, const CteEnv& env, bool lenient) {
        if (!e) return;
        if (e->kind == ExprKind::Column) {
            resolve(*e, scope, lenient);
            return;
        }
        if (e->kind == ExprKind::Star && !e->qualifier.empty()) {
            bool found = false;
            for (const Scope* s = &scope; s && !found; s = s->parent)
                for (const auto& b : s->bindings)
                    if (b.alias == e->qualifier) found = true;
            if (!found) throw UnknownColumn("unknown table or alias '" + e->qualifier + "'");
        }
        for (const auto& c : e->children) walk(c, scope, env, lenient);
        if (e->subquery) analyze_stmt(*e->subquery, &scope, env);
    }

    void handle_sort_key(const ExprPtr& e, const Scope& scope, const CteEnv& env, bool group) {
        const Expr* target = e.get();
        if (e->kind == ExprKind::Number && scope.items) {
            std::size_t pos = static_cast<std::size_t>(std::stoul(e->text));
            if (pos >= 1 && pos <= scope.items->size()) target = (*scope.items)[pos - 1].expr.get();
        } else if (e->kind == ExprKind::Column && e->qualifier.empty() && scope.items && !group) {
            for (const auto& item : *scope.items) {
                if (item.alias == e->text) {
                    target = item.expr.get();
                    break;
                }
            }
        }
        if (target != e.get()) {
            // alias or position: the select item was already walked
            if (target->kind == ExprKind::Column && !target->bound_table.empty())
                add_sort_column({target->bound_table, target->bound_column}, group);
            return;
        }
        if (e->kind == ExprKind::Column) {
            auto r = resolve(*e, scope, /*lenient=*/true);
            if (r && r->base) add_sort_column({r->table, r->column}, group);
            return;
        }
        walk(e, scope, env, true);
    }

    void add_sort_column(const ColumnRef& c, bool group) {
        auto& list = group ? shape.group_by : shape.order_by;
        if (std::find(list.begin(), list.end(), c) == list.end()) list.push_back(c);
    }

    void add_join_column(const ColumnRef& c) {
        if (std::find(shape.join_columns.begin(), shape.join_columns.end(), c) ==
            shape.join_columns.end())
            shape.join_columns.push_back(c);
    }

    // Column nodes of `e`; `direct` excludes nodes inside nested subqueries.
    static void collect_columns(const Expr& e, bool direct, std::vector<const Expr*>& out) {
        if (e.kind == ExprKind::Column) {
            out.push_back(&e);
            return;
        }
        for (const auto& c : e.children) collect_columns(*c, direct, out);
        if (!direct && e.subquery) collect_stmt_columns(*e.subquery, out);
    }

    static void collect_stmt_columns(const SelectStmt& s, std::vector<const Expr*>& out) {
        std::function<void(const FromItemPtr&)> from = [&](const FromItemPtr& f) {
            if (!f) return;
            if (f->derived) collect_stmt_columns(*f->derived, out);
            if (f->on) collect_columns(*f->on, false, out);
            from(f->left);
            from(f->right);
        };
        for (const auto& cte : s.ctes) collect_stmt_columns(*cte.body, out);
        for (const auto& core : s.cores) {
            if (core.nested) collect_stmt_columns(*core.nested, out);
            for (const auto& it : core.items) collect_columns(*it.expr, false, out);
            for (const auto& f : core.from) from(f);
            if (core.where) collect_columns(*core.where, false, out);
            for (const auto& g : core.group_by) collect_columns(*g, false, out);
            if (core.having) collect_columns(*core.having, false, out);
        }
        for (const auto& o : s.order_by) collect_columns(*o.expr, false, out);
    }

    static bool has_direct_columns(const Expr& e) {
        std::vector<const Expr*> cols;
        collect_columns(e, true, cols);
        return !cols.empty();
    }

    // Every leaf compares the same bare column against a column-free value.
    static bool leaf_indexable(const Expr& e, const std::string& table, const std::string& column) {
        auto is_col = [&](const ExprPtr& x) {
            return x->kind == ExprKind::Column && x->bound_table == table &&
                   x->bound_column == column;
        };
        switch (e.kind) {
            case ExprKind::Binary: {
                if (e.op == "and" || e.op == "or")
                    return leaf_indexable(*e.children[0], table, column) &&
                           leaf_indexable(*e.children[1], table, column);
                static const std::set<std::string> cmp{"=",  "<>", "<",    ">",
                                                       "<=", ">=", "like", "ilike"};
                if (!cmp.count(e.op)) return false;
                const auto& l = e.children[0];
                const auto& r = e.children[1];
                if (is_col(l) && !has_direct_columns(*r)) return true;
                if (is_col(r) && !has_direct_columns(*l) && e.op != "like" && e.op != "ilike")
                    return true;
                return false;
            }
            case ExprKind::Unary:
                return e.op == "not" && leaf_indexable(*e.children[0], table, column);
            case ExprKind::Between:
                return is_col(e.children[0]) && !has_direct_columns(*e.children[1]) &&
                       !has_direct_columns(*e.children[2]);
            case ExprKind::InList: {
                if (!is_col(e.children[0])) return false;
                for (std::size_t i = 1; i < e.children.size(); ++i)
                    if (has_direct_columns(*e.children[i])) return false;
                return true;
            }
            case ExprKind::InSubquery:
            case ExprKind::IsNull:
                return is_col(e.children[0]);
            default:
                return false;
        }
    }

    std::string canonical_key(const Expr& atom) const {
        std::vector<const Expr*> cols;
        collect_columns(atom, false, cols);
        std::sort(cols.begin(), cols.end(),
                  [](const Expr* a, const Expr* b) { return a->span.begin < b->span.begin; });
        std::string raw;
        std::size_t pos = atom.span.begin;
        for (const Expr* c : cols) {
            if (c->span.begin < pos || c->span.end > atom.span.end) continue;
            raw.append(sql_, pos, c->span.begin - pos);
            if (!c->bound_table.empty())
                raw += c->bound_table + "." + c->bound_column;
            else
                raw.append(sql_, c->span.begin, c->span.end - c->span.begin);
            pos = c->span.end;
        }
        raw.append(sql_, pos, atom.span.end - pos);
        return to_lower(sql::span_text(raw, {0, raw.size()}));
    }

    void process_condition(const ExprPtr& cond, const Scope& scope, const CteEnv& env) {
        walk(cond, scope, env, false);
        for (const auto& atom : sql::conjuncts(cond)) {
            // col = col across two instances: join predicate
            if (atom->kind == ExprKind::Binary && atom->op == "=" &&
                atom->children[0]->kind == ExprKind::Column &&
                atom->children[1]->kind == ExprKind::Column) {
                const Expr& l = *atom->children[0];
                const Expr& r = *atom->children[1];
                bool l_base = !l.bound_table.empty();
                bool r_base = !r.bound_table.empty();
                if (!(l_base && r_base && l.bound_instance == r.bound_instance)) {
                    if (l_base) add_join_column({l.bound_table, l.bound_column});
                    if (r_base) add_join_column({r.bound_table, r.bound_column});
                    continue;
                }
            }

            std::vector<const Expr*> direct;
            collect_columns(*atom, true, direct);
            std::map<int, std::vector<std::string>> by_instance;
            std::vector<int> instance_order;
            for (const Expr* c : direct) {
                if (c->bound_table.empty()) continue;
                auto& cols = by_instance[c->bound_instance];
                if (cols.empty()) instance_order.push_back(c->bound_instance);
                if (std::find(cols.begin(), cols.end(), c->bound_column) == cols.end())
                    cols.push_back(c->bound_column);
            }
            if (by_instance.empty()) continue;

            // probe FROM list: every instance visible at this level that the atom touches
            std::vector<const Expr*> all_refs;
            collect_columns(*atom, false, all_refs);
            std::vector<int> probe_instances;
            for (const Expr* c : all_refs) {
                if (c->bound_table.empty()) continue;
                if (instance_depth_.at(c->bound_instance) > scope.depth) continue;
                if (std::find(probe_instances.begin(), probe_instances.end(),
                              c->bound_instance) == probe_instances.end())
                    probe_instances.push_back(c->bound_instance);
            }
            std::vector<std::pair<std::string, std::string>> probe_from;
            for (int inst : probe_instances) {
                auto entry = instance_alias_.at(inst);
                if (std::find(probe_from.begin(), probe_from.end(), entry) == probe_from.end())
                    probe_from.push_back(entry);
            }

            const std::string text = sql::span_text(sql_, atom->span);
            const std::string key = canonical_key(*atom);
            const bool single = by_instance.size() == 1;

            if (single) {
                int inst = instance_order.front();
                const auto& [table, alias] = instance_alias_.at(inst);
                RawAtom ra;
                ra.table = table;
                ra.alias = alias;
                ra.columns = by_instance[inst];
                ra.text = text;
                ra.key = key;
                ra.probe_from = probe_from;
                ra.single_instance = true;
                ra.indexable = ra.columns.size() == 1 && leaf_indexable(*atom, table, ra.columns[0]);
                atoms_.push_back(std::move(ra));
                continue;
            }
            // non-equi predicate over several instances: attribute to each table
            std::vector<std::string> seen_tables;
            for (int inst : instance_order) {
                const auto& table = instance_alias_.at(inst).first;
                auto it = std::find(seen_tables.begin(), seen_tables.end(), table);
                if (it == seen_tables.end()) {
                    seen_tables.push_back(table);
                    RawAtom ra;
                    ra.table = table;
                    ra.alias = instance_alias_.at(inst).second;
                    ra.columns = by_instance[inst];
                    ra.text = text;
                    ra.key = key;
                    ra.probe_from = probe_from;
                    atoms_.push_back(std::move(ra));
                } else {
                    auto& ra = atoms_[atoms_.size() - seen_tables.size() +
                                      static_cast<std::size_t>(it - seen_tables.begin())];
                    for (const auto& c : by_instance[inst])
                        if (std::find(ra.columns.begin(), ra.columns.end(), c) == ra.columns.end())
                            ra.columns.push_back(c);
                }
            }
        }
    }

    static std::string render_from(const std::vector<std::pair<std::string, std::string>>& from) {
        std::vector<std::string> parts;
        for (const auto& [table, alias] : from)
            parts.push_back(alias.empty() || alias == table ? table : table + " " + alias);
        return join_strings(parts, ", ");
    }

    void finalize() {
        // drop exact duplicates (same canonical text on the same table)
        std::vector<RawAtom> unique;
        std::set<std::pair<std::string, std::string>> seen;
        for (auto& a : atoms_)
            if (seen.insert({a.table, a.key}).second) unique.push_back(std::move(a));

        // merge single-instance atoms restricting the same column set
        struct Group {
            RawAtom first;
            std::vector<std::string> texts;
            std::vector<std::string> keys;
            bool indexable = true;
        };
        std::vector<Group> groups;
        std::map<std::string, std::size_t> group_index;
        for (auto& a : unique) {
            std::string merge_key;
            if (a.single_instance) {
                auto cols = a.columns;
                std::sort(cols.begin(), cols.end());
                merge_key = a.table + "|" + a.alias + "|" + join_strings(cols, ",") + "|" +
                            render_from(a.probe_from);
            }
            if (!merge_key.empty()) {
                if (auto it = group_index.find(merge_key); it != group_index.end()) {
                    auto& g = groups[it->second];
                    g.texts.push_back(a.text);
                    g.keys.push_back(a.key);
                    g.indexable = g.indexable && a.indexable;
                    continue;
                }
                group_index[merge_key] = groups.size();
            }
            Group g;
            g.texts = {a.text};
            g.keys = {a.key};
            g.indexable = a.indexable;
            g.first = std::move(a);
            groups.push_back(std::move(g));
        }

        for (auto& g : groups) {
            WherePredicate p;
            p.table = g.first.table;
            p.columns = g.first.columns;
            p.text = join_strings(g.texts, " AND ");
            p.key = join_strings(g.keys, " and ");
            p.indexable = g.indexable && g.first.single_instance;
            for (const auto& [t, alias] : g.first.probe_from)
                if (std::find(p.probe_tables.begin(), p.probe_tables.end(), t) ==
                    p.probe_tables.end())
                    p.probe_tables.push_back(t);
            p.probe_sql = "SELECT * FROM " + render_from(g.first.probe_from) + " WHERE " + p.text;
            shape.where_predicates.push_back(std::move(p));
        }
    }

    const Catalog& catalog_;
    const std::string& sql_;
    int next_instance_ = 0;
    std::map<int, std::pair<std::string, std::string>> instance_alias_;
    std::map<int, int> instance_depth_;
    std::vector<RawAtom> atoms_;
};

}  // namespace

namespace detail {

QueryShape analyze_statement(const sql::SelectStmt& stmt, const std::string& sql,
                             const Catalog& catalog) {
    Analyzer a(catalog, sql);
    a.run(stmt);
    return std::move(a.shape);
}

}  // namespace detail

QueryShape parse_query(const std::string& sql, const Catalog& catalog) {
    auto stmt = sql::parse_select(sql);
    return detail::analyze_statement(*stmt, sql, catalog);
}

}  // namespace idxadvis
