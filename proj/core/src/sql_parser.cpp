#include "idxadvis/catalog.hpp"
#include "idxadvis/error.hpp"
#include "idxadvis/sql_ast.hpp"

#include <array>
#include <cctype>
#include <string_view>

namespace idxadvis::sql {

namespace {

enum class TokKind { Ident, QuotedIdent, Number, String, Symbol, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;   // identifiers lower-cased; strings unquoted
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = src.size();
    auto at = [&](std::size_t k) { return k < n ? src[k] : '\0'; };
    while (i < n) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '-' && at(i + 1) == '-') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && at(i + 1) == '*') {
            auto close = src.find("*/", i + 2);
            if (close == std::string::npos) throw ParseError("unterminated block comment");
            i = close + 2;
            continue;
        }
        Token t;
        t.begin = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                             src[j] == '$'))
                ++j;
            t.kind = TokKind::Ident;
            t.text = to_lower(std::string_view(src).substr(i, j - i));
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && std::isdigit(static_cast<unsigned char>(at(i + 1))))) {
            std::size_t j = i;
            while (j < n && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
            if (j < n && (src[j] == 'e' || src[j] == 'E') &&
                (std::isdigit(static_cast<unsigned char>(at(j + 1))) ||
                 ((at(j + 1) == '-' || at(j + 1) == '+') &&
                  std::isdigit(static_cast<unsigned char>(at(j + 2)))))) {
                j += 2;
                while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            t.kind = TokKind::Number;
            t.text = src.substr(i, j - i);
            i = j;
        } else if (c == '\'') {
            std::string val;
            std::size_t j = i + 1;
            for (;;) {
                if (j >= n) throw ParseError("unterminated string literal");
                if (src[j] == '\'') {
                    if (at(j + 1) == '\'') {
                        val.push_back('\'');
                        j += 2;
                        continue;
                    }
                    ++j;
                    break;
                }
                val.push_back(src[j++]);
            }
            t.kind = TokKind::String;
            t.text = std::move(val);
            i = j;
        } else if (c == '"' || c == '`') {
            auto close = src.find(c, i + 1);
            if (close == std::string::npos) throw ParseError("unterminated quoted identifier");
            t.kind = TokKind::QuotedIdent;
            t.text = to_lower(std::string_view(src).substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            static constexpr std::array<std::string_view, 8> two{"<>", "!=", "<=", ">=", "||", "::",
                                                                 "==", "=>"};
            std::string_view rest = std::string_view(src).substr(i);
            bool matched = false;
            for (auto op : two) {
                if (rest.starts_with(op)) {
                    t.text = std::string(op == "==" ? "=" : op);
                    i += 2;
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                static constexpr std::string_view singles = "=<>()+-*/%,.;[]";
                if (singles.find(c) == std::string_view::npos)
                    throw ParseError(std::string("unexpected character '") + c + "'");
                t.text = std::string(1, c);
                ++i;
            }
            t.kind = TokKind::Symbol;
        }
        t.end = i;
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = TokKind::End;
    end.begin = end.end = n;
    out.push_back(end);
    return out;
}

// Words that terminate an expression or cannot be an implicit alias.
bool is_reserved(std::string_view w) {
    static constexpr std::array<std::string_view, 48> words{
        "select", "from",   "where",  "group",   "by",       "having",  "order",  "limit",
        "offset", "union",  "intersect", "except", "all",    "distinct", "as",    "on",
        "using",  "join",   "inner",  "left",    "right",    "full",    "outer",  "cross",
        "natural", "and",   "or",     "not",     "in",       "is",      "null",   "like",
        "ilike",  "between", "exists", "case",   "when",     "then",    "else",   "end",
        "with",   "asc",    "desc",   "nulls",   "fetch",    "window",  "similar", "escape"};
    for (auto r : words)
        if (r == w) return true;
    return false;
}

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src), toks_(tokenize(src)) {}

    std::shared_ptr<SelectStmt> parse_statement() {
        if (!peek_word("select") && !peek_word("with") && !peek_sym("("))
            throw ParseError("only SELECT statements are supported, got '" + peek().text + "'");
        auto stmt = parse_query();
        while (accept_sym(";")) {
        }
        if (peek().kind != TokKind::End)
            throw ParseError("unexpected trailing input near '" + peek().text + "'");
        return stmt;
    }

    ExprPtr parse_standalone_expr() {
        auto e = parse_expr();
        if (peek().kind != TokKind::End)
            throw ParseError("unexpected trailing input near '" + peek().text + "'");
        return e;
    }

private:
    const Token& peek(std::size_t k = 0) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool peek_word(std::string_view w, std::size_t k = 0) const {
        return peek(k).kind == TokKind::Ident && peek(k).text == w;
    }
    bool peek_sym(std::string_view s, std::size_t k = 0) const {
        return peek(k).kind == TokKind::Symbol && peek(k).text == s;
    }
    bool accept_word(std::string_view w) {
        if (!peek_word(w)) return false;
        next();
        return true;
    }
    bool accept_sym(std::string_view s) {
        if (!peek_sym(s)) return false;
        next();
        return true;
    }
    [[noreturn]] void fail(const std::string& what) const {
        const Token& t = peek();
        std::string near = t.kind == TokKind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(what + " near " + near + " (offset " + std::to_string(t.begin) + ")");
    }
    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail("expected '" + std::string(w) + "'");
    }
    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) fail("expected '" + std::string(s) + "'");
    }
    std::size_t prev_end() const { return pos_ == 0 ? 0 : toks_[pos_ - 1].end; }

    std::string parse_name() {
        const Token& t = peek();
        if (t.kind == TokKind::QuotedIdent || (t.kind == TokKind::Ident && !is_reserved(t.text))) {
            next();
            return t.text;
        }
        fail("expected identifier");
    }

    std::string parse_optional_alias() {
        if (accept_word("as")) return parse_name();
        const Token& t = peek();
        if (t.kind == TokKind::QuotedIdent || (t.kind == TokKind::Ident && !is_reserved(t.text))) {
            next();
            return t.text;
        }
        return {};
    }

    std::vector<std::string> parse_name_list() {
        std::vector<std::string> names;
        expect_sym("(");
        do {
            names.push_back(parse_name());
        } while (accept_sym(","));
        expect_sym(")");
        return names;
    }

    // ---------------------------------------------------------------- queries

    std::shared_ptr<SelectStmt> parse_query() {
        auto stmt = std::make_shared<SelectStmt>();
        if (accept_word("with")) {
            accept_word("recursive");
            do {
                Cte cte;
                cte.name = parse_name();
                if (peek_sym("(")) cte.column_aliases = parse_name_list();
                expect_word("as");
                expect_sym("(");
                cte.body = parse_query();
                expect_sym(")");
                stmt->ctes.push_back(std::move(cte));
            } while (accept_sym(","));
        }
        stmt->cores.push_back(parse_core());
        while (peek_word("union") || peek_word("intersect") || peek_word("except")) {
            next();
            if (!accept_word("all")) accept_word("distinct");
            stmt->cores.push_back(parse_core());
        }
        if (accept_word("order")) {
            expect_word("by");
            do {
                OrderItem item;
                item.expr = parse_expr();
                if (accept_word("desc"))
                    item.descending = true;
                else
                    accept_word("asc");
                if (accept_word("nulls")) {
                    if (!accept_word("first")) expect_word("last");
                }
                stmt->order_by.push_back(std::move(item));
            } while (accept_sym(","));
        }
        for (;;) {
            if (accept_word("limit")) {
                if (!accept_word("all")) stmt->limit = parse_expr();
            } else if (accept_word("offset")) {
                stmt->offset = parse_expr();
                if (!accept_word("rows")) accept_word("row");
            } else if (accept_word("fetch")) {
                if (!accept_word("first")) expect_word("next");
                if (!peek_word("rows") && !peek_word("row")) stmt->limit = parse_expr();
                if (!accept_word("rows")) expect_word("row");
                expect_word("only");
            } else {
                break;
            }
        }
        return stmt;
    }

    SelectCore parse_core() {
        SelectCore core;
        if (accept_sym("(")) {
            core.nested = parse_query();
            expect_sym(")");
            return core;
        }
        expect_word("select");
        if (accept_word("distinct")) {
            core.distinct = true;
            if (accept_word("on")) {
                expect_sym("(");
                do {
                    core.group_by.push_back(parse_expr());
                } while (accept_sym(","));
                expect_sym(")");
            }
        } else {
            accept_word("all");
        }
        do {
            SelectItem item;
            item.expr = parse_expr();
            item.alias = parse_optional_alias();
            core.items.push_back(std::move(item));
        } while (accept_sym(","));

        if (accept_word("from")) {
            do {
                core.from.push_back(parse_from_item());
            } while (accept_sym(","));
        }
        if (accept_word("where")) core.where = parse_expr();
        if (accept_word("group")) {
            expect_word("by");
            do {
                core.group_by.push_back(parse_expr());
            } while (accept_sym(","));
        }
        if (accept_word("having")) core.having = parse_expr();
        return core;
    }

    FromItemPtr parse_from_primary() {
        auto item = std::make_shared<FromItem>();
        if (accept_sym("(")) {
            if (peek_word("select") || peek_word("with") ||
                (peek_sym("(") && looks_like_query_after_parens())) {
                item->kind = FromItem::Kind::Derived;
                item->derived = parse_query();
                expect_sym(")");
                item->alias = parse_optional_alias();
                if (peek_sym("(")) item->column_aliases = parse_name_list();
                return item;
            }
            auto inner = parse_from_item();
            expect_sym(")");
            if (inner->kind != FromItem::Kind::Join) {
                if (auto alias = parse_optional_alias(); !alias.empty()) inner->alias = alias;
            }
            return inner;
        }
        item->kind = FromItem::Kind::Table;
        item->table = parse_name();
        if (accept_sym(".")) item->table = parse_name();  // schema.table
        item->alias = parse_optional_alias();
        if (!item->alias.empty() && peek_sym("(")) item->column_aliases = parse_name_list();
        return item;
    }

    bool looks_like_query_after_parens() const {
        std::size_t k = 0;
        while (peek_sym("(", k)) ++k;
        return peek_word("select", k) || peek_word("with", k);
    }

    FromItemPtr parse_from_item() {
        auto left = parse_from_primary();
        for (;;) {
            bool natural = false;
            JoinType type = JoinType::Inner;
            std::size_t save = pos_;
            if (accept_word("natural")) natural = true;
            if (accept_word("inner")) {
                type = JoinType::Inner;
            } else if (accept_word("left")) {
                type = JoinType::Left;
                accept_word("outer");
            } else if (accept_word("right")) {
                type = JoinType::Right;
                accept_word("outer");
            } else if (accept_word("full")) {
                type = JoinType::Full;
                accept_word("outer");
            } else if (accept_word("cross")) {
                type = JoinType::Cross;
            }
            if (!accept_word("join")) {
                pos_ = save;
                break;
            }
            auto join = std::make_shared<FromItem>();
            join->kind = FromItem::Kind::Join;
            join->join_type = type;
            join->natural = natural;
            join->left = left;
            join->right = parse_from_primary();
            if (accept_word("on")) {
                join->on = parse_expr();
            } else if (accept_word("using")) {
                join->using_columns = parse_name_list();
            } else if (type != JoinType::Cross && !natural) {
                fail("expected ON or USING after JOIN");
            }
            left = join;
        }
        return left;
    }

    // ------------------------------------------------------------ expressions

    ExprPtr make(ExprKind kind, std::size_t begin) {
        auto e = std::make_shared<Expr>();
        e->kind = kind;
        e->span.begin = begin;
        return e;
    }
    ExprPtr finish(ExprPtr e) {
        e->span.end = prev_end();
        return e;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        auto lhs = parse_and();
        while (peek_word("or")) {
            next();
            auto rhs = parse_and();
            auto e = make(ExprKind::Binary, lhs->span.begin);
            e->op = "or";
            e->children = {lhs, rhs};
            lhs = finish(e);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        auto lhs = parse_not();
        while (peek_word("and")) {
            next();
            auto rhs = parse_not();
            auto e = make(ExprKind::Binary, lhs->span.begin);
            e->op = "and";
            e->children = {lhs, rhs};
            lhs = finish(e);
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (peek_word("not") && !peek_word("exists", 1)) {
            std::size_t begin = next().begin;
            auto inner = parse_not();
            auto e = make(ExprKind::Unary, begin);
            e->op = "not";
            e->children = {inner};
            return finish(e);
        }
        return parse_predicate();
    }

    ExprPtr parse_predicate() {
        auto lhs = parse_additive();
        for (;;) {
            const Token& t = peek();
            if (t.kind == TokKind::Symbol &&
                (t.text == "=" || t.text == "<>" || t.text == "!=" || t.text == "<" ||
                 t.text == ">" || t.text == "<=" || t.text == ">=")) {
                std::string op = next().text;
                if (op == "!=") op = "<>";
                ExprPtr rhs;
                if (peek_word("any") || peek_word("some") || peek_word("all")) {
                    std::string quant = next().text;
                    expect_sym("(");
                    auto sub = make(ExprKind::Subquery, peek().begin);
                    sub->subquery = parse_query();
                    expect_sym(")");
                    rhs = finish(sub);
                    op += " " + quant;
                } else {
                    rhs = parse_additive();
                }
                auto e = make(ExprKind::Binary, lhs->span.begin);
                e->op = op;
                e->children = {lhs, rhs};
                lhs = finish(e);
                continue;
            }
            bool negated = false;
            std::size_t save = pos_;
            if (accept_word("not")) negated = true;
            if (accept_word("between")) {
                accept_word("symmetric");
                auto low = parse_additive();
                expect_word("and");
                auto high = parse_additive();
                auto e = make(ExprKind::Between, lhs->span.begin);
                e->negated = negated;
                e->children = {lhs, low, high};
                lhs = finish(e);
                continue;
            }
            if (accept_word("in")) {
                expect_sym("(");
                if (peek_word("select") || peek_word("with")) {
                    auto e = make(ExprKind::InSubquery, lhs->span.begin);
                    e->negated = negated;
                    e->children = {lhs};
                    e->subquery = parse_query();
                    expect_sym(")");
                    lhs = finish(e);
                } else {
                    auto e = make(ExprKind::InList, lhs->span.begin);
                    e->negated = negated;
                    e->children = {lhs};
                    if (!peek_sym(")")) {
                        do {
                            e->children.push_back(parse_expr());
                        } while (accept_sym(","));
                    }
                    expect_sym(")");
                    lhs = finish(e);
                }
                continue;
            }
            if (peek_word("like") || peek_word("ilike")) {
                std::string op = next().text;
                auto rhs = parse_additive();
                if (accept_word("escape")) parse_additive();
                auto e = make(ExprKind::Binary, lhs->span.begin);
                e->op = op;
                e->negated = negated;
                e->children = {lhs, rhs};
                lhs = finish(e);
                continue;
            }
            if (accept_word("similar")) {
                expect_word("to");
                auto rhs = parse_additive();
                auto e = make(ExprKind::Binary, lhs->span.begin);
                e->op = "similar";
                e->negated = negated;
                e->children = {lhs, rhs};
                lhs = finish(e);
                continue;
            }
            if (negated) {
                pos_ = save;
                break;
            }
            if (accept_word("is")) {
                bool neg = accept_word("not");
                auto e = make(ExprKind::IsNull, lhs->span.begin);
                e->children = {lhs};
                e->negated = neg;
                if (accept_word("null")) {
                    e->op = "null";
                } else if (accept_word("true")) {
                    e->op = "true";
                } else if (accept_word("false")) {
                    e->op = "false";
                } else if (accept_word("distinct")) {
                    expect_word("from");
                    e->kind = ExprKind::Binary;
                    e->op = neg ? "=" : "<>";
                    e->negated = false;
                    e->children.push_back(parse_additive());
                } else {
                    fail("expected NULL after IS");
                }
                lhs = finish(e);
                continue;
            }
            break;
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        auto lhs = parse_multiplicative();
        while (peek_sym("+") || peek_sym("-") || peek_sym("||")) {
            std::string op = next().text;
            auto rhs = parse_multiplicative();
            auto e = make(ExprKind::Binary, lhs->span.begin);
            e->op = op;
            e->children = {lhs, rhs};
            lhs = finish(e);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        auto lhs = parse_unary();
        while (peek_sym("*") || peek_sym("/") || peek_sym("%")) {
            std::string op = next().text;
            auto rhs = parse_unary();
            auto e = make(ExprKind::Binary, lhs->span.begin);
            e->op = op;
            e->children = {lhs, rhs};
            lhs = finish(e);
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (peek_sym("-") || peek_sym("+")) {
            std::size_t begin = peek().begin;
            std::string op = next().text;
            auto inner = parse_unary();
            auto e = make(ExprKind::Unary, begin);
            e->op = op;
            e->children = {inner};
            return finish(e);
        }
        auto e = parse_primary();
        while (accept_sym("::")) {
            auto cast = make(ExprKind::Function, e->span.begin);
            cast->op = "cast";
            cast->text = parse_type_name();
            cast->children = {e};
            e = finish(cast);
        }
        return e;
    }

    std::string parse_type_name() {
        std::string name = parse_name();
        while (peek().kind == TokKind::Ident && !is_reserved(peek().text) &&
               (peek().text == "precision" || peek().text == "varying" ||
                peek().text == "without" || peek().text == "with" || peek().text == "time" ||
                peek().text == "zone")) {
            name += " " + next().text;
        }
        if (accept_sym("(")) {
            while (!peek_sym(")")) {
                if (peek().kind == TokKind::End) fail("unterminated type modifier");
                next();
            }
            expect_sym(")");
        }
        return name;
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        std::size_t begin = t.begin;
        switch (t.kind) {
            case TokKind::Number: {
                auto e = make(ExprKind::Number, begin);
                e->text = next().text;
                return finish(e);
            }
            case TokKind::String: {
                auto e = make(ExprKind::String, begin);
                e->text = next().text;
                return finish(e);
            }
            case TokKind::Symbol: {
                if (t.text == "*") {
                    next();
                    return finish(make(ExprKind::Star, begin));
                }
                if (t.text == "(") {
                    next();
                    if (peek_word("select") || peek_word("with")) {
                        auto e = make(ExprKind::Subquery, begin);
                        e->subquery = parse_query();
                        expect_sym(")");
                        return finish(e);
                    }
                    auto first = parse_expr();
                    if (accept_sym(",")) {
                        auto tup = make(ExprKind::Tuple, begin);
                        tup->children.push_back(first);
                        do {
                            tup->children.push_back(parse_expr());
                        } while (accept_sym(","));
                        expect_sym(")");
                        return finish(tup);
                    }
                    expect_sym(")");
                    // keep parentheses in the span so predicate text stays faithful
                    first->span.begin = begin;
                    first->span.end = prev_end();
                    return first;
                }
                fail("unexpected symbol");
            }
            case TokKind::End: fail("unexpected end of input");
            case TokKind::QuotedIdent:
            case TokKind::Ident: break;
        }

        const std::string word = t.text;
        if (t.kind == TokKind::Ident) {
            if (word == "null") {
                next();
                return finish(make(ExprKind::Null, begin));
            }
            if (word == "true" || word == "false") {
                next();
                auto e = make(ExprKind::Bool, begin);
                e->text = word;
                return finish(e);
            }
            if ((word == "date" || word == "timestamp" || word == "time") &&
                peek(1).kind == TokKind::String) {
                next();
                auto e = make(ExprKind::TypedLiteral, begin);
                e->op = word;
                e->text = next().text;
                return finish(e);
            }
            if (word == "interval") {
                next();
                auto e = make(ExprKind::TypedLiteral, begin);
                e->op = "interval";
                if (peek().kind == TokKind::String || peek().kind == TokKind::Number)
                    e->text = next().text;
                else
                    fail("expected interval literal");
                static constexpr std::array<std::string_view, 14> units{
                    "year", "years", "month", "months", "day",  "days", "hour",
                    "hours", "minute", "minutes", "second", "seconds", "week", "weeks"};
                for (auto u : units) {
                    if (peek_word(u)) {
                        e->text += " " + next().text;
                        if (accept_word("to")) e->text += " to " + next().text;
                        break;
                    }
                }
                if (peek_sym("(")) {
                    next();
                    parse_expr();
                    expect_sym(")");
                }
                return finish(e);
            }
            if (word == "exists" || (word == "not" && peek_word("exists", 1))) {
                bool negated = word == "not";
                next();
                if (negated) next();
                expect_sym("(");
                auto e = make(ExprKind::Exists, begin);
                e->negated = negated;
                e->subquery = parse_query();
                expect_sym(")");
                return finish(e);
            }
            if (word == "case") return parse_case();
            if (word == "cast" && peek_sym("(", 1)) {
                next();
                next();
                auto e = make(ExprKind::Function, begin);
                e->op = "cast";
                e->children.push_back(parse_expr());
                expect_word("as");
                e->text = parse_type_name();
                expect_sym(")");
                return finish(e);
            }
            if (word == "extract" && peek_sym("(", 1)) {
                next();
                next();
                auto e = make(ExprKind::Function, begin);
                e->op = "extract";
                e->text = next().text;  // field
                expect_word("from");
                e->children.push_back(parse_expr());
                expect_sym(")");
                return finish(e);
            }
            if ((word == "substring" || word == "substr") && peek_sym("(", 1)) {
                next();
                next();
                auto e = make(ExprKind::Function, begin);
                e->op = "substring";
                e->children.push_back(parse_expr());
                if (accept_word("from")) {
                    e->children.push_back(parse_expr());
                    if (accept_word("for")) e->children.push_back(parse_expr());
                } else {
                    while (accept_sym(",")) e->children.push_back(parse_expr());
                }
                expect_sym(")");
                return finish(e);
            }
            if (word == "position" && peek_sym("(", 1)) {
                next();
                next();
                auto e = make(ExprKind::Function, begin);
                e->op = "position";
                e->children.push_back(parse_additive());
                expect_word("in");
                e->children.push_back(parse_expr());
                expect_sym(")");
                return finish(e);
            }
            if (is_reserved(word)) fail("unexpected keyword");
        }

        // identifier: column, qualified column, q.*, or function call
        std::string first = next().text;
        if (peek_sym("(")) {
            next();
            auto e = make(ExprKind::Function, begin);
            e->op = first;
            if (accept_sym("*")) {
                auto star = make(ExprKind::Star, toks_[pos_ - 1].begin);
                e->children.push_back(finish(star));
            } else if (!peek_sym(")")) {
                if (accept_word("distinct")) e->text = "distinct";
                do {
                    e->children.push_back(parse_expr());
                } while (accept_sym(","));
            }
            expect_sym(")");
            if (accept_word("filter")) {
                expect_sym("(");
                expect_word("where");
                e->children.push_back(parse_expr());
                expect_sym(")");
            }
            if (accept_word("over")) skip_parenthesised();
            return finish(e);
        }
        if (accept_sym(".")) {
            if (accept_sym("*")) {
                auto e = make(ExprKind::Star, begin);
                e->qualifier = first;
                return finish(e);
            }
            std::string second = parse_any_name();
            if (accept_sym(".")) {  // schema.table.column
                std::string third = parse_any_name();
                auto e = make(ExprKind::Column, begin);
                e->qualifier = second;
                e->text = third;
                return finish(e);
            }
            auto e = make(ExprKind::Column, begin);
            e->qualifier = first;
            e->text = second;
            return finish(e);
        }
        auto e = make(ExprKind::Column, begin);
        e->text = first;
        return finish(e);
    }

    std::string parse_any_name() {
        const Token& t = peek();
        if (t.kind == TokKind::Ident || t.kind == TokKind::QuotedIdent) {
            next();
            return t.text;
        }
        fail("expected column name");
    }

    void skip_parenthesised() {
        expect_sym("(");
        int depth = 1;
        while (depth > 0) {
            if (peek().kind == TokKind::End) fail("unbalanced parentheses");
            if (peek_sym("(")) ++depth;
            if (peek_sym(")")) --depth;
            next();
        }
    }

    ExprPtr parse_case() {
        std::size_t begin = next().begin;
        auto e = make(ExprKind::Case, begin);
        if (!peek_word("when")) {
            e->has_case_operand = true;
            e->children.push_back(parse_expr());
        }
        while (accept_word("when")) {
            e->children.push_back(parse_expr());
            expect_word("then");
            e->children.push_back(parse_expr());
        }
        if (accept_word("else")) {
            e->has_else = true;
            e->children.push_back(parse_expr());
        }
        expect_word("end");
        return finish(e);
    }

    const std::string& src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

std::shared_ptr<SelectStmt> parse_select(const std::string& sql) {
    Parser p(sql);
    return p.parse_statement();
}

ExprPtr parse_expression(const std::string& text) {
    Parser p(text);
    return p.parse_standalone_expr();
}

std::string span_text(const std::string& source, Span span) {
    std::string out;
    bool in_string = false;
    bool pending_space = false;
    for (std::size_t i = span.begin; i < span.end && i < source.size(); ++i) {
        char c = source[i];
        if (c == '\'') in_string = !in_string;
        if (!in_string && std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<ExprPtr> conjuncts(const ExprPtr& expr) {
    std::vector<ExprPtr> out;
    if (!expr) return out;
    if (expr->kind == ExprKind::Binary && expr->op == "and") {
        for (const auto& c : expr->children) {
            auto sub = conjuncts(c);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    } else {
        out.push_back(expr);
    }
    return out;
}

}  // namespace idxadvis::sql
