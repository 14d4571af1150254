#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace idxadvis::sql {

struct SelectStmt;

/// Character span [begin, end) into the statement text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
};

enum class ExprKind {
    Column,       // [qualifier.]name
    Star,         // * or q.*
    Number,
    String,
    Null,
    Bool,
    TypedLiteral, // date '...', timestamp '...', interval '...' unit
    Unary,        // op: "-", "+", "not"
    Binary,       // op: and, or, =, <>, <, >, <=, >=, +, -, *, /, %, ||, like, ilike
    Between,      // children: value, low, high
    InList,       // children: value, items...
    InSubquery,   // children: value; subquery
    Exists,       // subquery
    Subquery,     // scalar subquery
    IsNull,       // children: value
    Function,     // name(args), also cast/extract/substring normalised to functions
    Case,         // children: [operand], when, then, ..., [else]
    Tuple,        // (a, b, ...)
};

struct Expr {
    ExprKind kind = ExprKind::Null;
    std::string op;          // operator / function name / literal type tag (lower-case)
    std::string text;        // literal value, column name
    std::string qualifier;   // column qualifier (lower-case)
    bool negated = false;    // NOT BETWEEN / NOT IN / NOT LIKE / IS NOT NULL / NOT EXISTS
    bool has_case_operand = false;
    bool has_else = false;
    std::vector<std::shared_ptr<Expr>> children;
    std::shared_ptr<SelectStmt> subquery;
    Span span;

    // Filled in by name resolution.
    std::string bound_table;
    std::string bound_column;
    int bound_instance = -1;
};

using ExprPtr = std::shared_ptr<Expr>;

struct SelectItem {
    ExprPtr expr;
    std::string alias;
};

enum class JoinType { Inner, Left, Right, Full, Cross };

struct FromItem {
    enum class Kind { Table, Derived, Join } kind = Kind::Table;
    // Table
    std::string table;
    // Table / Derived
    std::string alias;
    std::vector<std::string> column_aliases;
    std::shared_ptr<SelectStmt> derived;
    // Join
    JoinType join_type = JoinType::Inner;
    bool natural = false;
    std::shared_ptr<FromItem> left;
    std::shared_ptr<FromItem> right;
    ExprPtr on;
    std::vector<std::string> using_columns;
};

using FromItemPtr = std::shared_ptr<FromItem>;

struct SelectCore {
    bool distinct = false;
    std::vector<SelectItem> items;
    std::vector<FromItemPtr> from;
    ExprPtr where;
    std::vector<ExprPtr> group_by;
    ExprPtr having;
    std::shared_ptr<SelectStmt> nested;  // parenthesised set operand
};

struct OrderItem {
    ExprPtr expr;
    bool descending = false;
};

struct Cte {
    std::string name;
    std::vector<std::string> column_aliases;
    std::shared_ptr<SelectStmt> body;
};

struct SelectStmt {
    std::vector<Cte> ctes;
    std::vector<SelectCore> cores;  // joined by UNION / INTERSECT / EXCEPT
    std::vector<OrderItem> order_by;
    ExprPtr limit;
    ExprPtr offset;
};

/// Parses one SELECT statement (optionally WITH-prefixed, optionally
/// terminated by ';'). Throws ParseError on malformed input or on any
/// non-SELECT statement.
std::shared_ptr<SelectStmt> parse_select(const std::string& sql);

/// Parses a standalone scalar/boolean expression.
ExprPtr parse_expression(const std::string& text);

/// Whitespace-collapsed source text of a span.
std::string span_text(const std::string& source, Span span);

/// Splits an expression on top-level AND.
std::vector<ExprPtr> conjuncts(const ExprPtr& expr);

}  // namespace idxadvis::sql
