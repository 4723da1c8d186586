#pragma once

#include <optional>
#include <stdexcept>
#include <variant>

#include "beliefdb/query.hpp"
#include "beliefdb/store.hpp"

namespace beliefdb::sql {

struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 1;
    int column = 1;
};

struct ParseError : std::runtime_error {
    ParseError(std::string message, SourceSpan at, std::string expected_tokens)
        : std::runtime_error(std::move(message)), span(at), expected(std::move(expected_tokens)) {}
    SourceSpan span;
    std::string expected;
};

struct ColumnRef {
    std::string alias; // empty for bare column names
    std::string column;
    SourceSpan span;
};

struct Literal {
    Value value;
    SourceSpan span;
};

using Operand = std::variant<ColumnRef, Literal>;

struct SqlComparison {
    Operand lhs;
    CompareOp op = CompareOp::eq;
    Operand rhs;
    SourceSpan span;
};

// 'name' literal or a column reference into a Users alias.
struct UserRef {
    std::variant<std::string, ColumnRef> ref;
    SourceSpan span;
};

struct BeliefPrefix {
    std::vector<UserRef> users;
    bool negated = false;
};

struct FromItem {
    std::optional<BeliefPrefix> prefix;
    std::string relation;
    std::string alias; // empty when none was written
    SourceSpan span;
};

struct SelectStmt {
    std::vector<ColumnRef> select_list;
    std::vector<FromItem> from;
    std::vector<SqlComparison> where;
};

struct InsertStmt {
    std::optional<BeliefPrefix> prefix;
    std::string relation;
    std::vector<Literal> values;
    SourceSpan span;
};

struct DeleteStmt {
    std::optional<BeliefPrefix> prefix;
    std::string relation;
    std::vector<SqlComparison> where;
    SourceSpan span;
};

struct UpdateStmt {
    std::optional<BeliefPrefix> prefix;
    std::string relation;
    std::vector<std::pair<ColumnRef, Literal>> assignments;
    std::vector<SqlComparison> where;
    SourceSpan span;
};

// Declaration meta statements; Fig.-1 BeliefSQL has no DDL, so schema and
// users are declared through these (documented extension).
struct CreateRelationStmt {
    std::string name;
    std::vector<std::pair<std::string, ValueType>> attributes;
    SourceSpan span;
};

struct AddUserStmt {
    std::string name;
    SourceSpan span;
};

using Statement = std::variant<SelectStmt, InsertStmt, DeleteStmt, UpdateStmt, CreateRelationStmt,
                               AddUserStmt>;

Statement parse_statement(std::string_view text);
// ';'-separated sequence; empty statements are skipped.
std::vector<Statement> parse_script(std::string_view text);

// Canonical text form; parse(print(s)) == s up to spans and whitespace.
std::string print_statement(const Statement& stmt);

// --- lowering -------------------------------------------------------------

// Maps a select onto a BCQ: belief prefixes become path patterns, Users
// aliases become path variables, column equalities unify variables, other
// comparisons become arithmetic predicates.
Bcq lower_select(const SelectStmt& stmt, const Schema& schema, const std::vector<UserRow>& users);

struct InsertOp {
    BeliefPath path;
    Tuple tuple;
    Sign sign = Sign::positive;
};

struct MatchCondition {
    int column = 0;
    CompareOp op = CompareOp::eq;
    std::variant<Value, int> rhs; // constant or another column
};

struct DeleteOp {
    BeliefPath path;
    std::string relation;
    Sign sign = Sign::positive;
    std::vector<MatchCondition> where;
};

struct UpdateOp {
    BeliefPath path;
    std::string relation;
    Sign sign = Sign::positive;
    std::vector<std::pair<int, Value>> assignments;
    std::vector<MatchCondition> where;
};

using DmlOp = std::variant<InsertOp, DeleteOp, UpdateOp>;

DmlOp lower_dml(const Statement& stmt, const Schema& schema, const std::vector<UserRow>& users);

} // namespace beliefdb::sql
