#pragma once

#include <variant>

#include "beliefdb/store.hpp"

namespace beliefdb {

struct VarRef {
    std::string name;
    friend bool operator==(const VarRef&, const VarRef&) = default;
    friend std::strong_ordering operator<=>(const VarRef&, const VarRef&) = default;
};

using Term = std::variant<VarRef, Value>;
using PathTerm = std::variant<VarRef, UserId>;

enum class CompareOp { eq, ne, lt, gt, le, ge };
const char* compare_op_text(CompareOp op);

struct Comparison {
    Term lhs;
    CompareOp op = CompareOp::eq;
    Term rhs;
};

// One modal subgoal: a belief-path pattern, a sign and a relational atom.
struct Subgoal {
    std::vector<PathTerm> path;
    std::string relation;
    Sign sign = Sign::positive;
    std::vector<Term> args;
};

struct HeadItem {
    std::string var;
    bool as_user_name = false; // render the bound user id through U.name
};

struct Bcq {
    std::vector<HeadItem> head;
    std::vector<Subgoal> subgoals;
    std::vector<Comparison> arithmetic;
};

// Every variable must occur in a belief-path pattern or in the arguments of a
// positive subgoal; arithmetic-only variables make the query unsafe.
bool check_safety(const Bcq& q);

// Compiled term: a variable slot or a constant.
struct CTerm {
    int var = -1;
    Value constant;
    bool is_var() const { return var >= 0; }
};

struct CComparison {
    CTerm lhs;
    CompareOp op;
    CTerm rhs;
};

// One temporary table per subgoal: E*(0, w-bar, z) join V(z,t,_,s,_) join R*(t, x-bar),
// materialized as (path users, full tuple values, sign).
struct TempTableSpec {
    std::string relation;
    std::vector<CTerm> path;
    std::size_t arity = 0;
};

// Final-query condition for one subgoal. Positive: sign '+' plus equalities on
// every path and argument column. Negative: path and key equalities, then
// stated rows must match all remaining columns while unstated rows must be
// positive and differ somewhere.
struct SubgoalCondition {
    Sign sign = Sign::positive;
    std::vector<CTerm> path;
    std::vector<CTerm> args;
};

struct Plan {
    std::vector<TempTableSpec> temp_tables;
    std::vector<SubgoalCondition> conditions;
    std::vector<CComparison> arithmetic;
    std::vector<int> eval_order;                 // positives first, then orderable negatives
    std::vector<std::vector<int>> arith_after;   // comparisons decidable after each step
    std::vector<std::pair<int, bool>> head;      // (var slot, as_user_name)
    std::vector<std::string> head_names;
    std::vector<std::string> var_names;
    std::string text; // printable translation, Algorithm-1 style

    const std::string& describe() const { return text; }
};

// Checks safety, typing and arity, then builds the two-phase plan.
Plan translate(const Bcq& q, const Schema& schema);

struct ResultSet {
    std::vector<std::string> columns;
    std::set<std::vector<Value>> rows;
};

ResultSet evaluate(const Plan& plan, const Store& store);

ResultSet query(const Store& store, const Bcq& q);
ResultSet query(const BeliefDatabase& db, const Bcq& q);

} // namespace beliefdb
