#include "beliefdb/session.hpp"

#include <algorithm>

namespace beliefdb {

namespace {

using sql::MatchCondition;

bool match_tuple(const std::vector<Value>& values, const std::vector<MatchCondition>& conds) {
    for (const MatchCondition& m : conds) {
        const Value& lhs = values[static_cast<std::size_t>(m.column)];
        const Value* rhs;
        if (const int* col = std::get_if<int>(&m.rhs))
            rhs = &values[static_cast<std::size_t>(*col)];
        else
            rhs = &std::get<Value>(m.rhs);
        bool ok;
        switch (m.op) {
            case CompareOp::eq: ok = lhs == *rhs; break;
            case CompareOp::ne: ok = !(lhs == *rhs); break;
            case CompareOp::lt: ok = lhs < *rhs; break;
            case CompareOp::gt: ok = lhs > *rhs; break;
            case CompareOp::le: ok = lhs <= *rhs; break;
            case CompareOp::ge: ok = lhs >= *rhs; break;
            default: ok = false;
        }
        if (!ok) return false;
    }
    return true;
}

// Explicit tuples with the requested sign stated at path w, filtered by the
// where conditions. Empty when the world was never created.
std::vector<Tuple> matching_explicit(const Store& store, const BeliefPath& w,
                                     const std::string& relation, Sign sign,
                                     const std::vector<MatchCondition>& conds) {
    std::vector<Tuple> out;
    auto resolved = store.follow(0, w.users);
    if (!resolved || store.depth.at(*resolved) != static_cast<int>(w.depth())) return out;
    auto rel_it = store.val.find(relation);
    if (rel_it == store.val.end()) return out;
    auto world_it = rel_it->second.by_world.find(*resolved);
    if (world_it == rel_it->second.by_world.end()) return out;
    const RelationStar& star = store.rstar.at(relation);
    for (const auto& [key, slot] : world_it->second)
        for (const VRow& row : slot.rows()) {
            if (!row.explicit_row || row.sign != sign) continue;
            const std::vector<Value>& values = star.rows.at(row.tid).values;
            if (match_tuple(values, conds)) out.push_back({relation, values});
        }
    std::sort(out.begin(), out.end());
    return out;
}

ExecResult run_select(Store& store, const sql::SelectStmt& stmt) {
    Bcq q = sql::lower_select(stmt, store.schema, store.users);
    ExecResult r;
    r.kind = ExecResult::Kind::rows;
    r.rows = query(store, q);
    for (const sql::ColumnRef& c : stmt.select_list)
        r.column_labels.push_back(c.alias.empty() ? c.column : c.alias + "." + c.column);
    r.rows.columns = r.column_labels;
    return r;
}

ExecResult run_dml(Store& store, const sql::Statement& stmt) {
    ExecResult r;
    r.kind = ExecResult::Kind::dml;
    sql::DmlOp op = sql::lower_dml(stmt, store.schema, store.users);

    if (const sql::InsertOp* ins = std::get_if<sql::InsertOp>(&op)) {
        UpdateOutcome out = insert_statement(store, {ins->path, ins->tuple, ins->sign});
        r.matched = 1;
        (out.success ? r.applied : r.rejected) += 1;
        r.message = out.success ? "1 statement inserted"
                                : "insert rejected (already stated or in conflict with explicit "
                                  "beliefs)";
        return r;
    }
    if (const sql::DeleteOp* del = std::get_if<sql::DeleteOp>(&op)) {
        std::vector<Tuple> victims =
            matching_explicit(store, del->path, del->relation, del->sign, del->where);
        r.matched = static_cast<long>(victims.size());
        for (const Tuple& t : victims) {
            UpdateOutcome out = delete_tuple(store, del->path, t, del->sign);
            (out.success ? r.applied : r.rejected) += 1;
        }
        r.message = std::to_string(r.applied) + " statement(s) deleted";
        return r;
    }
    const sql::UpdateOp& upd = std::get<sql::UpdateOp>(op);
    std::vector<Tuple> victims =
        matching_explicit(store, upd.path, upd.relation, upd.sign, upd.where);
    r.matched = static_cast<long>(victims.size());
    for (const Tuple& t : victims) {
        Tuple changed = t;
        for (const auto& [col, value] : upd.assignments)
            changed.values[static_cast<std::size_t>(col)] = value;
        if (changed == t) {
            r.applied += 1; // no-op assignment
            continue;
        }
        if (!delete_tuple(store, upd.path, t, upd.sign).success) {
            r.rejected += 1;
            continue;
        }
        if (insert_statement(store, {upd.path, changed, upd.sign}).success) {
            r.applied += 1;
        } else {
            // the new tuple conflicts; put the original back
            insert_statement(store, {upd.path, t, upd.sign});
            r.rejected += 1;
        }
    }
    r.message = std::to_string(r.applied) + " statement(s) updated";
    return r;
}

} // namespace

ExecResult execute_statement(Store& store, const sql::Statement& stmt) {
    if (const auto* create = std::get_if<sql::CreateRelationStmt>(&stmt)) {
        if (create->name == "Users")
            throw std::invalid_argument("'Users' is the built-in user relation");
        RelationDef def{create->name, create->attributes};
        store.add_relation(std::move(def));
        ExecResult r;
        r.kind = ExecResult::Kind::meta;
        r.applied = 1;
        r.message = "relation " + create->name + " created";
        return r;
    }
    if (const auto* adduser = std::get_if<sql::AddUserStmt>(&stmt)) {
        UserId uid = add_user(store, adduser->name);
        ExecResult r;
        r.kind = ExecResult::Kind::meta;
        r.applied = 1;
        r.message = "user " + adduser->name + " registered with uid " + std::to_string(uid);
        return r;
    }
    if (const auto* select = std::get_if<sql::SelectStmt>(&stmt)) return run_select(store, *select);
    return run_dml(store, stmt);
}

ExecResult execute_text(Store& store, std::string_view text) {
    return execute_statement(store, sql::parse_statement(text));
}

} // namespace beliefdb
