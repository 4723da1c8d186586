#include "beliefdb/query.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace beliefdb {

const char* compare_op_text(CompareOp op) {
    switch (op) {
        case CompareOp::eq: return "=";
        case CompareOp::ne: return "<>";
        case CompareOp::lt: return "<";
        case CompareOp::gt: return ">";
        case CompareOp::le: return "<=";
        case CompareOp::ge: return ">=";
    }
    return "?";
}

namespace {

template <class T>
const VarRef* as_var(const T& term) {
    return std::get_if<VarRef>(&term);
}

std::set<std::string> collect_vars(const Bcq& q) {
    std::set<std::string> vars;
    for (const Subgoal& g : q.subgoals) {
        for (const PathTerm& t : g.path)
            if (const VarRef* v = as_var(t)) vars.insert(v->name);
        for (const Term& t : g.args)
            if (const VarRef* v = as_var(t)) vars.insert(v->name);
    }
    for (const Comparison& c : q.arithmetic) {
        if (const VarRef* v = as_var(c.lhs)) vars.insert(v->name);
        if (const VarRef* v = as_var(c.rhs)) vars.insert(v->name);
    }
    for (const HeadItem& h : q.head) vars.insert(h.var);
    return vars;
}

} // namespace

bool check_safety(const Bcq& q) {
    std::set<std::string> positive;
    for (const Subgoal& g : q.subgoals) {
        for (const PathTerm& t : g.path)
            if (const VarRef* v = as_var(t)) positive.insert(v->name);
        if (g.sign == Sign::positive)
            for (const Term& t : g.args)
                if (const VarRef* v = as_var(t)) positive.insert(v->name);
    }
    for (const std::string& v : collect_vars(q))
        if (!positive.count(v)) return false;
    return true;
}

namespace {

struct Compiler {
    const Schema& schema;
    std::map<std::string, int> slots;
    std::vector<std::string> names;

    int slot(const std::string& name) {
        auto it = slots.find(name);
        if (it != slots.end()) return it->second;
        int s = static_cast<int>(names.size());
        slots.emplace(name, s);
        names.push_back(name);
        return s;
    }
    CTerm compile(const PathTerm& t) {
        if (const VarRef* v = as_var(t)) return {slot(v->name), Value{}};
        return {-1, Value(std::get<UserId>(t))};
    }
    CTerm compile(const Term& t) {
        if (const VarRef* v = as_var(t)) return {slot(v->name), Value{}};
        return {-1, std::get<Value>(t)};
    }
};

std::string term_text(const CTerm& t, const std::vector<std::string>& names) {
    if (t.is_var()) return names[static_cast<std::size_t>(t.var)];
    if (t.constant.is_int()) return t.constant.to_display();
    return "'" + t.constant.to_display() + "'";
}

std::string render_plan(const Plan& plan) {
    const auto& names = plan.var_names;
    std::ostringstream os;
    for (std::size_t i = 0; i < plan.temp_tables.size(); ++i) {
        const TempTableSpec& tt = plan.temp_tables[i];
        os << "T" << i + 1 << "(";
        for (std::size_t j = 0; j < tt.path.size(); ++j) os << "w" << i + 1 << "_" << j + 1 << ", ";
        for (std::size_t j = 0; j < tt.arity; ++j) os << "x" << i + 1 << "_" << j + 1 << ", ";
        os << "s" << i + 1 << ") :- E*(0, w" << i + 1 << ", z), " << tt.relation
           << "_V(z, t, _, s" << i + 1 << ", _), " << tt.relation << "*(t, x" << i + 1 << ")\n";
    }
    os << "Q(";
    for (std::size_t i = 0; i < plan.head_names.size(); ++i)
        os << (i ? ", " : "") << plan.head_names[i];
    os << ") :- ";
    for (std::size_t i = 0; i < plan.temp_tables.size(); ++i) os << "T" << i + 1 << ", ";
    for (std::size_t i = 0; i < plan.conditions.size(); ++i) os << "C" << i + 1 << (i + 1 < plan.conditions.size() ? ", " : "");
    os << "\n";
    for (std::size_t i = 0; i < plan.conditions.size(); ++i) {
        const SubgoalCondition& c = plan.conditions[i];
        std::string s = "s" + std::to_string(i + 1);
        auto w = [&](std::size_t j) { return "w" + std::to_string(i + 1) + "_" + std::to_string(j + 1); };
        auto x = [&](std::size_t j) { return "x" + std::to_string(i + 1) + "_" + std::to_string(j + 1); };
        os << "C" << i + 1 << ": ";
        bool first = true;
        auto conj = [&](const std::string& piece) {
            if (!first) os << ", ";
            os << piece;
            first = false;
        };
        for (std::size_t j = 0; j < c.path.size(); ++j)
            conj(w(j) + " = " + term_text(c.path[j], names));
        if (c.sign == Sign::positive) {
            conj(s + " = '+'");
            for (std::size_t j = 0; j < c.args.size(); ++j)
                conj(x(j) + " = " + term_text(c.args[j], names));
        } else {
            conj(x(0) + " = " + term_text(c.args[0], names));
            std::string stated = "(" + s + " = '-'";
            std::string unstated = "(" + s + " = '+' AND (";
            bool any = false;
            for (std::size_t j = 1; j < c.args.size(); ++j) {
                stated += " AND " + x(j) + " = " + term_text(c.args[j], names);
                if (any) unstated += " OR ";
                unstated += x(j) + " <> " + term_text(c.args[j], names);
                any = true;
            }
            stated += ")";
            unstated += any ? "))" : "false))";
            conj("(" + stated + " OR " + unstated + ")");
        }
        os << "\n";
    }
    for (const CComparison& c : plan.arithmetic)
        os << "where " << term_text(c.lhs, names) << " " << compare_op_text(c.op) << " "
           << term_text(c.rhs, names) << "\n";
    return std::move(os).str();
}

} // namespace

Plan translate(const Bcq& q, const Schema& schema) {
    if (!check_safety(q)) throw std::invalid_argument("unsafe query");

    Plan plan;
    Compiler cc{schema, {}, {}};

    std::set<std::string> body_vars;
    for (const Subgoal& g : q.subgoals) {
        const RelationDef& rel = schema.require(g.relation);
        if (g.args.size() != rel.arity())
            throw std::invalid_argument("subgoal over " + g.relation + " expects " +
                                        std::to_string(rel.arity()) + " arguments");
        for (std::size_t i = 0; i < g.args.size(); ++i) {
            if (const Value* v = std::get_if<Value>(&g.args[i]))
                if (v->type() != rel.attributes[i].second)
                    throw std::invalid_argument("constant type mismatch on " + rel.name + "." +
                                                rel.attributes[i].first);
            if (const VarRef* v = as_var(g.args[i])) body_vars.insert(v->name);
        }
        for (std::size_t i = 1; i < g.path.size(); ++i) {
            const UserId* a = std::get_if<UserId>(&g.path[i - 1]);
            const UserId* b = std::get_if<UserId>(&g.path[i]);
            if (a && b && *a == *b)
                throw std::invalid_argument("belief-path pattern repeats a user consecutively");
        }
        for (const PathTerm& t : g.path)
            if (const VarRef* v = as_var(t)) body_vars.insert(v->name);

        TempTableSpec tt;
        tt.relation = g.relation;
        tt.arity = rel.arity();
        for (const PathTerm& t : g.path) tt.path.push_back(cc.compile(t));
        plan.temp_tables.push_back(std::move(tt));

        SubgoalCondition cond;
        cond.sign = g.sign;
        cond.path = plan.temp_tables.back().path;
        for (const Term& t : g.args) cond.args.push_back(cc.compile(t));
        plan.conditions.push_back(std::move(cond));
    }

    for (const HeadItem& h : q.head) {
        if (!body_vars.count(h.var))
            throw std::invalid_argument("head variable " + h.var + " does not occur in the body");
        plan.head.push_back({cc.slot(h.var), h.as_user_name});
        plan.head_names.push_back(h.var);
    }
    for (const Comparison& c : q.arithmetic)
        plan.arithmetic.push_back({cc.compile(c.lhs), c.op, cc.compile(c.rhs)});

    // Positives bind everything they touch; negatives follow once every
    // argument is covered by previously bound variables or their own path.
    std::set<int> bound;
    auto term_vars = [&](const SubgoalCondition& c, bool args_only) {
        std::set<int> vars;
        if (!args_only)
            for (const CTerm& t : c.path)
                if (t.is_var()) vars.insert(t.var);
        for (const CTerm& t : c.args)
            if (t.is_var()) vars.insert(t.var);
        return vars;
    };
    std::vector<int> negatives;
    for (std::size_t i = 0; i < plan.conditions.size(); ++i) {
        if (plan.conditions[i].sign == Sign::positive) {
            plan.eval_order.push_back(static_cast<int>(i));
            for (int v : term_vars(plan.conditions[i], false)) bound.insert(v);
        } else {
            negatives.push_back(static_cast<int>(i));
        }
    }
    while (!negatives.empty()) {
        bool placed = false;
        for (std::size_t n = 0; n < negatives.size(); ++n) {
            int i = negatives[n];
            std::set<int> own_path;
            for (const CTerm& t : plan.conditions[static_cast<std::size_t>(i)].path)
                if (t.is_var()) own_path.insert(t.var);
            bool ready = true;
            for (int v : term_vars(plan.conditions[static_cast<std::size_t>(i)], true))
                if (!bound.count(v) && !own_path.count(v)) ready = false;
            if (!ready) continue;
            plan.eval_order.push_back(i);
            for (int v : own_path) bound.insert(v);
            negatives.erase(negatives.begin() + static_cast<std::ptrdiff_t>(n));
            placed = true;
            break;
        }
        if (!placed)
            throw std::invalid_argument(
                "negative subgoals form a cyclic binding dependency; not supported");
    }

    // Schedule each comparison at the earliest step where both sides are bound.
    plan.arith_after.assign(plan.eval_order.size(), {});
    std::set<int> have;
    for (std::size_t k = 0; k < plan.eval_order.size(); ++k) {
        const SubgoalCondition& c = plan.conditions[static_cast<std::size_t>(plan.eval_order[k])];
        for (const CTerm& t : c.path)
            if (t.is_var()) have.insert(t.var);
        if (c.sign == Sign::positive)
            for (const CTerm& t : c.args)
                if (t.is_var()) have.insert(t.var);
        for (std::size_t a = 0; a < plan.arithmetic.size(); ++a) {
            const CComparison& cmp = plan.arithmetic[a];
            bool ok = (!cmp.lhs.is_var() || have.count(cmp.lhs.var)) &&
                      (!cmp.rhs.is_var() || have.count(cmp.rhs.var));
            bool earlier = false;
            for (std::size_t p = 0; p < k; ++p)
                for (int id : plan.arith_after[p])
                    if (id == static_cast<int>(a)) earlier = true;
            if (ok && !earlier) plan.arith_after[k].push_back(static_cast<int>(a));
        }
    }

    plan.var_names = cc.names;
    plan.text = render_plan(plan);
    return plan;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

struct TempRow {
    std::vector<Value> path;
    const std::vector<Value>* args;
    Sign sign;
};

// Materializes one temporary table by walking E* chains from the root.
// Adjacent path positions must bind distinct users (paths live in U-hat-star).
void enumerate_chains(const Store& store, const TempTableSpec& spec,
                      std::vector<std::optional<Value>>& bindings, std::vector<TempRow>& out) {
    const RelationStar& star = store.rstar.at(spec.relation);
    auto rel_it = store.val.find(spec.relation);

    std::vector<Value> path_vals(spec.path.size());
    std::vector<std::pair<int, bool>> local_bound; // walk-local var bindings to undo

    std::function<void(Wid, std::size_t, UserId, bool)> walk = [&](Wid at, std::size_t pos,
                                                                   UserId prev, bool has_prev) {
        if (pos == spec.path.size()) {
            if (rel_it == store.val.end()) return;
            auto world_it = rel_it->second.by_world.find(at);
            if (world_it == rel_it->second.by_world.end()) return;
            for (const auto& [key, slot] : world_it->second)
                for (const VRow& row : slot.rows())
                    out.push_back({path_vals, &star.rows.at(row.tid).values, row.sign});
            return;
        }
        const CTerm& term = spec.path[pos];
        auto step = [&](UserId u) {
            if (has_prev && u == prev) return; // consecutive repeat, outside U-hat-star
            const Wid* next = store.edge_target(at, u);
            if (!next) return;
            path_vals[pos] = Value(u);
            walk(*next, pos + 1, u, true);
        };
        if (!term.is_var()) {
            step(term.constant.as_int());
            return;
        }
        auto& slot = bindings[static_cast<std::size_t>(term.var)];
        if (slot.has_value()) {
            step(slot->as_int());
            return;
        }
        auto it = store.edges.find(at);
        if (it == store.edges.end()) return;
        for (const auto& [u, target] : it->second) {
            if (has_prev && u == prev) continue;
            slot = Value(u);
            path_vals[pos] = Value(u);
            walk(target, pos + 1, u, true);
            slot.reset();
        }
    };
    walk(0, 0, 0, false);
}

bool value_compare(const Value& a, CompareOp op, const Value& b) {
    switch (op) {
        case CompareOp::eq: return a == b;
        case CompareOp::ne: return !(a == b);
        default: break;
    }
    if (a.type() != b.type())
        throw std::invalid_argument("ordered comparison between int and text");
    auto cmp = a <=> b;
    switch (op) {
        case CompareOp::lt: return cmp < 0;
        case CompareOp::gt: return cmp > 0;
        case CompareOp::le: return cmp <= 0;
        case CompareOp::ge: return cmp >= 0;
        default: return false;
    }
}

struct Joiner {
    const Plan& plan;
    const Store& store;
    std::vector<std::vector<TempRow>> tables;
    std::vector<std::map<Value, std::vector<std::size_t>>> key_index; // for negative subgoals
    std::vector<std::optional<Value>> bindings;
    ResultSet result;

    const Value& term_value(const CTerm& t) const {
        if (!t.is_var()) return t.constant;
        const auto& slot = bindings[static_cast<std::size_t>(t.var)];
        if (!slot) throw std::logic_error("unbound variable during join");
        return *slot;
    }

    bool bind_or_compare(const CTerm& t, const Value& v, std::vector<int>& trail) {
        if (!t.is_var()) return t.constant == v;
        auto& slot = bindings[static_cast<std::size_t>(t.var)];
        if (slot) return *slot == v;
        slot = v;
        trail.push_back(t.var);
        return true;
    }

    void undo(std::vector<int>& trail, std::size_t mark) {
        while (trail.size() > mark) {
            bindings[static_cast<std::size_t>(trail.back())].reset();
            trail.pop_back();
        }
    }

    bool arithmetic_after(std::size_t step) {
        for (int a : plan.arith_after[step]) {
            const CComparison& c = plan.arithmetic[static_cast<std::size_t>(a)];
            if (!value_compare(term_value(c.lhs), c.op, term_value(c.rhs))) return false;
        }
        return true;
    }

    void emit() {
        std::vector<Value> row;
        row.reserve(plan.head.size());
        for (const auto& [slot, as_name] : plan.head) {
            const auto& v = bindings[static_cast<std::size_t>(slot)];
            if (!v) throw std::logic_error("unbound head variable");
            if (as_name) {
                if (!v->is_int()) throw std::invalid_argument("user-name head over a non-user value");
                const UserRow* u = store.user_by_id(v->as_int());
                row.push_back(Value(u && !u->name.empty() ? u->name : v->to_display()));
            } else {
                row.push_back(*v);
            }
        }
        result.rows.insert(std::move(row));
    }

    void join(std::size_t step, std::vector<int>& trail) {
        if (step == plan.eval_order.size()) {
            emit();
            return;
        }
        std::size_t idx = static_cast<std::size_t>(plan.eval_order[step]);
        const SubgoalCondition& cond = plan.conditions[idx];
        const std::vector<TempRow>& rows = tables[idx];

        if (cond.sign == Sign::positive) {
            for (const TempRow& row : rows) {
                if (row.sign != Sign::positive) continue;
                std::size_t mark = trail.size();
                bool ok = true;
                for (std::size_t j = 0; ok && j < cond.path.size(); ++j)
                    ok = bind_or_compare(cond.path[j], row.path[j], trail);
                for (std::size_t j = 0; ok && j < cond.args.size(); ++j)
                    ok = bind_or_compare(cond.args[j], (*row.args)[j], trail);
                if (ok && arithmetic_after(step)) join(step + 1, trail);
                undo(trail, mark);
            }
            return;
        }

        // Negative subgoal: a witness row must exist; only its path columns
        // bind new variables, and distinct extensions recurse once each.
        std::vector<int> new_vars;
        for (const CTerm& t : cond.path)
            if (t.is_var() && !bindings[static_cast<std::size_t>(t.var)])
                new_vars.push_back(t.var);
        std::sort(new_vars.begin(), new_vars.end());
        new_vars.erase(std::unique(new_vars.begin(), new_vars.end()), new_vars.end());
        std::set<std::vector<Value>> seen;

        auto consider = [&](const TempRow& row) {
            std::size_t mark = trail.size();
            bool ok = true;
            for (std::size_t j = 0; ok && j < cond.path.size(); ++j)
                ok = bind_or_compare(cond.path[j], row.path[j], trail);
            // key equality
            if (ok) ok = term_value(cond.args[0]) == (*row.args)[0];
            if (ok) {
                if (row.sign == Sign::negative) { // stated negative: the whole tuple matches
                    for (std::size_t j = 1; ok && j < cond.args.size(); ++j)
                        ok = term_value(cond.args[j]) == (*row.args)[j];
                } else { // unstated: a different positive tuple owns the key
                    bool differs = false;
                    for (std::size_t j = 1; !differs && j < cond.args.size(); ++j)
                        differs = !(term_value(cond.args[j]) == (*row.args)[j]);
                    ok = differs;
                }
            }
            if (ok) {
                std::vector<Value> ext;
                for (int v : new_vars) ext.push_back(*bindings[static_cast<std::size_t>(v)]);
                if (seen.insert(ext).second && arithmetic_after(step)) join(step + 1, trail);
            }
            undo(trail, mark);
        };

        // Probe by key when it is already determined.
        bool key_known = !cond.args[0].is_var() ||
                         bindings[static_cast<std::size_t>(cond.args[0].var)].has_value();
        if (key_known && !key_index[idx].empty()) {
            auto it = key_index[idx].find(term_value(cond.args[0]));
            if (it != key_index[idx].end())
                for (std::size_t r : it->second) consider(rows[r]);
        } else {
            for (const TempRow& row : rows) consider(row);
        }
    }
};

} // namespace

ResultSet evaluate(const Plan& plan, const Store& store) {
    Joiner j{plan, store, {}, {}, {}, {}};
    j.bindings.assign(plan.var_names.size(), std::nullopt);
    j.tables.resize(plan.temp_tables.size());
    j.key_index.resize(plan.temp_tables.size());
    for (std::size_t i = 0; i < plan.temp_tables.size(); ++i) {
        enumerate_chains(store, plan.temp_tables[i], j.bindings, j.tables[i]);
        if (plan.conditions[i].sign == Sign::negative)
            for (std::size_t r = 0; r < j.tables[i].size(); ++r)
                j.key_index[i][(*j.tables[i][r].args)[0]].push_back(r);
    }
    j.result.columns = plan.head_names;
    std::vector<int> trail;
    j.join(0, trail);
    return std::move(j.result);
}

ResultSet query(const Store& store, const Bcq& q) {
    return evaluate(translate(q, store.schema), store);
}

ResultSet query(const BeliefDatabase& db, const Bcq& q) {
    Store st = materialize(db);
    return query(st, q);
}

} // namespace beliefdb
