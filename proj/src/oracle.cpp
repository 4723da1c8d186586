#include "beliefdb/oracle.hpp"

#include <map>
#include <stdexcept>

namespace beliefdb {

namespace {

std::map<BeliefPath, BeliefWorld> explicit_worlds_of(const std::set<BeliefStatement>& statements) {
    std::map<BeliefPath, BeliefWorld> worlds;
    for (const BeliefStatement& s : statements) {
        BeliefWorld& w = worlds[s.path];
        (s.sign == Sign::positive ? w.positive : w.negative).insert(s.tuple);
    }
    return worlds;
}

void require_consistent(const std::map<BeliefPath, BeliefWorld>& worlds, const Schema& schema,
                        const char* who) {
    for (const auto& [path, world] : worlds)
        if (!world_consistent(world, schema))
            throw std::invalid_argument(std::string(who) + ": inconsistent belief database at world " +
                                        path.to_display());
}

// Whether world ∪ {t^s} still satisfies Gamma_1 and Gamma_2.
bool addition_consistent(const BeliefWorld& world, const Tuple& t, Sign s) {
    if (s == Sign::positive) {
        if (world.negative.count(t)) return false;
        for (const Tuple& p : world.positive)
            if (p.relation == t.relation && p.key() == t.key() && !(p == t)) return false;
        return true;
    }
    return world.positive.count(t) == 0;
}

} // namespace

ClosureLevel closure_step(const ClosureLevel& level, const std::set<UserId>& users,
                          const Schema& schema) {
    auto worlds = explicit_worlds_of(level.statements);
    require_consistent(worlds, schema, "closure_step");

    ClosureLevel next{level.depth + 1, level.statements};
    for (const BeliefStatement& s : level.statements) {
        for (UserId i : users) {
            if (!s.path.empty() && s.path.users.front() == i) continue; // keep the path in U-hat-star
            BeliefStatement lifted{s.path.prepend(i), s.tuple, s.sign};
            if (level.statements.count(lifted)) continue;
            auto it = worlds.find(lifted.path);
            if (it == worlds.end() || addition_consistent(it->second, lifted.tuple, lifted.sign))
                next.statements.insert(std::move(lifted));
        }
    }
    return next;
}

BeliefWorld level_world(const ClosureLevel& level, const BeliefPath& w) {
    BeliefWorld out;
    for (const BeliefStatement& s : level.statements) {
        if (s.path != w) continue;
        (s.sign == Sign::positive ? out.positive : out.negative).insert(s.tuple);
    }
    return out;
}

bool oracle_entails(const BeliefDatabase& db, const BeliefStatement& stmt) {
    if (!db_consistent(db))
        throw std::invalid_argument("oracle_entails: database is inconsistent");
    if (!is_valid_path(stmt.path.users, db.users))
        throw std::invalid_argument("oracle_entails: ill-formed belief path " + stmt.path.to_display());
    check_tuple(db.schema, stmt.tuple);

    ClosureLevel level = ClosureLevel::base(db);
    for (std::size_t d = 0; d < stmt.path.depth(); ++d)
        level = closure_step(level, db.users, db.schema);
    return world_entails(level_world(level, stmt.path), stmt.tuple, stmt.sign);
}

} // namespace beliefdb
