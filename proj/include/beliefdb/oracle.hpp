#pragma once

#include "beliefdb/core.hpp"

namespace beliefdb {

// One level of the default-rule closure. Level 0 is the explicit database;
// level d+1 lifts every statement one modality deeper where consistent.
struct ClosureLevel {
    int depth = 0;
    std::set<BeliefStatement> statements;

    static ClosureLevel base(const BeliefDatabase& db) { return {0, db.statements}; }
};

// Lifts every statement phi by every user i (with i.path in U-hat-star) whose
// addition keeps the level consistent. Candidates are checked against the fixed
// input level, not against each other; co-candidates at one world descend from
// a single consistent source world, so they can never conflict.
ClosureLevel closure_step(const ClosureLevel& level, const std::set<UserId>& users,
                          const Schema& schema);

// The belief world a closure level assigns to a path (all statements of the
// level whose path matches, split by sign).
BeliefWorld level_world(const ClosureLevel& level, const BeliefPath& w);

// Reference semantics: the entailed world at the statement's path is the
// level-|path| world there; the statement holds when that world entails the
// signed tuple (stated content plus key-conflict negatives). Exponential in
// the depth; meant for desk-scale verification.
bool oracle_entails(const BeliefDatabase& db, const BeliefStatement& stmt);

} // namespace beliefdb
