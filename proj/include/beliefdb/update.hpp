#pragma once

#include "beliefdb/store.hpp"

namespace beliefdb {

struct UpdateOutcome {
    bool success = false;
    std::vector<Wid> created_worlds;
    std::vector<Wid> touched_worlds;
};

// World id of the deepest suffix state for belief path w: resolves every
// suffix of w from the root and keeps the deepest genuine state.
Wid dss_store(const Store& store, const BeliefPath& w);

// Returns wid(w); creates the world (and missing ancestors) when absent.
// Creation re-points dependent worlds' edges and suffix rows at the new world
// and copies the suffix target's content in as implicit rows. Newly created
// wids are appended to *created when given.
Wid id_world(Store& store, const BeliefPath& w, std::vector<Wid>* created = nullptr);

// Inserts the signed tuple into the existing world `w`/`wid`, then pushes the
// default down every dependent world in depth order. Explicit conflicts at the
// target world reject the insert and leave the store untouched.
UpdateOutcome insert_tuple(Store& store, const BeliefPath& w, Wid wid, const Tuple& t, Sign s);

// Public insert: id_world then insert_tuple. Worlds created while resolving
// the path are kept even when the tuple itself is rejected (world creation
// does not change the entailed theory).
UpdateOutcome insert_statement(Store& store, const BeliefStatement& stmt);

// Registers a user (names unique) and adds a back edge to the root from every
// existing world.
UserId add_user(Store& store, const std::string& name);

// Removes an explicitly stated tuple and recomputes the implicit content of
// the world and all dependents from their suffix chains; defaults the deleted
// statement was blocking reappear. Worlds and edges are never removed.
UpdateOutcome delete_tuple(Store& store, const BeliefPath& w, const Tuple& t, Sign s);

} // namespace beliefdb
