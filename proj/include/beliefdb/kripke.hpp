#pragma once

#include <map>

#include "beliefdb/core.hpp"

namespace beliefdb {

// Finite encoding of the closure: one state per prefix of an annotated path,
// entailed worlds per state, and per-user edges falling back to the deepest
// suffix state where the forward successor is missing.
struct CanonicalKripke {
    Schema schema;
    std::set<UserId> users;
    std::vector<BeliefPath> state_paths;          // index = state id; 0 = root; (depth, lex) order
    std::vector<BeliefWorld> worlds;              // entailed world per state
    std::map<std::pair<int, UserId>, int> edges;  // (state, user) -> state
    int root = 0;

    int state_index(const BeliefPath& w) const;   // -1 when w is not a state
    std::size_t edge_count() const { return edges.size(); }
};

// Paths carrying at least one explicit statement.
std::set<BeliefPath> support_states(const BeliefDatabase& db);

// Prefix closure of the support; the root path is always kept.
std::set<BeliefPath> states(const BeliefDatabase& db);

// Longest suffix of w contained in `states`; requires the root path present.
BeliefPath dss(const BeliefPath& w, const std::set<BeliefPath>& states);

// Builds states, edges and entailed worlds (bottom-up suffix-chain override).
// Rejects inconsistent databases.
CanonicalKripke build_canonical(const BeliefDatabase& db);

// State reached from the root by following w's users in order.
int resolve_path(const CanonicalKripke& k, const BeliefPath& w);

// Resolves the statement's path from the root, then checks the world there.
// Ill-formed paths (consecutive repeats, unregistered users) are rejected.
bool kripke_eval(const CanonicalKripke& k, const BeliefStatement& stmt);

} // namespace beliefdb
