#include "beliefdb/kripke.hpp"

#include <algorithm>
#include <stdexcept>

namespace beliefdb {

int CanonicalKripke::state_index(const BeliefPath& w) const {
    for (std::size_t i = 0; i < state_paths.size(); ++i)
        if (state_paths[i] == w) return static_cast<int>(i);
    return -1;
}

std::set<BeliefPath> support_states(const BeliefDatabase& db) {
    std::set<BeliefPath> supp;
    for (const BeliefStatement& s : db.statements) supp.insert(s.path);
    return supp;
}

std::set<BeliefPath> states(const BeliefDatabase& db) {
    std::set<BeliefPath> out;
    out.insert(BeliefPath{}); // the root exists even for an empty database
    for (const BeliefPath& w : support_states(db)) {
        std::vector<UserId> prefix;
        out.insert(BeliefPath{});
        for (UserId u : w.users) {
            prefix.push_back(u);
            out.insert(BeliefPath(prefix));
        }
    }
    return out;
}

BeliefPath dss(const BeliefPath& w, const std::set<BeliefPath>& states) {
    for (std::size_t from = 0; from <= w.depth(); ++from) {
        BeliefPath candidate = w.suffix_from(from);
        if (states.count(candidate)) return candidate;
    }
    throw std::logic_error("dss: state set does not contain the root path");
}

CanonicalKripke build_canonical(const BeliefDatabase& db) {
    if (!db_consistent(db))
        throw std::invalid_argument("build_canonical: database is inconsistent");

    CanonicalKripke k;
    k.schema = db.schema;
    k.users = db.users;

    std::set<BeliefPath> state_set = states(db);
    k.state_paths.assign(state_set.begin(), state_set.end());
    std::sort(k.state_paths.begin(), k.state_paths.end(), PathDepthLess{});

    std::map<BeliefPath, int> index;
    for (std::size_t i = 0; i < k.state_paths.size(); ++i)
        index[k.state_paths[i]] = static_cast<int>(i);

    for (std::size_t i = 0; i < k.state_paths.size(); ++i) {
        const BeliefPath& w = k.state_paths[i];
        for (UserId u : db.users) {
            if (!w.empty() && w.users.back() == u) continue; // w·u outside U-hat-star
            k.edges[{static_cast<int>(i), u}] = index.at(dss(w.append(u), state_set));
        }
    }

    // Entailed worlds bottom-up: states are already sorted by depth, and the
    // suffix-chain target of any state is strictly shallower.
    k.worlds.resize(k.state_paths.size());
    for (std::size_t i = 0; i < k.state_paths.size(); ++i) {
        const BeliefPath& w = k.state_paths[i];
        BeliefWorld explicit_part = explicit_world(db, w);
        if (w.empty()) {
            k.worlds[i] = std::move(explicit_part);
        } else {
            int chain = index.at(dss(w.suffix_from(1), state_set));
            k.worlds[i] = override_union(explicit_part, k.worlds[static_cast<std::size_t>(chain)],
                                         db.schema);
        }
    }
    return k;
}

int resolve_path(const CanonicalKripke& k, const BeliefPath& w) {
    int state = k.root;
    for (UserId u : w.users) {
        auto it = k.edges.find({state, u});
        if (it == k.edges.end())
            throw std::invalid_argument("resolve_path: no edge for user " + std::to_string(u) +
                                        " (ill-formed path " + w.to_display() + ")");
        state = it->second;
    }
    return state;
}

bool kripke_eval(const CanonicalKripke& k, const BeliefStatement& stmt) {
    if (!is_valid_path(stmt.path.users, k.users))
        throw std::invalid_argument("kripke_eval: ill-formed belief path " + stmt.path.to_display());
    check_tuple(k.schema, stmt.tuple);
    int state = resolve_path(k, stmt.path);
    return world_entails(k.worlds[static_cast<std::size_t>(state)], stmt.tuple, stmt.sign);
}

} // namespace beliefdb
