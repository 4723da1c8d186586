#include "beliefdb/update.hpp"

#include <algorithm>
#include <stdexcept>

namespace beliefdb {

namespace {

std::set<UserId> user_id_set(const Store& store) {
    std::set<UserId> ids;
    for (const UserRow& u : store.users) ids.insert(u.uid);
    return ids;
}

void require_path(const Store& store, const BeliefPath& w) {
    if (!is_valid_path(w.users, user_id_set(store)))
        throw std::invalid_argument("invalid belief path: " + w.to_display());
}

Wid resolve_full(const Store& store, const BeliefPath& w) {
    auto z = store.follow(0, w.users);
    if (!z) throw std::logic_error("edge chain broke while resolving " + w.to_display());
    return *z;
}

// Worlds reachable via the labels of w from any world, deeper than |w| —
// exactly the worlds whose path has w as a proper suffix. Sorted by
// (depth, wid) so every world is visited after its suffix-chain parent.
std::vector<Wid> dependent_worlds(const Store& store, const BeliefPath& w) {
    std::set<Wid> seen;
    int d = static_cast<int>(w.depth());
    for (Wid v : store.wids) {
        auto z = store.follow(v, w.users);
        if (!z) continue;
        if (store.depth.at(*z) > d) seen.insert(*z);
    }
    std::vector<Wid> out(seen.begin(), seen.end());
    std::sort(out.begin(), out.end(), [&](Wid a, Wid b) {
        int da = store.depth.at(a), db = store.depth.at(b);
        return da != db ? da < db : a < b;
    });
    return out;
}

// Does a row block inserting (tid, s) under the same key? For a positive
// insert any other positive with the key or a negative twin of the tuple; for
// a negative insert only a positive twin.
bool conflicts_with(const VRow& row, Tid tid, Sign s) {
    if (s == Sign::positive)
        return (row.sign == Sign::positive && row.tid != tid) ||
               (row.sign == Sign::negative && row.tid == tid);
    return row.sign == Sign::positive && row.tid == tid;
}

void erase_implicit_conflicts(Store& store, const std::string& relation, Wid w, KeyId key, Tid tid,
                              Sign s) {
    store.v_erase(relation, w, key, [&](const VRow& r) {
        if (r.explicit_row) return false;
        if (s == Sign::positive) // any implicit positive loses the key, as does a negative twin
            return r.sign == Sign::positive || (r.tid == tid && r.sign == Sign::negative);
        return r.tid == tid && r.sign == Sign::positive;
    });
}

} // namespace

Wid dss_store(const Store& store, const BeliefPath& w) {
    Wid best = 0;
    int best_depth = -1;
    std::span<const UserId> all(w.users);
    for (std::size_t p = 0; p <= w.depth(); ++p) {
        auto z = store.follow(0, all.subspan(p));
        if (!z) continue; // possible only while a world is under construction
        int dz = store.depth.at(*z);
        if (dz > best_depth) {
            best_depth = dz;
            best = *z;
        }
    }
    return best;
}

Wid id_world(Store& store, const BeliefPath& w, std::vector<Wid>* created) {
    require_path(store, w);
    if (w.empty()) return 0;

    Wid at = resolve_full(store, w);
    int d = static_cast<int>(w.depth());
    if (store.depth.at(at) == d) return at;

    Wid parent = id_world(store, w.parent(), created);
    UserId last = w.users.back();

    Wid x = store.next_wid++;
    store.depth[x] = d;
    store.wids.push_back(x);
    store.edges[x];
    store.set_edge(parent, last, x);

    for (const UserRow& u : store.users) {
        if (u.uid == last) continue;
        store.set_edge(x, u.uid, dss_store(store, w.append(u.uid)));
    }

    // Dependent worlds whose missing `last`-successor used to fall back above
    // w now fall back to x.
    std::span<const UserId> prefix(w.users.data(), w.users.size() - 1);
    for (Wid v : store.wids) {
        auto yo = store.follow(v, prefix);
        if (!yo || *yo == x) continue;
        Wid y = *yo;
        if (store.depth.at(y) < d) continue;
        const Wid* cur = store.edge_target(y, last);
        if (cur && store.depth.at(*cur) < d) store.set_edge(y, last, x);
    }

    Wid chain = dss_store(store, w.suffix_from(1));
    store.suffix[x] = chain;

    // Everything stated or inherited at the suffix target holds at x by default.
    for (auto& [rel, v] : store.val) {
        auto it = v.by_world.find(chain);
        if (it == v.by_world.end()) continue;
        // copy the slot map first: v_insert may rehash by_world
        std::vector<std::pair<KeyId, VRow>> rows;
        for (const auto& [key, slot] : it->second)
            for (const VRow& row : slot.rows()) rows.push_back({key, {row.tid, row.sign, false}});
        for (const auto& [key, row] : rows) store.v_insert(rel, x, key, row);
    }

    // Worlds having w as a proper path suffix re-chain to x when their current
    // suffix target is shallower (x is now their deepest suffix state).
    for (Wid z : dependent_worlds(store, w))
        if (store.depth.at(store.suffix.at(z)) < d) store.suffix[z] = x;

    if (created) created->push_back(x);
    return x;
}

UpdateOutcome insert_tuple(Store& store, const BeliefPath& w, Wid wid, const Tuple& t, Sign s) {
    check_tuple(store.schema, t);
    UpdateOutcome out;

    RelationStar& star = store.rstar.at(t.relation);
    Tid tid = store.find_tid(t.relation, t.values); // 0 when the tuple is new
    KeyId key = star.intern_key(t.key());

    const KeySlot* t1 = store.slot(t.relation, wid, key);
    if (tid && t1) {
        if (const VRow* row = t1->find(tid); row && row->sign == s) {
            if (row->explicit_row) return out; // already stated, rejected
            store.find_row(t.relation, wid, key, tid)->explicit_row = true;
            out.success = true;
            out.touched_worlds.push_back(wid);
            return out;
        }
    }

    if (t1) {
        for (const VRow& row : t1->rows()) {
            if (!row.explicit_row) continue;
            if (conflicts_with(row, tid, s)) return out; // explicit conflict, store unchanged
        }
    }

    if (!tid) tid = store.ensure_tid(t.relation, t.values);
    erase_implicit_conflicts(store, t.relation, wid, key, tid, s);
    store.v_insert(t.relation, wid, key, {tid, s, true});
    out.success = true;
    out.touched_worlds.push_back(wid);

    for (Wid z : dependent_worlds(store, w)) {
        const KeySlot* t3 = store.slot(t.relation, z, key);
        bool implicit_conflict = false, explicit_conflict = false, present = false;
        if (t3) {
            for (const VRow& row : t3->rows()) {
                if (row.tid == tid && row.sign == s) {
                    present = true;
                    break;
                }
                if (conflicts_with(row, tid, s))
                    (row.explicit_row ? explicit_conflict : implicit_conflict) = true;
            }
        }
        if (present || explicit_conflict) continue;
        if (implicit_conflict) {
            // Precedence comes from the suffix chain: z only overrides its
            // implicit rows when its chain parent carries no conflict.
            const KeySlot* t4 = store.slot(t.relation, store.suffix.at(z), key);
            bool parent_conflict = false;
            if (t4)
                for (const VRow& row : t4->rows())
                    if (conflicts_with(row, tid, s)) {
                        parent_conflict = true;
                        break;
                    }
            if (parent_conflict) continue;
            erase_implicit_conflicts(store, t.relation, z, key, tid, s);
        }
        store.v_insert(t.relation, z, key, {tid, s, false});
        out.touched_worlds.push_back(z);
    }
    return out;
}

UpdateOutcome insert_statement(Store& store, const BeliefStatement& stmt) {
    require_path(store, stmt.path);
    check_tuple(store.schema, stmt.tuple);
    std::vector<Wid> created;
    Wid wid = id_world(store, stmt.path, &created);
    UpdateOutcome out = insert_tuple(store, stmt.path, wid, stmt.tuple, stmt.sign);
    out.created_worlds = std::move(created);
    return out;
}

UserId add_user(Store& store, const std::string& name) {
    if (name.empty()) throw std::invalid_argument("user name must not be empty");
    if (store.user_by_name(name)) throw std::invalid_argument("duplicate user name: " + name);
    UserId uid = store.users.empty() ? 1 : store.users.back().uid + 1;
    store.users.push_back({uid, name});
    for (Wid w : store.wids) store.set_edge(w, uid, 0);
    return uid;
}

UpdateOutcome delete_tuple(Store& store, const BeliefPath& w, const Tuple& t, Sign s) {
    require_path(store, w);
    check_tuple(store.schema, t);
    UpdateOutcome out;

    Wid y = resolve_full(store, w);
    if (store.depth.at(y) != static_cast<int>(w.depth())) return out; // world was never stated
    Tid tid = store.find_tid(t.relation, t.values);
    if (!tid) return out;
    RelationStar& star = store.rstar.at(t.relation);
    KeyId key = star.rows.at(tid).key_id;
    const VRow* row = store.find_row(t.relation, y, key, tid);
    if (!row || row->sign != s || !row->explicit_row) return out;

    out.success = true;
    store.v_erase(t.relation, y, key, [&](const VRow& r) { return r.tid == tid; });
    out.touched_worlds.push_back(y);

    // Re-derive the implicit rows for this key along every suffix chain that
    // runs through y, shallowest first.
    std::vector<Wid> affected{y};
    for (Wid z : dependent_worlds(store, w)) affected.push_back(z);
    for (Wid z : affected) {
        if (store.depth.at(z) == 0) continue; // the root inherits nothing
        Wid parent = store.suffix.at(z);

        std::vector<VRow> expected;
        if (const KeySlot* up = store.slot(t.relation, parent, key)) {
            const KeySlot* here = store.slot(t.relation, z, key);
            for (const VRow& candidate : up->rows()) {
                bool blocked = false, stated = false;
                if (here) {
                    for (const VRow& r : here->rows()) {
                        if (!r.explicit_row) continue;
                        if (r.tid == candidate.tid && r.sign == candidate.sign) stated = true;
                        if (conflicts_with(r, candidate.tid, candidate.sign)) blocked = true;
                    }
                }
                if (!blocked && !stated) expected.push_back({candidate.tid, candidate.sign, false});
            }
        }

        std::vector<VRow> current;
        if (const KeySlot* here = store.slot(t.relation, z, key))
            for (const VRow& r : here->rows())
                if (!r.explicit_row) current.push_back(r);

        auto order = [](const VRow& a, const VRow& b) {
            return a.tid != b.tid ? a.tid < b.tid : a.sign < b.sign;
        };
        std::sort(expected.begin(), expected.end(), order);
        std::sort(current.begin(), current.end(), order);
        auto same = [&] {
            if (expected.size() != current.size()) return false;
            for (std::size_t i = 0; i < expected.size(); ++i)
                if (expected[i].tid != current[i].tid || expected[i].sign != current[i].sign)
                    return false;
            return true;
        }();
        if (same) continue;

        store.v_erase(t.relation, z, key, [](const VRow& r) { return !r.explicit_row; });
        for (const VRow& r : expected) store.v_insert(t.relation, z, key, r);
        out.touched_worlds.push_back(z);
    }
    return out;
}

} // namespace beliefdb
