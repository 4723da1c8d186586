#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "beliefdb/core.hpp"

namespace beliefdb {

using Wid = std::int64_t;   // world id; 0 is the root
using Tid = std::int64_t;   // internal tuple key, unique across the store
using KeyId = std::int32_t; // interned external key, per relation

struct UserRow {
    UserId uid = 0;
    std::string name;
};

// One V_i row minus the wid/key columns (those are the slot coordinates).
struct VRow {
    Tid tid = 0;
    Sign sign = Sign::positive;
    bool explicit_row = false;
};

// Rows of one (world, key) coordinate. Almost always one or two entries,
// so the first two live inline and the rest spill to the heap.
class KeySlot {
public:
    KeySlot() = default;
    KeySlot(const KeySlot& other) { copy_from(other); }
    KeySlot& operator=(const KeySlot& other) {
        if (this != &other) {
            release();
            copy_from(other);
        }
        return *this;
    }
    KeySlot(KeySlot&& other) noexcept { move_from(std::move(other)); }
    KeySlot& operator=(KeySlot&& other) noexcept {
        if (this != &other) {
            release();
            move_from(std::move(other));
        }
        return *this;
    }
    ~KeySlot() { release(); }

    std::size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    const VRow* data() const { return spill_ ? spill_ : inline_; }
    std::span<const VRow> rows() const { return {data(), count_}; }

    void push(const VRow& row);
    // Removes rows matching pred; returns how many were removed.
    template <class Pred>
    std::size_t erase_if(Pred pred) {
        VRow* p = spill_ ? spill_ : inline_;
        std::size_t kept = 0;
        for (std::size_t i = 0; i < count_; ++i)
            if (!pred(p[i])) p[kept++] = p[i];
        std::size_t removed = count_ - kept;
        count_ = static_cast<std::uint32_t>(kept);
        return removed;
    }
    VRow* find(Tid tid) {
        VRow* p = spill_ ? spill_ : inline_;
        for (std::size_t i = 0; i < count_; ++i)
            if (p[i].tid == tid) return &p[i];
        return nullptr;
    }
    const VRow* find(Tid tid) const { return const_cast<KeySlot*>(this)->find(tid); }

private:
    void release();
    void copy_from(const KeySlot& other);
    void move_from(KeySlot&& other) noexcept;

    VRow inline_[2];
    std::uint32_t count_ = 0;
    std::uint32_t capacity_ = 2;
    VRow* spill_ = nullptr;
};

struct StarRow {
    std::vector<Value> values;
    KeyId key_id = 0;
    std::int64_t refs = 0; // V rows pointing at this tid
};

// R*_i plus the key-interning table shared with V_i.
struct RelationStar {
    std::unordered_map<Tid, StarRow> rows;
    std::map<std::vector<Value>, Tid> tid_by_values;
    std::map<Value, KeyId> key_ids;
    std::vector<Value> key_values;

    KeyId intern_key(const Value& key);
    const Value& key_value(KeyId id) const { return key_values.at(static_cast<std::size_t>(id)); }
};

struct RelationVal {
    std::unordered_map<Wid, std::unordered_map<KeyId, KeySlot>> by_world;
    std::size_t row_count = 0;
};

struct SizeReport {
    std::size_t user_count = 0;  // m
    std::size_t world_count = 0; // N
    std::size_t explicit_rows = 0;
    std::map<std::string, std::size_t> relation_rows; // per internal relation
    std::size_t total_rows = 0;                       // |R*|, every internal row counted

    double overhead(std::size_t n) const { return n ? double(total_rows) / double(n) : 0.0; }
};

// The internal representation: R*_i, U, V_i, E, D, S plus id counters.
// Single writer, many readers; mutations go through engine_update.
class Store {
public:
    Schema schema;
    std::vector<UserRow> users; // sorted by uid
    std::map<std::string, RelationStar> rstar;
    std::map<std::string, RelationVal> val;
    std::unordered_map<Wid, std::vector<std::pair<UserId, Wid>>> edges; // sorted by uid
    std::unordered_map<Wid, int> depth;
    std::unordered_map<Wid, Wid> suffix; // one row per non-root world
    std::vector<Wid> wids;               // ascending creation order
    Wid next_wid = 1;
    Tid next_tid = 1;

    Store();
    explicit Store(Schema s);

    void add_relation(RelationDef def);

    std::size_t user_count() const { return users.size(); }
    std::size_t world_count() const { return wids.size(); }
    const UserRow* user_by_id(UserId uid) const;
    const UserRow* user_by_name(const std::string& name) const;

    const Wid* edge_target(Wid from, UserId u) const;
    void set_edge(Wid from, UserId u, Wid to);
    // Follows u-labelled edges; nullopt when an edge is missing mid-chain
    // (only possible while a world is under construction).
    std::optional<Wid> follow(Wid from, std::span<const UserId> labels) const;

    const KeySlot* slot(const std::string& relation, Wid w, KeyId key) const;
    VRow* find_row(const std::string& relation, Wid w, KeyId key, Tid tid);
    void v_insert(const std::string& relation, Wid w, KeyId key, const VRow& row);
    template <class Pred>
    std::size_t v_erase(const std::string& relation, Wid w, KeyId key, Pred pred);

    Tid find_tid(const std::string& relation, const std::vector<Value>& values) const;
    Tid ensure_tid(const std::string& relation, const std::vector<Value>& values);

    // Rebuilds each world's path by walking forward edges from the root.
    // Throws when the edge structure is not a prefix-closed tree.
    std::map<Wid, BeliefPath> reconstruct_paths() const;

    SizeReport stats() const;

    // Full invariant check: tree shape, edge/suffix targets, key agreement,
    // per-world consistency, refcounts, and implicit rows matching the
    // override of each world's suffix-chain parent.
    void validate() const;

    // Id-renamed normal form used for store comparison up to wid/tid renaming.
    std::string canonical_dump() const;

private:
    void unref_tid(const std::string& relation, Tid tid);
};

template <class Pred>
std::size_t Store::v_erase(const std::string& relation, Wid w, KeyId key, Pred pred) {
    auto rel_it = val.find(relation);
    if (rel_it == val.end()) return 0;
    auto world_it = rel_it->second.by_world.find(w);
    if (world_it == rel_it->second.by_world.end()) return 0;
    auto slot_it = world_it->second.find(key);
    if (slot_it == world_it->second.end()) return 0;

    std::vector<Tid> removed_tids;
    std::size_t removed = slot_it->second.erase_if([&](const VRow& r) {
        if (pred(r)) {
            removed_tids.push_back(r.tid);
            return true;
        }
        return false;
    });
    if (slot_it->second.empty()) world_it->second.erase(slot_it);
    rel_it->second.row_count -= removed;
    for (Tid t : removed_tids) unref_tid(relation, t);
    return removed;
}

// Batch construction from a belief database via the canonical structure.
// World ids follow (depth, path) order with the root at 0; equal tuples share
// one tid across worlds.
Store materialize(const BeliefDatabase& db, const std::map<UserId, std::string>& user_names = {});

// Text serialization (.bdb): '#schema'/'#counters' preamble, '## <relation>'
// sections with tab-separated rows. load() re-validates every invariant.
void dump(const Store& store, std::ostream& out);
Store load(std::istream& in);

} // namespace beliefdb
