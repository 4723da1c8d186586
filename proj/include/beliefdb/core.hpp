#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "beliefdb/value.hpp"

namespace beliefdb {

using UserId = std::int64_t;

enum class Sign : std::uint8_t { positive, negative };

inline char sign_char(Sign s) { return s == Sign::positive ? '+' : '-'; }
inline Sign opposite(Sign s) { return s == Sign::positive ? Sign::negative : Sign::positive; }

struct RelationDef {
    std::string name;
    // attribute 0 is the external key
    std::vector<std::pair<std::string, ValueType>> attributes;

    std::size_t arity() const { return attributes.size(); }
    int attribute_index(const std::string& att) const;
};

struct Schema {
    std::vector<RelationDef> relations;

    const RelationDef* find(const std::string& name) const;
    const RelationDef& require(const std::string& name) const;
    void add_relation(RelationDef def);
};

// Ground tuple of one relation; values[0] is the external key.
struct Tuple {
    std::string relation;
    std::vector<Value> values;

    const Value& key() const { return values.at(0); }
    friend bool operator==(const Tuple&, const Tuple&) = default;
    friend std::strong_ordering operator<=>(const Tuple&, const Tuple&) = default;
};

// Throws std::invalid_argument when the tuple does not match the schema.
void check_tuple(const Schema& schema, const Tuple& t);

// Nested belief path; empty = the root path.
struct BeliefPath {
    std::vector<UserId> users;

    BeliefPath() = default;
    explicit BeliefPath(std::vector<UserId> ids) : users(std::move(ids)) {}

    bool empty() const { return users.empty(); }
    std::size_t depth() const { return users.size(); }
    // No equal users in successive positions.
    bool well_formed() const;
    // Prefix users[0..depth-2] (the parent world path).
    BeliefPath parent() const;
    // Suffix starting at position `from` (0-based); from == depth gives the root path.
    BeliefPath suffix_from(std::size_t from) const;
    BeliefPath prepend(UserId u) const;
    BeliefPath append(UserId u) const;
    std::string to_display() const;

    friend bool operator==(const BeliefPath&, const BeliefPath&) = default;
    friend std::strong_ordering operator<=>(const BeliefPath&, const BeliefPath&) = default;
};

// Order states the way the paper numbers them: by depth, then lexicographically.
struct PathDepthLess {
    bool operator()(const BeliefPath& a, const BeliefPath& b) const {
        if (a.depth() != b.depth()) return a.depth() < b.depth();
        return a.users < b.users;
    }
};

struct BeliefStatement {
    BeliefPath path;
    Tuple tuple;
    Sign sign = Sign::positive;

    std::string to_display() const;
    friend bool operator==(const BeliefStatement&, const BeliefStatement&) = default;
    friend std::strong_ordering operator<=>(const BeliefStatement&, const BeliefStatement&) = default;
};

// Positive and negative instances. Stored worlds need not satisfy the key
// constraints a priori; consistency is checked, not assumed.
struct BeliefWorld {
    std::set<Tuple> positive;
    std::set<Tuple> negative;

    bool empty() const { return positive.empty() && negative.empty(); }
    friend bool operator==(const BeliefWorld&, const BeliefWorld&) = default;
};

struct BeliefDatabase {
    Schema schema;
    std::set<UserId> users;
    std::set<BeliefStatement> statements;

    void add(BeliefStatement s); // validates path, typing and rejects duplicates
};

// True iff every id is registered and no two successive ids are equal.
bool is_valid_path(const std::vector<UserId>& users, const std::set<UserId>& universe);

// Gamma_1 (key constraint on the positive instance) and Gamma_2 (disjointness).
bool world_consistent(const BeliefWorld& w, const Schema& schema);

// Positive: membership in I+. Negative: stated (in I-) or unstated (a different
// positive tuple shares the key). Rejects inconsistent worlds.
bool world_entails(const BeliefWorld& w, const Tuple& t, Sign s);

// Child tuples are kept verbatim; parent tuples are added when doing so keeps
// the world consistent. Both inputs must be consistent.
BeliefWorld override_union(const BeliefWorld& child_explicit, const BeliefWorld& parent_entailed,
                           const Schema& schema);

// Explicitly stated world at path w. Invalid paths are caller bugs and throw.
BeliefWorld explicit_world(const BeliefDatabase& db, const BeliefPath& w);

bool db_consistent(const BeliefDatabase& db);

} // namespace beliefdb
