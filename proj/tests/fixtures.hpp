#pragma once

// Shared test data: the bird-sightings example database (three users, eight
// annotations) and a generator for small random consistent databases.

#include <map>
#include <string>
#include <vector>

#include "beliefdb/bench.hpp"
#include "beliefdb/core.hpp"

namespace fixtures {

using namespace beliefdb;

inline constexpr UserId kAlice = 1;
inline constexpr UserId kBob = 2;
inline constexpr UserId kCarol = 3;

inline Schema sightings_schema() {
    Schema s;
    s.add_relation({"Sightings",
                    {{"sid", ValueType::text},
                     {"uid", ValueType::text},
                     {"species", ValueType::text},
                     {"date", ValueType::text},
                     {"location", ValueType::text}}});
    s.add_relation({"Comments",
                    {{"cid", ValueType::text},
                     {"comment", ValueType::text},
                     {"sid", ValueType::text}}});
    return s;
}

inline std::map<UserId, std::string> user_names() {
    return {{kAlice, "Alice"}, {kBob, "Bob"}, {kCarol, "Carol"}};
}

inline Tuple s1_1() {
    return {"Sightings", {"s1", "Carol", "bald eagle", "6-14-08", "Lake Forest"}};
}
inline Tuple s1_2() {
    return {"Sightings", {"s1", "Carol", "fish eagle", "6-14-08", "Lake Forest"}};
}
inline Tuple s2_1() {
    return {"Sightings", {"s2", "Alice", "crow", "6-14-08", "Lake Placid"}};
}
inline Tuple s2_2() {
    return {"Sightings", {"s2", "Alice", "raven", "6-14-08", "Lake Placid"}};
}
inline Tuple c1_1() { return {"Comments", {"c1", "found feathers", "s2"}}; }
inline Tuple c2_1() { return {"Comments", {"c2", "black feathers", "s2"}}; }
inline Tuple c2_2() { return {"Comments", {"c2", "purple-black feathers", "s2"}}; }

inline BeliefPath root() { return BeliefPath{}; }
inline BeliefPath path(std::vector<UserId> ids) { return BeliefPath(std::move(ids)); }

// The eight annotations in insertion order.
inline std::vector<BeliefStatement> running_statements() {
    return {
        {root(), s1_1(), Sign::positive},          // i1
        {path({kBob}), s1_1(), Sign::negative},    // i2
        {path({kBob}), s1_2(), Sign::negative},    // i3
        {path({kAlice}), s2_1(), Sign::positive},  // i4
        {path({kAlice}), c1_1(), Sign::positive},  // i5
        {path({kBob}), s2_2(), Sign::positive},    // i6
        {path({kBob, kAlice}), c2_1(), Sign::positive}, // i7
        {path({kBob}), c2_2(), Sign::positive},    // i8
    };
}

inline BeliefDatabase running_db() {
    BeliefDatabase db;
    db.schema = sightings_schema();
    db.users = {kAlice, kBob, kCarol};
    for (const BeliefStatement& s : running_statements()) db.add(s);
    return db;
}

// Small consistent database over the bench relation: m users, n statements,
// explicit depth bounded by the depth distribution's length.
inline BeliefDatabase random_db(std::uint64_t seed, std::int64_t m = 3, std::int64_t n = 8) {
    bench::GenParams params;
    params.m = m;
    params.n = n;
    params.seed = seed;
    params.depth_dist = {0.35, 0.4, 0.25};
    params.key_pool = 3;
    params.negative_prob = 0.3;
    params.conflict_prob = 0.4;

    BeliefDatabase db;
    db.schema = bench::bench_schema();
    for (std::int64_t u = 1; u <= m; ++u) db.users.insert(u);
    for (const BeliefStatement& s : bench::generate(params)) db.add(s);
    return db;
}

// Distinct tuples occurring in the database, the pool queried by the
// equivalence tests.
inline std::vector<Tuple> tuple_pool(const BeliefDatabase& db) {
    std::set<Tuple> pool;
    for (const BeliefStatement& s : db.statements) pool.insert(s.tuple);
    return {pool.begin(), pool.end()};
}

// All well-formed paths over the database's users up to the given depth.
inline std::vector<BeliefPath> all_paths(const BeliefDatabase& db, std::size_t max_depth) {
    std::vector<BeliefPath> out{BeliefPath{}};
    std::size_t level_start = 0;
    for (std::size_t d = 0; d < max_depth; ++d) {
        std::size_t level_end = out.size();
        for (std::size_t i = level_start; i < level_end; ++i)
            for (UserId u : db.users) {
                if (!out[i].empty() && out[i].users.back() == u) continue;
                out.push_back(out[i].append(u));
            }
        level_start = level_end;
    }
    return out;
}

} // namespace fixtures
