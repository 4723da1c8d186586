#include <doctest.h>

#include <random>

#include "beliefdb/kripke.hpp"
#include "beliefdb/oracle.hpp"
#include "fixtures.hpp"

using namespace beliefdb;
using namespace fixtures;

TEST_CASE("support and state sets") {
    BeliefDatabase db = running_db();
    std::set<BeliefPath> supp = support_states(db);
    CHECK(supp == std::set<BeliefPath>{root(), path({kAlice}), path({kBob}), path({kBob, kAlice})});
    CHECK(states(db) == supp); // already prefix-closed here

    BeliefDatabase empty;
    empty.schema = sightings_schema();
    empty.users = {1, 2, 3};
    CHECK(support_states(empty).empty());
    CHECK(states(empty) == std::set<BeliefPath>{root()});

    BeliefDatabase deep;
    deep.schema = sightings_schema();
    deep.users = {1, 2};
    deep.add({path({2, 1}), s1_1(), Sign::positive});
    CHECK(support_states(deep) == std::set<BeliefPath>{path({2, 1})});
    CHECK(states(deep) == std::set<BeliefPath>{root(), path({2}), path({2, 1})});
}

TEST_CASE("deepest suffix state") {
    std::set<BeliefPath> sts{root(), path({kAlice}), path({kBob}), path({kBob, kAlice})};
    CHECK(dss(path({kBob, kAlice}), sts) == path({kBob, kAlice}));
    CHECK(dss(path({kAlice, kBob}), sts) == path({kBob}));
    CHECK(dss(path({kCarol}), sts) == root());
    CHECK(dss(root(), sts) == root());
    CHECK(dss(path({kCarol, kBob, kAlice}), sts) == path({kBob, kAlice}));
}

TEST_CASE("canonical structure of the running example") {
    BeliefDatabase db = running_db();
    CanonicalKripke k = build_canonical(db);

    REQUIRE(k.state_paths.size() == 4);
    CHECK(k.state_paths[0] == root());
    CHECK(k.state_paths[1] == path({kAlice}));
    CHECK(k.state_paths[2] == path({kBob}));
    CHECK(k.state_paths[3] == path({kBob, kAlice}));
    CHECK(k.edge_count() == 9);

    // worlds as materialized in the paper's figure
    CHECK(k.worlds[0].positive == std::set<Tuple>{s1_1()});
    CHECK(k.worlds[0].negative.empty());
    CHECK(k.worlds[1].positive == std::set<Tuple>{s1_1(), s2_1(), c1_1()});
    CHECK(k.worlds[1].negative.empty());
    CHECK(k.worlds[2].positive == std::set<Tuple>{s2_2(), c2_2()});
    CHECK(k.worlds[2].negative == std::set<Tuple>{s1_1(), s1_2()});
    CHECK(k.worlds[3].positive == std::set<Tuple>{s1_1(), s2_1(), c1_1(), c2_1()});
    CHECK(k.worlds[3].negative.empty());

    // edge table, including the root fallback for Carol
    auto edge = [&](int from, UserId u) { return k.edges.at({from, u}); };
    CHECK(edge(0, 1) == 1);
    CHECK(edge(0, 2) == 2);
    CHECK(edge(0, 3) == 0);
    CHECK(edge(1, 2) == 2);
    CHECK(edge(1, 3) == 0);
    CHECK(edge(2, 1) == 3);
    CHECK(edge(2, 3) == 0);
    CHECK(edge(3, 2) == 2);
    CHECK(edge(3, 3) == 0);
    CHECK(k.edges.count({1, 1}) == 0);
    CHECK(k.edges.count({2, 2}) == 0);
    CHECK(k.edges.count({3, 1}) == 0);
}

TEST_CASE("canonical structure of tiny databases") {
    BeliefDatabase empty;
    empty.schema = sightings_schema();
    empty.users = {1, 2, 3};
    CanonicalKripke k = build_canonical(empty);
    CHECK(k.state_paths.size() == 1);
    CHECK(k.edge_count() == 3);
    for (UserId u : empty.users) CHECK(k.edges.at({0, u}) == 0);
    CHECK(k.worlds[0].empty());

    BeliefDatabase one;
    one.schema = sightings_schema();
    one.users = {1, 2};
    one.add({path({2}), s1_1(), Sign::positive});
    CanonicalKripke k2 = build_canonical(one);
    REQUIRE(k2.state_paths.size() == 2);
    CHECK(k2.state_paths[1] == path({2}));
    CHECK(k2.worlds[0].empty());
    CHECK(k2.worlds[1].positive == std::set<Tuple>{s1_1()});
    CHECK(k2.edges.at({0, 2}) == 1);
    CHECK(k2.edges.at({0, 1}) == 0);
    CHECK(k2.edges.at({1, 1}) == 0);
    CHECK(k2.edge_count() == 3);

    BeliefDatabase bad;
    bad.schema = sightings_schema();
    bad.users = {1};
    bad.add({path({1}), s1_1(), Sign::positive});
    bad.add({path({1}), s1_1(), Sign::negative});
    CHECK_THROWS_AS(build_canonical(bad), std::invalid_argument);
}

TEST_CASE("path resolution follows back edges") {
    CanonicalKripke k = build_canonical(running_db());
    CHECK(resolve_path(k, root()) == 0);
    CHECK(resolve_path(k, path({kAlice, kBob})) == 2);
    CHECK(resolve_path(k, path({kBob, kAlice, kBob})) == 2);
    CHECK(resolve_path(k, path({kCarol})) == 0);
    CHECK(resolve_path(k, path({kCarol, kAlice})) == 1);
}

TEST_CASE("evaluation over the canonical structure") {
    BeliefDatabase db = running_db();
    CanonicalKripke k = build_canonical(db);

    CHECK(world_entails(k.worlds[2], s2_2(), Sign::positive));
    CHECK(kripke_eval(k, {path({kBob}), s2_2(), Sign::positive}));
    CHECK(kripke_eval(k, {path({kBob, kAlice}), c2_1(), Sign::positive}));
    CHECK(kripke_eval(k, {path({kBob}), s2_1(), Sign::negative})); // unstated via the raven
    CHECK_FALSE(kripke_eval(k, {path({kBob}), s1_1(), Sign::positive}));

    // deeper than any state: resolves through back edges
    CHECK(kripke_eval(k, {path({kAlice, kBob, kAlice, kBob}), s2_2(), Sign::positive}));

    CHECK_THROWS_AS(kripke_eval(k, {path({1, 1}), s1_1(), Sign::positive}), std::invalid_argument);
    CHECK_THROWS_AS(kripke_eval(k, {path({7}), s1_1(), Sign::positive}), std::invalid_argument);
}

TEST_CASE("structural invariants on random databases") {
    std::mt19937_64 seeds(5);
    for (int trial = 0; trial < 40; ++trial) {
        BeliefDatabase db = random_db(seeds());
        CanonicalKripke k = build_canonical(db);
        std::size_t n_states = k.state_paths.size();
        std::size_t m = db.users.size();
        CHECK(k.edge_count() == m + (n_states - 1) * (m - 1));

        std::set<BeliefPath> state_set(k.state_paths.begin(), k.state_paths.end());
        for (const BeliefPath& p : k.state_paths)
            if (!p.empty()) CHECK(state_set.count(p.parent()));

        // pure function of the database
        CanonicalKripke again = build_canonical(db);
        CHECK(again.state_paths == k.state_paths);
        CHECK(again.edges == k.edges);
        for (std::size_t i = 0; i < k.worlds.size(); ++i) CHECK(again.worlds[i] == k.worlds[i]);
    }
}

TEST_CASE("canonical evaluation matches the closure semantics") {
    std::mt19937_64 seeds(97);
    for (int trial = 0; trial < 25; ++trial) {
        BeliefDatabase db = random_db(seeds());
        CanonicalKripke k = build_canonical(db);

        std::vector<ClosureLevel> levels{ClosureLevel::base(db)};
        for (int d = 0; d < 3; ++d) levels.push_back(closure_step(levels.back(), db.users, db.schema));

        for (const BeliefPath& p : all_paths(db, 3)) {
            BeliefWorld reference = level_world(levels[p.depth()], p);
            for (const Tuple& t : tuple_pool(db))
                for (Sign s : {Sign::positive, Sign::negative})
                    CHECK(kripke_eval(k, {p, t, s}) == world_entails(reference, t, s));
        }
    }
}
