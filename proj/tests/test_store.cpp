#include <doctest.h>

#include <random>
#include <sstream>

#include "beliefdb/kripke.hpp"
#include "beliefdb/store.hpp"
#include "fixtures.hpp"

using namespace beliefdb;
using namespace fixtures;

namespace {

std::size_t rows_of(const SizeReport& r, const std::string& name) {
    auto it = r.relation_rows.find(name);
    return it == r.relation_rows.end() ? 0 : it->second;
}

// Reads the store back into worlds/edges and compares against build_canonical.
void check_matches_canonical(const Store& st, const BeliefDatabase& db) {
    CanonicalKripke k = build_canonical(db);
    auto paths = st.reconstruct_paths();
    REQUIRE(paths.size() == k.state_paths.size());

    std::map<BeliefPath, Wid> by_path;
    for (const auto& [w, p] : paths) by_path[p] = w;
    for (std::size_t i = 0; i < k.state_paths.size(); ++i) {
        REQUIRE(by_path.count(k.state_paths[i]));
        Wid w = by_path.at(k.state_paths[i]);

        BeliefWorld from_store;
        for (const auto& [rel, v] : st.val) {
            auto world_it = v.by_world.find(w);
            if (world_it == v.by_world.end()) continue;
            const RelationStar& star = st.rstar.at(rel);
            for (const auto& [key, slot] : world_it->second)
                for (const VRow& row : slot.rows()) {
                    Tuple t{rel, star.rows.at(row.tid).values};
                    (row.sign == Sign::positive ? from_store.positive : from_store.negative)
                        .insert(std::move(t));
                }
        }
        CHECK(from_store == k.worlds[i]);

        for (const auto& [key, target] : k.edges) {
            if (key.first != static_cast<int>(i)) continue;
            const Wid* stored = st.edge_target(w, key.second);
            REQUIRE(stored);
            CHECK(paths.at(*stored) == k.state_paths[static_cast<std::size_t>(target)]);
        }
    }
}

} // namespace

TEST_CASE("materialize reproduces the published table sizes") {
    BeliefDatabase db = running_db();
    Store st = materialize(db, user_names());
    st.validate();

    SizeReport r = st.stats();
    CHECK(r.world_count == 4);
    CHECK(r.user_count == 3);
    CHECK(rows_of(r, "Sightings*") == 4);
    CHECK(rows_of(r, "Comments*") == 3);
    CHECK(rows_of(r, "Sightings_V") == 8);
    CHECK(rows_of(r, "Comments_V") == 4);
    CHECK(rows_of(r, "E") == 9);
    CHECK(rows_of(r, "D") == 4);
    CHECK(rows_of(r, "S") == 3);
    CHECK(rows_of(r, "U") == 3);
    CHECK(r.total_rows == 38);
    CHECK(r.explicit_rows == 8);
    CHECK(r.overhead(8) == doctest::Approx(4.75));

    // world ids follow (depth, path) order: eps, Alice, Bob, Bob.Alice
    auto paths = st.reconstruct_paths();
    CHECK(paths.at(0) == root());
    CHECK(paths.at(1) == path({kAlice}));
    CHECK(paths.at(2) == path({kBob}));
    CHECK(paths.at(3) == path({kBob, kAlice}));

    // suffix chain: S(1,0), S(2,0), S(3,1)
    CHECK(st.suffix.at(1) == 0);
    CHECK(st.suffix.at(2) == 0);
    CHECK(st.suffix.at(3) == 1);

    // shared tids: the bald-eagle tuple appears in all four worlds (positively
    // in three, negatively in Bob's) under one tid
    Tid eagle = st.find_tid("Sightings", s1_1().values);
    REQUIRE(eagle != 0);
    int occurrences = 0;
    for (const auto& [w, slots] : st.val.at("Sightings").by_world)
        for (const auto& [key, slot] : slots)
            if (slot.find(eagle)) ++occurrences;
    CHECK(occurrences == 4);

    check_matches_canonical(st, db);
}

TEST_CASE("materialize of trivial databases") {
    BeliefDatabase empty;
    empty.schema = sightings_schema();
    empty.users = {1, 2, 3};
    Store st = materialize(empty);
    st.validate();
    SizeReport r = st.stats();
    CHECK(r.world_count == 1);
    CHECK(rows_of(r, "E") == 3);
    CHECK(rows_of(r, "S") == 0);
    CHECK(rows_of(r, "Sightings_V") == 0);

    BeliefDatabase one;
    one.schema = sightings_schema();
    one.users = {1, 2};
    one.add({path({2}), s1_1(), Sign::positive});
    Store st2 = materialize(one);
    st2.validate();
    CHECK(st2.stats().world_count == 2);
    CHECK(rows_of(st2.stats(), "Sightings*") == 1);
    CHECK(rows_of(st2.stats(), "Sightings_V") == 1);
    CHECK(st2.suffix.at(1) == 0);

    BeliefDatabase bad;
    bad.schema = sightings_schema();
    bad.users = {1};
    bad.add({path({1}), s1_1(), Sign::positive});
    bad.add({path({1}), s1_2(), Sign::positive});
    CHECK_THROWS_AS(materialize(bad), std::invalid_argument);
}

TEST_CASE("dump and load round trip") {
    Store st = materialize(running_db(), user_names());
    std::ostringstream out;
    dump(st, out);
    std::string text = out.str();

    // 38 data rows across the sections
    std::size_t data_rows = 0;
    std::istringstream count_in(text);
    std::string line;
    bool in_section = false;
    while (std::getline(count_in, line)) {
        if (line.rfind("## ", 0) == 0) {
            in_section = true;
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (in_section) ++data_rows;
    }
    CHECK(data_rows == 38);

    std::istringstream in(text);
    Store reloaded = load(in);
    std::ostringstream out2;
    dump(reloaded, out2);
    CHECK(out2.str() == text);
    CHECK(reloaded.next_wid == st.next_wid);
    CHECK(reloaded.next_tid == st.next_tid);
    CHECK(reloaded.canonical_dump() == st.canonical_dump());
}

TEST_CASE("load of an empty store") {
    Store st;
    std::ostringstream out;
    dump(st, out);
    std::istringstream in(out.str());
    Store reloaded = load(in);
    std::ostringstream out2;
    dump(reloaded, out2);
    CHECK(out2.str() == out.str());
}

TEST_CASE("load reports broken input") {
    Store st = materialize(running_db(), user_names());
    std::ostringstream out;
    dump(st, out);
    std::string text = out.str();

    SUBCASE("dangling tid") {
        // a V row referencing a tuple id that is absent from R*
        std::size_t pos = text.find("## Sightings_V\n");
        REQUIRE(pos != std::string::npos);
        std::string broken = text;
        broken.insert(pos + std::string("## Sightings_V\n").size(), "0\t99\ts1\t+\ty\n");
        std::istringstream in(broken);
        try {
            load(in);
            FAIL("expected a load failure");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("99") != std::string::npos);
        }
    }
    SUBCASE("not a store file") {
        std::istringstream in("hello\n");
        CHECK_THROWS(load(in));
    }
    SUBCASE("bad sign column") {
        std::string broken = text;
        std::size_t pos = broken.find("\t+\t");
        broken.replace(pos, 3, "\t*\t");
        std::istringstream in(broken);
        CHECK_THROWS(load(in));
    }
    SUBCASE("counter behind contents") {
        std::string broken = text;
        std::size_t pos = broken.find("#counters\t");
        broken.replace(pos, broken.find('\n', pos) - pos, "#counters\t1\t1");
        std::istringstream in(broken);
        CHECK_THROWS(load(in));
    }
}

TEST_CASE("string escaping survives the round trip") {
    Store st(sightings_schema());
    st.users.push_back({1, "A\tB\\C\nD"});
    st.set_edge(0, 1, 0);
    Tid tid = st.ensure_tid("Sightings", {Value("k\t1"), Value("u"), Value("sp"), Value("d"),
                                          Value("weird\\loc")});
    KeyId key = st.rstar.at("Sightings").rows.at(tid).key_id;
    st.v_insert("Sightings", 0, key, {tid, Sign::positive, true});

    std::ostringstream out;
    dump(st, out);
    std::istringstream in(out.str());
    Store reloaded = load(in);
    CHECK(reloaded.users.at(0).name == "A\tB\\C\nD");
    CHECK(reloaded.find_tid("Sightings", st.rstar.at("Sightings").rows.at(tid).values) != 0);
}

TEST_CASE("stats and canonical agreement on random databases") {
    std::mt19937_64 seeds(31);
    for (int trial = 0; trial < 25; ++trial) {
        BeliefDatabase db = random_db(seeds(), 3, 10);
        Store st = materialize(db);
        st.validate();
        check_matches_canonical(st, db);

        SizeReport r = st.stats();
        std::size_t n_states = r.world_count;
        std::size_t m = db.users.size();
        CHECK(rows_of(r, "S") == n_states - 1);
        CHECK(rows_of(r, "E") == m + (n_states - 1) * (m - 1));
        CHECK(r.explicit_rows == db.statements.size());

        // byte-identical rebuild
        CHECK(materialize(db).canonical_dump() == st.canonical_dump());
    }
}
