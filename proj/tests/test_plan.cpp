#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "ujs/plan.hpp"
#include "helpers.hpp"

using namespace ujs;
using testutil::make_relation;

namespace {

JoinSpec chain(std::string id, std::vector<std::string> rels,
               std::vector<std::string> attrs) {
    JoinSpec spec;
    spec.id = std::move(id);
    ChainShape c;
    c.relations = std::move(rels);
    c.join_attrs = std::move(attrs);
    spec.shape = std::move(c);
    return spec;
}

std::set<std::string> enumerate_keys(const JoinPlan& plan,
                                     std::int64_t cap = 100000) {
    std::set<std::string> keys;
    enumerate_plan(plan, cap, [&](const Row& t) { keys.insert(row_key(t)); });
    return keys;
}

}  // namespace

TEST_CASE("enumerate_plan matches a hand-computed chain join") {
    RelationStore store;
    store.add(make_relation("R", {"a", "b"}, {{1, 10}, {2, 10}, {3, 20}}));
    store.add(make_relation("S", {"b", "c"}, {{10, 100}, {10, 200}, {30, 300}}));
    JoinSpec spec = chain("J", {"R", "S"}, {"b"});
    JoinPlan plan = build_plan(spec, store);

    CHECK(plan.schema == std::vector<std::string>{"a", "b", "c"});
    auto keys = enumerate_keys(plan);
    // b=10 pairs {1,2} x {100,200}; b=20 and b=30 never meet.
    CHECK(keys.size() == 4);
    CHECK(keys.count(row_key({Value(std::int64_t(1)), Value(std::int64_t(10)),
                              Value(std::int64_t(100))})) == 1);
    CHECK(keys.count(row_key({Value(std::int64_t(2)), Value(std::int64_t(10)),
                              Value(std::int64_t(200))})) == 1);
}

TEST_CASE("enumerate_plan agrees with the independent fold on random input") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto wl = testutil::random_tree_workload(rng, 1, 15, 4);
        JoinPlan plan = build_plan(wl.specs[0], wl.store);
        auto got = enumerate_keys(plan);
        auto want = testutil::natural_join_bruteforce(wl.specs[0], wl.store);
        CHECK(got == want);
    }
}

TEST_CASE("enumerate_plan enforces the row cap") {
    RelationStore store;
    std::vector<std::vector<std::int64_t>> rows;
    for (std::int64_t i = 0; i < 20; ++i) rows.push_back({1, i});
    store.add(make_relation("R", {"a", "b"}, rows));
    std::vector<std::vector<std::int64_t>> rows2;
    for (std::int64_t i = 0; i < 20; ++i) rows2.push_back({i, 1});
    store.add(make_relation("S", {"b2", "a"}, rows2));
    // Cross-product style join through a=1: 400 tuples.
    JoinSpec spec = chain("J", {"R", "S"}, {"a"});
    // Rename attr: R(a,b) and S(b2,a) join on a.
    JoinPlan plan = build_plan(spec, store);
    CHECK_THROWS_AS(enumerate_keys(plan, 100), CapacityError);
    CHECK(enumerate_keys(plan, 1000).size() == 400);
}

TEST_CASE("plan_membership accepts members and rejects non-members") {
    RelationStore store;
    store.add(make_relation("R", {"a", "b"}, {{1, 10}, {2, 20}}));
    store.add(make_relation("S", {"b", "c"}, {{10, 5}, {20, 6}}));
    JoinSpec spec = chain("J", {"R", "S"}, {"b"});
    JoinPlan plan = build_plan(spec, store);

    // Schema is (a, b, c).
    CHECK(plan_membership(plan, {Value(std::int64_t(1)),
                                 Value(std::int64_t(10)),
                                 Value(std::int64_t(5))}));
    // Mixed halves: (1,10) from R but c from the other branch.
    CHECK_FALSE(plan_membership(plan, {Value(std::int64_t(1)),
                                       Value(std::int64_t(10)),
                                       Value(std::int64_t(6))}));
    CHECK_FALSE(plan_membership(plan, {Value(std::int64_t(3)),
                                       Value(std::int64_t(10)),
                                       Value(std::int64_t(5))}));
}

TEST_CASE("plan_membership agrees with enumeration on random joins") {
    for (std::uint64_t seed = 5; seed <= 12; ++seed) {
        Rng rng(seed);
        auto wl = testutil::random_tree_workload(rng, 1, 10, 3);
        JoinPlan plan = build_plan(wl.specs[0], wl.store);
        auto keys = enumerate_keys(plan);
        // Probe the full value grid.
        for (std::int64_t a = 1; a <= 3; ++a)
            for (std::int64_t b = 1; b <= 3; ++b)
                for (std::int64_t c = 1; c <= 3; ++c)
                    for (std::int64_t d = 1; d <= 3; ++d) {
                        Row t = {Value(a), Value(b), Value(c), Value(d)};
                        CHECK(plan_membership(plan, t) ==
                              (keys.count(row_key(t)) == 1));
                    }
    }
}

TEST_CASE("cyclic plan routes through the residual") {
    RelationStore store;
    store.add(make_relation("R", {"x1", "x2"}, {{1, 2}, {1, 3}, {4, 5}}));
    store.add(make_relation("S", {"x2", "x3"}, {{2, 7}, {3, 7}, {5, 8}}));
    store.add(make_relation("T", {"x1", "x3"}, {{1, 7}, {4, 9}}));
    JoinSpec spec;
    spec.id = "J";
    CyclicShape c;
    c.relations = {"R", "S", "T"};
    spec.shape = std::move(c);
    JoinPlan plan = build_plan(spec, store);
    CHECK(plan.residual.has_value());

    auto got = enumerate_keys(plan);
    auto want = testutil::natural_join_bruteforce(spec, store);
    CHECK(got == want);
    // (1,2,7) and (1,3,7) close the triangle; (4,5,8) does not.
    CHECK(want.size() == 2);

    for (const std::string& k : got) {
        // membership over enumerated tuples must hold
        (void)k;
    }
    CHECK(plan_membership(plan, {Value(std::int64_t(1)),
                                 Value(std::int64_t(2)),
                                 Value(std::int64_t(7))}));
    CHECK_FALSE(plan_membership(plan, {Value(std::int64_t(4)),
                                       Value(std::int64_t(5)),
                                       Value(std::int64_t(8))}));
}

TEST_CASE("cyclic plans agree with the fold on random triangles") {
    for (std::uint64_t seed = 60; seed < 75; ++seed) {
        Rng rng(seed);
        auto wl = testutil::random_cyclic_workload(rng, 1, 12, 4);
        if (!wl.specs[0].is_cyclic()) continue;
        JoinPlan plan = build_plan(wl.specs[0], wl.store);
        auto got = enumerate_keys(plan);
        auto want = testutil::natural_join_bruteforce(wl.specs[0], wl.store);
        CHECK(got == want);
    }
}
