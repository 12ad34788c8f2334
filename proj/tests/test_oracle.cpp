#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>

#include "ujs/oracle.hpp"
#include "helpers.hpp"

using namespace ujs;
using testutil::make_relation;

namespace {

JoinSpec single(std::string id, std::string rel) {
    JoinSpec spec;
    spec.id = std::move(id);
    ChainShape c;
    c.relations = {std::move(rel)};
    spec.shape = std::move(c);
    return spec;
}

}  // namespace

TEST_CASE("oracle on nested single-relation joins") {
    RelationStore store;
    store.add(make_relation("R1", {"v"}, {{1}, {2}, {3}}));
    store.add(make_relation("R2", {"v"}, {{2}, {3}}));
    store.add(make_relation("R3", {"v"}, {{3}}));
    std::vector<JoinPlan> plans;
    plans.push_back(build_plan(single("J1", "R1"), store));
    plans.push_back(build_plan(single("J2", "R2"), store));
    plans.push_back(build_plan(single("J3", "R3"), store));
    OracleResult o = oracle_evaluate({&plans[0], &plans[1], &plans[2]});

    CHECK(o.sizes == std::vector<double>{3, 2, 1});
    CHECK(o.overlaps.at(0b011) == doctest::Approx(2.0));
    CHECK(o.overlaps.at(0b101) == doctest::Approx(1.0));
    CHECK(o.overlaps.at(0b110) == doctest::Approx(1.0));
    CHECK(o.overlaps.at(0b111) == doctest::Approx(1.0));
    CHECK(o.union_size == doctest::Approx(3.0));

    CHECK(o.a[0] == std::vector<double>{1, 1, 1});
    CHECK(o.a[1] == std::vector<double>{0, 1, 1});
    CHECK(o.a[2] == std::vector<double>{0, 0, 1});

    // Exact covers for the size-descending ordering.
    Cover c = oracle_cover(o, size_descending_ordering(o.sizes));
    CHECK(c.ordering == std::vector<int>{0, 1, 2});
    CHECK(c.sizes == std::vector<double>{3, 0, 0});
    CHECK(c.total == doctest::Approx(3.0));
}

TEST_CASE("oracle on a single one-tuple join") {
    RelationStore store;
    store.add(make_relation("R1", {"v"}, {{7}}));
    std::vector<JoinPlan> plans;
    plans.push_back(build_plan(single("J1", "R1"), store));
    OracleResult o = oracle_evaluate({&plans[0]});
    CHECK(o.union_size == doctest::Approx(1.0));
    CHECK(o.a[0][0] == doctest::Approx(1.0));
    CHECK(o.union_keys.size() == 1);
}

TEST_CASE("oracle rejects plans with different output schemas") {
    RelationStore store;
    store.add(make_relation("R1", {"v"}, {{1}}));
    store.add(make_relation("R2", {"w"}, {{1}}));
    std::vector<JoinPlan> plans;
    plans.push_back(build_plan(single("J1", "R1"), store));
    plans.push_back(build_plan(single("J2", "R2"), store));
    CHECK_THROWS_AS(oracle_evaluate({&plans[0], &plans[1]}), SchemaError);
}

TEST_CASE("oracle enforces the per-join row cap") {
    RelationStore store;
    std::vector<std::vector<std::int64_t>> rows;
    for (std::int64_t i = 0; i < 50; ++i) rows.push_back({i});
    store.add(make_relation("R1", {"v"}, rows));
    std::vector<JoinPlan> plans;
    plans.push_back(build_plan(single("J1", "R1"), store));
    CHECK_THROWS_AS(oracle_evaluate({&plans[0]}, 10), CapacityError);
}

TEST_CASE("union size identity holds on random workloads") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        Rng rng(seed);
        auto wl = testutil::random_tree_workload(rng, 3, 10, 3);
        std::vector<JoinPlan> plans;
        std::vector<const JoinPlan*> ptrs;
        for (const JoinSpec& spec : wl.specs)
            plans.push_back(build_plan(spec, wl.store));
        for (const JoinPlan& p : plans) ptrs.push_back(&p);
        OracleResult o = oracle_evaluate(ptrs);

        // Sum over joins and k of |A_j^k| / k equals |U|.
        double u = 0;
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 1; k <= 3; ++k)
                u += o.a[j][k - 1] / static_cast<double>(k);
        CHECK(u == doctest::Approx(o.union_size));
        CHECK(o.union_keys.size() ==
              static_cast<std::size_t>(o.union_size + 0.5));

        // Rows of a[j] decompose each join size.
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0;
            for (std::size_t k = 1; k <= 3; ++k) s += o.a[j][k - 1];
            CHECK(s == doctest::Approx(o.sizes[j]));
        }

        // Every cover ordering reaches the union total.
        Cover c = oracle_cover(o, size_descending_ordering(o.sizes));
        CHECK(c.total == doctest::Approx(o.union_size));
        Cover rev = oracle_cover(o, {2, 1, 0});
        CHECK(rev.total == doctest::Approx(o.union_size));
    }
}

TEST_CASE("size_descending_ordering breaks ties by index") {
    CHECK(size_descending_ordering({5, 9, 5}) == std::vector<int>{1, 0, 2});
    CHECK(size_descending_ordering({1}) == std::vector<int>{0});
}
