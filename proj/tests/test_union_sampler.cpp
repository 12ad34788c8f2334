#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "ujs/stats.hpp"
#include "ujs/union_sampler.hpp"
#include "ujs/workload.hpp"
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

struct Fixture {
    RelationStore store;
    std::vector<JoinHandle> handles;
    std::vector<JoinPlan*> plans;
    OracleResult oracle;
    UnionParams params;
};

// Single-attribute joins given directly as value sets.
Fixture make_fixture(const std::vector<std::vector<std::int64_t>>& joins,
                     WeightMode mode = WeightMode::ExactWeight) {
    Fixture f;
    std::vector<const JoinPlan*> ptrs;
    for (std::size_t j = 0; j < joins.size(); ++j) {
        std::string rel = "R" + std::to_string(j + 1);
        std::vector<std::vector<std::int64_t>> rows;
        for (std::int64_t v : joins[j]) rows.push_back({v});
        f.store.add(make_relation(rel, {"v"}, rows));
        JoinHandle h;
        h.id = "J" + std::to_string(j + 1);
        h.plan = build_plan(single(h.id, rel), f.store);
        h.weights = build_weights(h.plan, mode);
        f.handles.push_back(std::move(h));
    }
    for (const JoinHandle& h : f.handles) ptrs.push_back(&h.plan);
    f.oracle = oracle_evaluate(ptrs);
    f.params = params_from_oracle(f.oracle);
    return f;
}

UniformityResult chi_over(const SampleReport& report,
                          const OracleResult& oracle) {
    std::map<std::string, std::int64_t> counts;
    for (const Row& t : report.rows) ++counts[row_key(t)];
    return uniformity_test(counts, oracle.union_keys.size());
}

OnlineContext online_ctx(Fixture& f) {
    OnlineContext ctx;
    std::vector<JoinPlan>* plans = nullptr;
    (void)plans;
    std::vector<const JoinPlan*> ptrs;
    for (const JoinHandle& h : f.handles) ptrs.push_back(&h.plan);
    ctx.membership = [ptrs](const Row& t, int j) {
        return plan_membership(*ptrs[static_cast<std::size_t>(j)], t);
    };
    ctx.initial = f.params;
    ctx.initial_overlaps = f.oracle.overlaps;
    return ctx;
}

}  // namespace

TEST_CASE("reuse_accept rejects non-positive probabilities") {
    Rng rng(1);
    CHECK_THROWS_AS(reuse_accept(0.0, 1.0, 10.0, rng), SamplerError);
    CHECK_THROWS_AS(reuse_accept(-0.5, 1.0, 10.0, rng), SamplerError);
    CHECK(reuse_accept(0.5, 1.0, 0.0, rng) == 0);
}

TEST_CASE("reuse_accept emits the expected copy count") {
    Rng rng(2);
    double p = 1.0 / 36, scale = 0.4, size_j = 25;
    double want = scale / (p * size_j);  // 0.576
    std::int64_t total = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) total += reuse_accept(p, scale, size_j, rng);
    CHECK(static_cast<double>(total) / trials ==
          doctest::Approx(want).epsilon(0.02));

    // Ratio above one: floor plus a Bernoulli extra.
    double want2 = 2.5;
    total = 0;
    for (int i = 0; i < trials; ++i)
        total += reuse_accept(0.1, want2 * 0.1 * 4.0, 4.0, rng);
    CHECK(static_cast<double>(total) / trials ==
          doctest::Approx(want2).epsilon(0.02));
}

TEST_CASE("backtrack keeps, drops, or duplicates by the cover ratio") {
    Rng rng(3);
    auto make_rows = [](int n) {
        std::vector<Row> rows;
        for (int i = 0; i < n; ++i) rows.push_back({Value(std::int64_t(i))});
        return rows;
    };
    auto make_keys = [](const std::vector<Row>& rows) {
        std::vector<std::string> keys;
        for (const Row& r : rows) keys.push_back(row_key(r));
        return keys;
    };

    // Ratio 1: everything survives.
    auto rows = make_rows(200);
    std::vector<int> origins(200, 0);
    auto keys = make_keys(rows);
    backtrack(rows, origins, keys, {10.0}, 20.0, {10.0}, 20.0, rng);
    CHECK(rows.size() == 200);

    // Ratio 0: the origin join's rows all go.
    rows = make_rows(200);
    origins.assign(200, 0);
    keys = make_keys(rows);
    std::int64_t removed = 0;
    backtrack(rows, origins, keys, {10.0, 5.0}, 20.0, {0.0, 5.0}, 20.0, rng,
              &removed);
    CHECK(rows.empty());
    CHECK(removed == 200);

    // Ratio 2: roughly doubled.
    rows = make_rows(500);
    origins.assign(500, 1);
    keys = make_keys(rows);
    std::int64_t duplicated = 0;
    backtrack(rows, origins, keys, {0.0, 5.0}, 20.0, {0.0, 10.0}, 20.0, rng,
              nullptr, &duplicated);
    CHECK(rows.size() == doctest::Approx(1000).epsilon(0.1));
    CHECK(duplicated > 0);
    CHECK(keys.size() == rows.size());
    CHECK(origins.size() == rows.size());
}

TEST_CASE("disjoint-union sampler is uniform over disjoint joins") {
    Fixture f = make_fixture({{1, 2, 3}, {4, 5}, {6}});
    Rng rng(11);
    SampleReport r = sample_disjoint_union(f.handles, f.params.sizes,
                                           6 * 400, rng);
    CHECK(chi_over(r, f.oracle).pass);
    CHECK(r.rows.size() == 6u * 400u);
}

TEST_CASE("bernoulli union sampler is uniform over overlapping joins") {
    Fixture f = make_fixture({{1, 2, 3}, {3, 4, 5}, {5, 6}});
    REQUIRE(f.oracle.union_size == doctest::Approx(6.0));
    Rng rng(12);
    SampleReport r = sample_set_union_bernoulli(
        f.handles, f.params.sizes, f.params.union_size, 6 * 400, rng);
    CHECK(chi_over(r, f.oracle).pass);
}

TEST_CASE("cover sampler is uniform over overlapping joins") {
    Fixture f = make_fixture({{1, 2, 3}, {3, 4, 5}, {5, 6}});
    Rng rng(13);
    SampleReport r = sample_set_union(f.handles, f.params, 6 * 400, rng);
    CHECK(chi_over(r, f.oracle).pass);
    // Membership: every row belongs to the union.
    for (const Row& t : r.rows)
        CHECK(f.oracle.union_keys.count(row_key(t)) == 1);
}

TEST_CASE("cover sampler is uniform with olken weights") {
    Fixture f = make_fixture({{1, 2, 3}, {3, 4, 5}, {5, 6}},
                             WeightMode::ExtendedOlken);
    Rng rng(14);
    SampleReport r = sample_set_union(f.handles, f.params, 6 * 400, rng);
    CHECK(chi_over(r, f.oracle).pass);
}

TEST_CASE("cover sampler rejects inconsistent unclamped parameters") {
    Fixture f = make_fixture({{1, 2, 3}, {3, 4, 5}, {5, 6}});
    UnionParams bad = f.params;
    bad.union_size = bad.cover.total * 1.5;  // 50% drift
    bad.clamped = false;
    Rng rng(15);
    CHECK_THROWS_AS(sample_set_union(f.handles, bad, 100, rng), SamplerError);
}

TEST_CASE("online sampler is uniform and traces its updates") {
    Fixture f = make_fixture({{1, 2, 3}, {3, 4, 5}, {5, 6}});
    OnlineContext ctx = online_ctx(f);
    Rng rng(16);
    SampleReport r = sample_online_union(f.handles, ctx, 6 * 400, rng);
    CHECK(chi_over(r, f.oracle).pass);
    CHECK(r.counters.at("fresh_walks") >= 0);
    for (const auto& snap : r.param_trace) {
        CHECK(snap.count("union_size") == 1);
        CHECK(snap.count("confidence") == 1);
    }
}

TEST_CASE("online sampler with a zero confidence target still works") {
    Fixture f = make_fixture({{1, 2, 3}, {3, 4, 5}, {5, 6}});
    OnlineContext ctx = online_ctx(f);
    ctx.confidence_target = 0.0;
    Rng rng(17);
    SampleReport r = sample_online_union(f.handles, ctx, 6 * 200, rng);
    CHECK(chi_over(r, f.oracle).pass);
}

TEST_CASE("reuse strictly reduces fresh walks") {
    Fixture f = make_fixture({{1, 2, 3, 4, 5, 6, 7, 8},
                              {5, 6, 7, 8, 9, 10, 11, 12},
                              {11, 12, 13, 14}});
    OnlineContext with = online_ctx(f);
    OnlineContext without = online_ctx(f);
    without.reuse = false;
    Rng r1(18), r2(18);
    SampleReport a = sample_online_union(f.handles, with, 2000, r1);
    SampleReport b = sample_online_union(f.handles, without, 2000, r2);
    CHECK(a.counters.at("fresh_walks") < b.counters.at("fresh_walks"));
    CHECK(a.counters.at("reuse_copies") > 0);
    CHECK(b.counters.at("reuse_copies") == 0);
}

TEST_CASE("samplers reject an empty universe") {
    Fixture f = make_fixture({{1, 2}});
    Rng rng(19);
    CHECK_THROWS_AS(sample_disjoint_union(f.handles, {0.0}, 10, rng),
                    SamplerError);
    CHECK_THROWS_AS(
        sample_set_union_bernoulli(f.handles, {1.0}, 0.0, 10, rng),
        SamplerError);
    UnionParams zero = f.params;
    zero.cover.total = 0;
    zero.cover.sizes = {0.0};
    CHECK_THROWS_AS(sample_set_union(f.handles, zero, 10, rng), SamplerError);
}
