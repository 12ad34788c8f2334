#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ujs/join_spec.hpp"
#include "helpers.hpp"

using namespace ujs;
using testutil::make_relation;

namespace {

RelationStore abc_store() {
    RelationStore store;
    store.add(make_relation("R", {"a", "b"}, {{1, 2}}));
    store.add(make_relation("S", {"b", "c"}, {{2, 3}}));
    store.add(make_relation("T", {"a", "c"}, {{1, 3}}));
    return store;
}

JoinSpec chain_rs() {
    JoinSpec spec;
    spec.id = "J1";
    ChainShape c;
    c.relations = {"R", "S"};
    c.join_attrs = {"b"};
    spec.shape = std::move(c);
    return spec;
}

}  // namespace

TEST_CASE("output_schema is the sorted attribute union") {
    RelationStore store = abc_store();
    auto schema = output_schema(chain_rs(), store);
    CHECK(schema == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("validate_workload accepts a well-formed chain") {
    RelationStore store = abc_store();
    CHECK_NOTHROW(validate_workload({chain_rs()}, store));
}

TEST_CASE("validate_workload rejects dangling join attributes") {
    RelationStore store = abc_store();
    JoinSpec spec = chain_rs();
    std::get<ChainShape>(spec.shape).join_attrs = {"z"};
    CHECK_THROWS_AS(validate_workload({spec}, store), StructureError);
}

TEST_CASE("validate_workload rejects mismatched output schemas") {
    RelationStore store = abc_store();
    JoinSpec j2;
    j2.id = "J2";
    ChainShape c;
    c.relations = {"R"};  // schema {a, b} only
    c.join_attrs = {};
    j2.shape = std::move(c);
    CHECK_THROWS_AS(validate_workload({chain_rs(), j2}, store), SchemaError);
}

TEST_CASE("validate_workload rejects non-adjacent shared attributes") {
    RelationStore store;
    store.add(make_relation("A", {"a", "b"}, {{1, 2}}));
    store.add(make_relation("B", {"b", "c"}, {{2, 3}}));
    store.add(make_relation("C", {"c", "a"}, {{3, 1}}));  // shares a with A
    JoinSpec spec;
    spec.id = "J1";
    ChainShape c;
    c.relations = {"A", "B", "C"};
    c.join_attrs = {"b", "c"};
    spec.shape = std::move(c);
    CHECK_THROWS_AS(validate_workload({spec}, store), StructureError);
}

TEST_CASE("acyclic shape must be a spanning tree") {
    RelationStore store;
    store.add(make_relation("A", {"a", "b"}, {{1, 2}}));
    store.add(make_relation("B", {"b", "c"}, {{2, 3}}));
    store.add(make_relation("C", {"c", "d"}, {{3, 4}}));
    JoinSpec spec;
    spec.id = "J1";
    AcyclicShape a;
    a.relations = {"A", "B", "C"};
    a.edges = {{"A", "B", "b"}};  // C disconnected
    spec.shape = a;
    CHECK_THROWS_AS(validate_workload({spec}, store), StructureError);

    a.edges = {{"A", "B", "b"}, {"B", "C", "c"}};
    spec.shape = a;
    CHECK_NOTHROW(validate_workload({spec}, store));
}

TEST_CASE("gyo reduction classifies triangle vs path") {
    std::vector<std::set<std::string>> triangle = {
        {"a", "b"}, {"b", "c"}, {"a", "c"}};
    CHECK_FALSE(gyo_acyclic(triangle));

    std::vector<std::set<std::string>> path = {
        {"a", "b"}, {"b", "c"}, {"c", "d"}};
    std::vector<int> parent;
    CHECK(gyo_acyclic(path, &parent));
    int roots = 0;
    for (int p : parent) roots += (p == -1);
    CHECK(roots == 1);
}

TEST_CASE("gyo reduction on a star is acyclic") {
    std::vector<std::set<std::string>> star = {
        {"a", "b"}, {"b", "c"}, {"b", "d"}, {"b", "e"}};
    CHECK(gyo_acyclic(star));
}

TEST_CASE("cyclic shape declared over an acyclic hypergraph is rejected") {
    RelationStore store;
    store.add(make_relation("A", {"a", "b"}, {{1, 2}}));
    store.add(make_relation("B", {"b", "c"}, {{2, 3}}));
    store.add(make_relation("C", {"c", "d"}, {{3, 4}}));
    JoinSpec spec;
    spec.id = "J1";
    CyclicShape c;
    c.relations = {"A", "B", "C"};
    spec.shape = std::move(c);
    CHECK_THROWS_AS(validate_workload({spec}, store), StructureError);
}

TEST_CASE("triangle declared cyclic validates") {
    RelationStore store = abc_store();
    JoinSpec spec;
    spec.id = "J1";
    CyclicShape c;
    c.relations = {"R", "S", "T"};
    spec.shape = std::move(c);
    CHECK_NOTHROW(validate_workload({spec}, store));
}

TEST_CASE("join_graph connects sharing relations of a cyclic spec") {
    RelationStore store = abc_store();
    JoinSpec spec;
    spec.id = "J1";
    CyclicShape c;
    c.relations = {"R", "S", "T"};
    spec.shape = std::move(c);
    auto adj = join_graph(spec, store);
    REQUIRE(adj.size() == 3);
    for (const auto& nbrs : adj) CHECK(nbrs.size() == 2);
}

TEST_CASE("relation store rejects duplicates and unknown lookups") {
    RelationStore store;
    store.add(make_relation("R", {"a"}, {{1}}));
    CHECK_THROWS_AS(store.add(make_relation("R", {"a"}, {{2}})), ConfigError);
    CHECK_THROWS_AS(store.get("missing"), ConfigError);
    CHECK(store.has("R"));
}
