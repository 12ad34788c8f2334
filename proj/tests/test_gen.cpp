#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <set>

#include "ujs/gen.hpp"
#include "ujs/oracle.hpp"
#include "ujs/workload.hpp"

using namespace ujs;

namespace {

// Exact pairwise overlap of the first two joins of a generated workload.
double first_pair_overlap(const GenSpec& spec, std::uint64_t seed) {
    GeneratedWorkload g = generate(spec, seed);
    WorkloadConfig cfg = parse_workload_config(g.config, ".");
    Workload wl = prepare_workload(cfg, WeightMode::ExactWeight, &g.relations);
    OracleResult o = run_oracle(wl, 1000000);
    return o.overlaps.at(0b11);
}

}  // namespace

TEST_CASE("generation is deterministic under (spec, seed)") {
    GenSpec spec;
    spec.scale = 50;
    GeneratedWorkload a = generate(spec, 7);
    GeneratedWorkload b = generate(spec, 7);
    REQUIRE(a.relations.size() == b.relations.size());
    for (std::size_t i = 0; i < a.relations.size(); ++i) {
        REQUIRE(a.relations[i].size() == b.relations[i].size());
        for (std::int64_t r = 0; r < a.relations[i].size(); ++r)
            CHECK(row_key(a.relations[i].rows()[r]) ==
                  row_key(b.relations[i].rows()[r]));
    }
    CHECK(a.config == b.config);

    GeneratedWorkload c = generate(spec, 8);
    bool all_equal = true;
    for (std::size_t i = 0; i < a.relations.size() && all_equal; ++i) {
        if (a.relations[i].size() != c.relations[i].size()) {
            all_equal = false;
            break;
        }
        for (std::int64_t r = 0; r < a.relations[i].size(); ++r)
            if (!(row_key(a.relations[i].rows()[r]) ==
                  row_key(c.relations[i].rows()[r]))) {
                all_equal = false;
                break;
            }
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("full sharing makes the joins identical") {
    GenSpec spec;
    spec.scale = 40;
    spec.join_count = 2;
    spec.overlap_scale = 1.0;
    GeneratedWorkload g = generate(spec, 3);
    WorkloadConfig cfg = parse_workload_config(g.config, ".");
    Workload wl = prepare_workload(cfg, WeightMode::ExactWeight, &g.relations);
    OracleResult o = run_oracle(wl, 1000000);
    CHECK(o.overlaps.at(0b11) == doctest::Approx(o.sizes[0]));
    CHECK(o.sizes[0] == doctest::Approx(o.sizes[1]));
    CHECK(o.union_size == doctest::Approx(o.sizes[0]));
}

TEST_CASE("zero sharing makes the joins disjoint") {
    GenSpec spec;
    spec.scale = 40;
    spec.join_count = 2;
    spec.overlap_scale = 0.0;
    CHECK(first_pair_overlap(spec, 4) == doctest::Approx(0.0));
}

TEST_CASE("overlap grows with the sharing rate") {
    GenSpec spec;
    spec.scale = 60;
    spec.join_count = 2;
    double prev = -1;
    int increases = 0;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        spec.overlap_scale = p;
        double o = first_pair_overlap(spec, 5);
        if (prev >= 0 && o > prev) ++increases;
        prev = o;
    }
    CHECK(increases >= 3);  // monotone up to sampling noise
}

TEST_CASE("generator validates its knobs") {
    GenSpec spec;
    spec.scale = 0;
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
    spec.scale = 10;
    spec.overlap_scale = 1.5;
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
    spec.overlap_scale = 0.5;
    spec.shape = "pentagon";
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
    spec.shape = "chain";
    spec.preset = "uq9";
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
}

TEST_CASE("presets have the advertised structure") {
    GenSpec spec;
    spec.scale = 20;
    spec.preset = "uq1";
    GeneratedWorkload g = generate(spec, 6);
    WorkloadConfig cfg = parse_workload_config(g.config, ".");
    CHECK(cfg.joins.size() == 5);
    for (const JoinEntry& j : cfg.joins)
        CHECK(j.spec.relation_names().size() == 5);

    spec.preset = "uq2";
    GeneratedWorkload g2 = generate(spec, 6);
    WorkloadConfig cfg2 = parse_workload_config(g2.config, ".");
    CHECK(cfg2.joins.size() == 3);
    // All joins reference the same base relations, only predicates differ.
    std::set<std::string> rels;
    for (const JoinEntry& j : cfg2.joins) {
        for (const std::string& r : j.spec.relation_names()) rels.insert(r);
        CHECK_FALSE(j.predicates.empty());
    }
    CHECK(rels.size() == cfg2.joins[0].spec.relation_names().size());

    spec.preset = "uq3";
    GeneratedWorkload g3 = generate(spec, 6);
    WorkloadConfig cfg3 = parse_workload_config(g3.config, ".");
    CHECK(cfg3.joins.size() == 3);
    int trees = 0;
    for (const JoinEntry& j : cfg3.joins) trees += j.spec.is_acyclic();
    CHECK(trees == 1);
}

TEST_CASE("write_workload round-trips through the loader") {
    GenSpec spec;
    spec.scale = 25;
    GeneratedWorkload g = generate(spec, 9);
    auto dir = std::filesystem::temp_directory_path() / "gen_roundtrip";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::string path = write_workload(g, dir.string());

    WorkloadConfig cfg = load_workload_file(path);
    Workload from_disk = prepare_workload(cfg, WeightMode::ExactWeight);
    WorkloadConfig cfg2 = parse_workload_config(g.config, ".");
    Workload from_mem =
        prepare_workload(cfg2, WeightMode::ExactWeight, &g.relations);
    OracleResult a = run_oracle(from_disk, 1000000);
    OracleResult b = run_oracle(from_mem, 1000000);
    CHECK(a.union_size == doctest::Approx(b.union_size));
    CHECK(a.sizes == b.sizes);
}
