#pragma once

// Shared fixtures for the test binaries: tiny relation builders, random
// workload instances, and an independent natural-join oracle that never
// touches the plan/enumeration machinery under test.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ujs/join_sampler.hpp"
#include "ujs/join_spec.hpp"

namespace testutil {

using namespace ujs;

inline Relation make_relation(const std::string& name,
                              const std::vector<std::string>& schema,
                              const std::vector<std::vector<std::int64_t>>& rows,
                              bool with_stats = true) {
    Relation r(name, schema);
    for (const auto& vals : rows) {
        Row row;
        for (std::int64_t v : vals) row.push_back(Value(v));
        r.add_row(std::move(row));
    }
    if (with_stats) r.build_all_stats();
    return r;
}

// Independent oracle: left-to-right natural-join fold matching on every
// shared attribute, emitting canonical keys over the sorted schema.
inline std::set<std::string> natural_join_bruteforce(
    const std::vector<const Relation*>& rels) {
    std::vector<std::string> schema;
    for (const Relation* r : rels)
        for (const std::string& a : r->schema())
            if (std::find(schema.begin(), schema.end(), a) == schema.end())
                schema.push_back(a);
    std::sort(schema.begin(), schema.end());

    // Partial assignments attr -> value.
    std::vector<std::map<std::string, Value>> partials(1);
    for (const Relation* r : rels) {
        std::vector<std::map<std::string, Value>> next;
        for (const auto& part : partials) {
            for (const Row& row : r->rows()) {
                bool ok = true;
                for (std::size_t i = 0; i < r->schema().size() && ok; ++i) {
                    auto it = part.find(r->schema()[i]);
                    if (it != part.end() && !(it->second == row[i]))
                        ok = false;
                }
                if (!ok) continue;
                auto merged = part;
                for (std::size_t i = 0; i < r->schema().size(); ++i)
                    merged[r->schema()[i]] = row[i];
                next.push_back(std::move(merged));
            }
        }
        partials = std::move(next);
    }

    std::set<std::string> keys;
    for (const auto& part : partials) {
        Row t;
        for (const std::string& a : schema) t.push_back(part.at(a));
        keys.insert(row_key(t));
    }
    return keys;
}

inline std::set<std::string> natural_join_bruteforce(
    const JoinSpec& spec, const RelationStore& store) {
    std::vector<const Relation*> rels;
    for (const std::string& n : spec.relation_names())
        rels.push_back(&store.get(n));
    return natural_join_bruteforce(rels);
}

struct RandomWorkload {
    RelationStore store;
    std::vector<JoinSpec> specs;
};

inline Relation random_relation(const std::string& name,
                                const std::vector<std::string>& schema,
                                std::int64_t rows, std::int64_t dom,
                                Rng& rng) {
    Relation r(name, schema);
    std::uniform_int_distribution<std::int64_t> pick(1, dom);
    std::set<std::string> seen;
    for (std::int64_t i = 0; i < rows; ++i) {
        Row row;
        for (std::size_t a = 0; a < schema.size(); ++a)
            row.push_back(Value(pick(rng)));
        if (!seen.insert(row_key(row)).second) continue;  // skip duplicates
        r.add_row(std::move(row));
    }
    r.build_all_stats();
    return r;
}

// Workload of 2-3 joins over schema {x1..x4}: each join is a chain
// R(x1,x2) - R(x2,x3) - R(x3,x4) or the tree R(x1,x2), R(x1,x3),
// R(x3,x4) (tree pair (x2,x3) lives in no single relation).
inline RandomWorkload random_tree_workload(Rng& rng, int joins,
                                           std::int64_t max_rows,
                                           std::int64_t dom) {
    RandomWorkload wl;
    std::uniform_int_distribution<std::int64_t> nrows(1, max_rows);
    std::uniform_int_distribution<int> shape_pick(0, 1);
    for (int j = 0; j < joins; ++j) {
        std::string p = "J" + std::to_string(j + 1) + "_";
        JoinSpec spec;
        spec.id = "J" + std::to_string(j + 1);
        if (shape_pick(rng) == 0) {
            wl.store.add(random_relation(p + "R1", {"x1", "x2"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R2", {"x2", "x3"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R3", {"x3", "x4"}, nrows(rng),
                                         dom, rng));
            ChainShape c;
            c.relations = {p + "R1", p + "R2", p + "R3"};
            c.join_attrs = {"x2", "x3"};
            spec.shape = std::move(c);
        } else {
            wl.store.add(random_relation(p + "R1", {"x1", "x2"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R2", {"x1", "x3"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R3", {"x3", "x4"}, nrows(rng),
                                         dom, rng));
            AcyclicShape a;
            a.relations = {p + "R1", p + "R2", p + "R3"};
            a.edges = {{p + "R1", p + "R2", "x1"}, {p + "R2", p + "R3", "x3"}};
            spec.shape = std::move(a);
        }
        wl.specs.push_back(std::move(spec));
    }
    return wl;
}

// Workload over schema {x1,x2,x3}: triangles and two-relation chains.
inline RandomWorkload random_cyclic_workload(Rng& rng, int joins,
                                             std::int64_t max_rows,
                                             std::int64_t dom) {
    RandomWorkload wl;
    std::uniform_int_distribution<std::int64_t> nrows(1, max_rows);
    std::uniform_int_distribution<int> shape_pick(0, 1);
    for (int j = 0; j < joins; ++j) {
        std::string p = "J" + std::to_string(j + 1) + "_";
        JoinSpec spec;
        spec.id = "J" + std::to_string(j + 1);
        if (shape_pick(rng) == 0) {
            wl.store.add(random_relation(p + "R1", {"x1", "x2"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R2", {"x2", "x3"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R3", {"x1", "x3"}, nrows(rng),
                                         dom, rng));
            CyclicShape c;
            c.relations = {p + "R1", p + "R2", p + "R3"};
            spec.shape = std::move(c);
        } else {
            wl.store.add(random_relation(p + "R1", {"x1", "x2"}, nrows(rng),
                                         dom, rng));
            wl.store.add(random_relation(p + "R2", {"x2", "x3"}, nrows(rng),
                                         dom, rng));
            ChainShape c;
            c.relations = {p + "R1", p + "R2"};
            c.join_attrs = {"x2"};
            spec.shape = std::move(c);
        }
        wl.specs.push_back(std::move(spec));
    }
    return wl;
}

}  // namespace testutil
