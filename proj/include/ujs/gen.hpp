#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ujs/relation.hpp"

namespace ujs {

// Synthetic workload knobs. overlap_scale is the fraction P of rows each
// generated relation shares with the structural base relation for its
// attribute pair: P = 0 gives pairwise-disjoint key ranges, P = 1 gives
// identical relations across joins. skew is the Zipf exponent of the
// attribute-value draw (0 = uniform).
struct GenSpec {
    std::int64_t scale = 100;  // rows per relation
    double overlap_scale = 0.5;
    double skew = 0.0;
    int join_count = 3;
    std::string shape = "chain";  // chain | acyclic | cyclic
    int relations_per_join = 3;
    std::int64_t domain = 0;  // attribute domain size; 0 = scale
    // Preset overrides: "", "uq1", "uq2", "uq3".
    std::string preset;
};

struct GeneratedWorkload {
    std::vector<Relation> relations;
    nlohmann::json config;  // workload file content, paths relative
};

// Deterministic under (spec, seed). Presets:
//   uq1: five chain joins of five two-attribute relations each;
//   uq2: three joins over one shared relation set, differing only in
//        the predicate on the first attribute (nested selectivities);
//   uq3: two chains plus one join tree over four attributes, where the
//        tree has no relation covering one template pair and therefore
//        forces a merged sub-relation.
GeneratedWorkload generate(const GenSpec& spec, std::uint64_t seed);

// Writes every relation as <name>.csv plus workload.json into out_dir.
// Returns the workload file path.
std::string write_workload(const GeneratedWorkload& wl,
                           const std::string& out_dir);

}  // namespace ujs
