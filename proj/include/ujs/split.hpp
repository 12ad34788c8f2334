#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ujs/join_spec.hpp"

namespace ujs {

// Standard two-attribute chain layout shared by all joins of a workload.
// attrs lists the output schema in template order; pair i is
// (attrs[i], attrs[i+1]) and consecutive pairs share an attribute.
struct Template {
    std::vector<std::string> attrs;
    double total_score = 0;

    std::size_t pair_count() const {
        return attrs.empty() ? 0 : attrs.size() - 1;
    }
};

enum class LinkKind { RealJoin, FakeJoin };

// A two-attribute sub-relation cut (or merged) from the source join's
// relations. Rows keep provenance so fake joins can be interpreted
// one-to-one within the originating relation(s).
struct SubRelation {
    std::string left_attr;
    std::string right_attr;
    std::vector<std::array<Value, 2>> rows;
    // Per row: (source relation index, row id), sorted by relation index.
    std::vector<std::vector<std::pair<int, std::uint32_t>>> prov;
    std::vector<int> sources;  // sorted relation indices contributing rows

    // Exact degree statistics over the materialized rows.
    std::unordered_map<Value, std::int64_t, ValueHash> left_degree;
    std::unordered_map<Value, std::int64_t, ValueHash> right_degree;
    // Same degrees sorted by value, so estimators can intersect
    // histograms with linear merges instead of hash probes.
    std::vector<std::pair<Value, std::int64_t>> left_degree_sorted;
    std::vector<std::pair<Value, std::int64_t>> right_degree_sorted;
    std::int64_t left_max = 0;
    std::int64_t right_max = 0;

    // Synthesized estimates carried through fake-join merges (product of
    // max degrees on join attributes, max elsewhere). Diagnostic only;
    // bound computations use the exact stats above.
    double est_size = 0;
    double est_left_max = 0;
    double est_right_max = 0;

    bool merged = false;  // true if built from more than one relation
};

struct SplitJoin {
    std::string source_id;
    std::vector<std::string> attr_order;        // template order
    std::vector<std::string> source_relations;  // index space for prov
    std::vector<SubRelation> subs;              // attr_order.size() - 1
    std::vector<LinkKind> links;                // subs.size() - 1
};

// Sum over joins of the join-graph distance between the relations
// housing A and A' (0 when co-located). Symmetric.
std::int64_t pairwise_score(const std::vector<JoinSpec>& specs,
                            const RelationStore& store, const std::string& a,
                            const std::string& b);

// Chain template over the shared output schema minimizing the total
// pairwise score. Exhaustive for <= 8 attributes, greedy beyond.
// Dist = 0 contributions are replaced by zero_dist_weight.
Template choose_template(const std::vector<JoinSpec>& specs,
                         const RelationStore& store,
                         double zero_dist_weight = 0.0);

// Splits a chain join along the template. Lossless: brute-force
// evaluation of the result equals brute-force evaluation of the source.
SplitJoin split(const JoinSpec& spec, const RelationStore& store,
                const Template& tmpl,
                std::int64_t merge_row_cap = 2'000'000);

// Same construction over a join tree; child subtrees are fake-joined
// into their parents as demanded by the template. Accepts chains too.
SplitJoin acyclic_to_chain(const JoinSpec& spec, const RelationStore& store,
                           const Template& tmpl,
                           std::int64_t merge_row_cap = 2'000'000);

struct CycleDecomposition {
    JoinSpec skeleton;  // acyclic (or single-relation chain) over survivors
    std::vector<std::string> removed;
    Relation residual;  // materialized join of the removed relations
    std::vector<std::string> bridge_attrs;
    std::int64_t residual_max_degree = 0;  // M(S_R)
};

// Breaks the cyclic hypergraph by removing the fewest relations (at most
// two) whose removal leaves an acyclic, connected remainder; ties go to
// the smallest total row count. The removed relations are joined into
// one residual relation.
CycleDecomposition break_cycles(const JoinSpec& spec,
                                const RelationStore& store,
                                std::int64_t residual_row_cap = 1'000'000);

// Split of a cyclic join for estimation purposes: skeleton relations
// plus the residual treated as one more relation.
SplitJoin split_cyclic(const JoinSpec& spec, const RelationStore& store,
                       const CycleDecomposition& decomp, const Template& tmpl,
                       std::int64_t merge_row_cap = 2'000'000);

// Brute-force evaluation of a SplitJoin: chain the sub-relations on
// shared attribute values while enforcing provenance consistency for
// every shared source relation. Returns canonical row keys over the
// sorted output schema.
std::set<std::string> eval_split_bruteforce(const SplitJoin& sj);

}  // namespace ujs
