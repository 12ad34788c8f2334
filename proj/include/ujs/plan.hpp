#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ujs/join_spec.hpp"
#include "ujs/split.hpp"

namespace ujs {

// One relation in the evaluation tree. Non-root nodes carry a hash map
// from the composite join key (the values of the attributes shared with
// the parent) to the matching row ids, plus the maximum bucket size M.
struct PlanNode {
    const Relation* rel = nullptr;
    std::string rel_name;
    int parent = -1;
    std::vector<std::string> join_attrs;        // shared with parent
    std::vector<std::size_t> parent_key_pos;    // schema positions in parent
    std::vector<std::size_t> own_key_pos;       // schema positions here
    std::vector<std::size_t> key_out_pos;       // positions in output schema
    std::vector<int> children;
    std::unordered_map<std::string, std::vector<std::uint32_t>> match;
    std::int64_t max_degree = 0;  // max bucket size over join keys
    // Scatter of this relation's attributes into the output tuple.
    std::vector<std::pair<std::size_t, std::size_t>> scatter;  // (own, out)
};

// Residual part of a cyclic join: the materialized join of the removed
// relations, matched against the skeleton tuple on the bridge attributes.
struct ResidualPart {
    Relation rel;
    std::vector<std::string> bridge_attrs;
    std::vector<std::size_t> bridge_out_pos;  // positions in output schema
    std::vector<std::size_t> bridge_own_pos;  // positions in residual schema
    std::unordered_map<std::string, std::vector<std::uint32_t>> match;
    std::int64_t max_degree = 0;  // M(S_R)
    std::vector<std::pair<std::size_t, std::size_t>> scatter;
};

struct JoinPlan {
    std::string join_id;
    std::vector<std::string> schema;  // canonical (sorted) output schema
    std::vector<PlanNode> nodes;      // depth-first preorder; nodes[0] = root
    std::optional<ResidualPart> residual;

    std::int64_t root_size() const { return nodes[0].rel->size(); }
};

// Builds the evaluation tree for a spec. Chains keep their declared
// left-to-right order with R_1 as root; trees are rooted at the
// lexicographically smallest relation, children visited in name order;
// cyclic specs go through break_cycles and sample the skeleton with the
// residual as one extra matching step.
JoinPlan build_plan(const JoinSpec& spec, const RelationStore& store,
                    std::int64_t residual_row_cap = 1'000'000);

// Exhaustive evaluation of the plan (the nested-loop oracle). Calls the
// sink for every result tuple; throws CapacityError past row_cap.
void enumerate_plan(const JoinPlan& plan, std::int64_t row_cap,
                    const std::function<void(const Row&)>& sink);

// True iff the full-schema tuple belongs to the join: every relation of
// the plan (and the residual) must contain a row matching the tuple's
// projection onto its attributes.
bool plan_membership(const JoinPlan& plan, const Row& tuple);

}  // namespace ujs
