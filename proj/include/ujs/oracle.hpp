#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ujs/overlap.hpp"
#include "ujs/plan.hpp"

namespace ujs {

// Exact brute-force ground truth for a workload of joins sharing one
// output schema. Everything here is enumerated, never estimated.
struct OracleResult {
    std::vector<std::string> join_ids;
    std::vector<std::string> schema;
    // Canonical tuple keys per join.
    std::vector<std::set<std::string>> tuples;
    std::vector<double> sizes;  // |J_j|
    // |O_Δ| keyed by join-subset bitmask, all masks with >= 2 bits.
    std::map<std::uint32_t, double> overlaps;
    // a[j][k-1] = |A_j^k|: tuples of J_j appearing in exactly k joins.
    std::vector<std::vector<double>> a;
    double union_size = 0;
    // Keys of the union, for membership-style checks in tests.
    std::set<std::string> union_keys;
};

// Enumerates every join and derives all exact overlap quantities.
// Throws SchemaError when the plans do not share an output schema and
// CapacityError when any single join exceeds row_cap tuples.
OracleResult oracle_evaluate(const std::vector<const JoinPlan*>& plans,
                             std::int64_t row_cap = 1'000'000);

// Exact cover sizes for an ordering: |J'_i| counts the tuples of the
// i-th join not present in any earlier join of the ordering.
Cover oracle_cover(const OracleResult& oracle,
                   const std::vector<int>& ordering);

// Ordering by descending exact join size (ties by join index).
std::vector<int> size_descending_ordering(const std::vector<double>& sizes);

}  // namespace ujs
