#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ujs/join_sampler.hpp"
#include "ujs/split.hpp"

namespace ujs {

enum class OverlapMethod { Histogram, RandomWalk };

struct OverlapBound {
    std::vector<std::string> delta;  // join ids
    double value = 0;
    OverlapMethod method = OverlapMethod::Histogram;
    std::optional<double> ci_halfwidth;  // RandomWalk only
    std::vector<double> k_sequence;      // Histogram only: K(1..n-1)
};

// Memoized per-join first-pair degree products: for each join, the
// value-sorted sequence of (v, d(v, first sub-relation) * d(v, second
// sub-relation)) over the values common to both first-pair columns.
class OverlapMemo {
public:
    const std::vector<std::pair<Value, double>>& first_pair(
        const SplitJoin& sj);

private:
    std::map<std::string, std::vector<std::pair<Value, double>>> memo_;
};

// Histogram upper bound for |O_Δ| over aligned splits:
// K(1) sums, over values in every join's first-pair domain, the minimum
// per-join degree product; each later step multiplies by the minimum
// max-degree factor, with fake joins contributing 1. avg_degree_refine
// replaces the max degree with the average degree; the result is then an
// estimate rather than a sound bound, so it is off by default.
OverlapBound histogram_overlap(const std::vector<const SplitJoin*>& splits,
                               OverlapMemo* memo = nullptr,
                               bool avg_degree_refine = false);

// Bounds for every subset mask with >= 2 bits (bit j = splits[j]) in one
// pass: the per-value minimum maps are built incrementally per mask, so
// shared intersections are not recomputed. Values agree with per-mask
// histogram_overlap calls up to floating-point summation order.
std::map<std::uint32_t, OverlapBound> histogram_overlap_all(
    const std::vector<const SplitJoin*>& splits, OverlapMemo* memo = nullptr,
    bool avg_degree_refine = false);

// Walk-based estimate |O_Δ| = |J_anchor| * |∩ S'| / |S'_anchor| with
// 1/p(t) applied as real-valued weights. `member` must report whether a
// tuple belongs to every join of Δ other than the anchor. z defaults to
// the 90% two-sided normal quantile.
OverlapBound walk_overlap(const std::vector<std::string>& delta_ids,
                          const std::string& anchor_id,
                          const std::vector<WalkSample>& anchor_pool,
                          const std::function<bool(const Row&)>& member,
                          double z = 1.6448536269514722);

struct KOverlapTable {
    std::size_t n = 0;
    // a[j][k-1] = |A_j^k| for k in [1, n].
    std::vector<std::vector<double>> a;
    double union_size = 0;
    bool clamped = false;
    std::vector<std::string> warnings;
};

// Overlap values keyed by join-subset bitmask (bit j = joins[j]);
// entries required for every mask with >= 2 bits. Filled top-down from
// k = n; negative intermediates are clamped to zero and logged.
KOverlapTable k_overlap_table(const std::vector<double>& join_sizes,
                              const std::map<std::uint32_t, double>& overlaps);

struct Cover {
    std::vector<int> ordering;  // join indices, first kept whole
    std::vector<double> sizes;  // |J'_i| aligned with ordering
    double total = 0;
    bool clamped = false;
    std::vector<std::string> warnings;
};

// Inclusion-exclusion cover sizes for the given ordering.
Cover cover_sizes(const std::vector<int>& ordering,
                  const std::vector<double>& join_sizes,
                  const std::map<std::uint32_t, double>& overlaps);

}  // namespace ujs
