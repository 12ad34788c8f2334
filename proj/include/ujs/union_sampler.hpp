#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ujs/join_sampler.hpp"
#include "ujs/overlap.hpp"

namespace ujs {

// Everything needed to sample one join of the workload.
struct JoinHandle {
    std::string id;
    JoinPlan plan;
    WeightIndex weights;
};

// Parameter set driving the union samplers.
struct UnionParams {
    std::vector<double> sizes;  // |J_j| estimates, aligned with handles
    Cover cover;                // ordering + |J'_i|
    double union_size = 0;
    bool clamped = false;  // true when any |A_j^k| or |J'_i| was clamped
};

struct SampleReport {
    std::vector<Row> rows;
    std::map<std::string, std::int64_t> counters;
    std::map<std::string, double> timing;  // seconds per phase
    std::vector<std::string> warnings;
    // Origin join index (into handles) per returned row.
    std::vector<int> origins;
    // Online sampler only: one snapshot per parameter update.
    std::vector<std::map<std::string, double>> param_trace;
};

// Disjoint-union sampling: pick J_j with probability |J_j|/Σ|J_j|, then
// one uniform tuple of that join.
SampleReport sample_disjoint_union(std::vector<JoinHandle>& handles,
                                   const std::vector<double>& sizes,
                                   std::int64_t n_samples, Rng& rng);

// Bernoulli union-trick sampling: each round selects every join with
// probability |J_j|/|U|; duplicate values are kept only from the join
// that first observed them.
SampleReport sample_set_union_bernoulli(std::vector<JoinHandle>& handles,
                                        const std::vector<double>& sizes,
                                        double union_size,
                                        std::int64_t n_samples, Rng& rng);

// Cover-based non-Bernoulli sampler with revision. Selects a join with
// probability |J'_j|/|U|, draws uniformly from it, rejects values owned
// by an earlier-cover join and revises values previously attributed to a
// later-cover join.
SampleReport sample_set_union(std::vector<JoinHandle>& handles,
                              const UnionParams& params,
                              std::int64_t n_samples, Rng& rng);

// Acceptance of a reusable walk sample drawn uniformly from a pool whose
// entries are distributed proportionally to their walk probability p.
// Expected accepted copies scale / (p * |J_j|), with the fractional rule
// above 1 (floor plus one Bernoulli copy). Per-value output probability
// is proportional to 1/|J_j| for any positive scale; passing the success
// rate of the walks that filled the pool calibrates one expected copy
// per consumption. The entry must already have been removed from the
// pool. Returns the number of copies to emit (0 = reject).
int reuse_accept(double p, double scale, double size_j, Rng& rng);

// Retention resampling after a parameter update: each row is kept with
// probability (new |J'|/|U|) / (old |J'|/|U|) of its origin join, with
// the fractional rule duplicating rows when the ratio exceeds 1.
// cover sizes are indexed by join index here. Returns the surviving
// (possibly duplicated) subset in order.
void backtrack(std::vector<Row>& rows, std::vector<int>& origins,
               std::vector<std::string>& keys,
               const std::vector<double>& old_cover_by_join, double old_union,
               const std::vector<double>& new_cover_by_join, double new_union,
               Rng& rng, std::int64_t* removed = nullptr,
               std::int64_t* duplicated = nullptr);

// Hooks the online sampler needs from the workload layer.
struct OnlineContext {
    // Membership of a tuple in join j (full-schema projection probes).
    std::function<bool(const Row&, int)> membership;
    // Initial (histogram-based) parameters.
    UnionParams initial;
    // Initial overlap bounds keyed by join-subset bitmask; refined
    // in place by the walk-based updates.
    std::map<std::uint32_t, double> initial_overlaps;
    std::int64_t backtrack_period = 500;  // φ
    double confidence_target = 0.9;       // γ
    bool reuse = true;
    std::int64_t warmup_walks_per_join = 1000;
    std::int64_t retry_cap = 10'000'000;
};

// Online union sampler: histogram warm-up, wander-walk refinement with
// HT size updates and walk-based overlaps every φ walks until the
// minimum overlap confidence reaches γ, sample reuse through
// reuse_accept, and backtracking of already-accepted rows.
SampleReport sample_online_union(std::vector<JoinHandle>& handles,
                                 const OnlineContext& ctx,
                                 std::int64_t n_samples, Rng& rng);

}  // namespace ujs
