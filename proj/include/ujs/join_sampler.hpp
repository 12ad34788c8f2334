#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ujs/plan.hpp"

namespace ujs {

using Rng = std::mt19937_64;

enum class WeightMode { ExactWeight, ExtendedOlken };

WeightMode parse_weight_mode(const std::string& token);

// Per-node tuple weights. ExactWeight stores the exact number of result
// tuples extending each row to the leaves (backward dynamic pass), so
// the rejection rate of chain/tree sampling is zero. ExtendedOlken only
// flags rows with no joinable successor (their weight is zero) and
// relies on max-degree bounds during the walk.
struct WeightIndex {
    WeightMode mode = WeightMode::ExactWeight;
    std::vector<std::vector<double>> w;   // per node, per row id
    std::vector<std::vector<char>> joinable;  // ExtendedOlken root fix
    double root_total = 0;  // Σ over root rows (exact: |J| for chains/trees)
    double bound = 0;       // Olken-style size bound incl. residual factor

    // Sampling accelerators.
    std::vector<double> root_cum;                 // ExactWeight prefix sums
    std::vector<std::uint32_t> root_candidates;   // ExtendedOlken W > 0 rows
};

struct SampleCounters {
    std::int64_t draws = 0;       // completed internal draw attempts
    std::int64_t rejections = 0;  // restarts before an accepted tuple
    std::int64_t walks = 0;       // random walks taken (Olken mode)
};

// |J| <= |R_root| * Π M over tree edges * M(S_R). Zero if any factor is.
double olken_bound(const JoinPlan& plan);

// Backward dynamic pass; Σ first-position weights equals |J| exactly
// for chains and trees (for cyclic plans it equals the skeleton size).
WeightIndex exact_weights(const JoinPlan& plan);

WeightIndex extended_olken_weights(const JoinPlan& plan);

WeightIndex build_weights(const JoinPlan& plan, WeightMode mode);

// Draws one result tuple uniformly (probability exactly 1/|J| per
// returned tuple), retrying internally on rejection.
Row sample_join(const JoinPlan& plan, const WeightIndex& weights, Rng& rng,
                SampleCounters* counters = nullptr,
                std::int64_t retry_cap = 10'000'000);

struct WalkSample {
    Row tuple;
    double p = 0;  // walk probability; meaningful only on success
    bool success = false;
};

// One wander-style walk: uniform start row, then a uniformly random
// joinable successor at each step. p(t) = 1/|R_1| * Π 1/d_i. DeadEnd is
// an outcome, not an error.
WalkSample random_walk(const JoinPlan& plan, Rng& rng);

// Horvitz-Thompson size estimate: (1/m) Σ 1/p over successes, with
// DeadEnds counting in m and contributing zero.
double ht_size(const std::vector<WalkSample>& samples);

// Streaming form: the estimate over m walks extended by one more walk.
double ht_update(double current, std::int64_t m, const WalkSample& next);

}  // namespace ujs
