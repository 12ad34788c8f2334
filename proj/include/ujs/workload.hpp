#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ujs/oracle.hpp"
#include "ujs/stats.hpp"
#include "ujs/union_sampler.hpp"

namespace ujs {

struct RelationEntry {
    std::string name;
    std::string path;  // resolved against base_dir
    std::vector<std::string> schema;
};

struct JoinPredicate {
    std::string relation;
    Predicate pred;
};

struct JoinEntry {
    JoinSpec spec;
    std::vector<JoinPredicate> predicates;
};

struct SamplerSettings {
    std::string mode = "cover";  // disjoint | bernoulli | cover | online
    std::int64_t n = 1000;
    std::int64_t phi = 500;
    double gamma = 0.9;
    WeightMode weight_mode = WeightMode::ExactWeight;
    std::uint64_t seed = 42;
    bool reuse = true;
};

struct OracleSettings {
    bool enabled = true;
    std::int64_t row_cap = 1'000'000;
};

struct WorkloadConfig {
    std::vector<RelationEntry> relations;
    std::vector<JoinEntry> joins;
    SamplerSettings sampler;
    OracleSettings oracle;
    std::string base_dir;
};

WorkloadConfig parse_workload_config(const nlohmann::json& j,
                                     const std::string& base_dir);
WorkloadConfig load_workload_file(const std::string& path);

// Fully prepared workload: relations loaded (predicates pushed down into
// derived relations named <relation>@<join id>), plans and weight
// indexes built, and every join split along the shared template.
struct Workload {
    RelationStore store;
    std::vector<JoinSpec> specs;  // rewritten to derived relation names
    std::vector<std::string> schema;
    Template tmpl;
    std::vector<SplitJoin> splits;
    std::vector<JoinHandle> handles;
};

// preloaded may carry in-memory relations (e.g. straight from the
// generator); entries not found there are read from their CSV paths.
Workload prepare_workload(const WorkloadConfig& config,
                          WeightMode weight_mode,
                          const std::vector<Relation>* preloaded = nullptr,
                          bool dedup = false);

// Histogram-driven parameter estimation: join sizes from the weight
// indexes, every multi-join overlap from histogram_overlap, |U| via the
// k-overlap table, cover ordered by descending size estimate. The raw
// overlap map is exposed for the online sampler's refinement.
UnionParams params_from_histogram(const Workload& wl,
                                  std::map<std::uint32_t, double>* overlaps
                                  = nullptr);

// Exact parameters from the brute-force oracle, covers included.
UnionParams params_from_oracle(const OracleResult& oracle);

// Walk-based parameter estimation: per-join wander walks feed the
// Horvitz-Thompson size estimate and walk_overlap (anchored at the
// smallest estimated member join with successful walks). Joins whose
// walks all dead-end keep their histogram values.
UnionParams params_from_walks(const Workload& wl,
                              std::int64_t walks_per_join, Rng& rng,
                              std::map<std::uint32_t, double>* overlaps
                              = nullptr);

// Membership probe bound to the workload's plans.
std::function<bool(const Row&, int)> membership_fn(const Workload& wl);

OracleResult run_oracle(const Workload& wl, std::int64_t row_cap);

struct ParamError {
    std::string join_id;
    double estimated = 0;
    double exact = 0;
    double ratio_error = 0;  // |est/U_est - exact/U| relative to exact/U
};

struct Verdict {
    bool pass = false;
    bool membership_ok = false;
    UniformityResult chi;
    std::vector<ParamError> param_errors;
    std::vector<std::string> messages;
};

// Chi-square uniformity over the oracle universe, hard membership check,
// and the estimated-vs-exact |J_j|/|U| error table.
Verdict verify_sample(const OracleResult& oracle, const SampleReport& report,
                      const UnionParams& estimated, double alpha = 0.01);

}  // namespace ujs
