#include "ujs/join_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ujs {

WeightMode parse_weight_mode(const std::string& token) {
    if (token == "exact") return WeightMode::ExactWeight;
    if (token == "olken") return WeightMode::ExtendedOlken;
    throw ConfigError("unknown weight mode: " + token);
}

double olken_bound(const JoinPlan& plan) {
    double bound = static_cast<double>(plan.nodes[0].rel->size());
    for (std::size_t i = 1; i < plan.nodes.size(); ++i)
        bound *= static_cast<double>(plan.nodes[i].max_degree);
    if (plan.residual)
        bound *= static_cast<double>(plan.residual->max_degree);
    return bound;
}

namespace {

std::string node_key(const PlanNode& node, const Row& parent_row) {
    Row key;
    key.reserve(node.parent_key_pos.size());
    for (std::size_t p : node.parent_key_pos) key.push_back(parent_row[p]);
    return row_key(key);
}

}  // namespace

WeightIndex exact_weights(const JoinPlan& plan) {
    WeightIndex wi;
    wi.mode = WeightMode::ExactWeight;
    wi.w.resize(plan.nodes.size());
    // Group sums per node, keyed by the node's own join-key values, for
    // consumption by the parent.
    std::vector<std::unordered_map<std::string, double>> group_sum(
        plan.nodes.size());

    for (std::size_t idx = plan.nodes.size(); idx-- > 0;) {
        const PlanNode& node = plan.nodes[idx];
        const auto& rows = node.rel->rows();
        wi.w[idx].assign(rows.size(), 0.0);
        for (std::uint32_t rid = 0; rid < rows.size(); ++rid) {
            double w = 1.0;
            for (int c : node.children) {
                Row key;
                const PlanNode& child = plan.nodes[c];
                key.reserve(child.parent_key_pos.size());
                for (std::size_t p : child.parent_key_pos)
                    key.push_back(rows[rid][p]);
                auto it = group_sum[c].find(row_key(key));
                if (it == group_sum[c].end()) {
                    w = 0.0;
                    break;
                }
                w *= it->second;
            }
            wi.w[idx][rid] = w;
            if (node.parent >= 0 && w > 0) {
                Row key;
                key.reserve(node.own_key_pos.size());
                for (std::size_t p : node.own_key_pos)
                    key.push_back(rows[rid][p]);
                group_sum[idx][row_key(key)] += w;
            }
        }
    }
    wi.root_cum.reserve(wi.w[0].size());
    double acc = 0;
    for (double w : wi.w[0]) {
        acc += w;
        wi.root_cum.push_back(acc);
    }
    wi.root_total = acc;
    double res_factor =
        plan.residual ? static_cast<double>(plan.residual->max_degree) : 1.0;
    wi.bound = wi.root_total * res_factor;
    return wi;
}

WeightIndex extended_olken_weights(const JoinPlan& plan) {
    WeightIndex wi;
    wi.mode = WeightMode::ExtendedOlken;
    wi.joinable.resize(plan.nodes.size());
    const PlanNode& root = plan.nodes[0];
    wi.joinable[0].assign(root.rel->rows().size(), 1);
    for (std::uint32_t rid = 0; rid < root.rel->rows().size(); ++rid) {
        for (int c : root.children) {
            const PlanNode& child = plan.nodes[c];
            if (child.match.find(node_key(child, root.rel->rows()[rid])) ==
                child.match.end()) {
                wi.joinable[0][rid] = 0;
                break;
            }
        }
        if (wi.joinable[0][rid]) wi.root_candidates.push_back(rid);
    }
    wi.root_total = static_cast<double>(wi.root_candidates.size());
    wi.bound = olken_bound(plan);
    return wi;
}

WeightIndex build_weights(const JoinPlan& plan, WeightMode mode) {
    return mode == WeightMode::ExactWeight ? exact_weights(plan)
                                           : extended_olken_weights(plan);
}

namespace {

// One accepted-or-rejected attempt in ExactWeight mode. Rejection can
// only come from the residual accept/reject step of cyclic plans.
bool try_exact_draw(const JoinPlan& plan, const WeightIndex& wi, Rng& rng,
                    Row& tuple) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Root ∝ exact weight.
    double target = unit(rng) * wi.root_total;
    auto it = std::upper_bound(wi.root_cum.begin(), wi.root_cum.end(), target);
    std::uint32_t root_rid = static_cast<std::uint32_t>(
        std::min<std::size_t>(it - wi.root_cum.begin(),
                              wi.root_cum.size() - 1));
    std::vector<std::uint32_t> chosen(plan.nodes.size());
    chosen[0] = root_rid;
    for (std::size_t idx = 1; idx < plan.nodes.size(); ++idx) {
        const PlanNode& node = plan.nodes[idx];
        const Row& parent_row =
            plan.nodes[node.parent].rel->rows()[chosen[node.parent]];
        const auto& bucket = node.match.at(node_key(node, parent_row));
        double total = 0;
        for (std::uint32_t rid : bucket) total += wi.w[idx][rid];
        double t = unit(rng) * total;
        double acc = 0;
        std::uint32_t pick = bucket.back();
        for (std::uint32_t rid : bucket) {
            acc += wi.w[idx][rid];
            if (t < acc) {
                pick = rid;
                break;
            }
        }
        chosen[idx] = pick;
    }
    tuple.assign(plan.schema.size(), Value{});
    for (std::size_t idx = 0; idx < plan.nodes.size(); ++idx) {
        const PlanNode& node = plan.nodes[idx];
        const Row& row = node.rel->rows()[chosen[idx]];
        for (auto [own, out] : node.scatter) tuple[out] = row[own];
    }
    if (plan.residual) {
        const ResidualPart& res = *plan.residual;
        Row key;
        for (std::size_t p : res.bridge_out_pos) key.push_back(tuple[p]);
        auto mit = res.match.find(row_key(key));
        std::size_t d = mit == res.match.end() ? 0 : mit->second.size();
        if (d == 0) return false;
        double accept = static_cast<double>(d) /
                        static_cast<double>(res.max_degree);
        if (unit(rng) >= accept) return false;
        std::uniform_int_distribution<std::size_t> pick(0, d - 1);
        const Row& rrow = res.rel.rows()[mit->second[pick(rng)]];
        for (auto [own, out] : res.scatter) tuple[out] = rrow[own];
    }
    return true;
}

// One Olken-style walk with per-step accept/reject against max degrees.
bool try_olken_draw(const JoinPlan& plan, const WeightIndex& wi, Rng& rng,
                    Row& tuple) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> root_pick(
        0, wi.root_candidates.size() - 1);
    std::vector<std::uint32_t> chosen(plan.nodes.size());
    chosen[0] = wi.root_candidates[root_pick(rng)];
    for (std::size_t idx = 1; idx < plan.nodes.size(); ++idx) {
        const PlanNode& node = plan.nodes[idx];
        const Row& parent_row =
            plan.nodes[node.parent].rel->rows()[chosen[node.parent]];
        auto mit = node.match.find(node_key(node, parent_row));
        if (mit == node.match.end()) return false;  // dead end
        const auto& bucket = mit->second;
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        chosen[idx] = bucket[pick(rng)];
        double accept = static_cast<double>(bucket.size()) /
                        static_cast<double>(node.max_degree);
        if (unit(rng) >= accept) return false;
    }
    tuple.assign(plan.schema.size(), Value{});
    for (std::size_t idx = 0; idx < plan.nodes.size(); ++idx) {
        const PlanNode& node = plan.nodes[idx];
        const Row& row = node.rel->rows()[chosen[idx]];
        for (auto [own, out] : node.scatter) tuple[out] = row[own];
    }
    if (plan.residual) {
        const ResidualPart& res = *plan.residual;
        Row key;
        for (std::size_t p : res.bridge_out_pos) key.push_back(tuple[p]);
        auto mit = res.match.find(row_key(key));
        std::size_t d = mit == res.match.end() ? 0 : mit->second.size();
        if (d == 0) return false;
        double accept = static_cast<double>(d) /
                        static_cast<double>(res.max_degree);
        if (unit(rng) >= accept) return false;
        std::uniform_int_distribution<std::size_t> pick(0, d - 1);
        const Row& rrow = res.rel.rows()[mit->second[pick(rng)]];
        for (auto [own, out] : res.scatter) tuple[out] = rrow[own];
    }
    return true;
}

}  // namespace

Row sample_join(const JoinPlan& plan, const WeightIndex& weights, Rng& rng,
                SampleCounters* counters, std::int64_t retry_cap) {
    bool exact = weights.mode == WeightMode::ExactWeight;
    if (exact && weights.root_total <= 0)
        throw SamplerError(plan.join_id + ": join is empty");
    if (!exact && (weights.root_candidates.empty() || weights.bound <= 0))
        throw SamplerError(plan.join_id + ": join is empty or unbounded");
    Row tuple;
    for (std::int64_t attempt = 0; attempt < retry_cap; ++attempt) {
        if (counters) {
            ++counters->draws;
            if (!exact) ++counters->walks;
        }
        bool ok = exact ? try_exact_draw(plan, weights, rng, tuple)
                        : try_olken_draw(plan, weights, rng, tuple);
        if (ok) return tuple;
        if (counters) ++counters->rejections;
    }
    throw EstimatorError(plan.join_id + ": rejection retry cap exceeded");
}

WalkSample random_walk(const JoinPlan& plan, Rng& rng) {
    WalkSample out;
    const PlanNode& root = plan.nodes[0];
    std::int64_t n = root.rel->size();
    if (n == 0) return out;
    std::uniform_int_distribution<std::int64_t> root_pick(0, n - 1);
    std::vector<std::uint32_t> chosen(plan.nodes.size());
    chosen[0] = static_cast<std::uint32_t>(root_pick(rng));
    double p = 1.0 / static_cast<double>(n);
    for (std::size_t idx = 1; idx < plan.nodes.size(); ++idx) {
        const PlanNode& node = plan.nodes[idx];
        const Row& parent_row =
            plan.nodes[node.parent].rel->rows()[chosen[node.parent]];
        auto mit = node.match.find(node_key(node, parent_row));
        if (mit == node.match.end()) return out;  // DeadEnd
        const auto& bucket = mit->second;
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        chosen[idx] = bucket[pick(rng)];
        p /= static_cast<double>(bucket.size());
    }
    Row tuple(plan.schema.size());
    for (std::size_t idx = 0; idx < plan.nodes.size(); ++idx) {
        const PlanNode& node = plan.nodes[idx];
        const Row& row = node.rel->rows()[chosen[idx]];
        for (auto [own, out] : node.scatter) tuple[out] = row[own];
    }
    if (plan.residual) {
        const ResidualPart& res = *plan.residual;
        Row key;
        for (std::size_t pos : res.bridge_out_pos) key.push_back(tuple[pos]);
        auto mit = res.match.find(row_key(key));
        if (mit == res.match.end()) return out;  // DeadEnd
        const auto& bucket = mit->second;
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        const Row& rrow = res.rel.rows()[bucket[pick(rng)]];
        for (auto [own, out] : res.scatter) tuple[out] = rrow[own];
        p /= static_cast<double>(bucket.size());
    }
    out.tuple = std::move(tuple);
    out.p = p;
    out.success = true;
    return out;
}

double ht_size(const std::vector<WalkSample>& samples) {
    if (samples.empty())
        throw EstimatorError("ht_size needs at least one walk");
    double sum = 0;
    for (const WalkSample& s : samples) {
        if (!s.success) continue;
        if (s.p <= 0)
            throw EstimatorError("successful walk with non-positive p");
        sum += 1.0 / s.p;
    }
    return sum / static_cast<double>(samples.size());
}

double ht_update(double current, std::int64_t m, const WalkSample& next) {
    if (m < 1) throw EstimatorError("ht_update needs m >= 1");
    double contribution = 0;
    if (next.success) {
        if (next.p <= 0)
            throw EstimatorError("successful walk with non-positive p");
        contribution = 1.0 / next.p;
    }
    return current + (contribution - current) / static_cast<double>(m + 1);
}

}  // namespace ujs
