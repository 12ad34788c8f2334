#include "ujs/union_sampler.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

namespace ujs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t weighted_pick(const std::vector<double>& weights, double total,
                          Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double target = unit(rng) * total;
    double acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (target < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0) return i;
    throw SamplerError("weighted selection over all-zero weights");
}

}  // namespace

SampleReport sample_disjoint_union(std::vector<JoinHandle>& handles,
                                   const std::vector<double>& sizes,
                                   std::int64_t n_samples, Rng& rng) {
    auto t0 = Clock::now();
    double total = 0;
    for (double s : sizes) total += s;
    if (total <= 0) throw SamplerError("disjoint union: empty universe");
    SampleReport report;
    SampleCounters counters;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        std::size_t j = weighted_pick(sizes, total, rng);
        report.rows.push_back(
            sample_join(handles[j].plan, handles[j].weights, rng, &counters));
        report.origins.push_back(static_cast<int>(j));
    }
    report.counters["accepted"] = n_samples;
    report.counters["draws"] = counters.draws;
    report.counters["rejected_weight"] = counters.rejections;
    report.timing["sampling"] = seconds_since(t0);
    return report;
}

SampleReport sample_set_union_bernoulli(std::vector<JoinHandle>& handles,
                                        const std::vector<double>& sizes,
                                        double union_size,
                                        std::int64_t n_samples, Rng& rng) {
    auto t0 = Clock::now();
    for (double s : sizes)
        if (s > union_size + 1e-9)
            throw SamplerError(
                "bernoulli union: |U| estimate below a join size");
    if (union_size <= 0) throw SamplerError("bernoulli union: |U| <= 0");

    SampleReport report;
    SampleCounters counters;
    std::unordered_map<std::string, int> registry;  // value -> origin join
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::int64_t accepted = 0, rounds = 0, rejected = 0;

    while (accepted < n_samples) {
        ++rounds;
        std::unordered_map<std::string, int> round_recs;
        for (std::size_t j = 0; j < handles.size() && accepted < n_samples;
             ++j) {
            if (sizes[j] <= 0) continue;
            if (unit(rng) >= sizes[j] / union_size) continue;
            Row t = sample_join(handles[j].plan, handles[j].weights, rng,
                                &counters);
            std::string key = row_key(t);
            // Simultaneous observations within a round go to the earlier
            // join; redrawing here would skew later joins toward values
            // unseen this round, so the later draw is simply discarded.
            if (round_recs.count(key)) {
                ++rejected;
                continue;
            }
            round_recs.emplace(key, static_cast<int>(j));
            auto it = registry.find(key);
            if (it == registry.end())
                registry.emplace(key, static_cast<int>(j));
            else if (it->second != static_cast<int>(j)) {
                ++rejected;
                continue;
            }
            report.rows.push_back(std::move(t));
            report.origins.push_back(static_cast<int>(j));
            ++accepted;
        }
    }
    report.counters["accepted"] = accepted;
    report.counters["rounds"] = rounds;
    report.counters["rejected_duplicate"] = rejected;
    report.counters["draws"] = counters.draws;
    report.counters["rejected_weight"] = counters.rejections;
    report.timing["sampling"] = seconds_since(t0);
    return report;
}

SampleReport sample_set_union(std::vector<JoinHandle>& handles,
                              const UnionParams& params,
                              std::int64_t n_samples, Rng& rng) {
    auto t0 = Clock::now();
    const Cover& cover = params.cover;
    if (cover.total <= 0)
        throw SamplerError("cover sampler: zero total cover size");
    double drift = std::abs(cover.total - params.union_size) /
                   std::max(params.union_size, 1e-12);
    SampleReport report;
    if (drift > 0.01) {
        if (!params.clamped)
            throw SamplerError(
                "cover sampler: cover total diverges from |U| by " +
                std::to_string(drift * 100) + "%");
        report.warnings.push_back(
            "clamped parameters: selection renormalized over cover total");
    }

    SampleCounters counters;
    std::unordered_map<std::string, int> registry;  // value -> cover position
    std::vector<std::string> keys;
    std::int64_t accepted = 0, rejected = 0, revisions = 0,
                 revision_removed = 0;
    const std::int64_t draw_cap = 10'000'000;

    while (accepted < n_samples) {
        std::size_t pos = weighted_pick(cover.sizes, cover.total, rng);
        int j = cover.ordering[pos];
        // Duplicates owned by an earlier-cover join are rejected and the
        // draw repeats within the same join, so accepted tuples are
        // uniform over the join's cover region.
        while (true) {
            if (counters.draws >= draw_cap)
                throw EstimatorError("cover sampler: draw cap exceeded");
            Row t = sample_join(handles[static_cast<std::size_t>(j)].plan,
                                handles[static_cast<std::size_t>(j)].weights,
                                rng, &counters);
            std::string key = row_key(t);
            auto it = registry.find(key);
            if (it != registry.end() && it->second < static_cast<int>(pos)) {
                ++rejected;
                continue;
            }
            if (it != registry.end() && it->second > static_cast<int>(pos)) {
                // Revision: the value belongs to this earlier-cover join;
                // drop every copy attributed to the later join.
                ++revisions;
                for (std::size_t r = report.rows.size(); r-- > 0;) {
                    if (keys[r] != key) continue;
                    report.rows.erase(report.rows.begin() + r);
                    report.origins.erase(report.origins.begin() + r);
                    keys.erase(keys.begin() + r);
                    --accepted;
                    ++revision_removed;
                }
                it->second = static_cast<int>(pos);
            } else if (it == registry.end()) {
                registry.emplace(key, static_cast<int>(pos));
            }
            report.rows.push_back(std::move(t));
            report.origins.push_back(j);
            keys.push_back(std::move(key));
            ++accepted;
            break;
        }
    }
    report.counters["accepted"] = accepted;
    report.counters["draws"] = counters.draws;
    report.counters["rejected_duplicate"] = rejected;
    report.counters["rejected_weight"] = counters.rejections;
    report.counters["revisions"] = revisions;
    report.counters["revision_removed"] = revision_removed;
    report.timing["sampling"] = seconds_since(t0);
    return report;
}

int reuse_accept(double p, double scale, double size_j, Rng& rng) {
    if (p <= 0) throw SamplerError("reuse pool entry with non-positive p");
    if (size_j <= 0) return 0;
    double r = scale / (p * size_j);
    int copies = static_cast<int>(std::floor(r));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < r - std::floor(r)) ++copies;
    return copies;
}

void backtrack(std::vector<Row>& rows, std::vector<int>& origins,
               std::vector<std::string>& keys,
               const std::vector<double>& old_cover_by_join, double old_union,
               const std::vector<double>& new_cover_by_join, double new_union,
               Rng& rng, std::int64_t* removed, std::int64_t* duplicated) {
    std::vector<Row> kept_rows;
    std::vector<int> kept_origins;
    std::vector<std::string> kept_keys;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int j = origins[i];
        double old_ratio = old_cover_by_join[static_cast<std::size_t>(j)] /
                           std::max(old_union, 1e-300);
        double new_ratio = new_cover_by_join[static_cast<std::size_t>(j)] /
                           std::max(new_union, 1e-300);
        double r = old_ratio <= 0 ? 1.0 : new_ratio / old_ratio;
        int copies = static_cast<int>(std::floor(r));
        if (unit(rng) < r - std::floor(r)) ++copies;
        if (copies == 0 && removed) ++*removed;
        if (copies > 1 && duplicated) *duplicated += copies - 1;
        for (int c = 0; c < copies; ++c) {
            kept_rows.push_back(rows[i]);
            kept_origins.push_back(origins[i]);
            kept_keys.push_back(keys[i]);
        }
    }
    rows = std::move(kept_rows);
    origins = std::move(kept_origins);
    keys = std::move(kept_keys);
}

namespace {

struct PoolEntry {
    Row tuple;
    double p;
};

}  // namespace

SampleReport sample_online_union(std::vector<JoinHandle>& handles,
                                 const OnlineContext& ctx,
                                 std::int64_t n_samples, Rng& rng) {
    auto t0 = Clock::now();
    std::size_t n = handles.size();
    std::vector<int> ordering = ctx.initial.cover.ordering;
    std::vector<double> sizes = ctx.initial.sizes;
    std::map<std::uint32_t, double> overlaps = ctx.initial_overlaps;
    Cover cover = ctx.initial.cover;
    double union_size = ctx.initial.union_size;
    bool clamped = ctx.initial.clamped;
    double conf = 0.0;

    SampleReport report;
    if (cover.total <= 0)
        throw SamplerError("online sampler: zero total cover size");
    {
        double drift = std::abs(cover.total - union_size) /
                       std::max(union_size, 1e-12);
        if (drift > 0.01 && !clamped && ctx.confidence_target <= 0)
            throw SamplerError(
                "online sampler: cover total diverges from |U| by " +
                std::to_string(drift * 100) + "%");
    }

    auto cover_by_join = [&](const Cover& c) {
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < c.ordering.size(); ++i)
            out[static_cast<std::size_t>(c.ordering[i])] = c.sizes[i];
        return out;
    };

    std::vector<std::vector<WalkSample>> logs(n);  // every walk, per join
    std::vector<std::vector<PoolEntry>> pools(n);
    // Success rate of the warm-up walks that filled each pool; the
    // reuse acceptance is scaled by it so one consumption yields one
    // expected copy.
    std::vector<double> pool_scale(n, 0.0);
    std::vector<double> olken_bounds(n);
    for (std::size_t j = 0; j < n; ++j)
        olken_bounds[j] = olken_bound(handles[j].plan);

    std::int64_t fresh_walks = 0, reused = 0, reuse_copies = 0,
                 rejected_weight = 0, rejected_duplicate = 0, revisions = 0,
                 revision_removed = 0, backtracks = 0,
                 backtrack_removed = 0, backtrack_duplicated = 0;
    std::int64_t walks_since_update = 0, updates = 0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::unordered_map<std::string, int> registry;  // value -> cover position
    std::vector<std::string> keys;

    auto take_walk = [&](std::size_t j) -> const WalkSample& {
        logs[j].push_back(random_walk(handles[j].plan, rng));
        ++fresh_walks;
        ++walks_since_update;
        return logs[j].back();
    };

    // Recomputes every parameter from the walk logs; histogram values
    // survive wherever walks cannot speak yet.
    double warmup_seconds = 0;
    auto update_params = [&](bool allow_backtrack) {
        for (std::size_t j = 0; j < n; ++j)
            if (!logs[j].empty()) {
                double est = ht_size(logs[j]);
                if (est > 0) sizes[j] = est;
            }
        double min_conf = n >= 2 ? 1.0 : 1.0;
        std::uint32_t full = (1u << n) - 1;
        for (std::uint32_t mask = 1; mask <= full; ++mask) {
            if (std::popcount(mask) < 2) continue;
            // Anchor: smallest estimated join in the subset with at least
            // one successful walk.
            int anchor = -1;
            for (std::size_t j = 0; j < n; ++j) {
                if (!(mask & (1u << j))) continue;
                bool has_success = false;
                for (const WalkSample& s : logs[j])
                    if (s.success) {
                        has_success = true;
                        break;
                    }
                if (!has_success) continue;
                if (anchor < 0 ||
                    sizes[j] < sizes[static_cast<std::size_t>(anchor)])
                    anchor = static_cast<int>(j);
            }
            if (anchor < 0) {
                min_conf = 0.0;
                continue;
            }
            std::vector<std::string> delta_ids;
            for (std::size_t j = 0; j < n; ++j)
                if (mask & (1u << j)) delta_ids.push_back(handles[j].id);
            auto member = [&](const Row& t) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (!(mask & (1u << j)) ||
                        static_cast<int>(j) == anchor)
                        continue;
                    if (!ctx.membership(t, static_cast<int>(j))) return false;
                }
                return true;
            };
            OverlapBound b =
                walk_overlap(delta_ids, handles[static_cast<std::size_t>(
                                            anchor)].id,
                             logs[static_cast<std::size_t>(anchor)], member);
            overlaps[mask] = b.value;
            double halfwidth = b.ci_halfwidth.value_or(0.0);
            double denom = std::max(b.value, 1.0);
            min_conf = std::min(min_conf,
                                std::max(0.0, 1.0 - halfwidth / denom));
        }
        KOverlapTable table = k_overlap_table(sizes, overlaps);
        Cover new_cover = cover_sizes(ordering, sizes, overlaps);
        if (new_cover.total <= 0) return;  // keep previous parameters
        double new_union = table.union_size;
        ++updates;
        if (updates > 10 && std::abs(new_union - union_size) >
                                0.5 * std::max(union_size, 1e-12))
            throw SamplerError("online sampler: |U| estimate is unstable (" +
                               std::to_string(union_size) + " -> " +
                               std::to_string(new_union) + ")");
        if (allow_backtrack && !report.rows.empty()) {
            ++backtracks;
            backtrack(report.rows, report.origins, keys, cover_by_join(cover),
                      union_size, cover_by_join(new_cover), new_union, rng,
                      &backtrack_removed, &backtrack_duplicated);
        }
        cover = std::move(new_cover);
        union_size = new_union;
        clamped = cover.clamped || table.clamped;
        conf = min_conf;
        std::map<std::string, double> snap;
        snap["update"] = static_cast<double>(updates);
        snap["union_size"] = union_size;
        snap["cover_total"] = cover.total;
        snap["confidence"] = conf;
        snap["backtracked"] = allow_backtrack ? 1.0 : 0.0;
        for (std::size_t j = 0; j < n; ++j)
            snap["size_" + handles[j].id] = sizes[j];
        report.param_trace.push_back(std::move(snap));
    };

    // Walk-based warm-up: refine the histogram parameters until the
    // confidence target is met or the per-join walk budget runs out.
    if (ctx.confidence_target > 0) {
        auto tw = Clock::now();
        const std::int64_t batch = 100;
        std::int64_t taken = 0;
        while (conf < ctx.confidence_target &&
               taken < ctx.warmup_walks_per_join) {
            for (std::size_t j = 0; j < n; ++j)
                for (std::int64_t b = 0; b < batch; ++b) {
                    const WalkSample& w = take_walk(j);
                    if (w.success && ctx.reuse)
                        pools[j].push_back({w.tuple, w.p});
                }
            taken += batch;
            update_params(false);
        }
        walks_since_update = 0;
        warmup_seconds = seconds_since(tw);
        for (std::size_t j = 0; j < n; ++j)
            if (!logs[j].empty())
                pool_scale[j] = static_cast<double>(pools[j].size()) /
                                static_cast<double>(logs[j].size());
    }
    report.timing["warmup"] = warmup_seconds;

    std::int64_t accepted = 0;
    const std::int64_t attempt_cap = ctx.retry_cap;
    std::int64_t attempts = 0;

    while (accepted < n_samples) {
        if (walks_since_update >= ctx.backtrack_period &&
            conf < ctx.confidence_target) {
            update_params(true);
            accepted = static_cast<std::int64_t>(report.rows.size());
            walks_since_update = 0;
        }
        std::size_t pos = weighted_pick(cover.sizes, cover.total, rng);
        int j = ordering[pos];
        std::size_t ju = static_cast<std::size_t>(j);

        // Values owned by an earlier-cover position restart the draw
        // within the same join, so accepted tuples stay uniform over the
        // join's cover region.
        while (true) {
            // Obtain one uniform tuple (with multiplicity) from J_j:
            // consume the reuse pool first, fall back to fresh
            // accept/reject walks.
            Row tuple;
            int copies = 0;
            while (copies == 0) {
                if (++attempts > attempt_cap)
                    throw EstimatorError(
                        "online sampler: attempt cap of " +
                        std::to_string(attempt_cap) + " exceeded with " +
                        std::to_string(accepted) +
                        " accepted samples; the walk acceptance rate is too "
                        "low for this workload (raise retry_cap or sample "
                        "another way)");
                if (ctx.reuse && !pools[ju].empty()) {
                    std::uniform_int_distribution<std::size_t> pick(
                        0, pools[ju].size() - 1);
                    std::size_t idx = pick(rng);
                    PoolEntry entry = std::move(pools[ju][idx]);
                    pools[ju][idx] = std::move(pools[ju].back());
                    pools[ju].pop_back();
                    ++reused;
                    copies = reuse_accept(entry.p, pool_scale[ju], sizes[ju],
                                          rng);
                    if (copies > 0) {
                        tuple = std::move(entry.tuple);
                        reuse_copies += copies;
                    } else {
                        ++rejected_weight;
                    }
                    continue;
                }
                const WalkSample& w = take_walk(ju);
                if (!w.success) continue;
                double accept = (1.0 / w.p) / olken_bounds[ju];
                if (unit(rng) < accept) {
                    tuple = w.tuple;
                    copies = 1;
                } else {
                    ++rejected_weight;
                }
            }

            std::string key = row_key(tuple);
            auto it = registry.find(key);
            if (it != registry.end() &&
                it->second < static_cast<int>(pos)) {
                ++rejected_duplicate;
                continue;  // earlier-cover join owns this value
            }
            if (it != registry.end() &&
                it->second > static_cast<int>(pos)) {
                ++revisions;
                for (std::size_t r = report.rows.size(); r-- > 0;) {
                    if (keys[r] != key) continue;
                    report.rows.erase(report.rows.begin() + r);
                    report.origins.erase(report.origins.begin() + r);
                    keys.erase(keys.begin() + r);
                    --accepted;
                    ++revision_removed;
                }
                it->second = static_cast<int>(pos);
            } else if (it == registry.end()) {
                registry.emplace(key, static_cast<int>(pos));
            }
            for (int c = 0; c < copies && accepted < n_samples; ++c) {
                report.rows.push_back(tuple);
                report.origins.push_back(j);
                keys.push_back(key);
                ++accepted;
            }
            break;
        }
    }

    std::int64_t total_walks = 0;
    for (const auto& log : logs)
        total_walks += static_cast<std::int64_t>(log.size());
    report.counters["accepted"] = accepted;
    report.counters["fresh_walks"] = fresh_walks;
    report.counters["walks"] = total_walks;
    report.counters["reused"] = reused;
    report.counters["reuse_copies"] = reuse_copies;
    report.counters["rejected_weight"] = rejected_weight;
    report.counters["rejected_duplicate"] = rejected_duplicate;
    report.counters["revisions"] = revisions;
    report.counters["revision_removed"] = revision_removed;
    report.counters["backtracks"] = backtracks;
    report.counters["backtrack_removed"] = backtrack_removed;
    report.counters["backtrack_duplicated"] = backtrack_duplicated;
    report.counters["updates"] = updates;
    report.timing["sampling"] = seconds_since(t0) - warmup_seconds;
    if (clamped)
        report.warnings.push_back(
            "clamped parameters: selection renormalized over cover total");
    return report;
}

}  // namespace ujs
