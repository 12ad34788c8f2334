#include "ujs/workload.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ujs/error.hpp"

namespace ujs {

namespace {

JoinSpec parse_join_shape(const nlohmann::json& j) {
    JoinSpec spec;
    spec.id = j.at("id").get<std::string>();
    std::string shape = j.at("shape").get<std::string>();
    auto rels = j.at("relations").get<std::vector<std::string>>();
    if (shape == "chain") {
        ChainShape c;
        c.relations = rels;
        c.join_attrs = j.at("attrs").get<std::vector<std::string>>();
        spec.shape = std::move(c);
    } else if (shape == "acyclic") {
        AcyclicShape a;
        a.relations = rels;
        for (const auto& e : j.at("edges"))
            a.edges.push_back({e.at("parent").get<std::string>(),
                               e.at("child").get<std::string>(),
                               e.at("attr").get<std::string>()});
        spec.shape = std::move(a);
    } else if (shape == "cyclic") {
        CyclicShape c;
        c.relations = rels;
        spec.shape = std::move(c);
    } else {
        throw ConfigError("unknown join shape '" + shape + "' in join " +
                          spec.id);
    }
    return spec;
}

Value parse_json_value(const nlohmann::json& v) {
    if (v.is_number_integer()) return Value(v.get<std::int64_t>());
    if (v.is_string()) return parse_value(v.get<std::string>());
    throw ConfigError("predicate value must be an integer or a string");
}

}  // namespace

WorkloadConfig parse_workload_config(const nlohmann::json& j,
                                     const std::string& base_dir) {
    WorkloadConfig cfg;
    cfg.base_dir = base_dir;
    try {
        for (const auto& r : j.at("relations"))
            cfg.relations.push_back(
                {r.at("name").get<std::string>(),
                 r.at("path").get<std::string>(),
                 r.at("schema").get<std::vector<std::string>>()});
        for (const auto& join : j.at("joins")) {
            JoinEntry entry;
            entry.spec = parse_join_shape(join);
            if (join.contains("predicates"))
                for (const auto& p : join.at("predicates"))
                    entry.predicates.push_back(
                        {p.at("relation").get<std::string>(),
                         Predicate{p.at("attr").get<std::string>(),
                                   parse_cmp(p.at("op").get<std::string>()),
                                   parse_json_value(p.at("value"))}});
            cfg.joins.push_back(std::move(entry));
        }
        if (j.contains("sampler")) {
            const auto& s = j.at("sampler");
            if (s.contains("mode")) cfg.sampler.mode = s.at("mode");
            if (s.contains("n")) cfg.sampler.n = s.at("n");
            if (s.contains("phi")) cfg.sampler.phi = s.at("phi");
            if (s.contains("gamma")) cfg.sampler.gamma = s.at("gamma");
            if (s.contains("weight_mode"))
                cfg.sampler.weight_mode =
                    parse_weight_mode(s.at("weight_mode"));
            if (s.contains("seed")) cfg.sampler.seed = s.at("seed");
            if (s.contains("reuse")) cfg.sampler.reuse = s.at("reuse");
        }
        if (j.contains("oracle")) {
            const auto& o = j.at("oracle");
            if (o.contains("enabled")) cfg.oracle.enabled = o.at("enabled");
            if (o.contains("row_cap")) cfg.oracle.row_cap = o.at("row_cap");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed workload config: ") +
                          e.what());
    }
    if (cfg.relations.empty() || cfg.joins.empty())
        throw ConfigError("workload config needs relations and joins");
    return cfg;
}

WorkloadConfig load_workload_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open workload file " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_workload_config(
        j, std::filesystem::path(path).parent_path().string());
}

namespace {

// Rewrites every occurrence of a relation name inside a spec's shape.
void rename_relation(JoinSpec& spec, const std::string& from,
                     const std::string& to) {
    auto fix = [&](std::vector<std::string>& v) {
        for (auto& s : v)
            if (s == from) s = to;
    };
    if (spec.is_chain()) {
        fix(std::get<ChainShape>(spec.shape).relations);
    } else if (spec.is_acyclic()) {
        auto& a = std::get<AcyclicShape>(spec.shape);
        fix(a.relations);
        for (auto& e : a.edges) {
            if (e.parent == from) e.parent = to;
            if (e.child == from) e.child = to;
        }
    } else {
        fix(std::get<CyclicShape>(spec.shape).relations);
    }
}

}  // namespace

Workload prepare_workload(const WorkloadConfig& config,
                          WeightMode weight_mode,
                          const std::vector<Relation>* preloaded,
                          bool dedup) {
    Workload wl;
    for (const RelationEntry& e : config.relations) {
        const Relation* found = nullptr;
        if (preloaded)
            for (const Relation& r : *preloaded)
                if (r.name() == e.name) found = &r;
        if (found) {
            Relation copy = *found;
            copy.build_all_stats();
            wl.store.add(std::move(copy));
        } else {
            std::filesystem::path p(e.path);
            if (p.is_relative() && !config.base_dir.empty())
                p = std::filesystem::path(config.base_dir) / p;
            Relation r = load_csv(p.string(), e.name, e.schema, dedup);
            r.build_all_stats();
            wl.store.add(std::move(r));
        }
    }

    for (const JoinEntry& entry : config.joins) {
        JoinSpec spec = entry.spec;
        // Push every predicate down into a derived relation private to
        // this join.
        std::map<std::string, std::string> derived;
        for (const JoinPredicate& jp : entry.predicates) {
            std::string current = derived.count(jp.relation)
                                      ? derived[jp.relation]
                                      : jp.relation;
            if (!wl.store.has(current))
                throw ConfigError("predicate on unknown relation " +
                                  jp.relation + " in join " + spec.id);
            Relation next = push_down(wl.store.get(current), jp.pred);
            std::string name = jp.relation + "@" + spec.id;
            Relation renamed(name, next.schema());
            for (const Row& r : next.rows()) renamed.add_row(r);
            renamed.build_all_stats();
            if (!wl.store.has(name)) wl.store.add(std::move(renamed));
            derived[jp.relation] = name;
        }
        for (const auto& [from, to] : derived) rename_relation(spec, from, to);
        wl.specs.push_back(std::move(spec));
    }

    validate_workload(wl.specs, wl.store);
    wl.schema = output_schema(wl.specs.front(), wl.store);
    wl.tmpl = choose_template(wl.specs, wl.store);

    for (const JoinSpec& spec : wl.specs) {
        if (spec.is_cyclic()) {
            CycleDecomposition d = break_cycles(spec, wl.store);
            wl.splits.push_back(split_cyclic(spec, wl.store, d, wl.tmpl));
        } else if (spec.is_chain()) {
            wl.splits.push_back(split(spec, wl.store, wl.tmpl));
        } else {
            wl.splits.push_back(acyclic_to_chain(spec, wl.store, wl.tmpl));
        }
        JoinHandle h;
        h.id = spec.id;
        h.plan = build_plan(spec, wl.store);
        h.weights = build_weights(h.plan, weight_mode);
        wl.handles.push_back(std::move(h));
    }
    return wl;
}

UnionParams params_from_histogram(const Workload& wl,
                                  std::map<std::uint32_t, double>* overlaps) {
    UnionParams params;
    std::size_t n = wl.handles.size();
    if (n == 0 || n > 20)
        throw EstimatorError("params_from_histogram: unsupported join count");
    for (const JoinHandle& h : wl.handles) {
        bool exact_size = h.weights.mode == WeightMode::ExactWeight &&
                          !h.plan.residual.has_value();
        params.sizes.push_back(exact_size ? h.weights.root_total
                                          : h.weights.bound);
    }

    std::vector<const SplitJoin*> all;
    for (const SplitJoin& sj : wl.splits) all.push_back(&sj);
    OverlapMemo memo;
    std::map<std::uint32_t, OverlapBound> bounds =
        histogram_overlap_all(all, &memo);
    std::map<std::uint32_t, double> omap;
    for (auto& [mask, b] : bounds) {
        // |O_Δ| can never exceed the smallest member join.
        double min_size = 1e300;
        for (std::size_t j = 0; j < n; ++j)
            if (mask & (1u << j)) min_size = std::min(min_size, params.sizes[j]);
        omap[mask] = std::min(b.value, min_size);
    }

    KOverlapTable table = k_overlap_table(params.sizes, omap);
    params.union_size = table.union_size;
    std::vector<int> ordering = size_descending_ordering(params.sizes);
    params.cover = cover_sizes(ordering, params.sizes, omap);
    params.clamped = table.clamped || params.cover.clamped;
    if (overlaps) *overlaps = std::move(omap);
    return params;
}

UnionParams params_from_walks(const Workload& wl,
                              std::int64_t walks_per_join, Rng& rng,
                              std::map<std::uint32_t, double>* overlaps) {
    std::map<std::uint32_t, double> hist_omap;
    UnionParams params = params_from_histogram(wl, &hist_omap);
    std::size_t n = wl.handles.size();
    std::vector<std::vector<WalkSample>> logs(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::int64_t w = 0; w < walks_per_join; ++w)
            logs[j].push_back(random_walk(wl.handles[j].plan, rng));
        bool any_success = false;
        for (const WalkSample& s : logs[j])
            if (s.success) any_success = true;
        if (any_success) params.sizes[j] = ht_size(logs[j]);
    }

    auto member_of = membership_fn(wl);
    std::map<std::uint32_t, double> omap;
    std::uint32_t full = (1u << n) - 1;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (std::popcount(mask) < 2) continue;
        int anchor = -1;
        double min_size = 1e300;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(mask & (1u << j))) continue;
            min_size = std::min(min_size, params.sizes[j]);
            bool ok = false;
            for (const WalkSample& s : logs[j])
                if (s.success) ok = true;
            if (!ok) continue;
            if (anchor < 0 || params.sizes[j] <
                                  params.sizes[static_cast<std::size_t>(
                                      anchor)])
                anchor = static_cast<int>(j);
        }
        if (anchor < 0) continue;  // histogram value stays
        std::vector<std::string> ids;
        for (std::size_t j = 0; j < n; ++j)
            if (mask & (1u << j)) ids.push_back(wl.handles[j].id);
        auto member = [&](const Row& t) {
            for (std::size_t j = 0; j < n; ++j) {
                if (!(mask & (1u << j)) || static_cast<int>(j) == anchor)
                    continue;
                if (!member_of(t, static_cast<int>(j))) return false;
            }
            return true;
        };
        OverlapBound b = walk_overlap(
            ids, wl.handles[static_cast<std::size_t>(anchor)].id,
            logs[static_cast<std::size_t>(anchor)], member);
        omap[mask] = std::min(b.value, min_size);
    }

    // Masks never estimated keep their histogram values.
    for (const auto& [mask, val] : hist_omap)
        if (!omap.count(mask)) omap[mask] = val;

    KOverlapTable table = k_overlap_table(params.sizes, omap);
    params.union_size = table.union_size;
    std::vector<int> ordering = size_descending_ordering(params.sizes);
    params.cover = cover_sizes(ordering, params.sizes, omap);
    params.clamped = table.clamped || params.cover.clamped;
    if (overlaps) *overlaps = std::move(omap);
    return params;
}

UnionParams params_from_oracle(const OracleResult& oracle) {
    UnionParams params;
    params.sizes = oracle.sizes;
    params.union_size = oracle.union_size;
    params.cover =
        oracle_cover(oracle, size_descending_ordering(oracle.sizes));
    params.clamped = false;
    return params;
}

std::function<bool(const Row&, int)> membership_fn(const Workload& wl) {
    const Workload* w = &wl;
    return [w](const Row& t, int j) {
        return plan_membership(w->handles[static_cast<std::size_t>(j)].plan,
                               t);
    };
}

OracleResult run_oracle(const Workload& wl, std::int64_t row_cap) {
    std::vector<const JoinPlan*> plans;
    for (const JoinHandle& h : wl.handles) plans.push_back(&h.plan);
    return oracle_evaluate(plans, row_cap);
}

Verdict verify_sample(const OracleResult& oracle, const SampleReport& report,
                      const UnionParams& estimated, double alpha) {
    Verdict v;
    if (report.rows.empty()) {
        v.messages.push_back("empty sample");
        return v;
    }
    v.membership_ok = true;
    std::map<std::string, std::int64_t> counts;
    for (const Row& r : report.rows) {
        std::string key = row_key(r);
        if (!oracle.union_keys.count(key)) {
            v.membership_ok = false;
            v.messages.push_back("sampled tuple outside the exact universe: " +
                                 key);
            break;
        }
        ++counts[key];
    }
    if (v.membership_ok)
        v.chi = uniformity_test(counts, oracle.union_keys.size(), alpha);

    for (std::size_t j = 0; j < oracle.sizes.size(); ++j) {
        ParamError pe;
        pe.join_id = oracle.join_ids[j];
        pe.estimated = j < estimated.sizes.size() ? estimated.sizes[j] : 0;
        pe.exact = oracle.sizes[j];
        double exact_ratio = oracle.sizes[j] / oracle.union_size;
        double est_ratio = estimated.union_size > 0
                               ? pe.estimated / estimated.union_size
                               : 0;
        pe.ratio_error = exact_ratio > 0
                             ? std::fabs(est_ratio - exact_ratio) / exact_ratio
                             : std::fabs(est_ratio);
        v.param_errors.push_back(pe);
    }
    v.pass = v.membership_ok && v.chi.pass;
    if (!v.chi.pass && v.membership_ok)
        v.messages.push_back("chi-square p-value " +
                             std::to_string(v.chi.p_value) + " below " +
                             std::to_string(alpha));
    return v;
}

}  // namespace ujs
