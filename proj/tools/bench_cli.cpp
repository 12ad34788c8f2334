#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ujs/gen.hpp"
#include "ujs/workload.hpp"

namespace {

using namespace ujs;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CommonOpts {
    std::string workload;
    std::string mode = "cover";
    std::int64_t n = 1000;
    std::uint64_t seed = 42;
    std::int64_t phi = 500;
    double gamma = 0.9;
    std::int64_t retry_cap = 10'000'000;
    std::string weight_mode = "exact";
    std::string estimator = "histogram";
    bool distinct = false;
    bool dedup = false;
    std::string out = ".";
    bool first_join_only = false;  // designed negative control
};

void add_common(CLI::App* cmd, CommonOpts& o, bool sampling_flags) {
    cmd->add_option("--workload", o.workload, "workload JSON file")
        ->required();
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_flag("--dedup", o.dedup, "drop duplicate rows at ingestion");
    if (!sampling_flags) return;
    cmd->add_option("--mode", o.mode,
                    "sampler: disjoint | bernoulli | cover | online");
    cmd->add_option("--n", o.n, "sample size");
    cmd->add_option("--phi", o.phi, "online update period (walks)");
    cmd->add_option("--gamma", o.gamma, "online confidence target");
    cmd->add_option("--retry-cap", o.retry_cap,
                    "online walk attempt budget");
    cmd->add_option("--weight-mode", o.weight_mode, "exact | olken");
    cmd->add_option("--estimator", o.estimator,
                    "histogram | walk | oracle (exact, needs the oracle "
                    "enabled)");
    cmd->add_flag("--distinct", o.distinct,
                  "drop duplicate sampled values, keeping first occurrences");
    cmd->add_flag("--first-join-only", o.first_join_only,
                  "negative control: draw from the first join only");
}

json params_json(const UnionParams& p, const std::vector<JoinHandle>& hs) {
    json sizes = json::object();
    for (std::size_t j = 0; j < hs.size(); ++j) sizes[hs[j].id] = p.sizes[j];
    json cover = json::array();
    for (std::size_t i = 0; i < p.cover.ordering.size(); ++i)
        cover.push_back({{"join", hs[static_cast<std::size_t>(
                                       p.cover.ordering[i])].id},
                         {"size", p.cover.sizes[i]}});
    return {{"sizes", sizes},
            {"union_size", p.union_size},
            {"cover", cover},
            {"clamped", p.clamped}};
}

UnionParams estimate_params(const Workload& wl, const WorkloadConfig& cfg,
                            const CommonOpts& o,
                            std::map<std::uint32_t, double>* overlaps) {
    if (o.estimator == "histogram") return params_from_histogram(wl, overlaps);
    if (o.estimator == "walk") {
        Rng rng(o.seed ^ 0x9e3779b97f4a7c15ull);
        return params_from_walks(wl, 1000, rng, overlaps);
    }
    if (o.estimator == "oracle") {
        if (!cfg.oracle.enabled)
            throw ConfigError(
                "estimator 'oracle' needs the oracle enabled in the "
                "workload");
        OracleResult oracle = run_oracle(wl, cfg.oracle.row_cap);
        if (overlaps) *overlaps = oracle.overlaps;
        return params_from_oracle(oracle);
    }
    throw ConfigError("unknown estimator '" + o.estimator + "'");
}

SampleReport run_sampler(Workload& wl, const CommonOpts& o,
                         const UnionParams& params,
                         const std::map<std::uint32_t, double>& overlaps,
                         Rng& rng) {
    if (o.first_join_only) {
        SampleReport rep;
        SampleCounters counters;
        for (std::int64_t i = 0; i < o.n; ++i) {
            rep.rows.push_back(sample_join(wl.handles[0].plan,
                                           wl.handles[0].weights, rng,
                                           &counters));
            rep.origins.push_back(0);
        }
        rep.counters["accepted"] = o.n;
        rep.counters["draws"] = counters.draws;
        return rep;
    }
    if (o.mode == "disjoint")
        return sample_disjoint_union(wl.handles, params.sizes, o.n, rng);
    if (o.mode == "bernoulli")
        return sample_set_union_bernoulli(wl.handles, params.sizes,
                                          params.union_size, o.n, rng);
    if (o.mode == "cover") return sample_set_union(wl.handles, params, o.n, rng);
    if (o.mode == "online") {
        OnlineContext ctx;
        ctx.membership = membership_fn(wl);
        ctx.initial = params;
        ctx.initial_overlaps = overlaps;
        ctx.backtrack_period = o.phi;
        ctx.confidence_target = o.gamma;
        ctx.retry_cap = o.retry_cap;
        return sample_online_union(wl.handles, ctx, o.n, rng);
    }
    throw ConfigError("unknown mode '" + o.mode + "'");
}

void apply_distinct(SampleReport& rep) {
    std::set<std::string> seen;
    SampleReport out;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (!seen.insert(row_key(rep.rows[i])).second) continue;
        out.rows.push_back(rep.rows[i]);
        if (i < rep.origins.size()) out.origins.push_back(rep.origins[i]);
    }
    rep.rows = std::move(out.rows);
    rep.origins = std::move(out.origins);
}

void write_sample_csv(const std::string& path, const Workload& wl,
                      const SampleReport& rep) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    for (std::size_t i = 0; i < wl.schema.size(); ++i)
        f << (i ? "," : "") << csv_escape(wl.schema[i]);
    f << ",join\n";
    for (std::size_t r = 0; r < rep.rows.size(); ++r) {
        for (std::size_t i = 0; i < rep.rows[r].size(); ++i)
            f << (i ? "," : "")
              << csv_escape(value_to_string(rep.rows[r][i]));
        std::string id = r < rep.origins.size()
                             ? wl.handles[static_cast<std::size_t>(
                                              rep.origins[r])].id
                             : "";
        f << "," << csv_escape(id) << "\n";
    }
}

// Wall-clock values are intentionally excluded: identical (config, seed)
// must produce byte-identical sidecars.
void write_stats_json(const std::string& path, const Workload& wl,
                      const CommonOpts& o, const UnionParams& params,
                      const SampleReport& rep) {
    json j;
    j["mode"] = o.mode;
    j["estimator"] = o.estimator;
    j["weight_mode"] = o.weight_mode;
    j["n"] = o.n;
    j["seed"] = o.seed;
    j["rows"] = rep.rows.size();
    j["counters"] = rep.counters;
    j["warnings"] = rep.warnings;
    j["params"] = params_json(params, wl.handles);
    if (!rep.param_trace.empty()) j["param_trace"] = rep.param_trace;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << j.dump(2) << "\n";
}

int cmd_gen(const GenSpec& gs, std::uint64_t seed, const std::string& out) {
    GeneratedWorkload gw = generate(gs, seed);
    std::string path = write_workload(gw, out);
    std::cout << "wrote " << path << " (" << gw.relations.size()
              << " relations)\n";
    return 0;
}

int cmd_sample(const CommonOpts& o) {
    WorkloadConfig cfg = load_workload_file(o.workload);
    Workload wl = prepare_workload(cfg, parse_weight_mode(o.weight_mode),
                                   nullptr, o.dedup);
    std::map<std::uint32_t, double> overlaps;
    UnionParams params = estimate_params(wl, cfg, o, &overlaps);
    Rng rng(o.seed);
    SampleReport rep = run_sampler(wl, o, params, overlaps, rng);
    if (o.distinct) apply_distinct(rep);
    std::filesystem::create_directories(o.out);
    std::string csv =
        (std::filesystem::path(o.out) / "sample.csv").string();
    std::string sidecar =
        (std::filesystem::path(o.out) / "sample_stats.json").string();
    write_sample_csv(csv, wl, rep);
    write_stats_json(sidecar, wl, o, params, rep);
    std::cout << "wrote " << csv << " (" << rep.rows.size() << " rows) and "
              << sidecar << "\n";
    return 0;
}

int cmd_oracle(const CommonOpts& o) {
    WorkloadConfig cfg = load_workload_file(o.workload);
    if (!cfg.oracle.enabled)
        throw ConfigError("oracle is disabled in this workload");
    Workload wl = prepare_workload(cfg, parse_weight_mode(o.weight_mode),
                                   nullptr, o.dedup);
    OracleResult oracle = run_oracle(wl, cfg.oracle.row_cap);
    json j;
    j["union_size"] = oracle.union_size;
    json sizes = json::object();
    for (std::size_t i = 0; i < oracle.join_ids.size(); ++i)
        sizes[oracle.join_ids[i]] = oracle.sizes[i];
    j["sizes"] = sizes;
    json overlaps = json::object();
    for (const auto& [mask, v] : oracle.overlaps)
        overlaps[std::to_string(mask)] = v;
    j["overlaps_by_mask"] = overlaps;
    json a = json::object();
    for (std::size_t jj = 0; jj < oracle.a.size(); ++jj)
        a[oracle.join_ids[jj]] = oracle.a[jj];
    j["exact_k_membership"] = a;
    Cover cover =
        oracle_cover(oracle, size_descending_ordering(oracle.sizes));
    json cov = json::array();
    for (std::size_t i = 0; i < cover.ordering.size(); ++i)
        cov.push_back({{"join", oracle.join_ids[static_cast<std::size_t>(
                                    cover.ordering[i])]},
                       {"size", cover.sizes[i]}});
    j["cover"] = cov;
    std::filesystem::create_directories(o.out);
    std::string path =
        (std::filesystem::path(o.out) / "oracle.json").string();
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << j.dump(2) << "\n";
    std::cout << "wrote " << path << " (|U| = " << oracle.union_size
              << ")\n";
    return 0;
}

int cmd_verify(const CommonOpts& o) {
    WorkloadConfig cfg = load_workload_file(o.workload);
    if (!cfg.oracle.enabled)
        throw ConfigError("verify needs the oracle enabled");
    Workload wl = prepare_workload(cfg, parse_weight_mode(o.weight_mode),
                                   nullptr, o.dedup);
    std::map<std::uint32_t, double> overlaps;
    UnionParams params = estimate_params(wl, cfg, o, &overlaps);
    Rng rng(o.seed);
    SampleReport rep = run_sampler(wl, o, params, overlaps, rng);
    OracleResult oracle = run_oracle(wl, cfg.oracle.row_cap);
    Verdict v = verify_sample(oracle, rep, params);

    std::cout << "membership: " << (v.membership_ok ? "PASS" : "FAIL")
              << "\n";
    std::cout << "uniformity: " << (v.chi.pass ? "PASS" : "FAIL")
              << " (chi2 = " << v.chi.statistic << ", df = " << v.chi.df
              << ", p = " << v.chi.p_value << ")\n";
    for (const ParamError& pe : v.param_errors)
        std::cout << "ratio " << pe.join_id << ": estimated " << pe.estimated
                  << ", exact " << pe.exact << ", |J|/|U| error "
                  << pe.ratio_error << "\n";
    for (const std::string& m : v.messages) std::cout << m << "\n";

    std::filesystem::create_directories(o.out);
    std::string path =
        (std::filesystem::path(o.out) / "verify.json").string();
    json j;
    j["pass"] = v.pass;
    j["membership_ok"] = v.membership_ok;
    j["chi_square"] = {{"statistic", v.chi.statistic},
                       {"df", v.chi.df},
                       {"p_value", v.chi.p_value},
                       {"pass", v.chi.pass}};
    json errs = json::array();
    for (const ParamError& pe : v.param_errors)
        errs.push_back({{"join", pe.join_id},
                        {"estimated", pe.estimated},
                        {"exact", pe.exact},
                        {"ratio_error", pe.ratio_error}});
    j["param_errors"] = errs;
    j["messages"] = v.messages;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << j.dump(2) << "\n";
    std::cout << (v.pass ? "PASS" : "FAIL") << "\n";
    return v.pass ? 0 : 1;
}

int cmd_bench(const CommonOpts& o) {
    WorkloadConfig cfg = load_workload_file(o.workload);
    Workload wl = prepare_workload(cfg, parse_weight_mode(o.weight_mode),
                                   nullptr, o.dedup);
    std::filesystem::create_directories(o.out);
    std::string path = (std::filesystem::path(o.out) / "bench.csv").string();
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "phase,mode,n,seed,seconds,accepted,draws,fresh_walks,"
         "reuse_copies\n";

    auto t0 = Clock::now();
    std::map<std::uint32_t, double> overlaps;
    UnionParams params = params_from_histogram(wl, &overlaps);
    double warmup = seconds_since(t0);
    f << "estimate,histogram," << o.n << "," << o.seed << "," << warmup
      << ",,,,\n";

    if (cfg.oracle.enabled) {
        t0 = Clock::now();
        OracleResult oracle = run_oracle(wl, cfg.oracle.row_cap);
        f << "oracle,full_join," << o.n << "," << o.seed << ","
          << seconds_since(t0) << "," << oracle.union_size << ",,,\n";
    }

    auto bench_mode = [&](const std::string& mode, bool reuse) {
        CommonOpts local = o;
        local.mode = mode;
        Rng rng(o.seed);
        auto t = Clock::now();
        SampleReport rep;
        if (mode == "online") {
            OnlineContext ctx;
            ctx.membership = membership_fn(wl);
            ctx.initial = params;
            ctx.initial_overlaps = overlaps;
            ctx.backtrack_period = o.phi;
            ctx.confidence_target = o.gamma;
            ctx.retry_cap = o.retry_cap;
            ctx.reuse = reuse;
            rep = sample_online_union(wl.handles, ctx, o.n, rng);
        } else {
            rep = run_sampler(wl, local, params, overlaps, rng);
        }
        auto get = [&](const char* k) {
            auto it = rep.counters.find(k);
            return it == rep.counters.end() ? std::int64_t(0) : it->second;
        };
        f << "sample," << mode << (mode == "online" && !reuse ? "_noreuse" : "")
          << "," << o.n << "," << o.seed << "," << seconds_since(t) << ","
          << rep.rows.size() << "," << get("draws") << ","
          << get("fresh_walks") << "," << get("reuse_copies") << "\n";
    };
    bench_mode("disjoint", true);
    bench_mode("bernoulli", true);
    bench_mode("cover", true);
    bench_mode("online", true);
    bench_mode("online", false);
    std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uniform sampling over unions of joins"};
    app.require_subcommand(1);

    GenSpec gs;
    std::uint64_t gen_seed = 42;
    std::string gen_out = ".";
    CLI::App* gen_cmd =
        app.add_subcommand("gen", "generate a synthetic workload");
    gen_cmd->add_option("--preset", gs.preset, "uq1 | uq2 | uq3");
    gen_cmd->add_option("--shape", gs.shape, "chain | acyclic | cyclic");
    gen_cmd->add_option("--scale", gs.scale, "rows per relation");
    gen_cmd->add_option("--overlap", gs.overlap_scale,
                        "shared-data fraction P in [0,1]");
    gen_cmd->add_option("--skew", gs.skew, "Zipf exponent");
    gen_cmd->add_option("--joins", gs.join_count, "number of joins");
    gen_cmd->add_option("--relations", gs.relations_per_join,
                        "relations per join");
    gen_cmd->add_option("--domain", gs.domain,
                        "attribute domain size (0 = scale)");
    gen_cmd->add_option("--seed", gen_seed, "random seed");
    gen_cmd->add_option("--out", gen_out, "output directory");

    CommonOpts sample_o, oracle_o, verify_o, bench_o;
    add_common(app.add_subcommand("sample", "sample from the union"),
               sample_o, true);
    add_common(app.add_subcommand("oracle", "exact brute-force ground truth"),
               oracle_o, false);
    add_common(app.add_subcommand("verify",
                                  "sample, then check against the oracle"),
               verify_o, true);
    add_common(app.add_subcommand("bench", "timing and counter report"),
               bench_o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("gen")) return cmd_gen(gs, gen_seed, gen_out);
        if (app.got_subcommand("sample")) return cmd_sample(sample_o);
        if (app.got_subcommand("oracle")) return cmd_oracle(oracle_o);
        if (app.got_subcommand("verify")) return cmd_verify(verify_o);
        if (app.got_subcommand("bench")) return cmd_bench(bench_o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
