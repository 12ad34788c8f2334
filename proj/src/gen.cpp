#include "ujs/gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "ujs/error.hpp"
#include "ujs/join_sampler.hpp"

namespace ujs {

namespace {

// Zipf(s) draw over {1..n} via inverse CDF on precomputed cumulative
// weights. s = 0 degenerates to uniform.
class Zipf {
public:
    Zipf(std::int64_t n, double s) {
        cum_.reserve(static_cast<std::size_t>(n));
        double acc = 0;
        for (std::int64_t v = 1; v <= n; ++v) {
            acc += 1.0 / std::pow(static_cast<double>(v), s);
            cum_.push_back(acc);
        }
    }
    std::int64_t draw(Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, cum_.back());
        double x = u(rng);
        auto it = std::lower_bound(cum_.begin(), cum_.end(), x);
        return static_cast<std::int64_t>(it - cum_.begin()) + 1;
    }

private:
    std::vector<double> cum_;
};

struct Builder {
    const GenSpec& spec;
    Rng rng;
    Zipf zipf;
    std::int64_t domain;
    // Base rows per attribute pair, shared across joins at rate P.
    std::map<std::pair<std::string, std::string>, std::vector<Row>> base;
    std::int64_t shared_fallback = 0;

    Builder(const GenSpec& s, std::uint64_t seed, std::int64_t dom)
        : spec(s), rng(seed), zipf(dom, s.skew), domain(dom) {}

    std::vector<Row>& base_pair(const std::string& a, const std::string& b) {
        auto key = std::make_pair(a, b);
        auto it = base.find(key);
        if (it != base.end()) return it->second;
        std::vector<Row> rows;
        std::set<std::string> seen;
        for (std::int64_t r = 0; r < spec.scale; ++r) {
            Row row{Value(zipf.draw(rng)), Value(zipf.draw(rng))};
            for (int attempt = 0; seen.count(row_key(row)); ++attempt) {
                if (attempt >= 200) {
                    row = {Value(std::int64_t(1'000'000'000) +
                                 shared_fallback),
                           Value(std::int64_t(1'000'000'000) +
                                 shared_fallback)};
                    ++shared_fallback;
                    break;
                }
                row = {Value(zipf.draw(rng)), Value(zipf.draw(rng))};
            }
            seen.insert(row_key(row));
            rows.push_back(std::move(row));
        }
        return base.emplace(key, std::move(rows)).first->second;
    }

    // join_index < 0 selects the fully shared variant (P ignored).
    Relation make_relation(const std::string& name, const std::string& a,
                           const std::string& b, int join_index) {
        Relation rel(name, {a, b});
        const std::vector<Row>& shared = base_pair(a, b);
        std::int64_t take =
            join_index < 0
                ? spec.scale
                : static_cast<std::int64_t>(
                      std::llround(spec.overlap_scale *
                                   static_cast<double>(spec.scale)));
        take = std::min(take, spec.scale);
        std::set<std::string> seen;
        for (std::int64_t r = 0; r < take; ++r) {
            seen.insert(row_key(shared[static_cast<std::size_t>(r)]));
            rel.add_row(shared[static_cast<std::size_t>(r)]);
        }
        std::int64_t offset =
            static_cast<std::int64_t>(join_index + 1) * (domain + 1);
        std::int64_t fallback = 0;
        for (std::int64_t r = take; r < spec.scale; ++r) {
            Row row{Value(offset + zipf.draw(rng)),
                    Value(offset + zipf.draw(rng))};
            for (int attempt = 0; seen.count(row_key(row)); ++attempt) {
                if (attempt >= 200) {
                    std::int64_t u = std::int64_t(2'000'000'000) +
                                     std::int64_t(join_index + 1) * 10'000'000 +
                                     fallback++;
                    row = {Value(u), Value(u)};
                    break;
                }
                row = {Value(offset + zipf.draw(rng)),
                       Value(offset + zipf.draw(rng))};
            }
            seen.insert(row_key(row));
            rel.add_row(std::move(row));
        }
        return rel;
    }
};

std::string attr(int i) { return "x" + std::to_string(i); }

nlohmann::json relation_entry(const Relation& r) {
    return {{"name", r.name()},
            {"path", r.name() + ".csv"},
            {"schema", r.schema()}};
}

nlohmann::json default_sampler(std::uint64_t seed) {
    return {{"mode", "cover"},    {"n", 1000},
            {"phi", 500},         {"gamma", 0.9},
            {"weight_mode", "exact"}, {"seed", seed}};
}

GeneratedWorkload gen_chains(const GenSpec& spec, std::uint64_t seed,
                             int joins, int rels) {
    std::int64_t dom = spec.domain > 0 ? spec.domain : spec.scale;
    Builder b(spec, seed, dom);
    GeneratedWorkload out;
    out.config["relations"] = nlohmann::json::array();
    out.config["joins"] = nlohmann::json::array();
    for (int j = 0; j < joins; ++j) {
        std::vector<std::string> names, link_attrs;
        for (int i = 0; i < rels; ++i) {
            std::string name =
                "J" + std::to_string(j + 1) + "_R" + std::to_string(i + 1);
            Relation r = b.make_relation(name, attr(i + 1), attr(i + 2), j);
            out.config["relations"].push_back(relation_entry(r));
            out.relations.push_back(std::move(r));
            names.push_back(name);
            if (i > 0) link_attrs.push_back(attr(i + 1));
        }
        out.config["joins"].push_back({{"id", "J" + std::to_string(j + 1)},
                                       {"shape", "chain"},
                                       {"relations", names},
                                       {"attrs", link_attrs}});
    }
    out.config["sampler"] = default_sampler(seed);
    out.config["oracle"] = {{"enabled", true}, {"row_cap", 1'000'000}};
    return out;
}

GeneratedWorkload gen_acyclic(const GenSpec& spec, std::uint64_t seed,
                              int joins, int rels) {
    // Star on x2: R1(x1,x2) with R2..Rm hanging off x2.
    std::int64_t dom = spec.domain > 0 ? spec.domain : spec.scale;
    Builder b(spec, seed, dom);
    GeneratedWorkload out;
    out.config["relations"] = nlohmann::json::array();
    out.config["joins"] = nlohmann::json::array();
    for (int j = 0; j < joins; ++j) {
        std::vector<std::string> names;
        nlohmann::json edges = nlohmann::json::array();
        for (int i = 0; i < rels; ++i) {
            std::string name =
                "J" + std::to_string(j + 1) + "_R" + std::to_string(i + 1);
            std::string left = i == 0 ? attr(1) : attr(2);
            std::string right = i == 0 ? attr(2) : attr(i + 2);
            Relation r = b.make_relation(name, left, right, j);
            out.config["relations"].push_back(relation_entry(r));
            out.relations.push_back(std::move(r));
            names.push_back(name);
            if (i > 0)
                edges.push_back({{"parent", names[0]},
                                 {"child", name},
                                 {"attr", attr(2)}});
        }
        out.config["joins"].push_back({{"id", "J" + std::to_string(j + 1)},
                                       {"shape", "acyclic"},
                                       {"relations", names},
                                       {"edges", edges}});
    }
    out.config["sampler"] = default_sampler(seed);
    out.config["oracle"] = {{"enabled", true}, {"row_cap", 1'000'000}};
    return out;
}

GeneratedWorkload gen_cyclic(const GenSpec& spec, std::uint64_t seed,
                             int joins) {
    // Triangles R1(x1,x2), R2(x2,x3), R3(x1,x3).
    std::int64_t dom = spec.domain > 0 ? spec.domain : spec.scale;
    Builder b(spec, seed, dom);
    GeneratedWorkload out;
    out.config["relations"] = nlohmann::json::array();
    out.config["joins"] = nlohmann::json::array();
    const std::array<std::pair<int, int>, 3> pairs{
        {{1, 2}, {2, 3}, {1, 3}}};
    for (int j = 0; j < joins; ++j) {
        std::vector<std::string> names;
        for (int i = 0; i < 3; ++i) {
            std::string name =
                "J" + std::to_string(j + 1) + "_R" + std::to_string(i + 1);
            Relation r = b.make_relation(name, attr(pairs[i].first),
                                         attr(pairs[i].second), j);
            out.config["relations"].push_back(relation_entry(r));
            out.relations.push_back(std::move(r));
            names.push_back(name);
        }
        out.config["joins"].push_back({{"id", "J" + std::to_string(j + 1)},
                                       {"shape", "cyclic"},
                                       {"relations", names}});
    }
    out.config["sampler"] = default_sampler(seed);
    out.config["oracle"] = {{"enabled", true}, {"row_cap", 1'000'000}};
    return out;
}

GeneratedWorkload gen_uq2(const GenSpec& spec, std::uint64_t seed) {
    // One shared relation set; three joins differing by the x1 predicate.
    std::int64_t dom = spec.domain > 0 ? spec.domain : spec.scale;
    Builder b(spec, seed, dom);
    GeneratedWorkload out;
    out.config["relations"] = nlohmann::json::array();
    out.config["joins"] = nlohmann::json::array();
    std::vector<std::string> names, link_attrs;
    int rels = std::max(2, spec.relations_per_join);
    for (int i = 0; i < rels; ++i) {
        std::string name = "S" + std::to_string(i + 1);
        Relation r = b.make_relation(name, attr(i + 1), attr(i + 2), -1);
        out.config["relations"].push_back(relation_entry(r));
        out.relations.push_back(std::move(r));
        names.push_back(name);
        if (i > 0) link_attrs.push_back(attr(i + 1));
    }
    const std::array<double, 3> frac{0.9, 0.6, 0.3};
    for (int j = 0; j < 3; ++j) {
        std::int64_t cut = std::max<std::int64_t>(
            1, std::llround(frac[static_cast<std::size_t>(j)] *
                            static_cast<double>(dom)));
        nlohmann::json preds = nlohmann::json::array();
        preds.push_back({{"relation", names[0]},
                         {"attr", attr(1)},
                         {"op", "<="},
                         {"value", cut}});
        out.config["joins"].push_back({{"id", "J" + std::to_string(j + 1)},
                                       {"shape", "chain"},
                                       {"relations", names},
                                       {"attrs", link_attrs},
                                       {"predicates", preds}});
    }
    out.config["sampler"] = default_sampler(seed);
    out.config["oracle"] = {{"enabled", true}, {"row_cap", 1'000'000}};
    return out;
}

GeneratedWorkload gen_uq3(const GenSpec& spec, std::uint64_t seed) {
    // Two chains over x1..x4 plus a join tree whose (x2,x3) template
    // pair lives in no single relation.
    std::int64_t dom = spec.domain > 0 ? spec.domain : spec.scale;
    Builder b(spec, seed, dom);
    GeneratedWorkload out;
    out.config["relations"] = nlohmann::json::array();
    out.config["joins"] = nlohmann::json::array();
    auto add = [&](Relation r) {
        out.config["relations"].push_back(relation_entry(r));
        std::string n = r.name();
        out.relations.push_back(std::move(r));
        return n;
    };
    for (int j = 0; j < 2; ++j) {
        std::vector<std::string> names;
        for (int i = 0; i < 3; ++i)
            names.push_back(add(b.make_relation(
                "J" + std::to_string(j + 1) + "_R" + std::to_string(i + 1),
                attr(i + 1), attr(i + 2), j)));
        out.config["joins"].push_back(
            {{"id", "J" + std::to_string(j + 1)},
             {"shape", "chain"},
             {"relations", names},
             {"attrs", {attr(2), attr(3)}}});
    }
    std::string t1 = add(b.make_relation("J3_R1", attr(1), attr(2), 2));
    std::string t2 = add(b.make_relation("J3_R2", attr(1), attr(3), 2));
    std::string t3 = add(b.make_relation("J3_R3", attr(3), attr(4), 2));
    nlohmann::json edges = nlohmann::json::array();
    edges.push_back({{"parent", t1}, {"child", t2}, {"attr", attr(1)}});
    edges.push_back({{"parent", t2}, {"child", t3}, {"attr", attr(3)}});
    out.config["joins"].push_back({{"id", "J3"},
                                   {"shape", "acyclic"},
                                   {"relations", {t1, t2, t3}},
                                   {"edges", edges}});
    out.config["sampler"] = default_sampler(seed);
    out.config["oracle"] = {{"enabled", true}, {"row_cap", 1'000'000}};
    return out;
}

}  // namespace

GeneratedWorkload generate(const GenSpec& spec, std::uint64_t seed) {
    if (spec.scale < 1) throw ConfigError("generate: scale must be >= 1");
    if (spec.overlap_scale < 0 || spec.overlap_scale > 1)
        throw ConfigError("generate: overlap_scale must be in [0, 1]");
    if (spec.preset == "uq1") {
        GenSpec s = spec;
        s.shape = "chain";
        return gen_chains(s, seed, 5, 5);
    }
    if (spec.preset == "uq2") return gen_uq2(spec, seed);
    if (spec.preset == "uq3") return gen_uq3(spec, seed);
    if (!spec.preset.empty())
        throw ConfigError("generate: unknown preset '" + spec.preset + "'");
    if (spec.join_count < 1 || spec.relations_per_join < 1)
        throw ConfigError("generate: join_count and relations_per_join "
                          "must be >= 1");
    if (spec.shape == "chain")
        return gen_chains(spec, seed, spec.join_count,
                          spec.relations_per_join);
    if (spec.shape == "acyclic")
        return gen_acyclic(spec, seed, spec.join_count,
                           std::max(3, spec.relations_per_join));
    if (spec.shape == "cyclic") return gen_cyclic(spec, seed, spec.join_count);
    throw ConfigError("generate: unknown shape '" + spec.shape + "'");
}

std::string write_workload(const GeneratedWorkload& wl,
                           const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const Relation& r : wl.relations) {
        std::filesystem::path p =
            std::filesystem::path(out_dir) / (r.name() + ".csv");
        std::ofstream f(p);
        if (!f) throw IngestionError("cannot write " + p.string());
        const auto& schema = r.schema();
        for (std::size_t i = 0; i < schema.size(); ++i)
            f << (i ? "," : "") << csv_escape(schema[i]);
        f << "\n";
        for (const Row& row : r.rows()) {
            for (std::size_t i = 0; i < row.size(); ++i)
                f << (i ? "," : "") << csv_escape(value_to_string(row[i]));
            f << "\n";
        }
    }
    std::filesystem::path wp =
        std::filesystem::path(out_dir) / "workload.json";
    std::ofstream f(wp);
    if (!f) throw IngestionError("cannot write " + wp.string());
    f << wl.config.dump(2) << "\n";
    return wp.string();
}

}  // namespace ujs
