#include "ujs/split.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <numeric>

namespace ujs {

namespace {

// Relations (by index) whose schema contains attr.
std::vector<int> holders(const std::vector<const Relation*>& rels,
                         const std::string& attr) {
    std::vector<int> out;
    for (std::size_t i = 0; i < rels.size(); ++i)
        if (rels[i]->has_attribute(attr)) out.push_back(static_cast<int>(i));
    return out;
}

// BFS distance between the nearest holders of a and b.
std::int64_t graph_distance(const std::vector<const Relation*>& rels,
                            const std::vector<std::vector<int>>& adj,
                            const std::string& a, const std::string& b) {
    std::vector<int> src = holders(rels, a);
    if (src.empty())
        throw StructureError("attribute " + a + " absent from join");
    std::vector<int> dst = holders(rels, b);
    if (dst.empty())
        throw StructureError("attribute " + b + " absent from join");
    std::vector<bool> is_dst(rels.size(), false);
    for (int d : dst) is_dst[d] = true;
    std::vector<std::int64_t> dist(rels.size(), -1);
    std::deque<int> q;
    for (int s : src) {
        dist[s] = 0;
        q.push_back(s);
    }
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        if (is_dst[u]) return dist[u];
        for (int v : adj[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
    }
    throw StructureError("attributes " + a + " and " + b +
                         " live in disconnected parts of the join");
}

// Shortest relation path whose first element holds a and last holds b.
std::vector<int> connecting_path(const std::vector<const Relation*>& rels,
                                 const std::vector<std::vector<int>>& adj,
                                 const std::string& a, const std::string& b) {
    std::vector<int> src = holders(rels, a);
    std::vector<int> dst = holders(rels, b);
    std::vector<bool> is_dst(rels.size(), false);
    for (int d : dst) is_dst[d] = true;
    std::vector<int> prev(rels.size(), -2);
    std::deque<int> q;
    for (int s : src) {
        prev[s] = -1;
        q.push_back(s);
    }
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        if (is_dst[u]) {
            std::vector<int> path;
            for (int x = u; x >= 0; x = prev[x]) path.push_back(x);
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (int v : adj[u])
            if (prev[v] == -2) {
                prev[v] = u;
                q.push_back(v);
            }
    }
    throw TemplateError("no join path connects " + a + " and " + b);
}

struct PartialTuple {
    std::vector<Value> values;  // aligned with accumulated attrs
    std::vector<std::pair<int, std::uint32_t>> prov;
};

void finalize_stats(SubRelation& sub) {
    sub.left_degree.clear();
    sub.right_degree.clear();
    sub.left_max = sub.right_max = 0;
    for (const auto& row : sub.rows) {
        ++sub.left_degree[row[0]];
        ++sub.right_degree[row[1]];
    }
    for (const auto& [v, d] : sub.left_degree)
        sub.left_max = std::max(sub.left_max, d);
    for (const auto& [v, d] : sub.right_degree)
        sub.right_max = std::max(sub.right_max, d);
    auto sorted = [](const std::unordered_map<Value, std::int64_t,
                                              ValueHash>& m) {
        std::vector<std::pair<Value, std::int64_t>> v(m.begin(), m.end());
        std::sort(v.begin(), v.end());
        return v;
    };
    sub.left_degree_sorted = sorted(sub.left_degree);
    sub.right_degree_sorted = sorted(sub.right_degree);
}

// Builds the sub-relation for template pair (x, y) over the given
// relation universe.
SubRelation build_pair(const std::vector<const Relation*>& rels,
                       const std::vector<std::vector<int>>& adj,
                       const std::string& x, const std::string& y,
                       std::int64_t merge_row_cap) {
    SubRelation sub;
    sub.left_attr = x;
    sub.right_attr = y;

    // Prefer a single relation housing both attributes.
    int best = -1;
    for (std::size_t i = 0; i < rels.size(); ++i) {
        if (rels[i]->has_attribute(x) && rels[i]->has_attribute(y)) {
            if (best < 0 || rels[i]->name() < rels[best]->name())
                best = static_cast<int>(i);
        }
    }
    if (best >= 0) {
        const Relation& r = *rels[best];
        std::size_t px = r.attr_pos(x), py = r.attr_pos(y);
        sub.rows.reserve(r.rows().size());
        for (std::uint32_t rid = 0; rid < r.rows().size(); ++rid) {
            sub.rows.push_back({r.rows()[rid][px], r.rows()[rid][py]});
            sub.prov.push_back({{best, rid}});
        }
        sub.sources = {best};
        finalize_stats(sub);
        sub.est_size = static_cast<double>(r.size());
        sub.est_left_max = static_cast<double>(sub.left_max);
        sub.est_right_max = static_cast<double>(sub.right_max);
        return sub;
    }

    // Otherwise merge the relations along the shortest connecting path;
    // the adjacency between the resulting sub-relation and its neighbors
    // from the same sources becomes a fake join.
    std::vector<int> path = connecting_path(rels, adj, x, y);
    sub.merged = true;
    sub.sources = path;
    std::sort(sub.sources.begin(), sub.sources.end());

    std::vector<std::string> acc_attrs = rels[path[0]]->schema();
    std::vector<PartialTuple> acc;
    acc.reserve(rels[path[0]]->rows().size());
    for (std::uint32_t rid = 0; rid < rels[path[0]]->rows().size(); ++rid)
        acc.push_back({rels[path[0]]->rows()[rid], {{path[0], rid}}});

    // Synthesized statistics, merged per attribute: product of max
    // degrees on join attributes, max of the two elsewhere.
    std::map<std::string, double> est_max;
    for (const std::string& a : acc_attrs)
        est_max[a] = static_cast<double>(rels[path[0]]->stats(a).max_degree);
    double est_size = static_cast<double>(rels[path[0]]->size());

    for (std::size_t step = 1; step < path.size(); ++step) {
        const Relation& next = *rels[path[step]];
        std::vector<std::string> shared;
        for (const std::string& a : next.schema())
            if (std::find(acc_attrs.begin(), acc_attrs.end(), a) !=
                acc_attrs.end())
                shared.push_back(a);
        if (shared.empty())
            throw TemplateError("merge path relation " + next.name() +
                                " shares no attribute with its predecessors");
        std::vector<std::size_t> acc_shared_pos, next_shared_pos;
        for (const std::string& a : shared) {
            acc_shared_pos.push_back(static_cast<std::size_t>(
                std::find(acc_attrs.begin(), acc_attrs.end(), a) -
                acc_attrs.begin()));
            next_shared_pos.push_back(next.attr_pos(a));
        }
        std::vector<std::string> new_attrs;
        std::vector<std::size_t> next_new_pos;
        for (const std::string& a : next.schema())
            if (std::find(shared.begin(), shared.end(), a) == shared.end()) {
                new_attrs.push_back(a);
                next_new_pos.push_back(next.attr_pos(a));
            }

        std::vector<PartialTuple> merged;
        for (const PartialTuple& pt : acc) {
            const std::vector<std::uint32_t>& cand =
                next.lookup(shared[0], pt.values[acc_shared_pos[0]]);
            for (std::uint32_t rid : cand) {
                const Row& nrow = next.rows()[rid];
                bool ok = true;
                for (std::size_t k = 1; k < shared.size(); ++k)
                    if (nrow[next_shared_pos[k]] !=
                        pt.values[acc_shared_pos[k]]) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                PartialTuple out = pt;
                for (std::size_t pos : next_new_pos)
                    out.values.push_back(nrow[pos]);
                out.prov.emplace_back(path[step], rid);
                merged.push_back(std::move(out));
                if (static_cast<std::int64_t>(merged.size()) > merge_row_cap)
                    throw CapacityError("merged sub-relation exceeds row cap");
            }
        }
        acc = std::move(merged);
        for (const std::string& a : shared)
            est_max[a] *= static_cast<double>(next.stats(a).max_degree);
        for (std::size_t k = 0; k < new_attrs.size(); ++k) {
            double m = static_cast<double>(
                next.stats(new_attrs[k]).max_degree);
            auto it = est_max.find(new_attrs[k]);
            est_max[new_attrs[k]] = it == est_max.end() ? m
                                                        : std::max(it->second, m);
        }
        double best_mult = 1e300;
        for (const std::string& a : shared)
            best_mult = std::min(
                best_mult, static_cast<double>(next.stats(a).max_degree));
        est_size *= best_mult;
        for (std::size_t k = 0; k < new_attrs.size(); ++k)
            acc_attrs.push_back(new_attrs[k]);
    }

    std::size_t px = static_cast<std::size_t>(
        std::find(acc_attrs.begin(), acc_attrs.end(), x) - acc_attrs.begin());
    std::size_t py = static_cast<std::size_t>(
        std::find(acc_attrs.begin(), acc_attrs.end(), y) - acc_attrs.begin());
    for (PartialTuple& pt : acc) {
        sub.rows.push_back({pt.values[px], pt.values[py]});
        std::sort(pt.prov.begin(), pt.prov.end());
        sub.prov.push_back(std::move(pt.prov));
    }
    finalize_stats(sub);
    sub.est_size = est_size;
    sub.est_left_max = est_max.at(x);
    sub.est_right_max = est_max.at(y);
    return sub;
}

SplitJoin build_split(const std::string& id,
                      const std::vector<const Relation*>& rels,
                      const std::vector<std::vector<int>>& adj,
                      const Template& tmpl, std::int64_t merge_row_cap) {
    // The template must cover exactly the output schema.
    std::set<std::string> schema;
    for (const Relation* r : rels)
        schema.insert(r->schema().begin(), r->schema().end());
    std::set<std::string> covered(tmpl.attrs.begin(), tmpl.attrs.end());
    if (covered != schema || covered.size() != tmpl.attrs.size())
        throw TemplateError("template does not cover the output schema of " +
                            id);
    if (tmpl.attrs.size() < 2)
        throw TemplateError("template needs at least one attribute pair");

    SplitJoin sj;
    sj.source_id = id;
    sj.attr_order = tmpl.attrs;
    for (const Relation* r : rels) sj.source_relations.push_back(r->name());
    for (std::size_t i = 0; i + 1 < tmpl.attrs.size(); ++i)
        sj.subs.push_back(build_pair(rels, adj, tmpl.attrs[i],
                                     tmpl.attrs[i + 1], merge_row_cap));
    // A relation left out of every sub-relation (the residual of a broken
    // cycle, or a relation shadowed by a same-schema sibling) would drop a
    // semijoin filter. Absorb it into every sub sharing an endpoint
    // attribute: each of its attributes is an endpoint of some template
    // pair, so together with provenance consistency the absorbed copies
    // reconstruct the full constraint.
    std::set<int> used;
    for (const SubRelation& sub : sj.subs)
        used.insert(sub.sources.begin(), sub.sources.end());
    for (std::size_t u = 0; u < rels.size(); ++u) {
        if (used.count(static_cast<int>(u))) continue;
        const Relation& r = *rels[u];
        bool absorbed = false;
        for (SubRelation& sub : sj.subs) {
            std::vector<std::string> shared;
            if (r.has_attribute(sub.left_attr)) shared.push_back(sub.left_attr);
            if (r.has_attribute(sub.right_attr))
                shared.push_back(sub.right_attr);
            if (shared.empty()) continue;
            std::vector<std::size_t> rpos;
            for (const std::string& a : shared) rpos.push_back(r.attr_pos(a));

            std::vector<std::array<Value, 2>> rows;
            std::vector<std::vector<std::pair<int, std::uint32_t>>> prov;
            for (std::size_t i = 0; i < sub.rows.size(); ++i) {
                Value lv = sub.rows[i][0], rv = sub.rows[i][1];
                const std::vector<std::uint32_t>& cand = r.lookup(
                    shared[0], shared[0] == sub.left_attr ? lv : rv);
                for (std::uint32_t rid : cand) {
                    bool ok = true;
                    for (std::size_t k = 1; k < shared.size(); ++k) {
                        const Value& want =
                            shared[k] == sub.left_attr ? lv : rv;
                        if (r.rows()[rid][rpos[k]] != want) {
                            ok = false;
                            break;
                        }
                    }
                    if (!ok) continue;
                    rows.push_back(sub.rows[i]);
                    prov.push_back(sub.prov[i]);
                    prov.back().emplace_back(static_cast<int>(u), rid);
                    std::sort(prov.back().begin(), prov.back().end());
                    if (static_cast<std::int64_t>(rows.size()) > merge_row_cap)
                        throw CapacityError(
                            "absorbed sub-relation exceeds row cap");
                }
            }
            sub.rows = std::move(rows);
            sub.prov = std::move(prov);
            sub.sources.push_back(static_cast<int>(u));
            std::sort(sub.sources.begin(), sub.sources.end());
            sub.merged = true;
            finalize_stats(sub);
            sub.est_size = static_cast<double>(sub.rows.size());
            sub.est_left_max = static_cast<double>(sub.left_max);
            sub.est_right_max = static_cast<double>(sub.right_max);
            absorbed = true;
        }
        if (!absorbed)
            throw TemplateError("template leaves a relation of " + id +
                                " unconstrained");
    }

    // A fake join is only one-to-one when the next sub's sources are all
    // fixed by the previous one; merely sharing a source still fans out
    // over the extra relations.
    for (std::size_t i = 0; i + 1 < sj.subs.size(); ++i) {
        const auto& a = sj.subs[i].sources;
        const auto& b = sj.subs[i + 1].sources;
        bool contained = true;
        for (int s : b)
            if (!std::binary_search(a.begin(), a.end(), s)) {
                contained = false;
                break;
            }
        sj.links.push_back(contained ? LinkKind::FakeJoin : LinkKind::RealJoin);
    }
    return sj;
}

}  // namespace

std::int64_t pairwise_score(const std::vector<JoinSpec>& specs,
                            const RelationStore& store, const std::string& a,
                            const std::string& b) {
    if (a == b) return 0;
    std::int64_t total = 0;
    for (const JoinSpec& spec : specs) {
        std::vector<const Relation*> rels;
        for (const std::string& rn : spec.relation_names())
            rels.push_back(&store.get(rn));
        total += graph_distance(rels, join_graph(spec, store), a, b);
    }
    return total;
}

Template choose_template(const std::vector<JoinSpec>& specs,
                         const RelationStore& store, double zero_dist_weight) {
    std::vector<std::string> attrs = output_schema(specs.front(), store);
    std::size_t m = attrs.size();
    if (m < 2) throw TemplateError("output schema needs >= 2 attributes");

    // Pair scores with the zero-distance weight applied per join.
    std::map<std::pair<std::size_t, std::size_t>, double> score;
    std::vector<std::vector<const Relation*>> rels_per_spec;
    std::vector<std::vector<std::vector<int>>> adj_per_spec;
    for (const JoinSpec& spec : specs) {
        std::vector<const Relation*> rels;
        for (const std::string& rn : spec.relation_names())
            rels.push_back(&store.get(rn));
        adj_per_spec.push_back(join_graph(spec, store));
        rels_per_spec.push_back(std::move(rels));
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < specs.size(); ++k) {
                std::int64_t d = graph_distance(rels_per_spec[k],
                                                adj_per_spec[k], attrs[i],
                                                attrs[j]);
                s += d == 0 ? zero_dist_weight : static_cast<double>(d);
            }
            score[{i, j}] = s;
        }
    auto pair_score = [&](std::size_t i, std::size_t j) {
        return score.at({std::min(i, j), std::max(i, j)});
    };

    Template best;
    if (m <= 8) {
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        double best_score = 1e300;
        std::vector<std::size_t> best_perm;
        do {
            if (perm.front() > perm.back()) continue;  // skip reversals
            double s = 0;
            for (std::size_t i = 0; i + 1 < m; ++i)
                s += pair_score(perm[i], perm[i + 1]);
            if (s < best_score - 1e-12) {
                best_score = s;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        for (std::size_t i : best_perm) best.attrs.push_back(attrs[i]);
        best.total_score = best_score;
    } else {
        // Greedy: start with the cheapest pair, then extend whichever end
        // has the cheapest continuation.
        std::vector<bool> used(m, false);
        std::size_t a = 0, b = 1;
        double s0 = 1e300;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (pair_score(i, j) < s0) {
                    s0 = pair_score(i, j);
                    a = i;
                    b = j;
                }
        std::deque<std::size_t> chain{a, b};
        used[a] = used[b] = true;
        double total = s0;
        for (std::size_t added = 2; added < m; ++added) {
            double bests = 1e300;
            std::size_t pick = 0;
            bool front = false;
            for (std::size_t i = 0; i < m; ++i) {
                if (used[i]) continue;
                double sb = pair_score(chain.back(), i);
                if (sb < bests) {
                    bests = sb;
                    pick = i;
                    front = false;
                }
                double sf = pair_score(chain.front(), i);
                if (sf < bests) {
                    bests = sf;
                    pick = i;
                    front = true;
                }
            }
            if (front) chain.push_front(pick);
            else chain.push_back(pick);
            used[pick] = true;
            total += bests;
        }
        for (std::size_t i : chain) best.attrs.push_back(attrs[i]);
        best.total_score = total;
    }
    return best;
}

SplitJoin split(const JoinSpec& spec, const RelationStore& store,
                const Template& tmpl, std::int64_t merge_row_cap) {
    if (!spec.is_chain())
        throw StructureError(spec.id + ": split expects a chain join");
    std::vector<const Relation*> rels;
    for (const std::string& rn : spec.relation_names())
        rels.push_back(&store.get(rn));
    return build_split(spec.id, rels, join_graph(spec, store), tmpl,
                       merge_row_cap);
}

SplitJoin acyclic_to_chain(const JoinSpec& spec, const RelationStore& store,
                           const Template& tmpl, std::int64_t merge_row_cap) {
    if (spec.is_cyclic())
        throw StructureError(spec.id +
                             ": acyclic_to_chain expects a chain or tree");
    std::vector<const Relation*> rels;
    for (const std::string& rn : spec.relation_names())
        rels.push_back(&store.get(rn));
    return build_split(spec.id, rels, join_graph(spec, store), tmpl,
                       merge_row_cap);
}

SplitJoin split_cyclic(const JoinSpec& spec, const RelationStore& store,
                       const CycleDecomposition& decomp, const Template& tmpl,
                       std::int64_t merge_row_cap) {
    std::vector<const Relation*> rels;
    for (const std::string& rn : decomp.skeleton.relation_names())
        rels.push_back(&store.get(rn));
    rels.push_back(&decomp.residual);
    // Shared-attribute adjacency over skeleton relations plus residual.
    std::vector<std::vector<int>> adj(rels.size());
    for (std::size_t i = 0; i < rels.size(); ++i)
        for (std::size_t j = i + 1; j < rels.size(); ++j) {
            bool share = false;
            for (const std::string& a : rels[i]->schema())
                if (rels[j]->has_attribute(a)) {
                    share = true;
                    break;
                }
            if (share) {
                adj[i].push_back(static_cast<int>(j));
                adj[j].push_back(static_cast<int>(i));
            }
        }
    return build_split(spec.id, rels, adj, tmpl, merge_row_cap);
}

CycleDecomposition break_cycles(const JoinSpec& spec,
                                const RelationStore& store,
                                std::int64_t residual_row_cap) {
    if (!spec.is_cyclic())
        throw StructureError(spec.id + ": not cyclic");
    std::vector<std::string> names = spec.relation_names();
    std::size_t n = names.size();
    std::vector<const Relation*> rels;
    for (const std::string& rn : names) rels.push_back(&store.get(rn));

    std::vector<std::set<std::string>> all_edges;
    for (const Relation* r : rels)
        all_edges.emplace_back(r->schema().begin(), r->schema().end());
    if (gyo_acyclic(all_edges)) throw StructureError(spec.id + ": not cyclic");

    auto survivors_ok = [&](const std::vector<int>& removed,
                            std::vector<int>& survivors,
                            std::vector<int>& parent) -> bool {
        survivors.clear();
        std::vector<bool> gone(n, false);
        for (int r : removed) gone[r] = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!gone[i]) survivors.push_back(static_cast<int>(i));
        if (survivors.empty()) return false;
        std::vector<std::set<std::string>> edges;
        for (int s : survivors) edges.push_back(all_edges[s]);
        if (!gyo_acyclic(edges, &parent)) return false;
        // Connectivity of the survivor join graph.
        std::vector<std::vector<int>> adj(survivors.size());
        for (std::size_t i = 0; i < survivors.size(); ++i)
            for (std::size_t j = i + 1; j < survivors.size(); ++j) {
                bool share = false;
                for (const std::string& a : edges[i])
                    if (edges[j].count(a)) {
                        share = true;
                        break;
                    }
                if (share) {
                    adj[i].push_back(static_cast<int>(j));
                    adj[j].push_back(static_cast<int>(i));
                }
            }
        std::vector<bool> seen(survivors.size(), false);
        std::vector<int> stack{0};
        seen[0] = true;
        std::size_t reached = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (!seen[v]) {
                    seen[v] = true;
                    ++reached;
                    stack.push_back(v);
                }
        }
        return reached == survivors.size();
    };

    // Candidate removal sets: singletons then pairs, cheapest rows first.
    std::vector<std::vector<int>> candidates;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rels[a]->size() != rels[b]->size())
            return rels[a]->size() < rels[b]->size();
        return names[a] < names[b];
    });
    for (int i : order) candidates.push_back({i});
    std::vector<std::vector<int>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            pairs.push_back({static_cast<int>(i), static_cast<int>(j)});
    std::sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
        std::int64_t sa = rels[a[0]]->size() + rels[a[1]]->size();
        std::int64_t sb = rels[b[0]]->size() + rels[b[1]]->size();
        if (sa != sb) return sa < sb;
        return std::make_pair(names[a[0]], names[a[1]]) <
               std::make_pair(names[b[0]], names[b[1]]);
    });
    candidates.insert(candidates.end(), pairs.begin(), pairs.end());

    for (const std::vector<int>& removed : candidates) {
        std::vector<int> survivors;
        std::vector<int> parent;
        if (!survivors_ok(removed, survivors, parent)) continue;

        // Residual: natural join of the removed relations.
        std::vector<std::string> res_attrs;
        {
            std::set<std::string> s;
            for (int r : removed)
                s.insert(rels[r]->schema().begin(), rels[r]->schema().end());
            res_attrs.assign(s.begin(), s.end());
        }
        Relation residual(spec.id + "__residual", res_attrs);
        std::vector<std::vector<Value>> acc;
        std::vector<std::string> acc_attrs;
        bool capped = false;
        for (std::size_t step = 0; step < removed.size() && !capped; ++step) {
            const Relation& r = *rels[removed[step]];
            if (step == 0) {
                acc_attrs = r.schema();
                for (const Row& row : r.rows()) acc.push_back(row);
                continue;
            }
            std::vector<std::size_t> shared_acc, shared_r;
            std::vector<std::size_t> new_r;
            for (std::size_t k = 0; k < r.schema().size(); ++k) {
                auto it = std::find(acc_attrs.begin(), acc_attrs.end(),
                                    r.schema()[k]);
                if (it != acc_attrs.end()) {
                    shared_acc.push_back(static_cast<std::size_t>(
                        it - acc_attrs.begin()));
                    shared_r.push_back(k);
                } else {
                    new_r.push_back(k);
                }
            }
            std::vector<std::vector<Value>> merged;
            for (const auto& t : acc) {
                for (const Row& row : r.rows()) {
                    bool ok = true;
                    for (std::size_t k = 0; k < shared_acc.size(); ++k)
                        if (t[shared_acc[k]] != row[shared_r[k]]) {
                            ok = false;
                            break;
                        }
                    if (!ok) continue;
                    std::vector<Value> out = t;
                    for (std::size_t k : new_r) out.push_back(row[k]);
                    merged.push_back(std::move(out));
                    if (static_cast<std::int64_t>(merged.size()) >
                        residual_row_cap) {
                        capped = true;
                        break;
                    }
                }
                if (capped) break;
            }
            for (std::size_t k : new_r) acc_attrs.push_back(r.schema()[k]);
            acc = std::move(merged);
        }
        if (capped)
            throw CapacityError(spec.id + ": residual exceeds row cap " +
                                std::to_string(residual_row_cap));
        // Reorder to the residual's sorted schema.
        std::vector<std::size_t> reorder;
        for (const std::string& a : res_attrs)
            reorder.push_back(static_cast<std::size_t>(
                std::find(acc_attrs.begin(), acc_attrs.end(), a) -
                acc_attrs.begin()));
        for (const auto& t : acc) {
            Row row;
            for (std::size_t k : reorder) row.push_back(t[k]);
            residual.add_row(std::move(row));
        }
        residual.build_all_stats();

        CycleDecomposition out;
        out.residual = std::move(residual);
        for (int r : removed) out.removed.push_back(names[r]);

        // Skeleton join tree from the GYO absorption order.
        if (survivors.size() == 1) {
            out.skeleton.id = spec.id + "__skeleton";
            out.skeleton.shape = ChainShape{{names[survivors[0]]}, {}};
        } else {
            AcyclicShape shape;
            for (int s : survivors) shape.relations.push_back(names[s]);
            for (std::size_t i = 0; i < survivors.size(); ++i) {
                if (parent[i] < 0) continue;
                const Relation& a = *rels[survivors[i]];
                const Relation& b = *rels[survivors[parent[i]]];
                std::string attr;
                for (const std::string& x : a.schema())
                    if (b.has_attribute(x)) {
                        attr = x;
                        break;
                    }
                if (attr.empty())
                    throw StructureError(spec.id +
                                         ": skeleton edge without shared attribute");
                shape.edges.push_back(
                    {names[survivors[parent[i]]], names[survivors[i]], attr});
            }
            out.skeleton.id = spec.id + "__skeleton";
            out.skeleton.shape = std::move(shape);
        }

        // Bridge attributes and M(S_R).
        std::set<std::string> skel_attrs;
        for (int s : survivors)
            skel_attrs.insert(rels[s]->schema().begin(),
                              rels[s]->schema().end());
        std::vector<std::size_t> bridge_pos;
        for (std::size_t k = 0; k < res_attrs.size(); ++k)
            if (skel_attrs.count(res_attrs[k])) {
                out.bridge_attrs.push_back(res_attrs[k]);
                bridge_pos.push_back(k);
            }
        if (bridge_pos.empty()) {
            out.residual_max_degree = out.residual.size();
        } else {
            std::unordered_map<std::string, std::int64_t> groups;
            for (const Row& row : out.residual.rows()) {
                Row key;
                for (std::size_t k : bridge_pos) key.push_back(row[k]);
                std::int64_t& c = groups[row_key(key)];
                ++c;
                out.residual_max_degree =
                    std::max(out.residual_max_degree, c);
            }
        }
        return out;
    }
    throw StructureError(spec.id +
                         ": no removal set of size <= 2 acyclifies the join");
}

std::set<std::string> eval_split_bruteforce(const SplitJoin& sj) {
    std::vector<std::string> schema(sj.attr_order);
    std::sort(schema.begin(), schema.end());
    std::map<std::string, std::size_t> schema_pos;
    for (std::size_t i = 0; i < schema.size(); ++i) schema_pos[schema[i]] = i;

    // Index each sub-relation by left-attribute value for pruning.
    std::vector<std::unordered_map<std::string, std::vector<std::uint32_t>>>
        by_left(sj.subs.size());
    for (std::size_t s = 0; s < sj.subs.size(); ++s)
        for (std::uint32_t rid = 0; rid < sj.subs[s].rows.size(); ++rid)
            by_left[s][row_key({sj.subs[s].rows[rid][0]})].push_back(rid);

    std::set<std::string> out;
    Row tuple(schema.size());
    std::map<int, std::uint32_t> prov_assign;

    std::function<void(std::size_t)> recurse = [&](std::size_t s) {
        if (s == sj.subs.size()) {
            out.insert(row_key(tuple));
            return;
        }
        const SubRelation& sub = sj.subs[s];
        std::size_t lp = schema_pos.at(sub.left_attr);
        std::size_t rp = schema_pos.at(sub.right_attr);
        auto try_row = [&](std::uint32_t rid) {
            const auto& row = sub.rows[rid];
            if (s > 0 && tuple[lp] != row[0]) return;
            // Provenance must stay consistent across every shared source.
            std::vector<int> added;
            bool ok = true;
            for (const auto& [rel, rrid] : sub.prov[rid]) {
                auto it = prov_assign.find(rel);
                if (it == prov_assign.end()) {
                    prov_assign[rel] = rrid;
                    added.push_back(rel);
                } else if (it->second != rrid) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                Value saved = tuple[rp];
                tuple[lp] = row[0];
                tuple[rp] = row[1];
                recurse(s + 1);
                tuple[rp] = saved;
            }
            for (int rel : added) prov_assign.erase(rel);
        };
        if (s == 0) {
            for (std::uint32_t rid = 0; rid < sub.rows.size(); ++rid)
                try_row(rid);
        } else {
            auto it = by_left[s].find(row_key({tuple[lp]}));
            if (it == by_left[s].end()) return;
            for (std::uint32_t rid : it->second) try_row(rid);
        }
    };
    recurse(0);
    return out;
}

}  // namespace ujs
