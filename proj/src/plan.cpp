#include "ujs/plan.hpp"

#include <algorithm>
#include <map>

namespace ujs {

namespace {

std::string key_of(const Row& row, const std::vector<std::size_t>& pos) {
    Row key;
    key.reserve(pos.size());
    for (std::size_t p : pos) key.push_back(row[p]);
    return row_key(key);
}

void finish_node(PlanNode& node, const JoinPlan& plan) {
    // Scatter positions into the output schema.
    for (std::size_t i = 0; i < node.rel->schema().size(); ++i) {
        auto it = std::lower_bound(plan.schema.begin(), plan.schema.end(),
                                   node.rel->schema()[i]);
        node.scatter.emplace_back(
            i, static_cast<std::size_t>(it - plan.schema.begin()));
    }
    if (node.parent < 0) return;
    const Relation& parent_rel = *plan.nodes[node.parent].rel;
    for (const std::string& a : node.join_attrs) {
        node.parent_key_pos.push_back(parent_rel.attr_pos(a));
        node.own_key_pos.push_back(node.rel->attr_pos(a));
        auto it = std::lower_bound(plan.schema.begin(), plan.schema.end(), a);
        node.key_out_pos.push_back(
            static_cast<std::size_t>(it - plan.schema.begin()));
    }
    for (std::uint32_t rid = 0; rid < node.rel->rows().size(); ++rid) {
        std::string key = key_of(node.rel->rows()[rid], node.own_key_pos);
        auto& bucket = node.match[key];
        bucket.push_back(rid);
        node.max_degree = std::max(node.max_degree,
                                   static_cast<std::int64_t>(bucket.size()));
    }
}

// Appends the subtree rooted at `rel_idx` to plan.nodes in DFS preorder.
void add_subtree(JoinPlan& plan, const RelationStore& store,
                 const std::vector<std::string>& names,
                 const std::vector<std::vector<int>>& children_of,
                 int rel_idx, int parent_node) {
    PlanNode node;
    node.rel = &store.get(names[rel_idx]);
    node.rel_name = names[rel_idx];
    node.parent = parent_node;
    if (parent_node >= 0) {
        const Relation& p = *plan.nodes[parent_node].rel;
        for (const std::string& a : node.rel->schema())
            if (p.has_attribute(a)) node.join_attrs.push_back(a);
        if (node.join_attrs.empty())
            throw StructureError(plan.join_id + ": relation " +
                                 names[rel_idx] +
                                 " shares no attribute with its tree parent");
    }
    int my_index = static_cast<int>(plan.nodes.size());
    if (parent_node >= 0) plan.nodes[parent_node].children.push_back(my_index);
    plan.nodes.push_back(std::move(node));
    finish_node(plan.nodes[my_index], plan);
    for (int c : children_of[rel_idx])
        add_subtree(plan, store, names, children_of, c, my_index);
}

void build_tree_plan(JoinPlan& plan, const RelationStore& store,
                     const std::vector<std::string>& names,
                     const std::vector<std::pair<int, int>>& edges,
                     int root) {
    std::vector<std::vector<int>> adj(names.size());
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    // Orient away from the root; children in lexicographic name order.
    for (auto& v : adj)
        std::sort(v.begin(), v.end(),
                  [&](int x, int y) { return names[x] < names[y]; });
    std::vector<std::vector<int>> children_of(names.size());
    std::vector<bool> seen(names.size(), false);
    std::vector<int> stack{root};
    seen[root] = true;
    std::vector<int> order{root};
    std::vector<int> parent(names.size(), -1);
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                parent[v] = u;
                children_of[u].push_back(v);
                stack.push_back(v);
            }
    }
    add_subtree(plan, store, names, children_of, root, -1);
}

}  // namespace

JoinPlan build_plan(const JoinSpec& spec, const RelationStore& store,
                    std::int64_t residual_row_cap) {
    JoinPlan plan;
    plan.join_id = spec.id;
    plan.schema = output_schema(spec, store);

    if (auto* c = std::get_if<ChainShape>(&spec.shape)) {
        std::vector<std::pair<int, int>> edges;
        for (std::size_t i = 0; i + 1 < c->relations.size(); ++i)
            edges.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
        build_tree_plan(plan, store, c->relations, edges, 0);
        return plan;
    }
    if (auto* a = std::get_if<AcyclicShape>(&spec.shape)) {
        std::map<std::string, int> pos;
        for (std::size_t i = 0; i < a->relations.size(); ++i)
            pos[a->relations[i]] = static_cast<int>(i);
        std::vector<std::pair<int, int>> edges;
        for (const TreeEdgeSpec& e : a->edges)
            edges.emplace_back(pos.at(e.parent), pos.at(e.child));
        int root = 0;
        for (std::size_t i = 1; i < a->relations.size(); ++i)
            if (a->relations[i] < a->relations[root])
                root = static_cast<int>(i);
        build_tree_plan(plan, store, a->relations, edges, root);
        return plan;
    }

    // Cyclic: sample/enumerate the skeleton, then match the residual.
    CycleDecomposition decomp = break_cycles(spec, store, residual_row_cap);
    JoinPlan skeleton = build_plan(decomp.skeleton, store, residual_row_cap);
    plan.nodes = std::move(skeleton.nodes);
    // Node scatter positions were computed against the skeleton schema;
    // recompute against the full schema.
    for (PlanNode& node : plan.nodes) {
        node.scatter.clear();
        for (std::size_t i = 0; i < node.rel->schema().size(); ++i) {
            auto it = std::lower_bound(plan.schema.begin(), plan.schema.end(),
                                       node.rel->schema()[i]);
            node.scatter.emplace_back(
                i, static_cast<std::size_t>(it - plan.schema.begin()));
        }
        node.key_out_pos.clear();
        for (const std::string& a : node.join_attrs) {
            auto it = std::lower_bound(plan.schema.begin(), plan.schema.end(),
                                       a);
            node.key_out_pos.push_back(
                static_cast<std::size_t>(it - plan.schema.begin()));
        }
    }

    ResidualPart res;
    res.rel = std::move(decomp.residual);
    res.bridge_attrs = decomp.bridge_attrs;
    res.max_degree = decomp.residual_max_degree;
    for (const std::string& a : res.bridge_attrs) {
        auto it = std::lower_bound(plan.schema.begin(), plan.schema.end(), a);
        res.bridge_out_pos.push_back(
            static_cast<std::size_t>(it - plan.schema.begin()));
        res.bridge_own_pos.push_back(res.rel.attr_pos(a));
    }
    for (std::uint32_t rid = 0; rid < res.rel.rows().size(); ++rid)
        res.match[key_of(res.rel.rows()[rid], res.bridge_own_pos)]
            .push_back(rid);
    for (std::size_t i = 0; i < res.rel.schema().size(); ++i) {
        auto it = std::lower_bound(plan.schema.begin(), plan.schema.end(),
                                   res.rel.schema()[i]);
        res.scatter.emplace_back(
            i, static_cast<std::size_t>(it - plan.schema.begin()));
    }
    plan.residual = std::move(res);
    return plan;
}

void enumerate_plan(const JoinPlan& plan, std::int64_t row_cap,
                    const std::function<void(const Row&)>& sink) {
    Row tuple(plan.schema.size());
    std::int64_t emitted = 0;

    auto scatter_row = [&](const PlanNode& node, const Row& row) {
        for (auto [own, out] : node.scatter) tuple[out] = row[own];
    };

    std::function<void(std::size_t)> recurse = [&](std::size_t idx) {
        if (idx == plan.nodes.size()) {
            if (plan.residual) {
                const ResidualPart& res = *plan.residual;
                Row key;
                for (std::size_t p : res.bridge_out_pos)
                    key.push_back(tuple[p]);
                auto it = res.match.find(row_key(key));
                if (it == res.match.end()) return;
                for (std::uint32_t rid : it->second) {
                    const Row& rrow = res.rel.rows()[rid];
                    for (auto [own, out] : res.scatter) tuple[out] = rrow[own];
                    if (++emitted > row_cap)
                        throw CapacityError(plan.join_id +
                                            ": result exceeds row cap");
                    sink(tuple);
                }
            } else {
                if (++emitted > row_cap)
                    throw CapacityError(plan.join_id +
                                        ": result exceeds row cap");
                sink(tuple);
            }
            return;
        }
        const PlanNode& node = plan.nodes[idx];
        if (node.parent < 0) {
            for (const Row& row : node.rel->rows()) {
                scatter_row(node, row);
                recurse(idx + 1);
            }
            return;
        }
        // DFS preorder means the parent's values are already in `tuple`.
        Row key;
        for (std::size_t p : node.key_out_pos) key.push_back(tuple[p]);
        auto it = node.match.find(row_key(key));
        if (it == node.match.end()) return;
        for (std::uint32_t rid : it->second) {
            scatter_row(node, node.rel->rows()[rid]);
            recurse(idx + 1);
        }
    };
    if (!plan.nodes.empty() && plan.nodes[0].rel->size() > 0) recurse(0);
}

bool plan_membership(const JoinPlan& plan, const Row& tuple) {
    auto matches = [&](const Relation& rel,
                       const std::vector<std::pair<std::size_t, std::size_t>>&
                           scatter) {
        std::vector<std::pair<std::size_t, Value>> constraints;
        constraints.reserve(scatter.size());
        for (auto [own, out] : scatter)
            constraints.emplace_back(own, tuple[out]);
        return rel.contains_match(constraints);
    };
    for (const PlanNode& node : plan.nodes)
        if (!matches(*node.rel, node.scatter)) return false;
    if (plan.residual &&
        !matches(plan.residual->rel, plan.residual->scatter))
        return false;
    return true;
}

}  // namespace ujs
