#include "ujs/oracle.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "ujs/error.hpp"

namespace ujs {

OracleResult oracle_evaluate(const std::vector<const JoinPlan*>& plans,
                             std::int64_t row_cap) {
    if (plans.empty()) throw EstimatorError("oracle_evaluate: no joins");
    if (plans.size() > 20)
        throw CapacityError("oracle_evaluate: subset enumeration over " +
                            std::to_string(plans.size()) +
                            " joins is not supported");
    OracleResult out;
    out.schema = plans.front()->schema;
    for (const JoinPlan* p : plans) {
        if (p->schema != out.schema)
            throw SchemaError("oracle_evaluate: join " + p->join_id +
                              " has a different output schema than " +
                              plans.front()->join_id);
        out.join_ids.push_back(p->join_id);
        std::set<std::string> keys;
        enumerate_plan(*p, row_cap,
                       [&](const Row& t) { keys.insert(row_key(t)); });
        out.sizes.push_back(static_cast<double>(keys.size()));
        out.tuples.push_back(std::move(keys));
    }

    std::size_t n = plans.size();
    // Per-tuple membership masks drive both the overlaps and the A_j^k.
    std::map<std::string, std::uint32_t> masks;
    for (std::size_t j = 0; j < n; ++j)
        for (const std::string& k : out.tuples[j]) masks[k] |= 1u << j;
    for (const auto& [k, m] : masks) out.union_keys.insert(k);
    out.union_size = static_cast<double>(masks.size());

    std::uint32_t full = (1u << n) - 1;
    for (std::uint32_t delta = 1; delta <= full; ++delta) {
        if (std::popcount(delta) < 2) continue;
        double c = 0;
        for (const auto& [k, m] : masks)
            if ((m & delta) == delta) ++c;
        out.overlaps[delta] = c;
    }

    out.a.assign(n, std::vector<double>(n, 0.0));
    for (const auto& [k, m] : masks) {
        int count = std::popcount(m);
        for (std::size_t j = 0; j < n; ++j)
            if (m & (1u << j))
                out.a[j][static_cast<std::size_t>(count) - 1] += 1.0;
    }
    return out;
}

Cover oracle_cover(const OracleResult& oracle,
                   const std::vector<int>& ordering) {
    Cover out;
    out.ordering = ordering;
    std::set<std::string> seen;
    for (int j : ordering) {
        const auto& tup = oracle.tuples[static_cast<std::size_t>(j)];
        double fresh = 0;
        for (const std::string& k : tup)
            if (!seen.count(k)) ++fresh;
        seen.insert(tup.begin(), tup.end());
        out.sizes.push_back(fresh);
        out.total += fresh;
    }
    return out;
}

std::vector<int> size_descending_ordering(const std::vector<double>& sizes) {
    std::vector<int> order(sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return sizes[static_cast<std::size_t>(a)] >
               sizes[static_cast<std::size_t>(b)];
    });
    return order;
}

}  // namespace ujs
