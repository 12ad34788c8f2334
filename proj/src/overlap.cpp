#include "ujs/overlap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace ujs {

namespace {

// Sorted-sequence intersection keeping min(weight); returns the sum of
// the kept weights.
double intersect_min(const std::vector<std::pair<Value, double>>& a,
                     const std::vector<std::pair<Value, double>>& b,
                     std::vector<std::pair<Value, double>>* out) {
    double sum = 0;
    if (out) out->reserve(std::min(a.size(), b.size()));
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first) {
            ++i;
        } else if (b[j].first < a[i].first) {
            ++j;
        } else {
            double best = std::min(a[i].second, b[j].second);
            if (out) out->emplace_back(a[i].first, best);
            sum += best;
            ++i;
            ++j;
        }
    }
    return sum;
}

}  // namespace

const std::vector<std::pair<Value, double>>& OverlapMemo::first_pair(
    const SplitJoin& sj) {
    auto it = memo_.find(sj.source_id);
    if (it != memo_.end()) return it->second;
    std::vector<std::pair<Value, double>> prod;
    if (sj.subs.size() >= 2) {
        // Merge the two value-sorted degree histograms.
        const auto& a = sj.subs[0].right_degree_sorted;
        const auto& b = sj.subs[1].left_degree_sorted;
        prod.reserve(std::min(a.size(), b.size()));
        std::size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i].first < b[j].first) {
                ++i;
            } else if (b[j].first < a[i].first) {
                ++j;
            } else {
                prod.emplace_back(a[i].first,
                                  static_cast<double>(a[i].second) *
                                      static_cast<double>(b[j].second));
                ++i;
                ++j;
            }
        }
    }
    return memo_.emplace(sj.source_id, std::move(prod)).first->second;
}

OverlapBound histogram_overlap(const std::vector<const SplitJoin*>& splits,
                               OverlapMemo* memo, bool avg_degree_refine) {
    if (splits.empty()) throw EstimatorError("histogram_overlap: empty delta");
    const SplitJoin& first = *splits.front();
    for (const SplitJoin* sj : splits) {
        if (sj->attr_order != first.attr_order ||
            sj->subs.size() != first.subs.size())
            throw EstimatorError("histogram_overlap: splits are not aligned (" +
                                 sj->source_id + " vs " + first.source_id +
                                 ")");
    }
    OverlapBound out;
    out.method = OverlapMethod::Histogram;
    for (const SplitJoin* sj : splits) out.delta.push_back(sj->source_id);

    std::size_t n = first.subs.size();
    if (n == 1) {
        // Degenerate single-pair chain: the tightest size bound available
        // is the smallest sub-relation.
        double v = 1e300;
        for (const SplitJoin* sj : splits)
            v = std::min(v, static_cast<double>(sj->subs[0].rows.size()));
        out.value = v;
        out.k_sequence = {v};
        return out;
    }

    OverlapMemo local;
    OverlapMemo& m = memo ? *memo : local;

    // K(1): fold the sorted first-pair products, keeping the per-value
    // minimum across the delta.
    std::vector<std::pair<Value, double>> cur = m.first_pair(*splits[0]);
    double k1 = 0;
    for (const auto& [v, d] : cur) k1 += d;
    for (std::size_t j = 1; j < splits.size(); ++j) {
        std::vector<std::pair<Value, double>> next;
        bool last = j + 1 == splits.size();
        k1 = intersect_min(cur, m.first_pair(*splits[j]),
                           last ? nullptr : &next);
        if (!last) cur = std::move(next);
    }
    out.k_sequence.push_back(k1);

    double k = k1;
    for (std::size_t i = 2; i <= n - 1; ++i) {
        // Extending by sub-relation i (0-based), linked to i-1 by links[i-1].
        double factor = 1e300;
        for (const SplitJoin* sj : splits) {
            const SubRelation& sub = sj->subs[i];
            double f;
            if (sj->links[i - 1] == LinkKind::FakeJoin) {
                f = 1.0;
            } else if (avg_degree_refine && !sub.left_degree.empty()) {
                f = static_cast<double>(sub.rows.size()) /
                    static_cast<double>(sub.left_degree.size());
            } else {
                f = static_cast<double>(sub.left_max);
            }
            factor = std::min(factor, f);
        }
        k *= factor;
        out.k_sequence.push_back(k);
    }
    out.value = k;
    return out;
}

std::map<std::uint32_t, OverlapBound> histogram_overlap_all(
    const std::vector<const SplitJoin*>& splits, OverlapMemo* memo,
    bool avg_degree_refine) {
    std::map<std::uint32_t, OverlapBound> out;
    std::size_t n_joins = splits.size();
    if (n_joins < 2) return out;
    // The incremental per-mask maps would get heavy for wide deltas;
    // past 12 joins just evaluate each subset directly.
    if (n_joins > 12) {
        std::uint32_t full = (1u << n_joins) - 1;
        for (std::uint32_t mask = 3; mask <= full; ++mask) {
            if (std::popcount(mask) < 2) continue;
            std::vector<const SplitJoin*> delta;
            for (std::size_t j = 0; j < n_joins; ++j)
                if (mask & (1u << j)) delta.push_back(splits[j]);
            out.emplace(mask, histogram_overlap(delta, memo, avg_degree_refine));
        }
        return out;
    }

    const SplitJoin& first = *splits.front();
    for (const SplitJoin* sj : splits) {
        if (sj->attr_order != first.attr_order ||
            sj->subs.size() != first.subs.size())
            throw EstimatorError("histogram_overlap_all: splits are not "
                                 "aligned (" +
                                 sj->source_id + " vs " + first.source_id +
                                 ")");
    }
    std::size_t n = first.subs.size();
    std::uint32_t full = (1u << n_joins) - 1;

    auto make_bound = [&](std::uint32_t mask) {
        OverlapBound b;
        b.method = OverlapMethod::Histogram;
        for (std::size_t j = 0; j < n_joins; ++j)
            if (mask & (1u << j)) b.delta.push_back(splits[j]->source_id);
        return b;
    };

    if (n == 1) {
        for (std::uint32_t mask = 3; mask <= full; ++mask) {
            if (std::popcount(mask) < 2) continue;
            OverlapBound b = make_bound(mask);
            double v = 1e300;
            for (std::size_t j = 0; j < n_joins; ++j)
                if (mask & (1u << j))
                    v = std::min(
                        v, static_cast<double>(splits[j]->subs[0].rows.size()));
            b.value = v;
            b.k_sequence = {v};
            out.emplace(mask, std::move(b));
        }
        return out;
    }

    OverlapMemo local;
    OverlapMemo& m = memo ? *memo : local;

    // Per-mask value -> min degree-product sequence, built by merging
    // the sequence of (mask without its low bit) with one more join.
    using Seq = std::vector<std::pair<Value, double>>;
    std::vector<Seq> mask_map(static_cast<std::size_t>(full) + 1);
    auto map_of = [&](std::uint32_t mask) -> const Seq& {
        if (std::popcount(mask) == 1) {
            int j = std::countr_zero(mask);
            return m.first_pair(*splits[static_cast<std::size_t>(j)]);
        }
        return mask_map[mask];
    };

    for (std::uint32_t mask = 3; mask <= full; ++mask) {
        if (std::popcount(mask) < 2) continue;
        const Seq& rest = map_of(mask & (mask - 1));
        const Seq& last =
            m.first_pair(*splits[static_cast<std::size_t>(
                std::countr_zero(mask))]);
        // Larger masks are formed by adding a bit below the current
        // lowest, so masks containing bit 0 are leaves and only need
        // the sum.
        bool is_leaf = (mask & 1u) != 0;
        double k1 = intersect_min(rest, last,
                                  is_leaf ? nullptr : &mask_map[mask]);

        OverlapBound b = make_bound(mask);
        b.k_sequence.push_back(k1);
        double k = k1;
        for (std::size_t i = 2; i <= n - 1; ++i) {
            double factor = 1e300;
            for (std::size_t j = 0; j < n_joins; ++j) {
                if (!(mask & (1u << j))) continue;
                const SubRelation& sub = splits[j]->subs[i];
                double f;
                if (splits[j]->links[i - 1] == LinkKind::FakeJoin) {
                    f = 1.0;
                } else if (avg_degree_refine && !sub.left_degree.empty()) {
                    f = static_cast<double>(sub.rows.size()) /
                        static_cast<double>(sub.left_degree.size());
                } else {
                    f = static_cast<double>(sub.left_max);
                }
                factor = std::min(factor, f);
            }
            k *= factor;
            b.k_sequence.push_back(k);
        }
        b.value = k;
        out.emplace(mask, std::move(b));
    }
    return out;
}

OverlapBound walk_overlap(const std::vector<std::string>& delta_ids,
                          const std::string& anchor_id,
                          const std::vector<WalkSample>& anchor_pool,
                          const std::function<bool(const Row&)>& member,
                          double z) {
    OverlapBound out;
    out.method = OverlapMethod::RandomWalk;
    out.delta = delta_ids;
    if (anchor_pool.empty())
        throw EstimatorError("walk_overlap: empty anchor pool for " +
                             anchor_id);
    double denom = 0, inter = 0;
    std::size_t successes = 0;
    for (const WalkSample& s : anchor_pool) {
        if (!s.success) continue;
        ++successes;
        double w = 1.0 / s.p;
        denom += w;
        if (delta_ids.size() == 1 || member(s.tuple)) inter += w;
    }
    if (successes == 0)
        throw EstimatorError("walk_overlap: no successful anchor walks for " +
                             anchor_id);
    double mcount = static_cast<double>(anchor_pool.size());
    double p_hat = inter / denom;
    double t_n = denom / mcount;  // HT estimate of |J_anchor|
    out.value = t_n * p_hat;

    // Sample variance of the per-walk 1/p contributions (zero for dead
    // ends), then the delta-method style variance combination.
    double t_n2 = 0;
    if (anchor_pool.size() > 1) {
        for (const WalkSample& s : anchor_pool) {
            double f = s.success ? 1.0 / s.p : 0.0;
            t_n2 += (f - t_n) * (f - t_n);
        }
        t_n2 /= mcount - 1.0;
    }
    double sigma2 = t_n2 * p_hat * (1.0 - p_hat) + t_n2 * p_hat +
                    t_n * p_hat * (1.0 - p_hat);
    out.ci_halfwidth = z * std::sqrt(sigma2 / mcount);
    return out;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    double r = 1;
    for (std::size_t i = 0; i < k; ++i)
        r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return r;
}

double overlap_of(const std::map<std::uint32_t, double>& overlaps,
                  const std::vector<double>& sizes, std::uint32_t mask) {
    if (std::popcount(mask) == 1) {
        int j = std::countr_zero(mask);
        return sizes[static_cast<std::size_t>(j)];
    }
    auto it = overlaps.find(mask);
    if (it == overlaps.end())
        throw EstimatorError("missing overlap entry for subset mask " +
                             std::to_string(mask));
    return it->second;
}

}  // namespace

KOverlapTable k_overlap_table(const std::vector<double>& join_sizes,
                              const std::map<std::uint32_t, double>& overlaps) {
    KOverlapTable out;
    std::size_t n = join_sizes.size();
    out.n = n;
    out.a.assign(n, std::vector<double>(n, 0.0));
    std::uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);

    auto clamp = [&](double v, std::size_t j, std::size_t k) {
        if (v < 0) {
            if (v < -1e-9)
                out.warnings.push_back("A[" + std::to_string(j + 1) + "]^" +
                                       std::to_string(k) + " clamped from " +
                                       std::to_string(v));
            out.clamped = out.clamped || v < -1e-9;
            return 0.0;
        }
        return v;
    };

    for (std::size_t j = 0; j < n; ++j) {
        if (n >= 2)
            out.a[j][n - 1] =
                clamp(overlap_of(overlaps, join_sizes, full), j, n);
        else
            out.a[j][0] = join_sizes[j];
        for (std::size_t k = n - 1; k >= 2; --k) {
            double sum = 0;
            for (std::uint32_t mask = 1; mask <= full; ++mask) {
                if (std::popcount(mask) != static_cast<int>(k)) continue;
                if (!(mask & (1u << j))) continue;
                sum += overlap_of(overlaps, join_sizes, mask);
            }
            for (std::size_t r = k + 1; r <= n; ++r)
                sum -= binomial(r - 1, k - 1) * out.a[j][r - 1];
            out.a[j][k - 1] = clamp(sum, j, k);
        }
        if (n >= 2) {
            double rest = 0;
            for (std::size_t r = 2; r <= n; ++r) rest += out.a[j][r - 1];
            out.a[j][0] = clamp(join_sizes[j] - rest, j, 1);
        }
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 1; k <= n; ++k)
            out.union_size += out.a[j][k - 1] / static_cast<double>(k);
    return out;
}

Cover cover_sizes(const std::vector<int>& ordering,
                  const std::vector<double>& join_sizes,
                  const std::map<std::uint32_t, double>& overlaps) {
    Cover out;
    out.ordering = ordering;
    std::size_t n = ordering.size();
    for (std::size_t i = 0; i < n; ++i) {
        int j = ordering[i];
        // Inclusion-exclusion over subsets of the predecessors.
        double size = 0;
        std::uint32_t pred_mask = 0;
        for (std::size_t t = 0; t < i; ++t)
            pred_mask |= 1u << ordering[t];
        // Iterate all submasks of pred_mask (including empty).
        std::uint32_t sub = pred_mask;
        while (true) {
            int sign = (std::popcount(sub) % 2 == 0) ? 1 : -1;
            size += sign * overlap_of(overlaps, join_sizes,
                                      sub | (1u << j));
            if (sub == 0) break;
            sub = (sub - 1) & pred_mask;
        }
        if (size < 0) {
            if (size < -1e-9) {
                out.warnings.push_back("cover size of join index " +
                                       std::to_string(j) + " clamped from " +
                                       std::to_string(size));
                out.clamped = true;
            }
            size = 0;
        }
        out.sizes.push_back(size);
        out.total += size;
    }
    return out;
}

}  // namespace ujs
