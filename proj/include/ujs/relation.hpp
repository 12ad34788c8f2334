#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ujs/error.hpp"
#include "ujs/value.hpp"

namespace ujs {

// Exact per-attribute degree statistics: d_A(v, R) for every value v,
// plus the maximum degree M_A(R) and the distinct-value count.
struct Histogram {
    std::unordered_map<Value, std::int64_t, ValueHash> degree;
    std::int64_t max_degree = 0;
    std::int64_t cardinality = 0;
};

enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };

struct Predicate {
    std::string attribute;
    Cmp cmp;
    Value constant;
};

Cmp parse_cmp(const std::string& token);
std::string cmp_to_string(Cmp c);

// Named in-memory table. Rows are immutable once stats are built; hash
// indexes and histograms are produced by build_stats and shared read-only.
class Relation {
public:
    Relation() = default;
    Relation(std::string name, std::vector<std::string> schema);

    const std::string& name() const { return name_; }
    const std::vector<std::string>& schema() const { return schema_; }
    const std::vector<Row>& rows() const { return rows_; }
    std::int64_t size() const { return static_cast<std::int64_t>(rows_.size()); }

    bool has_attribute(const std::string& attr) const;
    std::size_t attr_pos(const std::string& attr) const;

    // Appends a row; arity is checked, duplicate detection is the
    // caller's concern (load_csv enforces it).
    void add_row(Row row);

    // Builds hash index + histogram for each listed attribute.
    void build_stats(const std::vector<std::string>& attrs);
    void build_all_stats();

    bool has_stats(const std::string& attr) const;
    const Histogram& stats(const std::string& attr) const;

    // Row ids whose attribute equals v; empty list if none. Requires stats.
    const std::vector<std::uint32_t>& lookup(const std::string& attr,
                                             const Value& v) const;

    // True iff some row matches all (attribute, value) constraints.
    // Probes one index and filters the candidate list.
    bool contains_match(
        const std::vector<std::pair<std::size_t, Value>>& constraints) const;

private:
    std::string name_;
    std::vector<std::string> schema_;
    std::vector<Row> rows_;
    std::unordered_map<std::string, std::size_t> attr_pos_;
    std::unordered_map<std::string,
                       std::unordered_map<Value, std::vector<std::uint32_t>, ValueHash>>
        index_;
    std::unordered_map<std::string, Histogram> stats_;
};

// Parses an RFC-4180-style CSV file. The header row must match the given
// schema byte-for-byte. Rows with the wrong arity raise an ingestion
// error naming the line; duplicate rows are rejected unless dedup is set.
Relation load_csv(const std::string& path, const std::string& name,
                  const std::vector<std::string>& schema, bool dedup = false);

// One line of CSV split into fields, honoring quoting.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

// New relation holding exactly the rows of r satisfying p; stats are
// rebuilt for every attribute that was indexed on r.
Relation push_down(const Relation& r, const Predicate& p);

bool eval_predicate(const Predicate& p, const Value& v);

// Values present in every listed (relation, attribute) pair.
std::unordered_set<Value, ValueHash> domain_intersection(
    const std::vector<std::pair<const Relation*, std::string>>& columns);

}  // namespace ujs
