#include "ujs/relation.hpp"

#include <algorithm>
#include <fstream>

namespace ujs {

namespace {
const std::vector<std::uint32_t> kEmptyRowIds;
}

Cmp parse_cmp(const std::string& token) {
    if (token == "=" || token == "==") return Cmp::Eq;
    if (token == "!=" || token == "<>") return Cmp::Ne;
    if (token == "<") return Cmp::Lt;
    if (token == "<=") return Cmp::Le;
    if (token == ">") return Cmp::Gt;
    if (token == ">=") return Cmp::Ge;
    throw PredicateError("unknown comparator: " + token);
}

std::string cmp_to_string(Cmp c) {
    switch (c) {
        case Cmp::Eq: return "=";
        case Cmp::Ne: return "!=";
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Ge: return ">=";
    }
    return "?";
}

Relation::Relation(std::string name, std::vector<std::string> schema)
    : name_(std::move(name)), schema_(std::move(schema)) {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].empty())
            throw SchemaError("relation " + name_ + ": empty attribute name");
        if (!attr_pos_.emplace(schema_[i], i).second)
            throw SchemaError("relation " + name_ + ": duplicate attribute " +
                              schema_[i]);
    }
}

bool Relation::has_attribute(const std::string& attr) const {
    return attr_pos_.count(attr) != 0;
}

std::size_t Relation::attr_pos(const std::string& attr) const {
    auto it = attr_pos_.find(attr);
    if (it == attr_pos_.end())
        throw SchemaError("relation " + name_ + ": no attribute " + attr);
    return it->second;
}

void Relation::add_row(Row row) {
    if (row.size() != schema_.size())
        throw IngestionError("relation " + name_ + ": row arity " +
                             std::to_string(row.size()) + " != schema arity " +
                             std::to_string(schema_.size()));
    rows_.push_back(std::move(row));
}

void Relation::build_stats(const std::vector<std::string>& attrs) {
    for (const std::string& attr : attrs) {
        std::size_t pos = attr_pos(attr);
        auto& idx = index_[attr];
        idx.clear();
        Histogram h;
        for (std::uint32_t rid = 0; rid < rows_.size(); ++rid) {
            const Value& v = rows_[rid][pos];
            idx[v].push_back(rid);
            ++h.degree[v];
        }
        for (const auto& [v, d] : h.degree)
            h.max_degree = std::max(h.max_degree, d);
        h.cardinality = static_cast<std::int64_t>(h.degree.size());
        stats_[attr] = std::move(h);
    }
}

void Relation::build_all_stats() { build_stats(schema_); }

bool Relation::has_stats(const std::string& attr) const {
    return stats_.count(attr) != 0;
}

const Histogram& Relation::stats(const std::string& attr) const {
    auto it = stats_.find(attr);
    if (it == stats_.end())
        throw StatsError("relation " + name_ + ": stats not built for " + attr);
    return it->second;
}

const std::vector<std::uint32_t>& Relation::lookup(const std::string& attr,
                                                   const Value& v) const {
    auto it = index_.find(attr);
    if (it == index_.end())
        throw StatsError("relation " + name_ + ": no index on " + attr);
    auto jt = it->second.find(v);
    if (jt == it->second.end()) return kEmptyRowIds;
    return jt->second;
}

bool Relation::contains_match(
    const std::vector<std::pair<std::size_t, Value>>& constraints) const {
    if (constraints.empty()) return !rows_.empty();
    // Probe the index on the first constrained attribute, then filter.
    const std::string& attr = schema_[constraints[0].first];
    const std::vector<std::uint32_t>* candidates = nullptr;
    if (index_.count(attr)) {
        candidates = &lookup(attr, constraints[0].second);
    }
    auto matches = [&](const Row& row) {
        for (const auto& [pos, v] : constraints)
            if (row[pos] != v) return false;
        return true;
    };
    if (candidates) {
        for (std::uint32_t rid : *candidates)
            if (matches(rows_[rid])) return true;
        return false;
    }
    for (const Row& row : rows_)
        if (matches(row)) return true;
    return false;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            cur += c;
            ++i;
        } else if (c == '"' && cur.empty()) {
            quoted = true;
            ++i;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            ++i;
        } else {
            cur += c;
            ++i;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

Relation load_csv(const std::string& path, const std::string& name,
                  const std::vector<std::string>& schema, bool dedup) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw IngestionError(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() != schema.size())
        throw IngestionError(path + ": header arity " +
                             std::to_string(header.size()) +
                             " != schema arity " +
                             std::to_string(schema.size()));
    for (std::size_t i = 0; i < schema.size(); ++i)
        if (header[i] != schema[i])
            throw IngestionError(path + ": header field '" + header[i] +
                                 "' != expected '" + schema[i] + "'");

    Relation rel(name, schema);
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != schema.size())
            throw IngestionError(path + ": line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(schema.size()) +
                                 " fields, got " +
                                 std::to_string(fields.size()));
        Row row;
        row.reserve(fields.size());
        for (const std::string& f : fields) row.push_back(parse_value(f));
        std::string key = row_key(row);
        if (!seen.insert(key).second) {
            if (dedup) continue;
            throw IngestionError(path + ": line " + std::to_string(line_no) +
                                 ": duplicate row");
        }
        rel.add_row(std::move(row));
    }
    return rel;
}

bool eval_predicate(const Predicate& p, const Value& v) {
    // Comparing an integer column against a string constant (or vice
    // versa) is a type mismatch, not an empty result.
    if (v.index() != p.constant.index())
        throw PredicateError("predicate on " + p.attribute +
                             ": type mismatch between column and constant");
    switch (p.cmp) {
        case Cmp::Eq: return v == p.constant;
        case Cmp::Ne: return v != p.constant;
        case Cmp::Lt: return v < p.constant;
        case Cmp::Le: return v <= p.constant;
        case Cmp::Gt: return v > p.constant;
        case Cmp::Ge: return v >= p.constant;
    }
    return false;
}

Relation push_down(const Relation& r, const Predicate& p) {
    std::size_t pos = r.attr_pos(p.attribute);
    Relation out(r.name(), r.schema());
    for (const Row& row : r.rows())
        if (eval_predicate(p, row[pos])) out.add_row(row);
    std::vector<std::string> indexed;
    for (const std::string& attr : r.schema())
        if (r.has_stats(attr)) indexed.push_back(attr);
    out.build_stats(indexed);
    return out;
}

std::unordered_set<Value, ValueHash> domain_intersection(
    const std::vector<std::pair<const Relation*, std::string>>& columns) {
    std::unordered_set<Value, ValueHash> acc;
    bool first = true;
    for (const auto& [rel, attr] : columns) {
        const Histogram& h = rel->stats(attr);
        if (first) {
            for (const auto& [v, d] : h.degree) acc.insert(v);
            first = false;
            continue;
        }
        std::unordered_set<Value, ValueHash> next;
        for (const Value& v : acc)
            if (h.degree.count(v)) next.insert(v);
        acc = std::move(next);
        if (acc.empty()) break;
    }
    return acc;
}

}  // namespace ujs
