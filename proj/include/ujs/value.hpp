#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ujs {

// Scalar cell value: 64-bit integer or string. Join equality is exact
// value equality, so the two kinds never compare equal to each other.
using Value = std::variant<std::int64_t, std::string>;

struct ValueHash {
    std::size_t operator()(const Value& v) const {
        if (std::holds_alternative<std::int64_t>(v))
            return std::hash<std::int64_t>{}(std::get<std::int64_t>(v));
        return std::hash<std::string>{}(std::get<std::string>(v));
    }
};

using Row = std::vector<Value>;

std::string value_to_string(const Value& v);

// Parses a CSV field: all-digit (optionally signed) fields become integers,
// everything else stays a string.
Value parse_value(const std::string& field);

// Canonical byte serialization of a row; equal rows yield equal keys
// regardless of which join produced them.
std::string row_key(const Row& row);

}  // namespace ujs
