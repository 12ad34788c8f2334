#include "ujs/value.hpp"

#include <cctype>
#include <charconv>

namespace ujs {

std::string value_to_string(const Value& v) {
    if (std::holds_alternative<std::int64_t>(v))
        return std::to_string(std::get<std::int64_t>(v));
    return std::get<std::string>(v);
}

Value parse_value(const std::string& field) {
    if (field.empty()) return field;
    std::size_t start = (field[0] == '-' || field[0] == '+') ? 1 : 0;
    if (start == field.size()) return field;
    for (std::size_t i = start; i < field.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(field[i]))) return field;
    std::int64_t out = 0;
    auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), out);
    if (ec != std::errc{} || ptr != field.data() + field.size()) return field;
    return out;
}

std::string row_key(const Row& row) {
    std::string key;
    key.reserve(row.size() * 8);
    for (const Value& v : row) {
        if (std::holds_alternative<std::int64_t>(v)) {
            key += 'i';
            key += std::to_string(std::get<std::int64_t>(v));
        } else {
            const std::string& s = std::get<std::string>(v);
            key += 's';
            key += std::to_string(s.size());
            key += ':';
            key += s;
        }
        key += '|';
    }
    return key;
}

}  // namespace ujs
