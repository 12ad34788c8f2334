#pragma once

#include <stdexcept>
#include <string>

namespace ujs {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct IngestionError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct PredicateError : Error { using Error::Error; };
struct StatsError : Error { using Error::Error; };
struct StructureError : Error { using Error::Error; };
struct TemplateError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct SamplerError : Error { using Error::Error; };
struct EstimatorError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace ujs
