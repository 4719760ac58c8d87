#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace dfx::testing {

/// Draft-07 subset used by the shipped schemas: type, enum, required,
/// properties, additionalProperties (bool), items, minimum/maximum and their
/// exclusive forms, minLength, minItems, pattern. Returns one message per
/// violation, each prefixed with its JSON pointer.
std::vector<std::string> schema_errors(const nlohmann::json& schema, const nlohmann::json& value);

nlohmann::json load_schema(const std::string& name);

}  // namespace dfx::testing
