#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace krrinf::cli {

struct SchemaIssue {
  std::string pointer;  // JSON pointer of the offending value, "" for the root
  std::string message;
};

/// Validator for the JSON-Schema subset used by the shipped config schema:
/// type, enum, properties, required, additionalProperties (boolean), items,
/// minItems, maxItems, minLength, minimum, maximum, exclusiveMinimum,
/// exclusiveMaximum and local "$ref": "#/$defs/<name>".
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema);
  std::vector<SchemaIssue> validate(const nlohmann::json& doc) const;

 private:
  void check(const nlohmann::json& rule, const nlohmann::json& value, const std::string& pointer,
             std::vector<SchemaIssue>& issues) const;
  const nlohmann::json& resolve(const nlohmann::json& rule) const;
  nlohmann::json schema_;
};

/// The config schema shipped in schema/config.schema.json, embedded at build time.
const nlohmann::json& config_schema();

std::string json_pointer_child(const std::string& parent, const std::string& key);

}  // namespace krrinf::cli
