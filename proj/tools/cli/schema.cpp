#include "schema.hpp"

#include <cmath>

#include "cli_errors.hpp"
#include "config_schema_text.hpp"

namespace krrinf::cli {

using nlohmann::json;

namespace {

std::string type_name(const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "unknown";
  }
}

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
  }
  return false;
}

}  // namespace

std::string json_pointer_child(const std::string& parent, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') {
      escaped += "~0";
    } else if (c == '/') {
      escaped += "~1";
    } else {
      escaped += c;
    }
  }
  return parent + "/" + escaped;
}

SchemaValidator::SchemaValidator(json schema) : schema_(std::move(schema)) {}

std::vector<SchemaIssue> SchemaValidator::validate(const json& doc) const {
  std::vector<SchemaIssue> issues;
  check(schema_, doc, "", issues);
  return issues;
}

const json& SchemaValidator::resolve(const json& rule) const {
  const json* r = &rule;
  for (int depth = 0; r->is_object() && r->contains("$ref"); ++depth) {
    if (depth > 32) throw ConfigError("schema: $ref chain too deep");
    const std::string ref = (*r)["$ref"].get<std::string>();
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw ConfigError("schema: unsupported $ref " + ref);
    const std::string name = ref.substr(prefix.size());
    if (!schema_.contains("$defs") || !schema_["$defs"].contains(name)) {
      throw ConfigError("schema: unknown $ref " + ref);
    }
    r = &schema_["$defs"][name];
  }
  return *r;
}

void SchemaValidator::check(const json& rule_in, const json& v, const std::string& ptr,
                            std::vector<SchemaIssue>& issues) const {
  const json& rule = resolve(rule_in);
  const std::string where = ptr.empty() ? "/" : ptr;

  if (rule.contains("type")) {
    const std::string t = rule["type"].get<std::string>();
    if (!has_type(v, t)) {
      issues.push_back({ptr, "expected " + t + ", found " + type_name(v)});
      return;
    }
  }
  if (rule.contains("enum")) {
    bool found = false;
    for (const auto& e : rule["enum"]) found = found || e == v;
    if (!found) issues.push_back({ptr, "value " + v.dump() + " is not one of " + rule["enum"].dump()});
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (rule.contains("minimum") && d < rule["minimum"].get<double>()) {
      issues.push_back({ptr, "value " + v.dump() + " is below the minimum " + rule["minimum"].dump()});
    }
    if (rule.contains("maximum") && d > rule["maximum"].get<double>()) {
      issues.push_back({ptr, "value " + v.dump() + " is above the maximum " + rule["maximum"].dump()});
    }
    if (rule.contains("exclusiveMinimum") && !(d > rule["exclusiveMinimum"].get<double>())) {
      issues.push_back({ptr, "value " + v.dump() + " must be greater than " +
                                 rule["exclusiveMinimum"].dump()});
    }
    if (rule.contains("exclusiveMaximum") && !(d < rule["exclusiveMaximum"].get<double>())) {
      issues.push_back({ptr, "value " + v.dump() + " must be less than " +
                                 rule["exclusiveMaximum"].dump()});
    }
  }
  if (v.is_string() && rule.contains("minLength") &&
      v.get<std::string>().size() < rule["minLength"].get<std::size_t>()) {
    issues.push_back({ptr, "string shorter than " + rule["minLength"].dump() + " characters"});
  }
  if (v.is_array()) {
    if (rule.contains("minItems") && v.size() < rule["minItems"].get<std::size_t>()) {
      issues.push_back({ptr, "array needs at least " + rule["minItems"].dump() + " items"});
    }
    if (rule.contains("maxItems") && v.size() > rule["maxItems"].get<std::size_t>()) {
      issues.push_back({ptr, "array allows at most " + rule["maxItems"].dump() + " items"});
    }
    if (rule.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        check(rule["items"], v[i], ptr + "/" + std::to_string(i), issues);
      }
    }
  }
  if (v.is_object()) {
    const json empty = json::object();
    const json& props = rule.contains("properties") ? rule["properties"] : empty;
    if (rule.contains("required")) {
      for (const auto& key : rule["required"]) {
        const std::string k = key.get<std::string>();
        if (!v.contains(k)) issues.push_back({json_pointer_child(ptr, k), "required key is missing"});
      }
    }
    const bool closed = rule.contains("additionalProperties") && rule["additionalProperties"] == false;
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string child = json_pointer_child(ptr, it.key());
      if (props.contains(it.key())) {
        check(props[it.key()], it.value(), child, issues);
      } else if (closed) {
        issues.push_back({child, "unknown key '" + it.key() + "' in " + where});
      }
    }
  }
}

const json& config_schema() {
  static const json schema = json::parse(detail::kConfigSchemaText);
  return schema;
}

}  // namespace krrinf::cli
