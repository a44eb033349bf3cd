#pragma once

// Typed field access for JSON documents with path-qualified diagnostics.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "raftlab/error.hpp"

namespace raftlab::jsonf {

using nlohmann::json;

inline std::string field(const std::string& where, const char* key) {
  return where + "." + key;
}

inline void expect_object(const json& node, const std::string& where) {
  if (!node.is_object()) throw ParseError(where + ": expected an object");
}

inline void check_keys(const json& node, const std::string& where,
                       const std::vector<std::string>& allowed) {
  for (const auto& item : node.items()) {
    bool known = false;
    for (const auto& k : allowed) known = known || k == item.key();
    if (!known) throw ParseError(where + ": unknown field '" + item.key() + "'");
  }
}

inline void check_keys(const json& node, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  check_keys(node, where, std::vector<std::string>(allowed.begin(), allowed.end()));
}

inline const json& required(const json& node, const char* key, const std::string& where) {
  auto it = node.find(key);
  if (it == node.end()) throw ParseError(field(where, key) + ": missing required field");
  return *it;
}

inline std::string required_string(const json& node, const char* key, const std::string& where) {
  const json& v = required(node, key, where);
  if (!v.is_string()) throw ParseError(field(where, key) + ": expected a string");
  return v.get<std::string>();
}

inline double required_number(const json& node, const char* key, const std::string& where) {
  const json& v = required(node, key, where);
  if (!v.is_number()) throw ParseError(field(where, key) + ": expected a number");
  return v.get<double>();
}

inline std::int64_t required_integer(const json& node, const char* key, const std::string& where) {
  const json& v = required(node, key, where);
  if (!v.is_number_integer()) throw ParseError(field(where, key) + ": expected an integer");
  return v.get<std::int64_t>();
}

inline std::optional<std::string> optional_string(const json& node, const char* key,
                                                  const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(field(where, key) + ": expected a string");
  return it->get<std::string>();
}

inline std::optional<double> optional_number(const json& node, const char* key,
                                             const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(field(where, key) + ": expected a number");
  return it->get<double>();
}

inline std::optional<std::int64_t> optional_integer(const json& node, const char* key,
                                                    const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw ParseError(field(where, key) + ": expected an integer");
  return it->get<std::int64_t>();
}

inline std::optional<bool> optional_bool(const json& node, const char* key,
                                         const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw ParseError(field(where, key) + ": expected true or false");
  return it->get<bool>();
}

inline const json* optional_object(const json& node, const char* key, const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return nullptr;
  if (!it->is_object()) throw ParseError(field(where, key) + ": expected an object");
  return &*it;
}

inline std::optional<std::vector<std::string>> optional_string_list(const json& node,
                                                                    const char* key,
                                                                    const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) throw ParseError(field(where, key) + ": expected a list of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ParseError(field(where, key) + ": expected a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace raftlab::jsonf
