#pragma once

#include <initializer_list>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "dmf/errors.hpp"

namespace dmf {

using Json = nlohmann::json;

/// Rejects keys outside `allowed`; `where` prefixes the error message.
template <typename Error = SpecError>
void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(where + ": unknown key '" + key + "'");
  }
}

/// Reads j[key] as T when present, keeping `fallback` otherwise.
template <typename T, typename Error = SpecError>
T value_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(where + "." + key + ": wrong type");
  }
}

template <typename Error = SpecError>
Eigen::Vector3d vec3_or(const Json& j, const char* key, const Eigen::Vector3d& fallback,
                        const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw Error(where + "." + key + ": expected [x, y, z]");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw Error(where + "." + key + ": expected numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

}  // namespace dmf
