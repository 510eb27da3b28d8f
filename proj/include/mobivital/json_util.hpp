#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mobivital/errors.hpp"

namespace mobivital::jsonutil {

inline void require_object(const nlohmann::json& j, std::string_view context) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(context) + " must be a JSON object");
}

// Raises ConfigError for any key outside `allowed`.
inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view context) {
  require_object(j, context);
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in " + std::string(context));
  }
}

// Overwrites `out` when the key is present; type errors become ConfigError.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace mobivital::jsonutil
