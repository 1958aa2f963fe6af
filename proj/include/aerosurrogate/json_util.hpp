#pragma once

// Strict JSON reading helpers: unknown keys and wrong types are errors that
// name the offending path.

#include "aerosurrogate/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace aerosurrogate::json_util {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::string_view path,
                                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw InvalidArgument(std::string(path) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument(std::string(path) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, std::string_view path, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string where = std::string(path) + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw InvalidArgument(where + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw InvalidArgument(where + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_unsigned() == false && it->template get<std::int64_t>() < 0) {
          throw InvalidArgument(where + ": expected a nonnegative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw InvalidArgument(where + ": expected a number");
    }
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

/// Converts a parse error's byte offset into "line L, column C".
inline std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline json parse(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(origin + ": malformed JSON at " + locate(text, e.byte) + ": " + e.what());
  }
}

}  // namespace aerosurrogate::json_util
