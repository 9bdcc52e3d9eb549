#pragma once

#include <charconv>
#include <cstdlib>
#include <span>
#include <string>

#include <json.hpp>

namespace ragcap::json_util {

/// The double whose shortest representation equals the shortest
/// representation of `value` as a float, so 0.6f serializes as 0.6.
inline double float_for_json(float value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  *end = '\0';
  return std::strtod(buf, nullptr);
}

inline nlohmann::json float_array(std::span<const float> values) {
  auto arr = nlohmann::json::array();
  for (float v : values) arr.push_back(float_for_json(v));
  return arr;
}

}  // namespace ragcap::json_util
