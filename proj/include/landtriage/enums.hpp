#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "landtriage/error.hpp"

namespace landtriage {

// Each enum E provides `constexpr auto enum_table(E)` returning an array of
// (value, wire name) pairs, found by ADL.
template <typename E>
std::string_view to_string(E value) {
  for (const auto& [v, name] : enum_table(E{})) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E>
E parse_enum(std::string_view text, std::string_view field) {
  std::string allowed;
  for (const auto& [v, name] : enum_table(E{})) {
    if (name == text) return v;
    if (!allowed.empty()) allowed += ", ";
    allowed += name;
  }
  throw_validation("invalid_enum", std::string(field),
                   std::string(field) + ": '" + std::string(text) + "' is not one of {" + allowed + "}");
}

}  // namespace landtriage
