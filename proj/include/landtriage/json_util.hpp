#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "landtriage/date.hpp"
#include "landtriage/enums.hpp"

namespace landtriage::json_util {

using nlohmann::json;

inline std::string path(std::string_view ctx, std::string_view key) {
  return ctx.empty() ? std::string(key) : std::string(ctx) + "." + std::string(key);
}

inline const json* find(const json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline const json& require(const json& obj, std::string_view key, std::string_view ctx) {
  if (!obj.is_object()) throw_validation("invalid_type", std::string(ctx), std::string(ctx) + ": expected an object");
  const json* v = find(obj, key);
  if (!v) throw_validation("missing_field", path(ctx, key), path(ctx, key) + " is required");
  return *v;
}

inline std::string get_string(const json& obj, std::string_view key, std::string_view ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) throw_validation("invalid_type", path(ctx, key), path(ctx, key) + " must be a string");
  return v.get<std::string>();
}

inline std::optional<std::string> opt_string(const json& obj, std::string_view key, std::string_view ctx) {
  if (!find(obj, key)) return std::nullopt;
  return get_string(obj, key, ctx);
}

inline double get_number(const json& obj, std::string_view key, std::string_view ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number()) throw_validation("invalid_type", path(ctx, key), path(ctx, key) + " must be a number");
  return v.get<double>();
}

inline std::optional<double> opt_number(const json& obj, std::string_view key, std::string_view ctx) {
  if (!find(obj, key)) return std::nullopt;
  return get_number(obj, key, ctx);
}

inline bool get_bool(const json& obj, std::string_view key, std::string_view ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_boolean()) throw_validation("invalid_type", path(ctx, key), path(ctx, key) + " must be a boolean");
  return v.get<bool>();
}

inline std::optional<bool> opt_bool(const json& obj, std::string_view key, std::string_view ctx) {
  if (!find(obj, key)) return std::nullopt;
  return get_bool(obj, key, ctx);
}

inline Date get_date(const json& obj, std::string_view key, std::string_view ctx) {
  return parse_date(get_string(obj, key, ctx), path(ctx, key));
}

inline std::optional<Date> opt_date(const json& obj, std::string_view key, std::string_view ctx) {
  if (!find(obj, key)) return std::nullopt;
  return get_date(obj, key, ctx);
}

template <typename E>
E get_enum(const json& obj, std::string_view key, std::string_view ctx) {
  return parse_enum<E>(get_string(obj, key, ctx), path(ctx, key));
}

template <typename E>
std::optional<E> opt_enum(const json& obj, std::string_view key, std::string_view ctx) {
  if (!find(obj, key)) return std::nullopt;
  return get_enum<E>(obj, key, ctx);
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace landtriage::json_util
