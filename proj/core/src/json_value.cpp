#include "tabmath/json_value.hpp"

#include <cstdint>
#include <limits>

#include "tabmath/errors.hpp"

namespace tabmath {

lang::Value json_to_value(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return lang::Value::null();
    case Json::value_t::boolean: return lang::Value::boolean(j.get<bool>());
    case Json::value_t::number_integer: return lang::Value::integer(j.get<std::int64_t>());
    case Json::value_t::number_unsigned: {
      const auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw SchemaError("integer " + std::to_string(u) + " exceeds the signed 64-bit range");
      }
      return lang::Value::integer(static_cast<std::int64_t>(u));
    }
    case Json::value_t::number_float: return lang::Value::floating(j.get<double>());
    case Json::value_t::string: return lang::Value::string(j.get<std::string>());
    case Json::value_t::array: {
      lang::List items;
      for (const auto& e : j) items.push_back(json_to_value(e));
      return lang::Value::list(std::move(items));
    }
    case Json::value_t::object: {
      lang::Map m;
      for (const auto& [k, v] : j.items()) m.emplace(k, json_to_value(v));
      return lang::Value::map(std::move(m));
    }
    default: throw SchemaError("unsupported JSON value");
  }
}

Json value_to_json(const lang::Value& v) {
  using lang::ValueType;
  switch (v.type()) {
    case ValueType::kNull: return nullptr;
    case ValueType::kInt: return v.as_int();
    case ValueType::kFloat: return v.as_float();
    case ValueType::kBool: return v.as_bool();
    case ValueType::kStr: return v.as_str();
    case ValueType::kList: {
      Json arr = Json::array();
      for (const auto& e : v.as_list()) arr.push_back(value_to_json(e));
      return arr;
    }
    case ValueType::kMap: {
      Json obj = Json::object();
      for (const auto& [k, e] : v.as_map()) obj[k] = value_to_json(e);
      return obj;
    }
    case ValueType::kPair:
      return Json::array({v.as_pair().flag, value_to_json(v.as_pair().second)});
  }
  return nullptr;
}

}  // namespace tabmath
