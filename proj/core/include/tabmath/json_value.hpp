#pragma once

#include <nlohmann/json.hpp>

#include "tabmath/lang/value.hpp"

namespace tabmath {

using Json = nlohmann::ordered_json;

// JSON integers map to Int, other numbers to Float, arrays to List and
// objects to Map. Pairs serialize as a two-element array [flag, value].
lang::Value json_to_value(const Json& j);
Json value_to_json(const lang::Value& v);

}  // namespace tabmath
