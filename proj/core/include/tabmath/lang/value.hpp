#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tabmath::lang {

class Value;
struct PairData;

using List = std::vector<Value>;
using Map = std::map<std::string, Value, std::less<>>;

enum class ValueType { kNull, kInt, kFloat, kBool, kStr, kList, kMap, kPair };

const char* to_string(ValueType type);

/// Immutable dynamically-typed value of the operator language. Containers are
/// shared and never mutated after construction, so copies are cheap.
class Value {
 public:
  Value() = default;

  static Value null() { return Value(); }
  static Value integer(std::int64_t v) { return Value(Storage(v)); }
  static Value floating(double v) { return Value(Storage(v)); }
  static Value boolean(bool v) { return Value(Storage(v)); }
  static Value string(std::string v) { return Value(Storage(std::move(v))); }
  static Value list(List items);
  static Value map(Map entries);
  static Value pair(bool flag, Value second);

  ValueType type() const noexcept;
  const char* type_name() const noexcept { return to_string(type()); }

  bool is_null() const noexcept { return type() == ValueType::kNull; }
  bool is_int() const noexcept { return type() == ValueType::kInt; }
  bool is_float() const noexcept { return type() == ValueType::kFloat; }
  bool is_number() const noexcept { return is_int() || is_float(); }
  bool is_bool() const noexcept { return type() == ValueType::kBool; }
  bool is_str() const noexcept { return type() == ValueType::kStr; }
  bool is_list() const noexcept { return type() == ValueType::kList; }
  bool is_map() const noexcept { return type() == ValueType::kMap; }
  bool is_pair() const noexcept { return type() == ValueType::kPair; }

  // Accessors throw lang::TypeError on mismatch.
  std::int64_t as_int() const;
  double as_float() const;  // exact for Float, converting for Int
  bool as_bool() const;
  const std::string& as_str() const;
  const List& as_list() const;
  const Map& as_map() const;
  const PairData& as_pair() const;

  /// Structural equality; Int and Float compare by exact mathematical value.
  friend bool operator==(const Value& a, const Value& b);

 private:
  using Storage =
      std::variant<std::monostate, std::int64_t, double, bool, std::string,
                   std::shared_ptr<const List>, std::shared_ptr<const Map>,
                   std::shared_ptr<const PairData>>;
  explicit Value(Storage s) : storage_(std::move(s)) {}

  Storage storage_;
};

struct PairData {
  bool flag = false;
  Value second;
};

/// Three-way comparison of an Int with a Float by exact value. Returns -1, 0
/// or 1; NaN compares as unordered and yields 2.
int compare_int_float(std::int64_t i, double d) noexcept;

/// Canonical text: Ints as decimal, Floats as shortest round-trip decimal
/// (always carrying a '.', exponent, or inf/nan marker), strings raw.
std::string format_value(const Value& v);
std::string format_double(double d);

/// Literal-syntax rendering used by the pretty printer (strings quoted).
std::string repr_value(const Value& v);

}  // namespace tabmath::lang
