#include "tabmath/lang/value.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <system_error>

#include "tabmath/lang/errors.hpp"

namespace tabmath::lang {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSyntax: return "SyntaxError";
    case ErrorKind::kRestriction: return "RestrictionError";
    case ErrorKind::kResource: return "ResourceError";
    case ErrorKind::kType: return "TypeError";
    case ErrorKind::kDivisionByZero: return "DivisionByZero";
    case ErrorKind::kName: return "NameError";
    case ErrorKind::kRange: return "RangeError";
  }
  return "LangError";
}

namespace {

std::string located(ErrorKind kind, const std::string& message, SourceLocation loc) {
  std::string out = to_string(kind);
  out += ": ";
  if (loc.line > 0) {
    out += std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": ";
  }
  out += message;
  return out;
}

}  // namespace

LangError::LangError(ErrorKind kind, const std::string& message, SourceLocation loc)
    : std::runtime_error(located(kind, message, loc)),
      kind_(kind),
      loc_(loc),
      detail_(message) {}

const char* to_string(ValueType type) {
  switch (type) {
    case ValueType::kNull: return "Null";
    case ValueType::kInt: return "Int";
    case ValueType::kFloat: return "Float";
    case ValueType::kBool: return "Bool";
    case ValueType::kStr: return "Str";
    case ValueType::kList: return "List";
    case ValueType::kMap: return "Map";
    case ValueType::kPair: return "Pair";
  }
  return "?";
}

Value Value::list(List items) {
  return Value(Storage(std::make_shared<const List>(std::move(items))));
}

Value Value::map(Map entries) {
  return Value(Storage(std::make_shared<const Map>(std::move(entries))));
}

Value Value::pair(bool flag, Value second) {
  return Value(Storage(std::make_shared<const PairData>(PairData{flag, std::move(second)})));
}

ValueType Value::type() const noexcept {
  return static_cast<ValueType>(storage_.index());
}

namespace {

[[noreturn]] void type_mismatch(const Value& v, const char* wanted) {
  throw TypeError(std::string("expected ") + wanted + ", got " + v.type_name());
}

}  // namespace

std::int64_t Value::as_int() const {
  if (const auto* p = std::get_if<std::int64_t>(&storage_)) return *p;
  type_mismatch(*this, "Int");
}

double Value::as_float() const {
  if (const auto* p = std::get_if<double>(&storage_)) return *p;
  if (const auto* p = std::get_if<std::int64_t>(&storage_)) return static_cast<double>(*p);
  type_mismatch(*this, "number");
}

bool Value::as_bool() const {
  if (const auto* p = std::get_if<bool>(&storage_)) return *p;
  type_mismatch(*this, "Bool");
}

const std::string& Value::as_str() const {
  if (const auto* p = std::get_if<std::string>(&storage_)) return *p;
  type_mismatch(*this, "Str");
}

const List& Value::as_list() const {
  if (const auto* p = std::get_if<std::shared_ptr<const List>>(&storage_)) return **p;
  type_mismatch(*this, "List");
}

const Map& Value::as_map() const {
  if (const auto* p = std::get_if<std::shared_ptr<const Map>>(&storage_)) return **p;
  type_mismatch(*this, "Map");
}

const PairData& Value::as_pair() const {
  if (const auto* p = std::get_if<std::shared_ptr<const PairData>>(&storage_)) return **p;
  type_mismatch(*this, "Pair");
}

int compare_int_float(std::int64_t i, double d) noexcept {
  if (std::isnan(d)) return 2;
  constexpr double kTwo63 = 9223372036854775808.0;
  if (d >= kTwo63) return -1;
  if (d < -kTwo63) return 1;
  const double fl = std::floor(d);
  const auto t = static_cast<std::int64_t>(fl);
  if (i < t) return -1;
  if (i > t) return 1;
  return fl == d ? 0 : -1;
}

bool operator==(const Value& a, const Value& b) {
  const ValueType ta = a.type();
  const ValueType tb = b.type();
  if (ta == ValueType::kInt && tb == ValueType::kFloat) {
    return compare_int_float(a.as_int(), b.as_float()) == 0;
  }
  if (ta == ValueType::kFloat && tb == ValueType::kInt) {
    return compare_int_float(b.as_int(), a.as_float()) == 0;
  }
  if (ta != tb) return false;
  switch (ta) {
    case ValueType::kNull: return true;
    case ValueType::kInt: return a.as_int() == b.as_int();
    case ValueType::kFloat: return a.as_float() == b.as_float();
    case ValueType::kBool: return a.as_bool() == b.as_bool();
    case ValueType::kStr: return a.as_str() == b.as_str();
    case ValueType::kList: return a.as_list() == b.as_list();
    case ValueType::kMap: return a.as_map() == b.as_map();
    case ValueType::kPair: {
      const auto& pa = a.as_pair();
      const auto& pb = b.as_pair();
      return pa.flag == pb.flag && pa.second == pb.second;
    }
  }
  return false;
}

std::string format_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

std::string format_value(const Value& v) {
  switch (v.type()) {
    case ValueType::kNull: return "null";
    case ValueType::kInt: return std::to_string(v.as_int());
    case ValueType::kFloat: return format_double(v.as_float());
    case ValueType::kBool: return v.as_bool() ? "true" : "false";
    case ValueType::kStr: return v.as_str();
    case ValueType::kList:
    case ValueType::kMap:
    case ValueType::kPair: return repr_value(v);
  }
  return {};
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string repr_value(const Value& v) {
  switch (v.type()) {
    case ValueType::kStr: return quote(v.as_str());
    case ValueType::kList: {
      std::string out = "[";
      bool first = true;
      for (const auto& item : v.as_list()) {
        if (!first) out += ", ";
        first = false;
        out += repr_value(item);
      }
      return out + "]";
    }
    case ValueType::kMap: {
      std::string out = "{";
      bool first = true;
      for (const auto& [k, item] : v.as_map()) {
        if (!first) out += ", ";
        first = false;
        out += quote(k) + ": " + repr_value(item);
      }
      return out + "}";
    }
    case ValueType::kPair: {
      const auto& p = v.as_pair();
      return std::string("(") + (p.flag ? "true" : "false") + ", " + repr_value(p.second) + ")";
    }
    default: return format_value(v);
  }
}

}  // namespace tabmath::lang
