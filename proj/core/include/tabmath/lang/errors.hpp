#pragma once

#include <stdexcept>
#include <string>

namespace tabmath::lang {

struct SourceLocation {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

enum class ErrorKind {
  kSyntax,
  kRestriction,
  kResource,
  kType,
  kDivisionByZero,
  kName,
  kRange,
};

const char* to_string(ErrorKind kind);

/// Base class for every diagnostic raised by the operator language. When a
/// source location is known the message is prefixed with `line:column: `.
class LangError : public std::runtime_error {
 public:
  LangError(ErrorKind kind, const std::string& message, SourceLocation loc = {});

  ErrorKind kind() const noexcept { return kind_; }
  const SourceLocation& location() const noexcept { return loc_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  SourceLocation loc_;
  std::string detail_;
};

#define TABMATH_LANG_ERROR(Name, Kind)                                   \
  class Name : public LangError {                                        \
   public:                                                               \
    explicit Name(const std::string& message, SourceLocation loc = {})   \
        : LangError(ErrorKind::Kind, message, loc) {}                    \
  };

TABMATH_LANG_ERROR(SyntaxError, kSyntax)
TABMATH_LANG_ERROR(RestrictionError, kRestriction)
TABMATH_LANG_ERROR(ResourceError, kResource)
TABMATH_LANG_ERROR(TypeError, kType)
TABMATH_LANG_ERROR(DivisionByZero, kDivisionByZero)
TABMATH_LANG_ERROR(NameError, kName)
TABMATH_LANG_ERROR(RangeError, kRange)

#undef TABMATH_LANG_ERROR

}  // namespace tabmath::lang
