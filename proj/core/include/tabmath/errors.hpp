#pragma once

#include <stdexcept>
#include <string>

namespace tabmath {

/// Root of the pipeline's error hierarchy (operator-language errors live in
/// tabmath::lang and derive from std::runtime_error as well).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TABMATH_ERROR(Name)            \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

TABMATH_ERROR(SchemaError)
TABMATH_ERROR(SlotMismatchError)
TABMATH_ERROR(PreconditionError)
TABMATH_ERROR(ExhaustionError)
TABMATH_ERROR(SynthesisError)
TABMATH_ERROR(RangeError)
TABMATH_ERROR(LengthMismatch)
TABMATH_ERROR(EmptyContext)
TABMATH_ERROR(EmptyQuery)
TABMATH_ERROR(ParseError)
TABMATH_ERROR(LengthError)
TABMATH_ERROR(DigestMismatch)
TABMATH_ERROR(IoError)

#undef TABMATH_ERROR

}  // namespace tabmath
