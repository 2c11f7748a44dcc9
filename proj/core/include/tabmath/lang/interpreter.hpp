#pragma once

#include <cstdint>
#include <string_view>

#include "tabmath/lang/ast.hpp"
#include "tabmath/lang/rng.hpp"
#include "tabmath/lang/value.hpp"

namespace tabmath::lang {

struct Limits {
  std::uint64_t step_budget = 1'000'000;  // per function call
  std::uint64_t loop_budget = 100'000;    // per single while loop
};

/// Evaluates `name` in `program` with parameters bound by name from `args`.
///
/// Evaluation is deterministic in (program, args, rng position) and touches
/// nothing but `rng`. Errors: ResourceError (budget), TypeError, DivisionByZero,
/// NameError (unbound variable, missing argument, unknown function), RangeError
/// (empty random range, integer overflow, bad conversion).
Value eval_function(const Program& program, std::string_view name, const Map& args,
                    RngState& rng, const Limits& limits = {});

/// Round half away from zero.
double round_half_away(double x) noexcept;

}  // namespace tabmath::lang
