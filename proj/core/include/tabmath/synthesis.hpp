#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tabmath/lang/interpreter.hpp"
#include "tabmath/lang/value.hpp"
#include "tabmath/operator_spec.hpp"

namespace tabmath {

/// One verified sample: slot values in declaration order plus the label.
struct Row {
  std::vector<lang::Value> values;
  lang::Value y;
  std::size_t template_index = 0;

  friend bool operator==(const Row& a, const Row& b);
};

struct Table {
  std::string operator_id;
  std::vector<std::string> slot_names;
  std::vector<Row> rows;
  std::uint64_t seed = 0;
  std::uint64_t attempts = 0;  // generator draws consumed

  std::vector<std::string> columns() const;  // slot names, then "y"
  lang::Map assignment(std::size_t row) const;
};

struct SynthesisOptions {
  unsigned threads = 1;
  std::size_t attempt_factor = 100;  // budget = attempt_factor * n_rows
  lang::Limits limits;
};

/// Samples exactly `n_rows` unique verified rows.
///
/// Attempt k draws from the stream (operator id, "synthesis", seed, k): the
/// generator runs first, then the template index is drawn from the same
/// stream. Rejected and duplicate draws are skipped. With threads > 1
/// attempts are evaluated speculatively in batches and committed in attempt
/// order, so the result is independent of the thread count.
///
/// Throws PreconditionError (n_rows == 0), ExhaustionError (attempt budget
/// reached), SynthesisError (generator output does not conform to the slot
/// declarations, or a non-finite label), and lang::LangError from evaluation.
Table synthesize_table(const OperatorSpec& spec, std::size_t n_rows, std::uint64_t seed,
                       const SynthesisOptions& options = {});

/// Canonical dedup key of one assignment.
std::string canonical_key(const std::vector<lang::Value>& values);

/// Replaces each [slot] token with the canonically formatted value.
/// Throws std::out_of_range for a bad template index and
/// SlotMismatchError when a placeholder has no value.
std::string render_text(const OperatorSpec& spec, const lang::Map& assignment,
                        std::size_t template_index);
std::string render_text(const OperatorSpec& spec, const Table& table, std::size_t row,
                        std::size_t template_index);

/// CSV: header of slot columns plus `y`, LF endings, canonical numbers.
std::string table_to_csv(const Table& table);

/// Sidecar manifest for a table CSV.
Json table_manifest(const Table& table, std::string_view csv_file, std::string_view csv_sha256);

/// Rebuilds a Table from CSV text and its manifest, parsing values by slot
/// kind. Throws SchemaError on any disagreement with the spec.
Table read_table(const OperatorSpec& spec, std::string_view csv, const Json& manifest);

/// Parses a canonical numeric field: Int when it has no '.', exponent or
/// inf/nan marker, otherwise Float.
lang::Value parse_number(std::string_view text);

}  // namespace tabmath
