#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabmath/evaluation.hpp"
#include "tabmath/metrics.hpp"
#include "tabmath/operator_spec.hpp"

namespace tabmath {

inline constexpr int kReportSchemaVersion = 1;

enum class CellSource { kNative, kExternal, kIcl };
const char* to_string(CellSource source);
std::optional<CellSource> parse_cell_source(std::string_view text);

struct Seeds {
  std::uint64_t synthesis = 2025;
  std::uint64_t split = 2025;
  std::uint64_t model = 42;

  friend bool operator==(const Seeds&, const Seeds&) = default;
};

/// One (problem, model, split, cap) evaluation unit.
struct Cell {
  std::string problem_id;
  std::string model;
  SplitKind split = SplitKind::kRandom;
  std::size_t cap = 0;
  CellSource source = CellSource::kNative;
  bool ok = false;
  std::string error;  // set when !ok
  std::optional<MetricSet> metrics;
  std::vector<std::string> warnings;
  std::string manifest_path;
  std::string predictions_path;
  Json model_spec = Json::object();
  Seeds seeds;
};

struct AggregateRow {
  std::string model;
  SplitKind split = SplitKind::kRandom;
  std::size_t cap = 0;
  CellSource source = CellSource::kNative;
  std::size_t n_problems = 0;
  std::vector<std::string> problems;
  Summary consistency;
  Summary r2;  // over cells with a defined r2
  Summary rmse;
  Summary mae;
};

struct Report {
  std::string software_version;
  Json config = Json::object();
  std::vector<Cell> cells;
  std::vector<AggregateRow> aggregates;
};

/// Groups successful cells by (model, split, cap, source); sorted by that key.
std::vector<AggregateRow> aggregate(const std::vector<Cell>& cells);

Json cell_to_json(const Cell& cell);
Cell cell_from_json(const Json& j);
Json report_to_json(const Report& report);

/// Schema check for a report document; returns a list of problems, empty
/// when valid.
std::vector<std::string> validate_report(const Json& doc);

/// Parses a report, throwing SchemaError with the validator's findings.
Report report_from_json(const Json& doc);

inline constexpr const char* kSummaryHeader =
    "model,split,cap,mean_consistency,median_r2,median_rmse,median_mae,ci_lo,ci_hi,n_problems";
std::string summary_csv(const std::vector<AggregateRow>& rows);

/// Predictions for one cell's query rows (in manifest query order), as
/// written by native runs and by external adapters.
struct PredictionFile {
  std::string problem_id;
  std::string model;
  std::string manifest_path;
  std::string manifest_sha256;
  std::size_t cap = 0;
  SplitKind split = SplitKind::kRandom;
  std::vector<double> predictions;
  std::string adapter_version;
};

Json prediction_file_to_json(const PredictionFile& p);
std::vector<std::string> validate_prediction_file(const Json& doc);
PredictionFile prediction_file_from_json(const Json& doc);  // throws SchemaError

/// Targets of a table CSV's `y` column, indexed by row id.
std::vector<double> read_table_targets(std::string_view csv);

/// Resolves a path stored in a document: absolute paths as-is, relative ones
/// against `base_dir` when that file exists, else against the working directory.
std::filesystem::path resolve_path(const std::string& stored, const std::filesystem::path& base_dir);

/// Scores a prediction file against its manifest and table, checking both
/// SHA-256 digests (DigestMismatch) and the prediction count (LengthMismatch).
Cell score_prediction_file(const PredictionFile& p, const std::filesystem::path& prediction_path,
                           CellSource source);

}  // namespace tabmath
