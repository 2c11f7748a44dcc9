#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabmath/features.hpp"
#include "tabmath/operator_spec.hpp"

namespace tabmath {

enum class SplitKind { kRandom, kOod };

const char* to_string(SplitKind kind);  // "RANDOM" / "OOD"
std::optional<SplitKind> parse_split_kind(std::string_view text);

inline constexpr std::size_t kCapGrid[] = {32, 64, 128, 256, 512, 1024, 2048};
bool is_grid_cap(std::size_t cap);

/// Reproducible description of one split. Index arrays hold table row ids
/// (row positions in the table CSV), each sorted ascending.
struct SplitManifest {
  std::string operator_id;
  SplitKind kind = SplitKind::kRandom;
  std::size_t cap = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> context;
  std::vector<std::size_t> query;
  std::optional<double> boundary;  // OOD only: max context y
  std::string table_path;
  std::string table_sha256;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

Json manifest_to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const Json& j);  // throws SchemaError

/// Uniform subsample of `cap` rows without replacement, kept in original
/// order. Throws RangeError for cap == 0 or cap > rows.
FeatureMatrix apply_row_cap(const FeatureMatrix& matrix, std::size_t cap, std::uint64_t seed);

/// floor(n/5) query rows by seeded shuffle. Throws RangeError below 5 rows.
SplitManifest split_random(const FeatureMatrix& matrix, std::uint64_t seed);

/// Rows ordered by (y, row id); the last floor(n/5) form the query set.
/// Throws RangeError below 5 rows.
SplitManifest split_ood(const FeatureMatrix& matrix);

SplitManifest make_split(const FeatureMatrix& matrix, SplitKind kind, std::uint64_t seed);

/// Plain row-major dense matrix handed to models.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

struct Preprocessor {
  std::vector<std::size_t> kept;       // column positions in the FeatureMatrix
  std::vector<std::string> kept_names;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> median;
  double target_mean = 0;
  double target_sd = 0;
  bool standardize = true;

  friend bool operator==(const Preprocessor&, const Preprocessor&) = default;
};

/// Fits every statistic on the manifest's context rows, in manifest order.
/// Columns whose context standard deviation (population) is zero or undefined
/// are dropped. Throws EmptyContext, SchemaError when a manifest id is not in
/// the matrix.
Preprocessor fit_preprocessor(const FeatureMatrix& matrix, const SplitManifest& manifest,
                              bool standardize = true);

/// Imputes NaN with the context median, then z-scores (when standardize).
DenseMatrix transform(const Preprocessor& pre, const FeatureMatrix& matrix,
                      const std::vector<std::size_t>& row_ids);

/// Targets of the given row ids, in order.
std::vector<double> targets(const FeatureMatrix& matrix, const std::vector<std::size_t>& row_ids);

/// Population mean and standard deviation.
struct MeanSd {
  double mean = 0;
  double sd = 0;
};
MeanSd mean_sd(const std::vector<double>& v);
double median_of(std::vector<double> v);

}  // namespace tabmath
