#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tabmath/operator_spec.hpp"
#include "tabmath/synthesis.hpp"

namespace tabmath {

struct FeatureColumn {
  std::string name;       // e.g. "slot_a_mod_3"
  std::string slot;       // source slot; empty for text statistics
  std::string transform;  // "raw", "abs_log1p", "sign", "parity", "frac", "mod_3", "code", ...

  friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

struct CategoricalDictionary {
  std::string slot;
  std::vector<std::string> values;  // code = position

  friend bool operator==(const CategoricalDictionary&, const CategoricalDictionary&) = default;
};

/// Engineered numeric features. `row_ids` are row positions in the source
/// table and survive subsetting, so manifests can refer back to the CSV.
struct FeatureMatrix {
  std::string operator_id;
  std::vector<FeatureColumn> columns;
  std::vector<std::size_t> row_ids;
  std::vector<double> values;  // row-major, rows() x cols()
  std::vector<double> y;
  std::vector<CategoricalDictionary> dictionaries;

  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  std::vector<std::string> column_names() const;

  /// Rows at the given positions (not row ids), in the given order.
  FeatureMatrix select(const std::vector<std::size_t>& positions) const;
};

/// Feature schema for a spec; a pure function of the slot declarations.
std::vector<FeatureColumn> feature_schema(const OperatorSpec& spec);

FeatureMatrix engineer_features(const Table& table, const OperatorSpec& spec);

/// Floor-semantics modulus, result in [0, k) for k > 0.
double floor_mod(double x, double k);

std::string features_to_csv(const FeatureMatrix& m);
Json feature_manifest(const FeatureMatrix& m, std::string_view csv_file,
                      std::string_view csv_sha256, std::uint64_t seed);

}  // namespace tabmath
