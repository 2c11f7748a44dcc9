#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabmath/evaluation.hpp"
#include "tabmath/operator_spec.hpp"

namespace tabmath {

enum class ModelFamily { kMean, kOls, kKnn, kCart, kRandomForest, kGbt };

const char* to_string(ModelFamily family);

struct ModelSpec {
  std::string name;  // registry name
  ModelFamily family = ModelFamily::kMean;
  std::size_t knn_k = 5;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t n_trees = 500;
  double feature_fraction = 1.0 / 3.0;
  std::size_t n_estimators = 600;
  double learning_rate = 0.05;
  double ridge = 1e-8;
  std::uint64_t seed = 42;
  unsigned threads = 1;  // tree-level parallelism; results do not depend on it

  Json to_json() const;
};

/// Registry: mean, ols, knn, cart, rf, gbt-xgb, gbt-cat. Returns nullopt for
/// unknown names.
std::optional<ModelSpec> model_spec(std::string_view name, std::uint64_t seed = 42);
const std::vector<std::string>& model_names();

/// Throws PreconditionError for non-positive hyperparameters.
void validate(const ModelSpec& spec);

class TrainedModel {
 public:
  virtual ~TrainedModel() = default;

  /// Throws SchemaError when X.cols differs from the training column count.
  std::vector<double> predict(const DenseMatrix& X) const;

  ModelFamily family() const { return family_; }
  std::size_t n_features() const { return n_features_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  /// Set when training fell back to the mean family (no usable columns).
  bool degenerate() const { return degenerate_; }

  /// Intercept followed by one coefficient per column, for linear families.
  virtual std::optional<std::vector<double>> linear_coefficients() const { return std::nullopt; }

 protected:
  virtual double predict_row(const double* x) const = 0;

  friend std::unique_ptr<TrainedModel> train(const ModelSpec&, const DenseMatrix&,
                                             const std::vector<double>&);

  ModelFamily family_ = ModelFamily::kMean;
  std::size_t n_features_ = 0;
  double y_min_ = 0;
  double y_max_ = 0;
  bool degenerate_ = false;
};

/// Fits a model on the given rows. Requires at least one row and y.size() ==
/// X.rows (PreconditionError). Zero columns fall back to the mean family with
/// degenerate() set. Deterministic in (spec, X, y).
std::unique_ptr<TrainedModel> train(const ModelSpec& spec, const DenseMatrix& X,
                                    const std::vector<double>& y);

struct TreeNode {
  std::int32_t feature = -1;  // -1 = leaf
  double threshold = 0;       // x <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0;
};

/// Single regression tree, exposed for tests and benchmarks.
struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const double* x) const;
  std::size_t depth() const;
  std::size_t leaves() const;
};

}  // namespace tabmath
