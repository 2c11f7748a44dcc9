#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabmath/evaluation.hpp"
#include "tabmath/icl.hpp"
#include "tabmath/models.hpp"
#include "tabmath/report.hpp"
#include "tabmath/synthesis.hpp"

namespace tabmath {

struct IclSettings {
  std::string model_name;  // cell model name, e.g. "icl"
  std::shared_ptr<CompletionClient> client;
  PromptOptions prompt;
  std::size_t chunk_size = 0;
  std::size_t max_cap = 128;
  int max_retries = 10;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30'000};
  std::filesystem::path dump_dir;  // when set, prompts are written here
};

struct ExternalSettings {
  std::string command;              // invoked as CMD --model M --table T --manifest S --out P
  std::vector<std::string> models;  // adapter model names
};

struct SweepConfig {
  std::vector<std::filesystem::path> operator_files;
  std::filesystem::path out_dir;
  std::size_t n_rows = 2048;
  Seeds seeds;
  std::vector<std::size_t> caps{32, 64, 128, 256, 512, 1024, 2048};
  std::vector<SplitKind> splits{SplitKind::kRandom, SplitKind::kOod};
  std::vector<std::string> models{"mean", "ols", "knn", "cart", "rf", "gbt-xgb"};
  bool standardize = true;
  unsigned jobs = 1;
  std::optional<ExternalSettings> external;
  std::optional<IclSettings> icl;
};

using ProgressLog = std::function<void(const std::string&)>;

/// Everything derived for one operator before any model runs.
struct ProblemData {
  OperatorSpec spec;
  Table table;
  FeatureMatrix features;
  std::filesystem::path table_csv;
};

/// Synthesizes the table and features for one operator and writes the table
/// CSV, its manifest, and the feature CSV/manifest under `out_dir`.
ProblemData prepare_problem(const OperatorSpec& spec, const SweepConfig& config);

/// Runs the full (problem x model x split x cap) sweep, writing manifests,
/// per-cell prediction files, report.json and summary.csv under out_dir.
/// Cell failures are recorded in the report and do not stop the sweep.
Report run_sweep(const SweepConfig& config, const ProgressLog& log = {});

/// Native evaluation of one cell, for callers that already hold the data.
struct CellResult {
  std::vector<double> predictions;
  std::vector<double> query_targets;
  MetricSet metrics;
  bool degenerate = false;
  std::size_t kept_columns = 0;
};
CellResult evaluate_native(const FeatureMatrix& capped, const SplitManifest& manifest,
                           const ModelSpec& model, bool standardize = true);

/// ICL rows (raw slot values) for the given table row ids.
std::vector<IclRow> icl_rows(const Table& table, const std::vector<std::size_t>& row_ids);
std::vector<std::string> icl_columns(const OperatorSpec& spec);

/// `target` expressed relative to the directory `base`.
std::string relative_to(const std::filesystem::path& target, const std::filesystem::path& base);

}  // namespace tabmath
