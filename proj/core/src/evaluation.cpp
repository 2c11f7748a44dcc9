#include "tabmath/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "tabmath/errors.hpp"
#include "tabmath/lang/rng.hpp"

namespace tabmath {

const char* to_string(SplitKind kind) { return kind == SplitKind::kOod ? "OOD" : "RANDOM"; }

std::optional<SplitKind> parse_split_kind(std::string_view text) {
  if (text == "RANDOM" || text == "random") return SplitKind::kRandom;
  if (text == "OOD" || text == "ood") return SplitKind::kOod;
  return std::nullopt;
}

bool is_grid_cap(std::size_t cap) {
  return std::find(std::begin(kCapGrid), std::end(kCapGrid), cap) != std::end(kCapGrid);
}

Json manifest_to_json(const SplitManifest& m) {
  Json j = Json::object();
  j["schema_version"] = 1;
  j["kind"] = "split";
  j["operator_id"] = m.operator_id;
  j["split"] = to_string(m.kind);
  j["cap"] = m.cap;
  j["seed"] = m.seed;
  j["context"] = m.context;
  j["query"] = m.query;
  j["boundary"] = m.boundary ? Json(*m.boundary) : Json(nullptr);
  j["table_path"] = m.table_path;
  j["table_sha256"] = m.table_sha256;
  return j;
}

SplitManifest manifest_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1) throw SchemaError("unsupported schema_version");
    if (j.at("kind").get<std::string>() != "split") throw SchemaError("kind must be 'split'");
    SplitManifest m;
    m.operator_id = j.at("operator_id").get<std::string>();
    auto kind = parse_split_kind(j.at("split").get<std::string>());
    if (!kind) throw SchemaError("split must be RANDOM or OOD");
    m.kind = *kind;
    m.cap = j.at("cap").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.context = j.at("context").get<std::vector<std::size_t>>();
    m.query = j.at("query").get<std::vector<std::size_t>>();
    if (!j.at("boundary").is_null()) m.boundary = j.at("boundary").get<double>();
    m.table_path = j.at("table_path").get<std::string>();
    m.table_sha256 = j.at("table_sha256").get<std::string>();
    if (m.context.size() + m.query.size() != m.cap) {
      throw SchemaError("context and query sizes do not add up to cap");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("split manifest: ") + e.what());
  }
}

namespace {

void require_rows(const FeatureMatrix& m) {
  if (m.rows() < 5) {
    throw RangeError("split needs at least 5 rows, got " + std::to_string(m.rows()));
  }
}

SplitManifest from_positions(const FeatureMatrix& matrix, SplitKind kind, std::uint64_t seed,
                             const std::vector<std::size_t>& order, std::size_t n_query) {
  SplitManifest s;
  s.operator_id = matrix.operator_id;
  s.kind = kind;
  s.cap = matrix.rows();
  s.seed = seed;
  const std::size_t n_context = order.size() - n_query;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_context ? s.context : s.query).push_back(matrix.row_ids[order[i]]);
  }
  std::sort(s.context.begin(), s.context.end());
  std::sort(s.query.begin(), s.query.end());
  return s;
}

}  // namespace

FeatureMatrix apply_row_cap(const FeatureMatrix& matrix, std::size_t cap, std::uint64_t seed) {
  const std::size_t n = matrix.rows();
  if (cap == 0 || cap > n) {
    throw RangeError("row cap " + std::to_string(cap) + " is outside [1, " + std::to_string(n) +
                     "]");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (cap < n) {
    auto rng = lang::RngState::derive(matrix.operator_id, "row_cap", seed, {cap});
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
  }
  return matrix.select(idx);
}

SplitManifest split_random(const FeatureMatrix& matrix, std::uint64_t seed) {
  require_rows(matrix);
  const std::size_t n = matrix.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = lang::RngState::derive(matrix.operator_id, "split_random", seed, {n});
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }
  return from_positions(matrix, SplitKind::kRandom, seed, order, n / 5);
}

SplitManifest split_ood(const FeatureMatrix& matrix) {
  require_rows(matrix);
  const std::size_t n = matrix.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (matrix.y[a] != matrix.y[b]) return matrix.y[a] < matrix.y[b];
    return matrix.row_ids[a] < matrix.row_ids[b];
  });
  SplitManifest s = from_positions(matrix, SplitKind::kOod, 0, order, n / 5);
  s.boundary = matrix.y[order[n - n / 5 - 1]];
  return s;
}

SplitManifest make_split(const FeatureMatrix& matrix, SplitKind kind, std::uint64_t seed) {
  return kind == SplitKind::kOod ? split_ood(matrix) : split_random(matrix, seed);
}

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  double sum = 0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

namespace {

std::vector<std::size_t> positions_of(const FeatureMatrix& matrix,
                                      const std::vector<std::size_t>& row_ids) {
  std::unordered_map<std::size_t, std::size_t> where;
  where.reserve(matrix.rows());
  for (std::size_t p = 0; p < matrix.rows(); ++p) where.emplace(matrix.row_ids[p], p);
  std::vector<std::size_t> out;
  out.reserve(row_ids.size());
  for (auto id : row_ids) {
    auto it = where.find(id);
    if (it == where.end()) {
      throw SchemaError("row id " + std::to_string(id) + " is not in the feature matrix");
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Preprocessor fit_preprocessor(const FeatureMatrix& matrix, const SplitManifest& manifest,
                              bool standardize) {
  if (manifest.context.empty()) throw EmptyContext("split manifest has no context rows");
  const auto pos = positions_of(matrix, manifest.context);
  Preprocessor pre;
  pre.standardize = standardize;
  std::vector<double> col;
  col.reserve(pos.size());
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    col.clear();
    for (auto p : pos) {
      const double v = matrix.at(p, c);
      if (!std::isnan(v)) col.push_back(v);
    }
    if (col.empty()) continue;
    const MeanSd ms = mean_sd(col);
    if (!(ms.sd > 0) || !std::isfinite(ms.sd)) continue;
    pre.kept.push_back(c);
    pre.kept_names.push_back(matrix.columns[c].name);
    pre.mean.push_back(ms.mean);
    pre.sd.push_back(ms.sd);
    pre.median.push_back(median_of(col));
  }
  std::vector<double> ys;
  ys.reserve(pos.size());
  for (auto p : pos) ys.push_back(matrix.y[p]);
  const MeanSd t = mean_sd(ys);
  pre.target_mean = t.mean;
  pre.target_sd = t.sd;
  return pre;
}

DenseMatrix transform(const Preprocessor& pre, const FeatureMatrix& matrix,
                      const std::vector<std::size_t>& row_ids) {
  const auto pos = positions_of(matrix, row_ids);
  DenseMatrix out;
  out.rows = pos.size();
  out.cols = pre.kept.size();
  out.data.resize(out.rows * out.cols);
  for (std::size_t r = 0; r < pos.size(); ++r) {
    for (std::size_t k = 0; k < pre.kept.size(); ++k) {
      double v = matrix.at(pos[r], pre.kept[k]);
      if (std::isnan(v)) v = pre.median[k];
      if (pre.standardize) v = (v - pre.mean[k]) / pre.sd[k];
      out.at(r, k) = v;
    }
  }
  return out;
}

std::vector<double> targets(const FeatureMatrix& matrix, const std::vector<std::size_t>& row_ids) {
  const auto pos = positions_of(matrix, row_ids);
  std::vector<double> out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(matrix.y[p]);
  return out;
}

}  // namespace tabmath
