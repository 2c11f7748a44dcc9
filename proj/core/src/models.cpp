#include "tabmath/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "tabmath/errors.hpp"
#include "tabmath/lang/rng.hpp"

namespace tabmath {

const char* to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::kMean: return "mean";
    case ModelFamily::kOls: return "ols";
    case ModelFamily::kKnn: return "knn";
    case ModelFamily::kCart: return "cart";
    case ModelFamily::kRandomForest: return "random_forest";
    case ModelFamily::kGbt: return "gbt";
  }
  return "?";
}

Json ModelSpec::to_json() const {
  Json j = Json::object();
  j["name"] = name;
  j["family"] = to_string(family);
  switch (family) {
    case ModelFamily::kMean: break;
    case ModelFamily::kOls: j["ridge"] = ridge; break;
    case ModelFamily::kKnn: j["k"] = knn_k; break;
    case ModelFamily::kCart:
      j["max_depth"] = max_depth;
      j["min_samples_leaf"] = min_samples_leaf;
      break;
    case ModelFamily::kRandomForest:
      j["n_trees"] = n_trees;
      j["max_depth"] = max_depth;
      j["min_samples_leaf"] = min_samples_leaf;
      j["feature_fraction"] = feature_fraction;
      break;
    case ModelFamily::kGbt:
      j["n_estimators"] = n_estimators;
      j["learning_rate"] = learning_rate;
      j["max_depth"] = max_depth;
      j["min_samples_leaf"] = min_samples_leaf;
      break;
  }
  j["seed"] = seed;
  return j;
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"mean", "ols",     "knn",    "cart",
                                                 "rf",   "gbt-xgb", "gbt-cat"};
  return names;
}

std::optional<ModelSpec> model_spec(std::string_view name, std::uint64_t seed) {
  ModelSpec s;
  s.name = std::string(name);
  s.seed = seed;
  if (name == "mean") {
    s.family = ModelFamily::kMean;
  } else if (name == "ols") {
    s.family = ModelFamily::kOls;
  } else if (name == "knn") {
    s.family = ModelFamily::kKnn;
  } else if (name == "cart") {
    s.family = ModelFamily::kCart;
  } else if (name == "rf") {
    s.family = ModelFamily::kRandomForest;
    s.n_trees = 500;
  } else if (name == "gbt-xgb") {
    s.family = ModelFamily::kGbt;
    s.n_estimators = 600;
    s.learning_rate = 0.05;
    s.max_depth = 8;
  } else if (name == "gbt-cat") {
    s.family = ModelFamily::kGbt;
    s.n_estimators = 500;
    s.learning_rate = 0.05;
    s.max_depth = 6;
  } else {
    return std::nullopt;
  }
  return s;
}

void validate(const ModelSpec& s) {
  auto fail = [&](const std::string& what) {
    throw PreconditionError("model '" + s.name + "': " + what);
  };
  if (s.knn_k == 0) fail("knn k must be positive");
  if (s.min_samples_leaf == 0) fail("min_samples_leaf must be positive");
  if (s.n_trees == 0) fail("n_trees must be positive");
  if (s.n_estimators == 0) fail("n_estimators must be positive");
  if (!(s.learning_rate > 0 && s.learning_rate <= 1)) fail("learning_rate must be in (0, 1]");
  if (!(s.feature_fraction > 0 && s.feature_fraction <= 1)) {
    fail("feature_fraction must be in (0, 1]");
  }
  if (!(s.ridge >= 0)) fail("ridge must be non-negative");
}

std::vector<double> TrainedModel::predict(const DenseMatrix& X) const {
  if (X.cols != n_features_) {
    throw SchemaError("model expects " + std::to_string(n_features_) + " columns, got " +
                      std::to_string(X.cols));
  }
  std::vector<double> out(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict_row(X.data.data() + r * X.cols);
  return out;
}

double RegressionTree::predict(const double* x) const {
  std::int32_t i = 0;
  while (nodes[i].feature >= 0) {
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace {

// Column-major copy of the design plus, per feature, all sample indices
// sorted by (value, index). Shared read-only by every tree of one fit.
struct TreeData {
  std::size_t n = 0;
  std::size_t f = 0;
  std::vector<double> col;  // f x n
  std::vector<std::vector<std::uint32_t>> sorted;

  explicit TreeData(const DenseMatrix& X) : n(X.rows), f(X.cols), col(X.rows * X.cols) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < f; ++c) col[c * n + r] = X.at(r, c);
    }
    sorted.resize(f);
    for (std::size_t c = 0; c < f; ++c) {
      auto& s = sorted[c];
      s.resize(n);
      std::iota(s.begin(), s.end(), 0u);
      const double* x = col.data() + c * n;
      std::stable_sort(s.begin(), s.end(),
                       [x](std::uint32_t a, std::uint32_t b) { return x[a] < x[b]; });
    }
  }
  double x(std::size_t feature, std::uint32_t sample) const { return col[feature * n + sample]; }
};

struct TreeParams {
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::size_t mtry = 0;  // 0 = all features
  lang::RngState* rng = nullptr;
};

// Greedy SSE-reduction tree over presorted indices. Each node owns the same
// contiguous range in every per-feature index array; splitting stably
// partitions those ranges, so no re-sorting happens below the root.
class TreeBuilder {
 public:
  TreeBuilder(const TreeData& data, const double* y, const std::uint32_t* weights)
      : data_(data), y_(y), w_(weights), idx_(data.f), left_(data.n, 0) {
    for (std::size_t c = 0; c < data.f; ++c) {
      auto& v = idx_[c];
      v.reserve(data.n);
      for (auto s : data.sorted[c]) {
        if (weight(s) > 0) v.push_back(s);
      }
    }
    if (data.f == 0) {
      for (std::uint32_t s = 0; s < data.n; ++s) {
        if (weight(s) > 0) all_.push_back(s);
      }
    }
    buf_.resize(data.n);
    perm_.resize(data.f);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  }

  RegressionTree build(const TreeParams& p, std::vector<double>* leaf_of_sample = nullptr) {
    params_ = p;
    leaf_out_ = leaf_of_sample;
    tree_.nodes.clear();
    const std::size_t m = data_.f > 0 ? idx_[0].size() : all_.size();
    build_node(0, m, 0);
    return std::move(tree_);
  }

 private:
  double weight(std::uint32_t s) const { return w_ ? w_[s] : 1.0; }
  const std::vector<std::uint32_t>& members() const { return data_.f > 0 ? idx_[0] : all_; }

  std::int32_t build_node(std::size_t lo, std::size_t hi, std::size_t depth) {
    const auto& mem = members();
    double W = 0, S = 0, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto s = mem[i];
      W += weight(s);
      S += weight(s) * y_[s];
      ymin = std::min(ymin, y_[s]);
      ymax = std::max(ymax, y_[s]);
    }
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{});
    tree_.nodes[id].value = S / W;

    const bool stop = (params_.max_depth > 0 && depth >= params_.max_depth) ||
                      W < 2.0 * static_cast<double>(params_.min_leaf) || ymin == ymax ||
                      data_.f == 0;
    std::size_t best_f = 0, best_pos = 0;
    double best_gain = 0, best_thr = 0;
    bool found = false;
    if (!stop) {
      const std::size_t F = data_.f;
      const std::size_t mtry = params_.mtry == 0 ? F : std::min(params_.mtry, F);
      std::size_t informative = 0;
      for (std::size_t i = 0; i < F; ++i) {
        if (mtry < F) {
          const std::size_t j = i + static_cast<std::size_t>(params_.rng->below(F - i));
          std::swap(perm_[i], perm_[j]);
        }
        const std::size_t f = mtry < F ? perm_[i] : i;
        const auto& arr = idx_[f];
        if (data_.x(f, arr[lo]) == data_.x(f, arr[hi - 1])) continue;
        ++informative;
        double wl = 0, sl = 0;
        for (std::size_t k = lo; k + 1 < hi; ++k) {
          const auto s = arr[k];
          wl += weight(s);
          sl += weight(s) * y_[s];
          const double xa = data_.x(f, s);
          const double xb = data_.x(f, arr[k + 1]);
          if (xa == xb) continue;
          const double wr = W - wl;
          if (wl < static_cast<double>(params_.min_leaf) ||
              wr < static_cast<double>(params_.min_leaf)) {
            continue;
          }
          const double diff = sl / wl - (S - sl) / wr;
          const double gain = wl * wr / W * diff * diff;
          if (gain > best_gain) {
            best_gain = gain;
            best_f = f;
            best_pos = k + 1;
            double mid = xa + (xb - xa) / 2;
            if (!(mid < xb)) mid = xa;
            best_thr = mid;
            found = true;
          }
        }
        if (informative >= mtry && found) break;
      }
    }
    if (!found) {
      if (leaf_out_) {
        for (std::size_t i = lo; i < hi; ++i) (*leaf_out_)[mem[i]] = tree_.nodes[id].value;
      }
      return id;
    }

    const auto& chosen = idx_[best_f];
    for (std::size_t k = lo; k < hi; ++k) left_[chosen[k]] = k < best_pos ? 1 : 0;
    for (std::size_t f = 0; f < data_.f; ++f) {
      if (f == best_f) continue;
      auto& arr = idx_[f];
      std::size_t a = lo, b = 0;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto s = arr[k];
        if (left_[s]) arr[a++] = s;
        else buf_[b++] = s;
      }
      std::copy(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(b), arr.begin() + a);
    }
    tree_.nodes[id].feature = static_cast<std::int32_t>(best_f);
    tree_.nodes[id].threshold = best_thr;
    const auto l = build_node(lo, best_pos, depth + 1);
    const auto r = build_node(best_pos, hi, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const TreeData& data_;
  const double* y_;
  const std::uint32_t* w_;
  std::vector<std::vector<std::uint32_t>> idx_;
  std::vector<std::uint32_t> all_;
  std::vector<std::uint8_t> left_;
  std::vector<std::uint32_t> buf_;
  std::vector<std::size_t> perm_;
  TreeParams params_;
  std::vector<double>* leaf_out_ = nullptr;
  RegressionTree tree_;
};

class MeanModel : public TrainedModel {
 public:
  explicit MeanModel(double m) : mean_(m) {}

 protected:
  double predict_row(const double*) const override { return mean_; }

 private:
  double mean_;
};

class OlsModel : public TrainedModel {
 public:
  OlsModel(const DenseMatrix& X, const std::vector<double>& y, double ridge) {
    const auto n = static_cast<Eigen::Index>(X.rows);
    const auto p = static_cast<Eigen::Index>(X.cols);
    Eigen::MatrixXd A(n, p + 1);
    for (Eigen::Index r = 0; r < n; ++r) {
      A(r, 0) = 1.0;
      for (Eigen::Index c = 0; c < p; ++c) A(r, c + 1) = X.at(r, c);
    }
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += ridge;
    const Eigen::VectorXd beta = G.ldlt().solve(A.transpose() * b);
    intercept_ = beta(0);
    coef_.assign(beta.data() + 1, beta.data() + beta.size());
  }
  std::optional<std::vector<double>> linear_coefficients() const override {
    std::vector<double> out{intercept_};
    out.insert(out.end(), coef_.begin(), coef_.end());
    return out;
  }

 protected:
  double predict_row(const double* x) const override {
    double s = intercept_;
    for (std::size_t c = 0; c < coef_.size(); ++c) s += coef_[c] * x[c];
    return s;
  }

 private:
  double intercept_ = 0;
  std::vector<double> coef_;
};

class KnnModel : public TrainedModel {
 public:
  KnnModel(const DenseMatrix& X, const std::vector<double>& y, std::size_t k)
      : X_(X), y_(y), k_(std::min(k, X.rows)) {}

 protected:
  double predict_row(const double* x) const override {
    std::vector<std::pair<double, std::size_t>> d(X_.rows);
    for (std::size_t r = 0; r < X_.rows; ++r) {
      double s = 0;
      const double* row = X_.data.data() + r * X_.cols;
      for (std::size_t c = 0; c < X_.cols; ++c) s += (row[c] - x[c]) * (row[c] - x[c]);
      d[r] = {s, r};
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_ - 1), d.end());
    double sum = 0;
    for (std::size_t i = 0; i < k_; ++i) sum += y_[d[i].second];
    return sum / static_cast<double>(k_);
  }

 private:
  DenseMatrix X_;
  std::vector<double> y_;
  std::size_t k_;
};

class TreeModel : public TrainedModel {
 public:
  explicit TreeModel(RegressionTree t) : tree_(std::move(t)) {}

 protected:
  double predict_row(const double* x) const override { return tree_.predict(x); }

 private:
  RegressionTree tree_;
};

// Runs fn(t) for t in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t t = 0; t < count; ++t) fn(t);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < count; t += threads) fn(t);
    });
  }
}

class ForestModel : public TrainedModel {
 public:
  ForestModel(const ModelSpec& spec, const DenseMatrix& X, const std::vector<double>& y) {
    const TreeData data(X);
    const std::size_t n = X.rows;
    const std::size_t mtry = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(spec.feature_fraction * static_cast<double>(X.cols))));
    trees_.resize(spec.n_trees);
    parallel_for(spec.n_trees, spec.threads, [&](std::size_t t) {
      auto rng = lang::RngState::derive("random_forest", "tree", spec.seed, {t});
      std::vector<std::uint32_t> w(n, 0);
      for (std::size_t i = 0; i < n; ++i) ++w[rng.below(n)];
      TreeBuilder builder(data, y.data(), w.data());
      TreeParams p{spec.max_depth, spec.min_samples_leaf, mtry, &rng};
      trees_[t] = builder.build(p);
    });
  }

 protected:
  double predict_row(const double* x) const override {
    double s = 0;
    for (const auto& t : trees_) s += t.predict(x);
    return s / static_cast<double>(trees_.size());
  }

 private:
  std::vector<RegressionTree> trees_;
};

class GbtModel : public TrainedModel {
 public:
  GbtModel(const ModelSpec& spec, const DenseMatrix& X, const std::vector<double>& y) {
    const TreeData data(X);
    const std::size_t n = X.rows;
    init_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> fitted(n, init_), residual(n), leaf(n);
    TreeParams p{spec.max_depth, spec.min_samples_leaf, 0, nullptr};
    trees_.reserve(spec.n_estimators);
    for (std::size_t m = 0; m < spec.n_estimators; ++m) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
      TreeBuilder builder(data, residual.data(), nullptr);
      RegressionTree tree = builder.build(p, &leaf);
      for (auto& node : tree.nodes) node.value *= spec.learning_rate;
      for (std::size_t i = 0; i < n; ++i) fitted[i] += spec.learning_rate * leaf[i];
      trees_.push_back(std::move(tree));
    }
  }

 protected:
  double predict_row(const double* x) const override {
    double s = init_;
    for (const auto& t : trees_) s += t.predict(x);
    return s;
  }

 private:
  double init_ = 0;
  std::vector<RegressionTree> trees_;
};

}  // namespace

std::unique_ptr<TrainedModel> train(const ModelSpec& spec, const DenseMatrix& X,
                                    const std::vector<double>& y) {
  validate(spec);
  if (X.rows == 0) throw PreconditionError("train: no rows");
  if (y.size() != X.rows) throw PreconditionError("train: target length differs from row count");
  std::unique_ptr<TrainedModel> model;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  const bool degenerate = X.cols == 0 && spec.family != ModelFamily::kMean;
  if (spec.family == ModelFamily::kMean || degenerate) {
    model = std::make_unique<MeanModel>(mean);
  } else {
    switch (spec.family) {
      case ModelFamily::kOls: model = std::make_unique<OlsModel>(X, y, spec.ridge); break;
      case ModelFamily::kKnn: model = std::make_unique<KnnModel>(X, y, spec.knn_k); break;
      case ModelFamily::kCart: {
        const TreeData data(X);
        TreeBuilder builder(data, y.data(), nullptr);
        model = std::make_unique<TreeModel>(
            builder.build(TreeParams{spec.max_depth, spec.min_samples_leaf, 0, nullptr}));
        break;
      }
      case ModelFamily::kRandomForest: model = std::make_unique<ForestModel>(spec, X, y); break;
      case ModelFamily::kGbt: model = std::make_unique<GbtModel>(spec, X, y); break;
      case ModelFamily::kMean: break;
    }
  }
  model->family_ = degenerate ? ModelFamily::kMean : spec.family;
  model->n_features_ = X.cols;
  model->y_min_ = *std::min_element(y.begin(), y.end());
  model->y_max_ = *std::max_element(y.begin(), y.end());
  model->degenerate_ = degenerate;
  return model;
}

}  // namespace tabmath
