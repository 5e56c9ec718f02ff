#include "scr/classify.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scr/evaluate.hpp"
#include "scr/parallel.hpp"
#include "scr/rng.hpp"

namespace scr::classify {

namespace {

using nlohmann::json;

void check_training_input(const Matrix& X, const std::vector<int>& y) {
  if (X.rows == 0 || X.cols == 0) {
    throw TrainError("training data is empty");
  }
  if (X.rows != y.size()) {
    throw DimensionError("feature matrix has " + std::to_string(X.rows) + " rows but " +
                         std::to_string(y.size()) + " labels");
  }
  std::array<bool, kNumClasses> present{};
  for (int label : y) {
    if (label < 0 || label >= kNumClasses) {
      throw TrainError("label outside the class set: " + std::to_string(label));
    }
    present[label] = true;
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (!present[c]) {
      throw TrainError("class " + std::to_string(c) + " has no training samples");
    }
  }
  for (double v : X.data) {
    if (!std::isfinite(v)) {
      throw TrainError("non-finite value in feature matrix");
    }
  }
}

Standardization fit_standardization(const Matrix& X) {
  Standardization s;
  s.mean.assign(X.cols, 0.0);
  s.scale.assign(X.cols, 1.0);
  for (size_t r = 0; r < X.rows; ++r) {
    for (size_t c = 0; c < X.cols; ++c) s.mean[c] += X.at(r, c);
  }
  for (double& m : s.mean) m /= static_cast<double>(X.rows);
  std::vector<double> var(X.cols, 0.0);
  for (size_t r = 0; r < X.rows; ++r) {
    for (size_t c = 0; c < X.cols; ++c) {
      double d = X.at(r, c) - s.mean[c];
      var[c] += d * d;
    }
  }
  for (size_t c = 0; c < X.cols; ++c) {
    double sd = std::sqrt(var[c] / static_cast<double>(X.rows));
    s.scale[c] = sd > 0.0 ? sd : 1.0;  // unit scale for zero-variance columns
  }
  return s;
}

Matrix apply_standardization(const Standardization& s, const Matrix& X) {
  Matrix out(X.rows, X.cols);
  for (size_t r = 0; r < X.rows; ++r) {
    for (size_t c = 0; c < X.cols; ++c) {
      out.at(r, c) = (X.at(r, c) - s.mean[c]) / s.scale[c];
    }
  }
  return out;
}

// logits for one row given weights laid out class-major with bias last
void row_logits(const Matrix& X, size_t r, const std::vector<double>& w, size_t dim,
                std::array<double, kNumClasses>& out) {
  for (int c = 0; c < kNumClasses; ++c) {
    const double* wc = &w[c * (dim + 1)];
    double z = wc[dim];  // bias
    for (size_t d = 0; d < dim; ++d) z += wc[d] * X.at(r, d);
    out[c] = z;
  }
}

void softmax_inplace(std::array<double, kNumClasses>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

double gini(const std::array<double, kNumClasses>& counts, double total) {
  double g = 1.0;
  for (double count : counts) {
    double p = count / total;
    g -= p * p;
  }
  return g;
}

struct TreeBuilder {
  const Matrix& X;
  const std::vector<int>& y;
  const ForestHyper& hp;
  int features_per_split;
  SplitMix64 rng;
  DecisionTree tree;

  TreeBuilder(const Matrix& x, const std::vector<int>& labels, const ForestHyper& hyper,
              uint64_t seed)
      : X(x), y(labels), hp(hyper), rng(seed) {
    features_per_split = hp.features_per_split > 0
                             ? hp.features_per_split
                             : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols))));
    features_per_split = std::min<int>(features_per_split, static_cast<int>(X.cols));
  }

  std::vector<size_t> sample_indices() {
    std::vector<size_t> indices(X.rows);
    if (hp.bootstrap) {
      for (size_t i = 0; i < X.rows; ++i) {
        indices[i] = static_cast<size_t>(rng.bounded(X.rows));
      }
    } else {
      for (size_t i = 0; i < X.rows; ++i) indices[i] = i;
    }
    return indices;
  }

  // sorted random feature subset; sorting pins the tie rule to the lowest
  // feature index independent of draw order
  std::vector<int> sample_features() {
    std::vector<int> all(X.cols);
    for (size_t i = 0; i < X.cols; ++i) all[i] = static_cast<int>(i);
    for (int i = 0; i < features_per_split; ++i) {
      size_t j = i + static_cast<size_t>(rng.bounded(all.size() - i));
      std::swap(all[i], all[j]);
    }
    std::vector<int> chosen(all.begin(), all.begin() + features_per_split);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  int make_leaf(const std::array<double, kNumClasses>& counts) {
    TreeNode node;
    node.counts = counts;
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size() - 1);
  }

  int build(std::vector<size_t>& indices, int depth) {
    std::array<double, kNumClasses> counts{};
    for (size_t idx : indices) counts[y[idx]] += 1.0;
    double total = static_cast<double>(indices.size());
    bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    if (pure || depth >= hp.max_depth ||
        indices.size() < static_cast<size_t>(hp.min_samples_split)) {
      return make_leaf(counts);
    }

    double parent_impurity = gini(counts, total);
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent_impurity;
    for (int f : sample_features()) {
      std::vector<std::pair<double, int>> values;
      values.reserve(indices.size());
      for (size_t idx : indices) values.emplace_back(X.at(idx, f), y[idx]);
      std::sort(values.begin(), values.end());
      std::array<double, kNumClasses> left{};
      std::array<double, kNumClasses> right = counts;
      for (size_t i = 0; i + 1 < values.size(); ++i) {
        left[values[i].second] += 1.0;
        right[values[i].second] -= 1.0;
        if (values[i].first == values[i + 1].first) continue;
        double n_left = static_cast<double>(i + 1);
        double n_right = total - n_left;
        double impurity =
            (n_left * gini(left, n_left) + n_right * gini(right, n_right)) / total;
        // strict improvement; the scan order implements the tie rule
        if (impurity < best_impurity - 1e-12) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = (values[i].first + values[i + 1].first) / 2.0;
        }
      }
    }
    if (best_feature < 0) {
      return make_leaf(counts);
    }

    std::vector<size_t> left_indices, right_indices;
    for (size_t idx : indices) {
      (X.at(idx, best_feature) <= best_threshold ? left_indices : right_indices).push_back(idx);
    }
    if (left_indices.empty() || right_indices.empty()) {
      return make_leaf(counts);
    }
    indices.clear();
    indices.shrink_to_fit();

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.counts = counts;
    tree.nodes.push_back(node);
    int self = static_cast<int>(tree.nodes.size() - 1);
    int left_child = build(left_indices, depth + 1);
    int right_child = build(right_indices, depth + 1);
    tree.nodes[self].left = left_child;
    tree.nodes[self].right = right_child;
    return self;
  }
};

const TreeNode& leaf_for(const DecisionTree& tree, const Matrix& X, size_t row) {
  int node_index = 0;
  while (true) {
    const TreeNode& node = tree.nodes[node_index];
    if (node.feature < 0 || node.left < 0) return node;
    node_index = X.at(row, node.feature) <= node.threshold ? node.left : node.right;
  }
}

}  // namespace

double logreg_objective(const Matrix& X, const std::vector<int>& y,
                        const std::vector<double>& weights, double l2) {
  const size_t dim = X.cols;
  double loss = 0.0;
  std::array<double, kNumClasses> z;
  for (size_t r = 0; r < X.rows; ++r) {
    row_logits(X, r, weights, dim, z);
    softmax_inplace(z);
    loss -= std::log(std::max(z[y[r]], 1e-300));
  }
  loss /= static_cast<double>(X.rows);
  double penalty = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    for (size_t d = 0; d < dim; ++d) {  // bias excluded
      double w = weights[c * (dim + 1) + d];
      penalty += w * w;
    }
  }
  return loss + 0.5 * l2 * penalty;
}

std::vector<double> logreg_gradient(const Matrix& X, const std::vector<int>& y,
                                    const std::vector<double>& weights, double l2) {
  const size_t dim = X.cols;
  std::vector<double> grad(weights.size(), 0.0);
  std::array<double, kNumClasses> z;
  for (size_t r = 0; r < X.rows; ++r) {
    row_logits(X, r, weights, dim, z);
    softmax_inplace(z);
    for (int c = 0; c < kNumClasses; ++c) {
      double delta = z[c] - (y[r] == c ? 1.0 : 0.0);
      double* gc = &grad[c * (dim + 1)];
      for (size_t d = 0; d < dim; ++d) gc[d] += delta * X.at(r, d);
      gc[dim] += delta;
    }
  }
  for (double& g : grad) g /= static_cast<double>(X.rows);
  for (int c = 0; c < kNumClasses; ++c) {
    for (size_t d = 0; d < dim; ++d) {
      grad[c * (dim + 1) + d] += l2 * weights[c * (dim + 1) + d];
    }
  }
  return grad;
}

LogRegModel train_logreg(const Matrix& X, const std::vector<int>& y, const LogRegHyper& hp) {
  check_training_input(X, y);
  LogRegModel model;
  model.dim = X.cols;
  model.hyper = hp;
  model.standardization = fit_standardization(X);
  Matrix Xs = apply_standardization(model.standardization, X);
  model.weights.assign(kNumClasses * (X.cols + 1), 0.0);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::vector<double> grad = logreg_gradient(Xs, y, model.weights, hp.l2);
    for (size_t i = 0; i < model.weights.size(); ++i) {
      model.weights[i] -= hp.learning_rate * grad[i];
    }
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) {
      throw TrainError("logreg training diverged to non-finite weights");
    }
  }
  return model;
}

ForestModel train_rf(const Matrix& X, const std::vector<int>& y, const ForestHyper& hp) {
  check_training_input(X, y);
  ForestModel model;
  model.dim = X.cols;
  model.hyper = hp;
  model.trees.resize(hp.n_trees);
  parallel_for(static_cast<size_t>(hp.n_trees), hp.workers, [&](size_t t) {
    TreeBuilder builder(X, y, hp, derive_seed(hp.master_seed, t));
    std::vector<size_t> indices = builder.sample_indices();
    builder.build(indices, 0);
    model.trees[t] = std::move(builder.tree);
  });
  return model;
}

Matrix predict_proba(const LogRegModel& model, const Matrix& X) {
  if (X.cols != model.dim) {
    throw DimensionError("logreg expects " + std::to_string(model.dim) + " features, got " +
                         std::to_string(X.cols));
  }
  Matrix Xs = apply_standardization(model.standardization, X);
  Matrix proba(X.rows, kNumClasses);
  std::array<double, kNumClasses> z;
  for (size_t r = 0; r < X.rows; ++r) {
    row_logits(Xs, r, model.weights, model.dim, z);
    softmax_inplace(z);
    for (int c = 0; c < kNumClasses; ++c) proba.at(r, c) = z[c];
  }
  return proba;
}

Matrix predict_proba(const ForestModel& model, const Matrix& X) {
  if (X.cols != model.dim) {
    throw DimensionError("forest expects " + std::to_string(model.dim) + " features, got " +
                         std::to_string(X.cols));
  }
  Matrix proba(X.rows, kNumClasses);
  for (size_t r = 0; r < X.rows; ++r) {
    std::array<double, kNumClasses> acc{};
    for (const auto& tree : model.trees) {
      const TreeNode& leaf = leaf_for(tree, X, r);
      double total = leaf.counts[0] + leaf.counts[1] + leaf.counts[2];
      if (total <= 0) continue;
      for (int c = 0; c < kNumClasses; ++c) acc[c] += leaf.counts[c] / total;
    }
    double sum = acc[0] + acc[1] + acc[2];
    for (int c = 0; c < kNumClasses; ++c) {
      proba.at(r, c) = sum > 0 ? acc[c] / sum : 1.0 / kNumClasses;
    }
  }
  return proba;
}

std::vector<int> predict_from_proba(const Matrix& proba) {
  std::vector<int> labels(proba.rows, 0);
  for (size_t r = 0; r < proba.rows; ++r) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (proba.at(r, c) > proba.at(r, best)) best = c;  // ties keep the lowest class
    }
    labels[r] = best;
  }
  return labels;
}

std::vector<int> predict(const LogRegModel& model, const Matrix& X) {
  return predict_from_proba(predict_proba(model, X));
}

std::vector<int> predict(const ForestModel& model, const Matrix& X) {
  return predict_from_proba(predict_proba(model, X));
}

std::vector<int> stratified_folds(const std::vector<int>& y, int k, uint64_t seed) {
  std::array<std::vector<size_t>, kNumClasses> by_class;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= kNumClasses) {
      throw TrainError("label outside the class set: " + std::to_string(y[i]));
    }
    by_class[y[i]].push_back(i);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (by_class[c].size() < static_cast<size_t>(k)) {
      throw FoldInfeasibleError("class " + std::to_string(c) + " has " +
                                std::to_string(by_class[c].size()) + " samples, fewer than k=" +
                                std::to_string(k));
    }
  }
  std::vector<int> folds(y.size(), 0);
  for (int c = 0; c < kNumClasses; ++c) {
    SplitMix64 rng(derive_seed(seed, static_cast<uint64_t>(c) + 101));
    deterministic_shuffle(by_class[c], rng);
    for (size_t i = 0; i < by_class[c].size(); ++i) {
      folds[by_class[c][i]] = static_cast<int>(i % static_cast<size_t>(k));
    }
  }
  return folds;
}

CVResult cross_validate(const Matrix& X, const std::vector<int>& y, size_t n_candidates,
                        const TrainPredictFn& train_predict, int k, uint64_t seed) {
  if (n_candidates == 0) {
    throw PreconditionError("cross_validate: empty candidate grid");
  }
  if (k < 2) {
    throw FoldInfeasibleError("cross_validate: k must be >= 2");
  }
  std::vector<int> folds = stratified_folds(y, k, seed);

  CVResult result;
  result.fold_scores.assign(n_candidates, std::vector<double>(k, 0.0));
  result.mean_scores.assign(n_candidates, 0.0);
  for (size_t cand = 0; cand < n_candidates; ++cand) {
    for (int fold = 0; fold < k; ++fold) {
      std::vector<size_t> train_rows, eval_rows;
      for (size_t i = 0; i < y.size(); ++i) {
        (folds[i] == fold ? eval_rows : train_rows).push_back(i);
      }
      Matrix train_X(train_rows.size(), X.cols);
      Matrix eval_X(eval_rows.size(), X.cols);
      std::vector<int> train_y(train_rows.size()), eval_y(eval_rows.size());
      for (size_t i = 0; i < train_rows.size(); ++i) {
        for (size_t c = 0; c < X.cols; ++c) train_X.at(i, c) = X.at(train_rows[i], c);
        train_y[i] = y[train_rows[i]];
      }
      for (size_t i = 0; i < eval_rows.size(); ++i) {
        for (size_t c = 0; c < X.cols; ++c) eval_X.at(i, c) = X.at(eval_rows[i], c);
        eval_y[i] = y[eval_rows[i]];
      }
      std::vector<int> predictions = train_predict(train_X, train_y, eval_X, cand);
      auto report =
          evaluate::classification_metrics(evaluate::confusion_matrix(eval_y, predictions));
      result.fold_scores[cand][fold] = report.macro_f1;
    }
    double sum = 0.0;
    for (double s : result.fold_scores[cand]) sum += s;
    result.mean_scores[cand] = sum / static_cast<double>(k);
    if (result.mean_scores[cand] > result.mean_scores[result.best_index] + 1e-12) {
      result.best_index = cand;
    }
  }
  return result;
}

nlohmann::json to_json(const LogRegModel& model) {
  return {{"format", "scr-logreg-v1"},
          {"dim", model.dim},
          {"weights", model.weights},
          {"mean", model.standardization.mean},
          {"scale", model.standardization.scale},
          {"hyper", {{"learning_rate", model.hyper.learning_rate},
                     {"l2", model.hyper.l2},
                     {"epochs", model.hyper.epochs}}}};
}

LogRegModel logreg_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "scr-logreg-v1") {
    throw Error("unsupported logreg model format");
  }
  LogRegModel model;
  model.dim = j.at("dim").get<size_t>();
  model.weights = j.at("weights").get<std::vector<double>>();
  model.standardization.mean = j.at("mean").get<std::vector<double>>();
  model.standardization.scale = j.at("scale").get<std::vector<double>>();
  model.hyper.learning_rate = j.at("hyper").at("learning_rate").get<double>();
  model.hyper.l2 = j.at("hyper").at("l2").get<double>();
  model.hyper.epochs = j.at("hyper").at("epochs").get<int>();
  return model;
}

nlohmann::json to_json(const ForestModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      nodes.push_back({{"f", node.feature},
                       {"t", node.threshold},
                       {"l", node.left},
                       {"r", node.right},
                       {"c", node.counts}});
    }
    trees.push_back(std::move(nodes));
  }
  // workers is an execution knob, not model state; predictions are a pure
  // function of (X, y, hyper, master_seed)
  return {{"format", "scr-forest-v1"},
          {"dim", model.dim},
          {"hyper", {{"n_trees", model.hyper.n_trees},
                     {"max_depth", model.hyper.max_depth},
                     {"min_samples_split", model.hyper.min_samples_split},
                     {"features_per_split", model.hyper.features_per_split},
                     {"bootstrap", model.hyper.bootstrap},
                     {"master_seed", model.hyper.master_seed}}},
          {"trees", trees}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "scr-forest-v1") {
    throw Error("unsupported forest model format");
  }
  ForestModel model;
  model.dim = j.at("dim").get<size_t>();
  const auto& hyper = j.at("hyper");
  model.hyper.n_trees = hyper.at("n_trees").get<int>();
  model.hyper.max_depth = hyper.at("max_depth").get<int>();
  model.hyper.min_samples_split = hyper.at("min_samples_split").get<int>();
  model.hyper.features_per_split = hyper.at("features_per_split").get<int>();
  model.hyper.bootstrap = hyper.at("bootstrap").get<bool>();
  model.hyper.master_seed = hyper.at("master_seed").get<uint64_t>();
  for (const auto& tree_json : j.at("trees")) {
    DecisionTree tree;
    for (const auto& node_json : tree_json) {
      TreeNode node;
      node.feature = node_json.at("f").get<int>();
      node.threshold = node_json.at("t").get<double>();
      node.left = node_json.at("l").get<int>();
      node.right = node_json.at("r").get<int>();
      node.counts = node_json.at("c").get<std::array<double, kNumClasses>>();
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace scr::classify
