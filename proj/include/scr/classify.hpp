#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scr/errors.hpp"

namespace scr::classify {

class TrainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class FoldInfeasibleError : public Error {
 public:
  using Error::Error;
};

constexpr int kNumClasses = 3;

// Minimal dense row-major matrix; the feature sets here never justify a
// linear-algebra dependency.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // strictly positive; 1 for zero-variance columns
};

struct LogRegHyper {
  double learning_rate = 0.1;
  double l2 = 1e-3;
  int epochs = 500;
};

struct LogRegModel {
  size_t dim = 0;
  std::vector<double> weights;  // kNumClasses x (dim + 1), bias last, row-major
  Standardization standardization;
  LogRegHyper hyper;
};

// Softmax cross-entropy + L2 (bias excluded from the penalty) over an
// already-prepared design matrix; exposed for the finite-difference
// gradient check.
double logreg_objective(const Matrix& X, const std::vector<int>& y,
                        const std::vector<double>& weights, double l2);
std::vector<double> logreg_gradient(const Matrix& X, const std::vector<int>& y,
                                    const std::vector<double>& weights, double l2);

// Standardizes features, then full-batch gradient descent from zero
// weights; fully deterministic.
LogRegModel train_logreg(const Matrix& X, const std::vector<int>& y, const LogRegHyper& hp);

struct ForestHyper {
  int n_trees = 200;
  int max_depth = 12;
  int min_samples_split = 2;
  int features_per_split = 0;  // 0 = ceil(sqrt(D))
  bool bootstrap = true;
  uint64_t master_seed = 42;
  int workers = 1;  // tree randomness derives from (master_seed, t) only
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, kNumClasses> counts{};  // leaf class histogram
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestModel {
  size_t dim = 0;
  ForestHyper hyper;
  std::vector<DecisionTree> trees;
};

// Seeded bootstrap + Gini best-split over a per-node random feature
// subset. Ties take the lowest feature index, then the lowest threshold,
// so predictions are bitwise reproducible regardless of worker count.
ForestModel train_rf(const Matrix& X, const std::vector<int>& y, const ForestHyper& hp);

Matrix predict_proba(const LogRegModel& model, const Matrix& X);
Matrix predict_proba(const ForestModel& model, const Matrix& X);

// argmax with ties broken by fixed class order.
std::vector<int> predict_from_proba(const Matrix& proba);
std::vector<int> predict(const LogRegModel& model, const Matrix& X);
std::vector<int> predict(const ForestModel& model, const Matrix& X);

struct CVResult {
  size_t best_index = 0;
  std::vector<std::vector<double>> fold_scores;  // [candidate][fold] macro-F1
  std::vector<double> mean_scores;
};

using TrainPredictFn = std::function<std::vector<int>(
    const Matrix& train_X, const std::vector<int>& train_y, const Matrix& eval_X,
    size_t candidate)>;

// Stratified k-fold selection maximizing mean macro-F1; deterministic
// given the seed. Ties take the first candidate in grid order.
CVResult cross_validate(const Matrix& X, const std::vector<int>& y, size_t n_candidates,
                        const TrainPredictFn& train_predict, int k, uint64_t seed);

// Stratified fold ids (0..k-1) per sample; exposed for tests.
std::vector<int> stratified_folds(const std::vector<int>& y, int k, uint64_t seed);

nlohmann::json to_json(const LogRegModel& model);
LogRegModel logreg_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace scr::classify
