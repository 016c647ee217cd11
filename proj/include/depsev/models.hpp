#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "depsev/features.hpp"
#include "depsev/parallel.hpp"
#include "depsev/severity.hpp"

namespace depsev {

enum class ModelKind : std::uint8_t {
  NaiveBayes,
  RandomForest,
  LinearSvm,
  GradientBoosting,
};

inline constexpr std::array<ModelKind, 4> kAllModelKinds = {
    ModelKind::NaiveBayes, ModelKind::RandomForest, ModelKind::LinearSvm,
    ModelKind::GradientBoosting};

std::string_view to_string(ModelKind kind);   // "naive_bayes", ...
std::string_view short_name(ModelKind kind);  // "NB", "RF", "SVM", "GB"
ModelKind model_kind_from_string(std::string_view name);

// Hyperparameters with their defaults:
//   naive_bayes        alpha=1
//   random_forest      n_trees=100 min_samples_split=2 max_depth=0 (unbounded)
//                      bootstrap=1
//   linear_svm         lambda=1e-4 epochs=50
//   gradient_boosting  stages=100 learning_rate=0.1 max_depth=2
//                      min_samples_split=2
class ModelSpec {
 public:
  /// Rejects names the kind does not know and out-of-range values.
  explicit ModelSpec(ModelKind kind, std::map<std::string, double> overrides = {},
                     std::uint64_t seed = 0);

  ModelKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  double get(const std::string& name) const { return values_.at(name); }
  /// Every hyperparameter, defaults filled in.
  const std::map<std::string, double>& hyperparameters() const { return values_; }

 private:
  ModelKind kind_;
  std::map<std::string, double> values_;
  std::uint64_t seed_;
};

struct TrainingData {
  std::span<const SparseVector> X;
  std::span<const CoarseLabel> y;
  std::size_t n_features = 0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> value;  // class distribution, or one regression value

  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  const TreeNode& leaf_for(const SparseVector& x) const;
  bool operator==(const DecisionTree&) const = default;
};

struct NaiveBayesParams {
  std::vector<double> log_prior;                    // per class
  std::vector<std::vector<double>> log_likelihood;  // per class, per feature
};

struct ForestParams {
  std::vector<DecisionTree> trees;
};

struct SvmParams {
  std::vector<std::vector<double>> weights;  // per class
  std::vector<double> bias;
};

struct BoostingParams {
  std::vector<double> initial;                   // per-class prior log-odds
  std::vector<std::vector<DecisionTree>> stages;  // per class
  std::vector<std::vector<double>> loss_trace;   // per class, stages + 1 entries
};

struct TrainedModel {
  ModelSpec spec{ModelKind::NaiveBayes};
  std::vector<CoarseLabel> classes;  // severity order
  std::size_t n_features = 0;
  std::variant<NaiveBayesParams, ForestParams, SvmParams, BoostingParams> params;

  ModelKind kind() const { return spec.kind(); }

  /// Per-class decision values: NB log joint, RF vote counts, SVM margins,
  /// GB log-odds.
  std::vector<double> decision_values(const SparseVector& x) const;
  CoarseLabel predict(const SparseVector& x) const;
  std::vector<CoarseLabel> predict_batch(std::span<const SparseVector> xs,
                                         Execution exec = Execution::Parallel) const;
  /// Naive Bayes only: normalized class posteriors.
  std::vector<double> posterior(const SparseVector& x) const;
};

TrainedModel train_naive_bayes(const TrainingData& data, const ModelSpec& spec);
TrainedModel train_random_forest(const TrainingData& data, const ModelSpec& spec,
                                 Execution exec = Execution::Parallel);
TrainedModel train_linear_svm(const TrainingData& data, const ModelSpec& spec,
                              Execution exec = Execution::Parallel);
TrainedModel train_gradient_boosting(const TrainingData& data, const ModelSpec& spec,
                                     Execution exec = Execution::Parallel);

/// Dispatches on spec.kind().
TrainedModel train_model(const TrainingData& data, const ModelSpec& spec,
                         Execution exec = Execution::Parallel);

inline constexpr int kModelFormatVersion = 1;

void save_model(const TrainedModel& model, const std::filesystem::path& path);
/// Throws Version for files newer than this build and Corrupt for anything
/// unparseable or incomplete.
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace depsev
