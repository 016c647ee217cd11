#include "depsev/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "depsev/error.hpp"
#include "depsev/rng.hpp"
#include "model_internal.hpp"

namespace depsev {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::NaiveBayes: return "naive_bayes";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::LinearSvm: return "linear_svm";
    case ModelKind::GradientBoosting: return "gradient_boosting";
  }
  return "?";
}

std::string_view short_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::NaiveBayes: return "NB";
    case ModelKind::RandomForest: return "RF";
    case ModelKind::LinearSvm: return "SVM";
    case ModelKind::GradientBoosting: return "GB";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (auto k : kAllModelKinds) {
    if (name == to_string(k) || name == short_name(k)) return k;
  }
  throw Error(ErrorKind::Validation, "unknown model kind '" + std::string(name) + "'");
}

namespace {

struct ParamRule {
  double fallback;
  double min;
  bool integral;
  bool exclusive_min;
};

const std::map<std::string, ParamRule>& rules_for(ModelKind kind) {
  static const std::map<std::string, ParamRule> nb = {
      {"alpha", {1.0, 0.0, false, true}}};
  static const std::map<std::string, ParamRule> rf = {
      {"n_trees", {100, 1, true, false}},
      {"min_samples_split", {2, 2, true, false}},
      {"max_depth", {0, 0, true, false}},
      {"bootstrap", {1, 0, true, false}}};
  static const std::map<std::string, ParamRule> svm = {
      {"lambda", {1e-4, 0.0, false, true}},
      {"epochs", {50, 1, true, false}}};
  static const std::map<std::string, ParamRule> gb = {
      {"stages", {100, 0, true, false}},
      {"learning_rate", {0.1, 0.0, false, true}},
      {"max_depth", {2, 1, true, false}},
      {"min_samples_split", {2, 2, true, false}}};
  switch (kind) {
    case ModelKind::NaiveBayes: return nb;
    case ModelKind::RandomForest: return rf;
    case ModelKind::LinearSvm: return svm;
    case ModelKind::GradientBoosting: return gb;
  }
  return nb;
}

}  // namespace

ModelSpec::ModelSpec(ModelKind kind, std::map<std::string, double> overrides,
                     std::uint64_t seed)
    : kind_(kind), seed_(seed) {
  const auto& rules = rules_for(kind);
  for (const auto& [name, rule] : rules) values_[name] = rule.fallback;
  for (const auto& [name, value] : overrides) {
    auto it = rules.find(name);
    if (it == rules.end()) {
      throw Error(ErrorKind::Validation, "unknown hyperparameter '" + name +
                                             "' for " + std::string(to_string(kind)));
    }
    const auto& r = it->second;
    const bool below = r.exclusive_min ? !(value > r.min) : !(value >= r.min);
    if (!std::isfinite(value) || below || (r.integral && value != std::floor(value))) {
      throw Error(ErrorKind::Validation,
                  "invalid value for hyperparameter '" + name + "'");
    }
    if (name == "bootstrap" && value > 1) {
      throw Error(ErrorKind::Validation, "bootstrap must be 0 or 1");
    }
    values_[name] = value;
  }
}

namespace detail {

PreparedData prepare(const TrainingData& data) {
  if (data.X.size() != data.y.size()) {
    throw Error(ErrorKind::Validation,
                "dimension mismatch: " + std::to_string(data.X.size()) +
                    " vectors but " + std::to_string(data.y.size()) + " labels");
  }
  if (data.X.empty()) throw Error(ErrorKind::Validation, "no training data");
  for (const auto& x : data.X) {
    if (!x.empty() && x.entries().back().first >= data.n_features) {
      throw Error(ErrorKind::Validation,
                  "dimension mismatch: feature index " +
                      std::to_string(x.entries().back().first) +
                      " outside n_features=" + std::to_string(data.n_features));
    }
  }
  PreparedData p;
  std::set<CoarseLabel> present(data.y.begin(), data.y.end());
  p.classes.assign(present.begin(), present.end());
  for (auto label : data.y) {
    p.y.push_back(static_cast<int>(
        std::lower_bound(p.classes.begin(), p.classes.end(), label) -
        p.classes.begin()));
  }
  return p;
}

std::size_t argmax_last(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] >= v[best]) best = i;
  }
  return best;
}

std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace detail

TrainedModel train_naive_bayes(const TrainingData& data, const ModelSpec& spec) {
  if (spec.kind() != ModelKind::NaiveBayes) {
    throw Error(ErrorKind::Validation, "spec is not for naive_bayes");
  }
  const auto prep = detail::prepare(data);
  const std::size_t k = prep.classes.size();
  const std::size_t d = data.n_features;
  const double alpha = spec.get("alpha");

  std::vector<std::vector<double>> mass(k, std::vector<double>(d, 0.0));
  std::vector<double> total(k, 0.0);
  std::vector<std::size_t> docs(k, 0);
  for (std::size_t i = 0; i < data.X.size(); ++i) {
    const auto c = static_cast<std::size_t>(prep.y[i]);
    ++docs[c];
    for (const auto& [j, w] : data.X[i].entries()) {
      if (w < 0.0) {
        throw Error(ErrorKind::Validation,
                    "naive Bayes needs non-negative feature weights");
      }
      mass[c][j] += w;
      total[c] += w;
    }
  }

  NaiveBayesParams p;
  const double n = static_cast<double>(data.X.size());
  for (std::size_t c = 0; c < k; ++c) {
    p.log_prior.push_back(std::log(static_cast<double>(docs[c]) / n));
    const double denom = std::log(total[c] + alpha * static_cast<double>(d));
    std::vector<double> ll(d);
    for (std::size_t j = 0; j < d; ++j) ll[j] = std::log(mass[c][j] + alpha) - denom;
    p.log_likelihood.push_back(std::move(ll));
  }
  return {spec, prep.classes, d, std::move(p)};
}

TrainedModel train_linear_svm(const TrainingData& data, const ModelSpec& spec,
                              Execution exec) {
  if (spec.kind() != ModelKind::LinearSvm) {
    throw Error(ErrorKind::Validation, "spec is not for linear_svm");
  }
  const auto prep = detail::prepare(data);
  const std::size_t k = prep.classes.size();
  const std::size_t d = data.n_features;
  const double lambda = spec.get("lambda");
  const auto epochs = static_cast<std::size_t>(spec.get("epochs"));
  const std::size_t n = data.X.size();

  SvmParams p;
  p.weights.assign(k, std::vector<double>(d, 0.0));
  p.bias.assign(k, 0.0);

  // Pegasos on the hinge loss with the bias folded in as a constant feature.
  // w is kept as scale * v so the per-step shrink costs O(1).
  for_each_index(k, exec, [&](std::size_t c) {
    Rng rng(mix_seed(spec.seed(), c));
    std::vector<double> v(d, 0.0);
    double vb = 0.0;
    double scale = 1.0;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::uint64_t t = 0;
    for (std::size_t e = 0; e < epochs; ++e) {
      rng.shuffle(std::span<std::size_t>(order));
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double target = prep.y[i] == static_cast<int>(c) ? 1.0 : -1.0;
        const double margin = target * scale * (data.X[i].dot(v) + vb);
        scale *= 1.0 - eta * lambda;
        if (scale == 0.0) {
          std::fill(v.begin(), v.end(), 0.0);
          vb = 0.0;
          scale = 1.0;
        }
        if (margin < 1.0) {
          const double step = eta * target / scale;
          for (const auto& [j, w] : data.X[i].entries()) v[j] += step * w;
          vb += step;
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) p.weights[c][j] = scale * v[j];
    p.bias[c] = scale * vb;
  });
  return {spec, prep.classes, d, std::move(p)};
}

TrainedModel train_model(const TrainingData& data, const ModelSpec& spec,
                         Execution exec) {
  switch (spec.kind()) {
    case ModelKind::NaiveBayes: return train_naive_bayes(data, spec);
    case ModelKind::RandomForest: return train_random_forest(data, spec, exec);
    case ModelKind::LinearSvm: return train_linear_svm(data, spec, exec);
    case ModelKind::GradientBoosting: return train_gradient_boosting(data, spec, exec);
  }
  throw Error(ErrorKind::Validation, "unknown model kind");
}

std::vector<double> TrainedModel::decision_values(const SparseVector& x) const {
  const std::size_t k = classes.size();
  std::vector<double> out(k, 0.0);
  if (const auto* nb = std::get_if<NaiveBayesParams>(&params)) {
    for (std::size_t c = 0; c < k; ++c) {
      out[c] = nb->log_prior[c] + x.dot(nb->log_likelihood[c]);
    }
  } else if (const auto* rf = std::get_if<ForestParams>(&params)) {
    for (const auto& tree : rf->trees) {
      const auto& leaf = tree.leaf_for(x);
      out[detail::argmax_first(leaf.value)] += 1.0;
    }
  } else if (const auto* svm = std::get_if<SvmParams>(&params)) {
    for (std::size_t c = 0; c < k; ++c) out[c] = x.dot(svm->weights[c]) + svm->bias[c];
  } else if (const auto* gb = std::get_if<BoostingParams>(&params)) {
    for (std::size_t c = 0; c < k; ++c) {
      double f = gb->initial[c];
      for (const auto& tree : gb->stages[c]) f += tree.leaf_for(x).value[0];
      out[c] = f;
    }
  }
  return out;
}

CoarseLabel TrainedModel::predict(const SparseVector& x) const {
  const auto scores = decision_values(x);
  // Forest vote ties go to the earlier class; margin ties to the more
  // severe one.
  const std::size_t best = kind() == ModelKind::RandomForest
                               ? detail::argmax_first(scores)
                               : detail::argmax_last(scores);
  return classes[best];
}

std::vector<CoarseLabel> TrainedModel::predict_batch(std::span<const SparseVector> xs,
                                                     Execution exec) const {
  std::vector<CoarseLabel> out(xs.size());
  for_each_index(xs.size(), exec, [&](std::size_t i) { out[i] = predict(xs[i]); });
  return out;
}

std::vector<double> TrainedModel::posterior(const SparseVector& x) const {
  if (kind() != ModelKind::NaiveBayes) {
    throw Error(ErrorKind::Validation, "posterior is only defined for naive Bayes");
  }
  auto joint = decision_values(x);
  const double top = *std::max_element(joint.begin(), joint.end());
  double z = 0.0;
  for (double v : joint) z += std::exp(v - top);
  const double log_z = top + std::log(z);
  for (double& v : joint) v = std::exp(v - log_z);
  return joint;
}

}  // namespace depsev
