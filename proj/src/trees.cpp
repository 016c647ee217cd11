#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <tuple>

#include "depsev/error.hpp"
#include "depsev/models.hpp"
#include "depsev/rng.hpp"
#include "model_internal.hpp"

namespace depsev {

const TreeNode& DecisionTree::leaf_for(const SparseVector& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(
        x.at(static_cast<std::uint32_t>(n.feature)) <= n.threshold ? n.left : n.right);
  }
  return nodes[i];
}

namespace {

struct Split {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child impurity, lower is better
};

// The node's nonzero entries grouped by feature. Features absent here are
// zero for every sample in the node and cannot split it. Columns are sorted
// on first access since a forest node only looks at a few of them.
class NodeColumns {
 public:
  NodeColumns(std::span<const SparseVector> X, std::span<const std::size_t> samples,
              std::size_t n_features) {
    thread_local std::vector<std::size_t> count;
    if (count.size() < n_features) count.resize(n_features, 0);
    for (auto s : samples) {
      for (const auto& [j, w] : X[s].entries()) {
        if (count[j]++ == 0) features_.push_back(j);
      }
    }
    std::sort(features_.begin(), features_.end());
    offsets_.resize(features_.size() + 1, 0);
    for (std::size_t f = 0; f < features_.size(); ++f) {
      offsets_[f + 1] = offsets_[f] + count[features_[f]];
      count[features_[f]] = offsets_[f];  // becomes the write cursor
    }
    entries_.resize(offsets_.back());
    for (auto s : samples) {
      for (const auto& [j, w] : X[s].entries()) entries_[count[j]++] = {w, s};
    }
    for (auto j : features_) count[j] = 0;
    sorted_.assign(features_.size(), false);
  }

  std::size_t size() const { return features_.size(); }
  std::uint32_t feature(std::size_t f) const { return features_[f]; }

  /// (value, sample) pairs in ascending order.
  std::span<const std::pair<double, std::size_t>> column(std::size_t f) {
    auto first = entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[f]);
    auto last = entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[f + 1]);
    if (!sorted_[f]) {
      std::sort(first, last);
      sorted_[f] = true;
    }
    return std::span(entries_).subspan(offsets_[f], offsets_[f + 1] - offsets_[f]);
  }

 private:
  std::vector<std::uint32_t> features_;
  std::vector<std::size_t> offsets_;
  std::vector<std::pair<double, std::size_t>> entries_;
  std::vector<bool> sorted_;
};

// Walks a column in ascending value order with the implicit zeros folded in
// as one block at 0. `add(sample)` moves one explicit entry to the left side,
// `add_zeros()` the whole zero block, and `at_boundary(threshold)` runs
// between each pair of distinct consecutive values.
template <typename Add, typename AddZeros, typename AtBoundary>
void scan_column(std::span<const std::pair<double, std::size_t>> column, bool has_zeros,
                 Add&& add, AddZeros&& add_zeros, AtBoundary&& at_boundary) {
  bool started = false;
  double prev = 0.0;
  auto step_to = [&](double v) {
    if (started && v != prev) at_boundary(0.5 * (prev + v));
    started = true;
    prev = v;
  };
  bool zeros_done = !has_zeros;
  for (const auto& [v, s] : column) {
    if (!zeros_done && v > 0.0) {
      step_to(0.0);
      add_zeros();
      zeros_done = true;
    }
    step_to(v);
    add(s);
  }
  if (!zeros_done) {
    step_to(0.0);
    add_zeros();
  }
}

double gini(std::span<const double> counts, double n) {
  if (n <= 0.0) return 0.0;
  double s = 1.0;
  for (double c : counts) s -= (c / n) * (c / n);
  return s;
}

// `totals` holds the node's class counts over `n` samples.
std::optional<Split> best_gini_split(std::span<const std::pair<double, std::size_t>> column,
                                     std::span<const int> y, std::span<const double> totals,
                                     std::size_t n_samples, std::uint32_t feature) {
  const std::size_t k = totals.size();
  std::vector<double> zeros(totals.begin(), totals.end());
  for (const auto& [v, s] : column) zeros[static_cast<std::size_t>(y[s])] -= 1.0;
  std::vector<double> left(k, 0.0), right(totals.begin(), totals.end());
  const double n = static_cast<double>(n_samples);
  double nl = 0.0;
  std::optional<Split> best;
  scan_column(
      column, column.size() < n_samples,
      [&](std::size_t s) {
        left[static_cast<std::size_t>(y[s])] += 1.0;
        right[static_cast<std::size_t>(y[s])] -= 1.0;
        nl += 1.0;
      },
      [&] {
        for (std::size_t c = 0; c < k; ++c) {
          left[c] += zeros[c];
          right[c] -= zeros[c];
        }
        nl += static_cast<double>(n_samples - column.size());
      },
      [&](double threshold) {
        const double nr = n - nl;
        const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
        if (!best || imp < best->impurity) best = Split{feature, threshold, imp};
      });
  return best;
}

// `sum` and `sq` are the node's target sum and sum of squares.
std::optional<Split> best_mse_split(std::span<const std::pair<double, std::size_t>> column,
                                    std::span<const double> target, double sum, double sq,
                                    std::size_t n_samples, std::uint32_t feature) {
  double zero_sum = sum, zero_sq = sq;
  for (const auto& [v, s] : column) {
    zero_sum -= target[s];
    zero_sq -= target[s] * target[s];
  }
  const double n = static_cast<double>(n_samples);
  double nl = 0.0, sum_l = 0.0, sq_l = 0.0;
  std::optional<Split> best;
  scan_column(
      column, column.size() < n_samples,
      [&](std::size_t s) {
        sum_l += target[s];
        sq_l += target[s] * target[s];
        nl += 1.0;
      },
      [&] {
        sum_l += zero_sum;
        sq_l += zero_sq;
        nl += static_cast<double>(n_samples - column.size());
      },
      [&](double threshold) {
        const double nr = n - nl;
        const double sse_l = sq_l - sum_l * sum_l / nl;
        const double sum_r = sum - sum_l;
        const double sse_r = (sq - sq_l) - sum_r * sum_r / nr;
        const double imp = (sse_l + sse_r) / n;
        if (!best || imp < best->impurity) best = Split{feature, threshold, imp};
      });
  return best;
}

struct GrowLimits {
  std::size_t min_samples_split = 2;
  std::size_t max_depth = 0;  // 0 = unbounded
};

// Grows a tree depth-first. `find_split` returns the chosen split for a node
// (or nothing), `make_leaf` the leaf payload, `is_pure` stops growth early.
template <typename FindSplit, typename MakeLeaf, typename IsPure>
DecisionTree grow(std::span<const SparseVector> X, std::vector<std::size_t> root,
                  const GrowLimits& limits, FindSplit&& find_split,
                  MakeLeaf&& make_leaf, IsPure&& is_pure) {
  struct Pending {
    std::size_t node;
    std::vector<std::size_t> samples;
    std::size_t depth;
  };
  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, std::move(root), 0});
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    std::optional<Split> split;
    const bool depth_ok = limits.max_depth == 0 || p.depth < limits.max_depth;
    if (depth_ok && p.samples.size() >= limits.min_samples_split && !is_pure(p.samples)) {
      split = find_split(p.samples);
    }
    if (!split) {
      tree.nodes[p.node].value = make_leaf(p.samples);
      continue;
    }
    std::vector<std::size_t> left, right;
    for (auto s : p.samples) {
      (X[s].at(split->feature) <= split->threshold ? left : right).push_back(s);
    }
    const auto l = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[p.node];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = static_cast<std::int32_t>(l);
    node.right = static_cast<std::int32_t>(l + 1);
    // Right pushed first so the left subtree is laid out first.
    stack.push_back({l + 1, std::move(right), p.depth + 1});
    stack.push_back({l, std::move(left), p.depth + 1});
  }
  return tree;
}

DecisionTree grow_classification_tree(std::span<const SparseVector> X,
                                      std::size_t n_features, std::span<const int> y,
                                      std::size_t n_classes,
                                      std::vector<std::size_t> samples,
                                      std::size_t features_per_split,
                                      const GrowLimits& limits, Rng& rng) {
  auto find = [&](const std::vector<std::size_t>& node) -> std::optional<Split> {
    NodeColumns cols(X, node, n_features);
    std::vector<double> totals(n_classes, 0.0);
    for (auto s : node) totals[static_cast<std::size_t>(y[s])] += 1.0;
    std::vector<std::size_t> pool(cols.size());
    for (std::size_t f = 0; f < pool.size(); ++f) pool[f] = f;
    // Draw features without replacement until `features_per_split` of them
    // yield a valid split or the pool runs dry.
    std::optional<Split> best;
    std::size_t visited = 0;
    for (std::size_t i = 0; i < pool.size() && visited < features_per_split; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      auto s = best_gini_split(cols.column(pool[i]), y, totals, node.size(),
                               cols.feature(pool[i]));
      if (!s) continue;
      ++visited;
      if (!best || s->impurity < best->impurity) best = s;
    }
    return best;
  };
  auto leaf = [&](const std::vector<std::size_t>& node) {
    std::vector<double> dist(n_classes, 0.0);
    for (auto s : node) dist[static_cast<std::size_t>(y[s])] += 1.0;
    for (double& v : dist) v /= static_cast<double>(node.size());
    return dist;
  };
  auto pure = [&](const std::vector<std::size_t>& node) {
    return std::all_of(node.begin(), node.end(),
                       [&](std::size_t s) { return y[s] == y[node.front()]; });
  };
  return grow(X, std::move(samples), limits, find, leaf, pure);
}

double logistic_loss(double f, double y) {
  // log(1 + e^f) - y f, evaluated without overflow.
  const double softplus = f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
  return softplus - y * f;
}

double sigmoid(double f) {
  return f >= 0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

}  // namespace

TrainedModel train_random_forest(const TrainingData& data, const ModelSpec& spec,
                                 Execution exec) {
  if (spec.kind() != ModelKind::RandomForest) {
    throw Error(ErrorKind::Validation, "spec is not for random_forest");
  }
  const auto prep = detail::prepare(data);
  const auto n_trees = static_cast<std::size_t>(spec.get("n_trees"));
  const GrowLimits limits{static_cast<std::size_t>(spec.get("min_samples_split")),
                          static_cast<std::size_t>(spec.get("max_depth"))};
  const bool bootstrap = spec.get("bootstrap") != 0.0;
  const std::size_t per_split = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::floor(std::sqrt(static_cast<double>(data.n_features)))));
  const std::size_t n = data.X.size();

  ForestParams p;
  p.trees.resize(n_trees);
  for_each_index(n_trees, exec, [&](std::size_t t) {
    Rng rng(mix_seed(spec.seed(), t));
    std::vector<std::size_t> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
      samples[i] = bootstrap ? static_cast<std::size_t>(rng.below(n)) : i;
    }
    p.trees[t] = grow_classification_tree(data.X, data.n_features, prep.y,
                                          prep.classes.size(),
                                          std::move(samples), per_split, limits, rng);
  });
  return {spec, prep.classes, data.n_features, std::move(p)};
}

TrainedModel train_gradient_boosting(const TrainingData& data, const ModelSpec& spec,
                                     Execution exec) {
  if (spec.kind() != ModelKind::GradientBoosting) {
    throw Error(ErrorKind::Validation, "spec is not for gradient_boosting");
  }
  const auto prep = detail::prepare(data);
  const std::size_t k = prep.classes.size();
  const auto stages = static_cast<std::size_t>(spec.get("stages"));
  const double lr = spec.get("learning_rate");
  const GrowLimits limits{static_cast<std::size_t>(spec.get("min_samples_split")),
                          static_cast<std::size_t>(spec.get("max_depth"))};
  const std::size_t n = data.X.size();
  constexpr double kClip = 1e-12;

  BoostingParams p;
  p.initial.resize(k);
  p.stages.resize(k);
  p.loss_trace.resize(k);
  for_each_index(k, exec, [&](std::size_t c) {
    std::vector<double> target(n);
    double pos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      target[i] = prep.y[i] == static_cast<int>(c) ? 1.0 : 0.0;
      pos += target[i];
    }
    const double prior = std::clamp(pos / static_cast<double>(n), kClip, 1.0 - kClip);
    p.initial[c] = std::log(prior / (1.0 - prior));
    std::vector<double> f(n, p.initial[c]);

    auto mean_loss = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += logistic_loss(f[i], target[i]);
      return s / static_cast<double>(n);
    };
    p.loss_trace[c].push_back(mean_loss());

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    std::vector<double> residual(n);
    for (std::size_t m = 0; m < stages; ++m) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = target[i] - sigmoid(f[i]);

      auto find = [&](const std::vector<std::size_t>& node) -> std::optional<Split> {
        NodeColumns cols(data.X, node, data.n_features);
        double sum = 0.0, sq = 0.0;
        for (auto i : node) {
          sum += residual[i];
          sq += residual[i] * residual[i];
        }
        std::optional<Split> best;
        for (std::size_t f = 0; f < cols.size(); ++f) {
          auto s = best_mse_split(cols.column(f), residual, sum, sq, node.size(),
                                  cols.feature(f));
          if (s && (!best || s->impurity < best->impurity)) best = s;
        }
        return best;
      };
      // Newton step for the leaf, shrunk by the learning rate and halved
      // until it does not increase the leaf's loss.
      auto leaf = [&](const std::vector<std::size_t>& node) {
        double num = 0.0, den = 0.0;
        for (auto i : node) {
          const double pr = sigmoid(f[i]);
          num += residual[i];
          den += pr * (1.0 - pr);
        }
        double step = den > 1e-12 ? lr * num / den : 0.0;
        double before = 0.0;
        for (auto i : node) before += logistic_loss(f[i], target[i]);
        for (int halving = 0; halving < 60 && step != 0.0; ++halving) {
          double after = 0.0;
          for (auto i : node) after += logistic_loss(f[i] + step, target[i]);
          if (after <= before) break;
          step *= 0.5;
          if (halving == 59) step = 0.0;
        }
        return std::vector<double>{step};
      };
      auto pure = [](const std::vector<std::size_t>&) { return false; };
      auto tree = grow(data.X, all, limits, find, leaf, pure);
      for (std::size_t i = 0; i < n; ++i) f[i] += tree.leaf_for(data.X[i]).value[0];
      p.stages[c].push_back(std::move(tree));
      p.loss_trace[c].push_back(mean_loss());
    }
  });
  return {spec, prep.classes, data.n_features, std::move(p)};
}

}  // namespace depsev
