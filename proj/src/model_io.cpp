#include <fstream>
#include <sstream>

#include "depsev/error.hpp"
#include "depsev/models.hpp"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

namespace {

json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  }
  return nodes;
}

DecisionTree tree_from(const json& j) {
  DecisionTree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<std::int32_t>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<std::int32_t>();
    node.right = n.at(3).get<std::int32_t>();
    node.value = n.at(4).get<std::vector<double>>();
    t.nodes.push_back(std::move(node));
  }
  const auto size = static_cast<std::int32_t>(t.nodes.size());
  if (size == 0) throw Error(ErrorKind::Corrupt, "empty decision tree");
  for (const auto& n : t.nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.left >= size || n.right <= 0 ||
                           n.right >= size)) {
      throw Error(ErrorKind::Corrupt, "decision tree child index out of range");
    }
  }
  return t;
}

json params_json(const TrainedModel& m) {
  json p = json::object();
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NaiveBayesParams>) {
          p["log_prior"] = v.log_prior;
          p["log_likelihood"] = v.log_likelihood;
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          json trees = json::array();
          for (const auto& t : v.trees) trees.push_back(tree_json(t));
          p["trees"] = std::move(trees);
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          p["weights"] = v.weights;
          p["bias"] = v.bias;
        } else {
          p["initial"] = v.initial;
          p["loss_trace"] = v.loss_trace;
          json per_class = json::array();
          for (const auto& stages : v.stages) {
            json trees = json::array();
            for (const auto& t : stages) trees.push_back(tree_json(t));
            per_class.push_back(std::move(trees));
          }
          p["stages"] = std::move(per_class);
        }
      },
      m.params);
  return p;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  json classes = json::array();
  for (auto c : model.classes) classes.push_back(to_string(c));
  json j = {{"format", "depsev-model"},
            {"version", kModelFormatVersion},
            {"kind", to_string(model.kind())},
            {"classes", classes},
            {"hyperparameters", model.spec.hyperparameters()},
            {"seed", model.spec.seed()},
            {"n_features", model.n_features},
            {"params", params_json(model)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Corrupt, "model file " + path.string() + " is corrupt");
  }
  if (j.value("format", "") != "depsev-model") {
    throw Error(ErrorKind::Corrupt, "not a model file: " + path.string());
  }
  const int version = j.value("version", -1);
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::Version, "model file version " + std::to_string(version) +
                                        " is not supported (expected " +
                                        std::to_string(kModelFormatVersion) + ")");
  }
  try {
    const auto kind = model_kind_from_string(j.at("kind").get<std::string>());
    TrainedModel m{ModelSpec(kind,
                             j.at("hyperparameters").get<std::map<std::string, double>>(),
                             j.at("seed").get<std::uint64_t>()),
                   {},
                   j.at("n_features").get<std::size_t>(),
                   NaiveBayesParams{}};
    for (const auto& c : j.at("classes")) {
      m.classes.push_back(coarse_from_string(c.get<std::string>()));
    }
    if (m.classes.empty()) throw Error(ErrorKind::Corrupt, "model has no classes");
    const std::size_t k = m.classes.size();
    const auto& p = j.at("params");
    switch (kind) {
      case ModelKind::NaiveBayes: {
        NaiveBayesParams nb;
        nb.log_prior = p.at("log_prior").get<std::vector<double>>();
        nb.log_likelihood = p.at("log_likelihood").get<std::vector<std::vector<double>>>();
        if (nb.log_prior.size() != k || nb.log_likelihood.size() != k) {
          throw Error(ErrorKind::Corrupt, "naive Bayes parameters truncated");
        }
        m.params = std::move(nb);
        break;
      }
      case ModelKind::RandomForest: {
        ForestParams rf;
        for (const auto& t : p.at("trees")) rf.trees.push_back(tree_from(t));
        if (rf.trees.empty()) throw Error(ErrorKind::Corrupt, "forest has no trees");
        m.params = std::move(rf);
        break;
      }
      case ModelKind::LinearSvm: {
        SvmParams svm;
        svm.weights = p.at("weights").get<std::vector<std::vector<double>>>();
        svm.bias = p.at("bias").get<std::vector<double>>();
        if (svm.weights.size() != k || svm.bias.size() != k) {
          throw Error(ErrorKind::Corrupt, "SVM parameters truncated");
        }
        m.params = std::move(svm);
        break;
      }
      case ModelKind::GradientBoosting: {
        BoostingParams gb;
        gb.initial = p.at("initial").get<std::vector<double>>();
        gb.loss_trace = p.at("loss_trace").get<std::vector<std::vector<double>>>();
        for (const auto& stages : p.at("stages")) {
          std::vector<DecisionTree> trees;
          for (const auto& t : stages) trees.push_back(tree_from(t));
          gb.stages.push_back(std::move(trees));
        }
        if (gb.initial.size() != k || gb.stages.size() != k) {
          throw Error(ErrorKind::Corrupt, "boosting parameters truncated");
        }
        m.params = std::move(gb);
        break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corrupt, std::string("model file corrupt: ") + e.what());
  }
}

}  // namespace depsev
