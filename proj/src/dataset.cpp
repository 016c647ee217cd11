#include "depsev/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "depsev/error.hpp"
#include "depsev/kernels.hpp"
#include "depsev/rng.hpp"
#include "depsev/text.hpp"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

DatasetSplits shuffle_split(std::span<const LabeledId> population,
                            const SplitSpec& spec, std::string language) {
  std::map<CoarseLabel, std::vector<std::string>> by_class;
  std::set<std::string> seen;
  for (const auto& p : population) {
    if (!seen.insert(p.doc_id).second) {
      throw Error(ErrorKind::Validation, "duplicate id in population: " + p.doc_id);
    }
    by_class[p.label].push_back(p.doc_id);
  }
  for (const auto& [label, c] : spec.counts) {
    const auto have = by_class.contains(label) ? by_class[label].size() : 0;
    if (c.validation + c.test > have) {
      throw Error(ErrorKind::Validation,
                  "split spec for class " + std::string(to_string(label)) +
                      " needs " + std::to_string(c.validation + c.test) +
                      " documents but only " + std::to_string(have) + " exist");
    }
  }

  DatasetSplits out;
  out.language = std::move(language);
  out.seed = spec.seed;
  for (auto& [label, ids] : by_class) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(rank(label))));
    rng.shuffle(std::span<std::string>(ids));
    ClassSplitCounts c;
    if (auto it = spec.counts.find(label); it != spec.counts.end()) c = it->second;
    std::size_t i = 0;
    for (; i < c.test; ++i) out.test.push_back({ids[i], label});
    for (; i < c.test + c.validation; ++i) out.validation.push_back({ids[i], label});
    for (; i < ids.size(); ++i) out.train.push_back({ids[i], label});
  }
  return out;
}

std::map<CoarseLabel, std::size_t> class_counts(std::span<const LabeledVector> v) {
  std::map<CoarseLabel, std::size_t> counts;
  for (const auto& x : v) ++counts[x.label];
  return counts;
}

std::vector<LabeledVector> smote_oversample(std::span<const LabeledVector> train,
                                            std::size_t k, std::uint64_t seed,
                                            const WarningSink& warn,
                                            Execution exec) {
  if (k == 0) throw Error(ErrorKind::Validation, "SMOTE needs k >= 1");
  if (train.empty()) {
    throw Error(ErrorKind::Validation, "SMOTE needs at least one training point");
  }
  std::map<CoarseLabel, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < train.size(); ++i) members[train[i].label].push_back(i);
  std::size_t target = 0;
  for (const auto& [label, idx] : members) target = std::max(target, idx.size());

  std::vector<LabeledVector> out(train.begin(), train.end());
  for (const auto& [label, idx] : members) {
    const std::size_t need = target - idx.size();
    if (need == 0) continue;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rank(label))));

    if (idx.size() == 1) {
      if (warn) {
        warn("class " + std::string(to_string(label)) +
             " has a single member; duplicating it");
      }
      for (std::size_t s = 0; s < need; ++s) {
        out.push_back({"", train[idx[0]].vector, label, true});
      }
      continue;
    }

    std::vector<SparseVector> points;
    points.reserve(idx.size());
    for (auto i : idx) points.push_back(train[i].vector);
    const std::size_t kk = std::min(k, idx.size() - 1);
    const auto neighbours = kernels::knn_within(points, kk, exec);

    for (std::size_t s = 0; s < need; ++s) {
      const auto base = static_cast<std::size_t>(rng.below(points.size()));
      const auto& nn = neighbours[base];
      const auto other = nn[static_cast<std::size_t>(rng.below(nn.size()))];
      const double u = rng.unit();
      out.push_back({"", interpolate(points[base], points[other], u), label, true});
    }
  }
  return out;
}

namespace {

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json counts_json(const std::vector<LabeledId>& ids) {
  json j = json::object();
  for (auto c : kAllCoarse) j[std::string(to_string(c))] = 0;
  for (const auto& x : ids) {
    auto& v = j[std::string(to_string(x.label))];
    v = v.get<std::size_t>() + 1;
  }
  return j;
}

}  // namespace

void export_dataset(const DatasetSplits& splits,
                    const std::map<std::string, CleanDocument>& docs,
                    const std::map<std::string, CoarseLabel>& labels,
                    const std::filesystem::path& dir,
                    std::optional<std::size_t> smote_k) {
  auto render = [&](const std::vector<LabeledId>& ids) {
    std::vector<std::string> lines;
    for (const auto& x : ids) {
      auto d = docs.find(x.doc_id);
      auto l = labels.find(x.doc_id);
      if (d == docs.end() || l == labels.end()) {
        throw Error(ErrorKind::NotFound,
                    "export: id '" + x.doc_id + "' has no document or fused label");
      }
      json j = {{"id", x.doc_id},
                {"language", d->second.language},
                {"text", d->second.text},
                {"label", to_string(l->second)}};
      lines.push_back(j.dump());
    }
    return lines;
  };
  const auto train = render(splits.train);
  const auto val = render(splits.validation);
  const auto test = render(splits.test);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string());
  write_lines(dir / "train.jsonl", train);
  write_lines(dir / "validation.jsonl", val);
  write_lines(dir / "test.jsonl", test);

  json m = {{"language", splits.language},
            {"seed", splits.seed},
            {"counts",
             {{"train", counts_json(splits.train)},
              {"validation", counts_json(splits.validation)},
              {"test", counts_json(splits.test)}}},
            {"sizes",
             {{"train", splits.train.size()},
              {"validation", splits.validation.size()},
              {"test", splits.test.size()}}}};
  m["smote_k"] = smote_k ? json(*smote_k) : json(nullptr);
  write_lines(dir / "manifest.json", {m.dump(2)});
}

std::vector<DatasetRecord> read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<DatasetRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::Parse, "bad dataset line in " + path.string());
    try {
      DatasetRecord r;
      r.doc.id = j.at("id").get<std::string>();
      r.doc.language = j.at("language").get<std::string>();
      r.doc.text = j.at("text").get<std::string>();
      r.doc.token_count = text::split_whitespace(r.doc.text).size();
      r.label = coarse_from_string(j.at("label").get<std::string>());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("dataset record: ") + e.what());
    }
  }
  return out;
}

void write_vectors(const std::filesystem::path& path,
                   std::span<const LabeledVector> vectors) {
  std::vector<std::string> lines;
  for (const auto& v : vectors) {
    json vec = json::array();
    for (const auto& [i, w] : v.vector.entries()) vec.push_back({i, w});
    json j = {{"doc_id", v.doc_id},
              {"label", to_string(v.label)},
              {"synthetic", v.synthetic},
              {"vector", vec}};
    lines.push_back(j.dump());
  }
  write_lines(path, lines);
}

std::vector<LabeledVector> read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<LabeledVector> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::Parse, "bad vector line in " + path.string());
    try {
      LabeledVector v;
      v.doc_id = j.at("doc_id").get<std::string>();
      v.label = coarse_from_string(j.at("label").get<std::string>());
      v.synthetic = j.at("synthetic").get<bool>();
      std::vector<SparseVector::Entry> e;
      for (const auto& p : j.at("vector")) {
        e.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<double>());
      }
      v.vector = SparseVector::from_sorted(std::move(e));
      out.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("vector record: ") + e.what());
    }
  }
  return out;
}

}  // namespace depsev
