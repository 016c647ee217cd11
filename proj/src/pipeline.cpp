#include "depsev/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <unordered_set>

#include "depsev/annotation_store.hpp"
#include "depsev/bdi_lexicon.hpp"
#include "depsev/evaluation.hpp"
#include "depsev/features.hpp"
#include "depsev/hash.hpp"
#include "depsev/kernels.hpp"
#include "depsev/rng.hpp"
#include "depsev/zeroshot.hpp"

namespace depsev {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::optional<fs::path> optional_path(const json& j, const char* key,
                                      const fs::path& base) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return resolve(base, it->get<std::string>());
}

ClassSplitCounts split_counts_from(const json& j) {
  if (j.is_array() && j.size() == 2) {
    return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  }
  return {j.at("validation").get<std::size_t>(), j.at("test").get<std::size_t>()};
}

// Component seeds not given explicitly derive from the master seed.
enum SeedStream : std::uint64_t { kSmoteStream = 1, kSplitStream = 100, kModelStream = 200 };

}  // namespace

PipelineConfig parse_config(const json& j, const fs::path& base,
                            const ConfigOverrides& overrides) {
  PipelineConfig c;
  try {
    if (overrides.seed) {
      c.seed = *overrides.seed;
    } else if (j.contains("seed")) {
      c.seed = j.at("seed").get<std::uint64_t>();
    } else {
      throw Error(ErrorKind::Config, "config needs an explicit \"seed\"");
    }
    // --seed replaces every seed so a single flag reseeds the whole run.
    auto component_seed = [&](const json& obj, std::uint64_t stream) {
      if (!overrides.seed && obj.is_object() && obj.contains("seed")) {
        return obj.at("seed").get<std::uint64_t>();
      }
      return mix_seed(c.seed, stream);
    };

    c.corpus = resolve(base, j.at("corpus").get<std::string>());
    c.bands = optional_path(j, "bands", base);
    c.expert_labels = optional_path(j, "expert_labels", base);
    c.annotation_store = optional_path(j, "annotation_store", base);

    std::uint64_t lang_no = 0;
    for (const auto& [lang, lj] : j.at("languages").items()) {
      LanguageConfig lc;
      lc.stoplist = optional_path(lj, "stoplist", base);
      lc.questionnaire = resolve(base, lj.at("questionnaire").get<std::string>());
      const json split = lj.value("split", json::object());
      lc.split.seed = component_seed(split, kSplitStream + lang_no++);
      const json counts_json = split.value("counts", json::object());
      for (const auto& [label, counts] : counts_json.items()) {
        lc.split.counts[coarse_from_string(label)] = split_counts_from(counts);
      }
      c.languages.emplace(lang, std::move(lc));
    }

    const json zs = j.value("zeroshot", json::object());
    c.zeroshot.endpoint = zs.value("endpoint", "");
    c.zeroshot.token_env = zs.value("token_env", "ZEROSHOT_TOKEN");
    c.zeroshot.cache = optional_path(zs, "cache", base);
    c.zeroshot.max_attempts = zs.value("max_attempts", 4);
    c.zeroshot.initial_backoff_ms = zs.value("initial_backoff_ms", 100);
    c.zeroshot.max_backoff_ms = zs.value("max_backoff_ms", 2000);
    c.zeroshot.timeout_ms = zs.value("timeout_ms", 30000);
    if (const char* env = std::getenv("ZEROSHOT_ENDPOINT"); env && *env) {
      c.zeroshot.endpoint = env;
    }

    if (auto it = j.find("fusion_weights"); it != j.end() && !it->is_null()) {
      c.fusion_weights = {it->value("keyword", 1.0), it->value("zeroshot", 1.0),
                          it->value("expert", 1.0)};
    }
    if (auto it = j.find("merge_map"); it != j.end() && !it->is_null()) {
      auto mapping = MergeMap{}.mapping();
      for (const auto& [from, to] : it->items()) {
        mapping[static_cast<std::size_t>(rank(severity_from_string(from)))] =
            coarse_from_string(to.get<std::string>());
      }
      c.merge = MergeMap(mapping);
    }
    const json smote = j.value("smote", json::object());
    c.smote_k = smote.value("k", kDefaultSmoteNeighbors);
    c.smote_seed = component_seed(smote, kSmoteStream);

    if (auto it = j.find("models"); it != j.end()) {
      std::uint64_t m = 0;
      for (const auto& mj : *it) {
        c.models.emplace_back(
            model_kind_from_string(mj.at("kind").get<std::string>()),
            mj.value("hyperparameters", std::map<std::string, double>{}),
            component_seed(mj, kModelStream + m++));
      }
    } else {
      std::uint64_t m = 0;
      for (auto kind : kAllModelKinds) {
        c.models.emplace_back(kind, std::map<std::string, double>{},
                              mix_seed(c.seed, kModelStream + m++));
      }
    }

    c.output_dir = overrides.output_dir
                       ? *overrides.output_dir
                       : resolve(base, j.value("output_dir", std::string("out")));
    c.timestamp = j.value("timestamp", std::int64_t{0});
    c.blind_mode = j.value("blind_mode", true);
    c.port = j.value("port", 8080);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
  if (c.smote_k == 0) throw Error(ErrorKind::Config, "config: smote.k must be >= 1");
  return c;
}

PipelineConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Config, "config " + path.string() + " is not a JSON object");
  }
  return parse_config(j, fs::absolute(path).parent_path(), overrides);
}

json PipelineConfig::to_json() const {
  auto opt = [](const std::optional<fs::path>& p) {
    return p ? json(p->string()) : json(nullptr);
  };
  json langs = json::object();
  for (const auto& [lang, lc] : languages) {
    json counts = json::object();
    for (const auto& [label, sc] : lc.split.counts) {
      counts[std::string(to_string(label))] = {sc.validation, sc.test};
    }
    langs[lang] = {{"stoplist", opt(lc.stoplist)},
                   {"questionnaire", lc.questionnaire.string()},
                   {"split", {{"seed", lc.split.seed}, {"counts", counts}}}};
  }
  json merge_map = json::object();
  for (auto s : kAllSeverities) {
    merge_map[std::string(to_string(s))] = to_string(merge(s));
  }
  json model_list = json::array();
  for (const auto& m : models) {
    model_list.push_back({{"kind", to_string(m.kind())},
                          {"hyperparameters", m.hyperparameters()},
                          {"seed", m.seed()}});
  }
  return {{"seed", seed},
          {"corpus", corpus.string()},
          {"bands", opt(bands)},
          {"expert_labels", opt(expert_labels)},
          {"annotation_store", opt(annotation_store)},
          {"languages", langs},
          {"zeroshot",
           {{"endpoint", zeroshot.endpoint},
            {"token_env", zeroshot.token_env},
            {"cache", opt(zeroshot.cache)},
            {"max_attempts", zeroshot.max_attempts},
            {"initial_backoff_ms", zeroshot.initial_backoff_ms},
            {"max_backoff_ms", zeroshot.max_backoff_ms},
            {"timeout_ms", zeroshot.timeout_ms}}},
          {"fusion_weights",
           {{"keyword", fusion_weights.keyword},
            {"zeroshot", fusion_weights.zeroshot},
            {"expert", fusion_weights.expert}}},
          {"merge_map", merge_map},
          {"smote", {{"k", smote_k}, {"seed", smote_seed}}},
          {"models", model_list},
          {"output_dir", output_dir.string()},
          {"timestamp", timestamp},
          {"blind_mode", blind_mode},
          {"port", port}};
}

std::string config_hash(const PipelineConfig& config) {
  return hex64(fnv1a64(config.to_json().dump()));
}

json PipelineError::to_json() const {
  return {{"stage", stage_}, {"kind", depsev::to_string(kind())}, {"message", what()}};
}

std::map<std::string, ExpertAnnotation> effective_expert_labels(
    const std::vector<ExpertAnnotation>& annotations) {
  std::map<std::string, ExpertAnnotation> out;
  for (const auto& a : annotations) {
    auto [it, inserted] = out.try_emplace(a.doc_id, a);
    if (!inserted && a.submitted_at >= it->second.submitted_at) it->second = a;
  }
  return out;
}

std::vector<CleanDocument> load_clean_corpus(const PipelineConfig& config,
                                             const WarningSink& warn) {
  const auto posts = ingest_corpus(config.corpus);
  std::map<std::string, StopList> stops;
  for (const auto& [lang, lc] : config.languages) {
    stops.emplace(lang, load_stoplist(lang, lc.stoplist));
  }
  return preprocess_all(
      posts,
      [&](const std::string& lang) -> const StopList& {
        auto it = stops.find(lang);
        if (it == stops.end()) {
          throw Error(ErrorKind::Config, "language '" + lang + "' is not configured");
        }
        return it->second;
      },
      warn);
}

namespace {

template <typename F>
auto run_stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(name, e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    throw PipelineError(name, ErrorKind::Io, e.what());
  } catch (const std::exception& e) {
    throw PipelineError(name, ErrorKind::Validation, e.what());
  }
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  out << content;
}

json coarse_counts_json(const std::map<CoarseLabel, std::size_t>& counts) {
  json j = json::object();
  for (auto c : kAllCoarse) {
    auto it = counts.find(c);
    j[std::string(to_string(c))] = it == counts.end() ? 0 : it->second;
  }
  return j;
}

}  // namespace

namespace stages {

fs::path language_dir(const PipelineConfig& config, const std::string& lang) {
  return config.output_dir / lang;
}

std::vector<CleanDocument> ingest(const PipelineConfig& config, const RunOptions& options) {
  return run_stage("ingest", [&] {
    fs::create_directories(config.output_dir);
    auto docs = load_clean_corpus(config, options.warn);
    write_clean_documents(config.output_dir / "clean.jsonl", docs);
    return docs;
  });
}

std::vector<CleanDocument> load_ingested(const PipelineConfig& config) {
  return run_stage("ingest",
                   [&] { return read_clean_documents(config.output_dir / "clean.jsonl"); });
}

std::map<std::string, BdiLexicon> lexicons(const PipelineConfig& config,
                                           const RunOptions& options) {
  return run_stage("lexicon", [&] {
    fs::create_directories(config.output_dir);
    std::map<std::string, BdiLexicon> out;
    for (const auto& [lang, lc] : config.languages) {
      auto lex = build_lexicon(load_questionnaire(lc.questionnaire),
                               load_stoplist(lang, lc.stoplist), options.warn);
      lex.export_tsv(config.output_dir / ("lexicon_" + lang + ".tsv"));
      out.emplace(lang, std::move(lex));
    }
    return out;
  });
}

std::map<std::string, ExpertAnnotation> expert_labels(const PipelineConfig& config,
                                                      std::span<const CleanDocument> docs) {
  return run_stage("expert", [&] {
    std::unordered_set<std::string> ids;
    for (const auto& d : docs) ids.insert(d.id);
    std::vector<ExpertAnnotation> all;
    if (config.annotation_store) {
      AnnotationStore store(*config.annotation_store, ids);
      all = store.effective_all();
    }
    if (config.expert_labels) {
      auto csv = read_expert_labels(*config.expert_labels);
      all.insert(all.end(), csv.begin(), csv.end());
    }
    for (const auto& a : all) {
      if (!ids.contains(a.doc_id)) {
        throw Error(ErrorKind::NotFound,
                    "expert label for unknown document '" + a.doc_id + "'");
      }
    }
    return effective_expert_labels(all);
  });
}

std::vector<std::string> pending_ids(std::span<const CleanDocument> docs,
                                     const std::map<std::string, ExpertAnnotation>& expert) {
  std::vector<std::string> out;
  for (const auto& d : docs) {
    if (!expert.contains(d.id)) out.push_back(d.id);
  }
  return out;
}

std::vector<LabelVote> label_keyword(const PipelineConfig& config,
                                     std::span<const CleanDocument> docs,
                                     const std::map<std::string, BdiLexicon>& lexicons,
                                     const RunOptions& options) {
  return run_stage("label-keyword", [&] {
    const SeverityBands bands =
        config.bands ? SeverityBands::load(*config.bands) : SeverityBands::standard();
    for (const auto& d : docs) {
      if (!lexicons.contains(d.language)) {
        throw Error(ErrorKind::Config, "no lexicon for language '" + d.language + "'");
      }
    }
    std::vector<LabelVote> votes(docs.size());
    for_each_index(docs.size(), options.exec, [&](std::size_t i) {
      votes[i] = keyword_label(docs[i], lexicons.at(docs[i].language), bands, config.timestamp);
    });
    fs::create_directories(config.output_dir);
    write_votes(config.output_dir / "votes_keyword.jsonl", votes);
    return votes;
  });
}

std::vector<LabelVote> label_zeroshot(const PipelineConfig& config,
                                      std::span<const CleanDocument> docs) {
  return run_stage("label-zeroshot", [&] {
    if (config.zeroshot.endpoint.empty()) {
      throw Error(ErrorKind::Config,
                  "no zero-shot endpoint configured (set zeroshot.endpoint or "
                  "ZEROSHOT_ENDPOINT)");
    }
    const char* token = std::getenv(config.zeroshot.token_env.c_str());
    ZeroShotClient client(
        config.zeroshot.endpoint,
        token ? std::optional<std::string>(token) : std::nullopt,
        RetryPolicy{config.zeroshot.max_attempts,
                    std::chrono::milliseconds(config.zeroshot.initial_backoff_ms),
                    std::chrono::milliseconds(config.zeroshot.max_backoff_ms)},
        std::chrono::milliseconds(config.zeroshot.timeout_ms));
    auto cache = config.zeroshot.cache ? std::make_unique<ZeroShotCache>(*config.zeroshot.cache)
                                       : std::make_unique<ZeroShotCache>();
    std::vector<LabelVote> votes;
    votes.reserve(docs.size());
    for (const auto& d : docs) {
      votes.push_back(zeroshot_label(d, client, kAllSeverities, cache.get(), config.timestamp));
    }
    fs::create_directories(config.output_dir);
    write_votes(config.output_dir / "votes_zeroshot.jsonl", votes);
    return votes;
  });
}

std::vector<FusedLabel> fuse(const PipelineConfig& config, std::span<const CleanDocument> docs,
                             std::span<const LabelVote> keyword,
                             std::span<const LabelVote> zeroshot,
                             const std::map<std::string, ExpertAnnotation>& expert) {
  return run_stage("fuse", [&] {
    auto index = [](std::span<const LabelVote> votes, const char* what) {
      std::map<std::string, const LabelVote*> m;
      for (const auto& v : votes) {
        if (!m.emplace(v.doc_id, &v).second) {
          throw Error(ErrorKind::Validation,
                      std::string("duplicate ") + what + " vote for '" + v.doc_id + "'");
        }
      }
      return m;
    };
    const auto kw = index(keyword, "keyword");
    const auto zs = index(zeroshot, "zero-shot");
    std::vector<FusedLabel> fused;
    fused.reserve(docs.size());
    for (const auto& d : docs) {
      auto k = kw.find(d.id);
      auto z = zs.find(d.id);
      auto e = expert.find(d.id);
      if (k == kw.end() || z == zs.end() || e == expert.end()) {
        throw Error(ErrorKind::Validation, "document '" + d.id + "' lacks a " +
                                               (k == kw.end()   ? "keyword"
                                                : z == zs.end() ? "zero-shot"
                                                                : "expert") +
                                               " vote");
      }
      const LabelVote ex{d.id, VoteSource::Expert, e->second.label, std::nullopt,
                         e->second.submitted_at};
      fused.push_back(depsev::fuse(*k->second, *z->second, ex, config.fusion_weights));
    }
    fs::create_directories(config.output_dir);
    std::ofstream out(config.output_dir / "fused.jsonl", std::ios::binary);
    for (const auto& f : fused) out << to_json_line(f, config.merge) << '\n';
    if (!out) throw Error(ErrorKind::Io, "cannot write fused.jsonl");
    return fused;
  });
}

std::vector<FusedLabel> load_fused(const PipelineConfig& config) {
  return run_stage("fuse", [&] {
    const auto path = config.output_dir / "fused.jsonl";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::vector<FusedLabel> out;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) out.push_back(fused_from_json(line));
    }
    return out;
  });
}

std::map<std::string, CoarseLabel> coarse_labels(std::span<const FusedLabel> fused,
                                                 const MergeMap& merge) {
  std::map<std::string, CoarseLabel> out;
  for (const auto& f : fused) out[f.doc_id] = merge_rare(f.label, merge);
  return out;
}

std::map<std::string, DatasetSplits> split(const PipelineConfig& config,
                                           std::span<const CleanDocument> docs,
                                           const std::map<std::string, CoarseLabel>& labels) {
  return run_stage("split", [&] {
    std::map<std::string, CleanDocument> by_id;
    for (const auto& d : docs) by_id.emplace(d.id, d);
    std::map<std::string, DatasetSplits> out;
    for (const auto& [lang, lc] : config.languages) {
      std::vector<LabeledId> population;
      for (const auto& d : docs) {
        if (d.language != lang) continue;
        auto it = labels.find(d.id);
        if (it == labels.end()) {
          throw Error(ErrorKind::Validation, "document '" + d.id + "' has no fused label");
        }
        population.push_back({d.id, it->second});
      }
      if (population.empty()) continue;
      auto s = shuffle_split(population, lc.split, lang);
      export_dataset(s, by_id, labels, language_dir(config, lang) / "dataset", config.smote_k);
      out.emplace(lang, std::move(s));
    }
    return out;
  });
}

BalancedFeatures smote(const PipelineConfig& config, const std::string& lang,
                       const RunOptions& options) {
  const auto dir = language_dir(config, lang);
  const auto records = run_stage("split", [&] {
    return read_dataset_file(dir / "dataset" / "train.jsonl");
  });
  std::vector<CleanDocument> train_docs;
  for (const auto& r : records) train_docs.push_back(r.doc);
  BalancedFeatures f;
  f.tfidf = run_stage("features", [&] {
    auto m = TfidfModel::fit(train_docs);
    m.save(dir / "tfidf.txt");
    return m;
  });
  run_stage("smote", [&] {
    const auto xs = kernels::transform_batch(f.tfidf, train_docs, options.exec);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      f.original.push_back({records[i].doc.id, xs[i], records[i].label, false});
    }
    f.balanced = smote_oversample(f.original, config.smote_k, config.smote_seed, options.warn,
                                  options.exec);
    write_vectors(dir / "train_vectors.jsonl", f.balanced);
  });
  return f;
}

std::vector<TrainedModel> train(const PipelineConfig& config, const std::string& lang,
                                const RunOptions& options) {
  return run_stage("train", [&] {
    const auto dir = language_dir(config, lang);
    const auto n_features = TfidfModel::load(dir / "tfidf.txt").vocabulary_size();
    const auto vectors = read_vectors(dir / "train_vectors.jsonl");
    std::vector<SparseVector> X;
    std::vector<CoarseLabel> y;
    for (const auto& v : vectors) {
      X.push_back(v.vector);
      y.push_back(v.label);
    }
    fs::create_directories(dir / "models");
    std::vector<TrainedModel> models;
    for (const auto& spec : config.models) {
      models.push_back(train_model({X, y, n_features}, spec, options.exec));
      save_model(models.back(), dir / "models" / (std::string(to_string(spec.kind())) + ".json"));
    }
    return models;
  });
}

std::map<std::string, std::vector<EvalReport>> evaluate(const PipelineConfig& config,
                                                        const std::string& lang,
                                                        const RunOptions& options) {
  return run_stage("evaluate", [&] {
    const auto dir = language_dir(config, lang);
    const auto tfidf = TfidfModel::load(dir / "tfidf.txt");
    std::vector<TrainedModel> models;
    for (const auto& spec : config.models) {
      models.push_back(
          load_model(dir / "models" / (std::string(to_string(spec.kind())) + ".json")));
    }
    std::map<std::string, std::vector<EvalReport>> out;
    for (const std::string split_name : {"validation", "test"}) {
      const auto records = read_dataset_file(dir / "dataset" / (split_name + ".jsonl"));
      if (records.empty()) continue;
      std::vector<CleanDocument> docs;
      std::vector<CoarseLabel> truth;
      for (const auto& r : records) {
        docs.push_back(r.doc);
        truth.push_back(r.label);
      }
      const auto xs = kernels::transform_batch(tfidf, docs, options.exec);
      std::vector<EvalReport> reports;
      for (const auto& m : models) {
        const auto pred = m.predict_batch(xs, options.exec);
        reports.push_back(metrics(confusion(truth, pred, kAllCoarse),
                                  std::string(short_name(m.kind())), lang));
      }
      const auto stem = "report_" + split_name;
      write_text(dir / (stem + ".txt"), render_report(reports, ReportFormat::Text));
      write_text(dir / (stem + ".jsonl"), render_report(reports, ReportFormat::Machine));
      out.emplace(split_name, std::move(reports));
    }
    return out;
  });
}

}  // namespace stages

RunResult run_pipeline(const PipelineConfig& cfg, const RunOptions& opt) {
  json manifest = {{"config_hash", config_hash(cfg)},
                   {"seed", cfg.seed},
                   {"timestamp", cfg.timestamp},
                   {"blind_mode", cfg.blind_mode}};
  auto write_manifest = [&] {
    run_stage("manifest", [&] {
      write_text(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
    });
  };

  const auto docs = stages::ingest(cfg, opt);
  std::size_t empty_docs = 0;
  json per_language = json::object();
  for (const auto& d : docs) {
    empty_docs += d.token_count == 0;
    per_language[d.language] = per_language.value(d.language, 0) + 1;
  }
  manifest["documents"] = {
      {"total", docs.size()}, {"empty", empty_docs}, {"per_language", per_language}};

  // Gate on expert labels before anything is sent to the zero-shot service.
  const auto expert = stages::expert_labels(cfg, docs);
  const auto pending = stages::pending_ids(docs, expert);
  if (!pending.empty()) {
    manifest["status"] = "pending";
    manifest["pending"] = pending.size();
    manifest["pending_ids"] = pending;
    write_manifest();
    return {false, pending.size(), manifest};
  }

  const auto lexicons = stages::lexicons(cfg, opt);
  const auto keyword = stages::label_keyword(cfg, docs, lexicons, opt);
  const auto zeroshot = stages::label_zeroshot(cfg, docs);
  const auto fused = stages::fuse(cfg, docs, keyword, zeroshot, expert);
  const auto coarse = stages::coarse_labels(fused, cfg.merge);

  std::map<Agreement, std::size_t> agreement;
  for (const auto& f : fused) ++agreement[f.agreement];
  std::map<CoarseLabel, std::size_t> coarse_counts;
  for (const auto& [id, c] : coarse) ++coarse_counts[c];
  manifest["votes"] = {{"keyword", keyword.size()},
                       {"zeroshot", zeroshot.size()},
                       {"expert", expert.size()}};
  manifest["agreement"] = {{"unanimous", agreement[Agreement::Unanimous]},
                           {"majority", agreement[Agreement::Majority]},
                           {"expert_fallback", agreement[Agreement::ExpertFallback]}};
  manifest["fused_classes"] = coarse_counts_json(coarse_counts);

  const auto splits = stages::split(cfg, docs, coarse);
  json languages = json::object();
  for (const auto& [lang, s] : splits) {
    json lj;
    lj["split"] = {{"seed", s.seed},
                   {"train", s.train.size()},
                   {"validation", s.validation.size()},
                   {"test", s.test.size()}};
    const auto features = stages::smote(cfg, lang, opt);
    lj["vocabulary_size"] = features.tfidf.vocabulary_size();
    lj["smote"] = {{"k", cfg.smote_k},
                   {"seed", cfg.smote_seed},
                   {"before", coarse_counts_json(class_counts(features.original))},
                   {"after", coarse_counts_json(class_counts(features.balanced))}};
    stages::train(cfg, lang, opt);
    json model_list = json::array();
    for (const auto& spec : cfg.models) {
      model_list.push_back(
          {{"kind", std::string(to_string(spec.kind()))},
           {"hyperparameters", spec.hyperparameters()},
           {"seed", spec.seed()},
           {"file", lang + "/models/" + std::string(to_string(spec.kind())) + ".json"}});
    }
    lj["models"] = model_list;
    json reports = json::object();
    for (const auto& [split_name, rs] : stages::evaluate(cfg, lang, opt)) {
      json acc = json::object();
      for (const auto& r : rs) acc[r.model] = r.accuracy;
      reports[split_name] = {{"file", lang + "/report_" + split_name + ".jsonl"},
                             {"accuracy", acc}};
    }
    lj["reports"] = reports;
    languages[lang] = lj;
  }

  manifest["languages"] = languages;
  manifest["status"] = "completed";
  write_manifest();
  return {true, 0, manifest};
}

}  // namespace depsev
