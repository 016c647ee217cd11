#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "depsev/bdi_lexicon.hpp"
#include "depsev/corpus.hpp"
#include "depsev/dataset.hpp"
#include "depsev/error.hpp"
#include "depsev/evaluation.hpp"
#include "depsev/features.hpp"
#include "depsev/labeling.hpp"
#include "depsev/models.hpp"
#include "depsev/parallel.hpp"
#include "json.hpp"

namespace depsev {

struct LanguageConfig {
  std::optional<std::filesystem::path> stoplist;  // built-in list for "en"
  std::filesystem::path questionnaire;
  SplitSpec split;
};

struct ZeroShotConfig {
  std::string endpoint;               // ZEROSHOT_ENDPOINT overrides
  std::string token_env = "ZEROSHOT_TOKEN";
  std::optional<std::filesystem::path> cache;
  int max_attempts = 4;
  int initial_backoff_ms = 100;
  int max_backoff_ms = 2000;
  int timeout_ms = 30000;
};

struct PipelineConfig {
  std::filesystem::path corpus;
  std::map<std::string, LanguageConfig> languages;
  std::optional<std::filesystem::path> bands;
  std::optional<std::filesystem::path> expert_labels;  // CSV
  std::optional<std::filesystem::path> annotation_store;
  ZeroShotConfig zeroshot;
  FusionWeights fusion_weights;
  MergeMap merge;
  std::size_t smote_k = kDefaultSmoteNeighbors;
  std::uint64_t smote_seed = 0;
  std::vector<ModelSpec> models;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::int64_t timestamp = 0;  // stamped on machine votes
  bool blind_mode = true;
  int port = 8080;

  /// Canonical JSON of every field; the manifest hashes this.
  nlohmann::json to_json() const;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

/// Parses a JSON config. Relative paths resolve against the config file's
/// directory. Missing component seeds derive from the required top-level
/// "seed", which --seed replaces.
PipelineConfig load_config(const std::filesystem::path& path,
                           const ConfigOverrides& overrides = {});
PipelineConfig parse_config(const nlohmann::json& j,
                            const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides = {});

/// FNV-1a over the canonical config JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

/// A stage failure: which stage, plus the underlying error kind.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, ErrorKind kind, const std::string& message)
      : Error(kind, message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }
  nlohmann::json to_json() const;

 private:
  std::string stage_;
};

struct RunResult {
  bool completed = false;
  std::size_t pending = 0;  // documents still lacking an expert label
  nlohmann::json manifest;
};

struct RunOptions {
  WarningSink warn;
  Execution exec = Execution::Parallel;
};

/// ingest -> preprocess -> keyword/zero-shot/expert votes -> fuse -> merge ->
/// split -> TF-IDF (train only) -> SMOTE -> train -> evaluate -> reports.
/// Stops after writing a "pending" manifest when expert labels are missing.
RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// The pipeline one stage at a time. Each stage writes its artifact under
/// config.output_dir; run_pipeline chains them in memory and the CLI
/// subcommands call them individually, reloading earlier artifacts.
namespace stages {

std::filesystem::path language_dir(const PipelineConfig& config, const std::string& lang);

/// clean.jsonl
std::vector<CleanDocument> ingest(const PipelineConfig& config, const RunOptions& options);
std::vector<CleanDocument> load_ingested(const PipelineConfig& config);

/// lexicon_<lang>.tsv
std::map<std::string, BdiLexicon> lexicons(const PipelineConfig& config,
                                           const RunOptions& options);

/// Expert labels from the annotation store and the CSV file, latest winning.
/// Labels for documents outside the corpus are rejected.
std::map<std::string, ExpertAnnotation> expert_labels(
    const PipelineConfig& config, std::span<const CleanDocument> docs);
std::vector<std::string> pending_ids(std::span<const CleanDocument> docs,
                                     const std::map<std::string, ExpertAnnotation>& expert);

/// votes_keyword.jsonl
std::vector<LabelVote> label_keyword(const PipelineConfig& config,
                                     std::span<const CleanDocument> docs,
                                     const std::map<std::string, BdiLexicon>& lexicons,
                                     const RunOptions& options);
/// votes_zeroshot.jsonl
std::vector<LabelVote> label_zeroshot(const PipelineConfig& config,
                                      std::span<const CleanDocument> docs);

/// fused.jsonl, in corpus order. Every document needs all three votes.
std::vector<FusedLabel> fuse(const PipelineConfig& config, std::span<const CleanDocument> docs,
                             std::span<const LabelVote> keyword,
                             std::span<const LabelVote> zeroshot,
                             const std::map<std::string, ExpertAnnotation>& expert);
std::vector<FusedLabel> load_fused(const PipelineConfig& config);
std::map<std::string, CoarseLabel> coarse_labels(std::span<const FusedLabel> fused,
                                                 const MergeMap& merge);

/// <lang>/dataset/{train,validation,test}.jsonl + manifest.json
std::map<std::string, DatasetSplits> split(const PipelineConfig& config,
                                           std::span<const CleanDocument> docs,
                                           const std::map<std::string, CoarseLabel>& labels);

struct BalancedFeatures {
  TfidfModel tfidf;
  std::vector<LabeledVector> original;
  std::vector<LabeledVector> balanced;
};
/// Fits TF-IDF on <lang>/dataset/train.jsonl, oversamples, writes
/// <lang>/tfidf.txt and <lang>/train_vectors.jsonl.
BalancedFeatures smote(const PipelineConfig& config, const std::string& lang,
                       const RunOptions& options);

/// <lang>/models/<kind>.json from train_vectors.jsonl.
std::vector<TrainedModel> train(const PipelineConfig& config, const std::string& lang,
                                const RunOptions& options);

/// <lang>/report_{validation,test}.{txt,jsonl}; keyed by split name.
std::map<std::string, std::vector<EvalReport>> evaluate(const PipelineConfig& config,
                                                        const std::string& lang,
                                                        const RunOptions& options);

}  // namespace stages

/// Effective expert label per document: latest submitted_at, later rows
/// winning ties.
std::map<std::string, ExpertAnnotation> effective_expert_labels(
    const std::vector<ExpertAnnotation>& annotations);

/// Shared by CLI, pipeline and service: corpus -> clean documents using the
/// configured stop lists.
std::vector<CleanDocument> load_clean_corpus(const PipelineConfig& config,
                                             const WarningSink& warn);

}  // namespace depsev
