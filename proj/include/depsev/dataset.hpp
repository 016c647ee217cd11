#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depsev/corpus.hpp"
#include "depsev/features.hpp"
#include "depsev/parallel.hpp"
#include "depsev/severity.hpp"

namespace depsev {

struct ClassSplitCounts {
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// Per-class validation/test counts; everything else goes to training.
/// Classes absent from `counts` go entirely to training.
struct SplitSpec {
  std::map<CoarseLabel, ClassSplitCounts> counts;
  std::uint64_t seed = 0;
};

struct LabeledId {
  std::string doc_id;
  CoarseLabel label = CoarseLabel::Normal;

  bool operator==(const LabeledId&) const = default;
};

struct DatasetSplits {
  std::vector<LabeledId> train;
  std::vector<LabeledId> validation;
  std::vector<LabeledId> test;
  std::string language;
  std::uint64_t seed = 0;
};

/// Per class (in severity order): shuffle that class's ids with a generator
/// seeded from (seed, class), take `test` ids for test, then `validation`,
/// and the remainder for training.
DatasetSplits shuffle_split(std::span<const LabeledId> population,
                            const SplitSpec& spec, std::string language = {});

struct LabeledVector {
  std::string doc_id;  // empty for synthetic points
  SparseVector vector;
  CoarseLabel label = CoarseLabel::Normal;
  bool synthetic = false;
};

inline constexpr std::size_t kDefaultSmoteNeighbors = 5;

/// Brings every class up to the largest class count. Synthetic points are
/// x + u * (nn - x) with x a random member of the class, nn one of its k
/// nearest same-class neighbours and u uniform in [0, 1). A class with k or
/// fewer members uses members - 1 neighbours; a singleton is duplicated.
/// Output: the input points unchanged and in order, then the synthetic points
/// class by class.
std::vector<LabeledVector> smote_oversample(std::span<const LabeledVector> train,
                                            std::size_t k, std::uint64_t seed,
                                            const WarningSink& warn = {},
                                            Execution exec = Execution::Parallel);

std::map<CoarseLabel, std::size_t> class_counts(std::span<const LabeledVector> v);

struct DatasetRecord {
  CleanDocument doc;
  CoarseLabel label = CoarseLabel::Normal;
};

/// Writes train.jsonl, validation.jsonl and test.jsonl ({id, language, text,
/// label} per line) plus manifest.json with seed, smote_k and per-class
/// counts. Every id is resolved before anything is written.
void export_dataset(const DatasetSplits& splits,
                    const std::map<std::string, CleanDocument>& docs,
                    const std::map<std::string, CoarseLabel>& labels,
                    const std::filesystem::path& dir,
                    std::optional<std::size_t> smote_k = std::nullopt);

std::vector<DatasetRecord> read_dataset_file(const std::filesystem::path& path);

/// {doc_id, label, synthetic, vector: [[index, weight], ...]} per line.
void write_vectors(const std::filesystem::path& path,
                   std::span<const LabeledVector> vectors);
std::vector<LabeledVector> read_vectors(const std::filesystem::path& path);

}  // namespace depsev
