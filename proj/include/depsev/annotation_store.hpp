#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "depsev/labeling.hpp"

namespace depsev {

struct StoredAnnotation {
  ExpertAnnotation annotation;
  std::uint64_t sequence = 0;
  bool blind_mode = true;
};

struct FusionRecord {
  std::string doc_id;
  SeverityLabel label = SeverityLabel::Normal;
  Agreement agreement = Agreement::Unanimous;
  std::uint64_t sequence = 0;
};

struct AnnotationAck {
  std::uint64_t sequence = 0;
  bool superseded = false;  // an earlier annotation for the doc existed
  bool duplicate = false;   // identical (doc, annotator, submitted_at) replay
};

// Durable expert-annotation state. Every record is one checksummed line in
// `<dir>/annotations.log`, fsynced before record() returns; a snapshot of the
// parsed records is rewritten every `snapshot_every` appends so startup only
// replays the log tail. Last write wins per document; full history is kept.
//
// Log line: "<crc32 as 8 hex digits> <json>\n".
class AnnotationStore {
 public:
  struct Options {
    std::size_t snapshot_every = 64;
  };

  /// Opens or creates the store. A torn final line (no newline) is dropped;
  /// any other damaged line throws Corrupt naming its byte offset.
  AnnotationStore(std::filesystem::path dir,
                  std::unordered_set<std::string> known_docs);
  AnnotationStore(std::filesystem::path dir,
                  std::unordered_set<std::string> known_docs, Options options);
  ~AnnotationStore();

  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  /// Throws NotFound for documents outside the corpus.
  AnnotationAck record(const ExpertAnnotation& annotation, bool blind_mode = true);
  void record_fusion(const std::string& doc_id, SeverityLabel label,
                     Agreement agreement);

  bool knows(const std::string& doc_id) const;
  std::optional<ExpertAnnotation> effective(const std::string& doc_id) const;
  std::vector<StoredAnnotation> history(const std::string& doc_id) const;
  /// Effective annotations ordered by doc id.
  std::vector<ExpertAnnotation> effective_all() const;
  std::optional<FusionRecord> fusion(const std::string& doc_id) const;

  std::size_t total_documents() const { return known_.size(); }
  std::size_t labeled_count() const;
  std::size_t fused_count() const;
  std::uint64_t log_bytes() const;

  const std::filesystem::path& log_path() const { return log_path_; }
  const std::filesystem::path& snapshot_path() const { return snapshot_path_; }

  /// Writes the snapshot now.
  void snapshot();

 private:
  void load();
  void apply_line(const std::string& payload, std::uint64_t offset);
  void append_locked(const std::string& payload);
  void snapshot_locked();

  std::filesystem::path dir_;
  std::filesystem::path log_path_;
  std::filesystem::path snapshot_path_;
  std::unordered_set<std::string> known_;
  Options options_;

  mutable std::shared_mutex mu_;
  int fd_ = -1;
  std::uint64_t log_bytes_ = 0;
  std::uint64_t next_seq_ = 1;
  std::size_t appends_since_snapshot_ = 0;
  std::vector<std::string> records_;  // every applied payload, in log order
  std::map<std::string, std::vector<StoredAnnotation>> history_;
  std::map<std::string, FusionRecord> fused_;
};

/// Stores the annotation, superseding earlier ones for the same document.
AnnotationAck record_expert_label(const ExpertAnnotation& annotation,
                                  AnnotationStore& store);

}  // namespace depsev
