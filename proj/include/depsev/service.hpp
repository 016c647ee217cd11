#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "depsev/annotation_store.hpp"
#include "depsev/bdi_lexicon.hpp"
#include "depsev/pipeline.hpp"
#include "depsev/zeroshot.hpp"

namespace httplib {
class Server;
}

namespace depsev {

// HTTP front end over the annotation store:
//   GET  /tasks?status=unlabeled|labeled|fused&limit=N&blind=true|false
//   GET  /tasks/{doc_id}
//   POST /annotations {doc_id, annotator_id, label[, submitted_at, blind_mode]}
//   GET  /progress
//   POST /fuse
//   GET  /export/labels
//   POST /zeroshot {text}
class AnnotationService {
 public:
  explicit AnnotationService(const PipelineConfig& config,
                             const WarningSink& warn = stderr_warnings());
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Binds (port 0 picks a free port) and serves until stop(). Throws Io
  /// when the port is unavailable.
  void listen(const std::string& host, int port);
  /// Binds without serving yet; returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on a port previously bound with bind().
  void serve_bound();
  void stop();
  bool running() const;

  AnnotationStore& store() { return *store_; }

 private:
  void routes();

  PipelineConfig config_;
  std::vector<CleanDocument> docs_;
  std::map<std::string, std::string> original_text_;  // title + body as posted
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, BdiLexicon> lexicons_;
  SeverityBands bands_;
  std::unique_ptr<AnnotationStore> store_;
  std::unique_ptr<ZeroShotClient> zeroshot_;
  std::unique_ptr<ZeroShotCache> cache_;
  std::unique_ptr<httplib::Server> server_;
};

/// Runs the service in the foreground.
void serve(const PipelineConfig& config, const std::string& host = "127.0.0.1");

}  // namespace depsev
