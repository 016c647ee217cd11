#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depsev/corpus.hpp"
#include "depsev/labeling.hpp"

namespace depsev {

// Wire contract: POST {text, candidate_labels[]} -> {labels[], scores[]}.
struct ZeroShotResponse {
  std::vector<std::string> labels;
  std::vector<double> scores;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds max_backoff{2000};

  /// Delay before retry number `retry` (1-based): initial * 2^(retry-1),
  /// capped at max_backoff.
  std::chrono::milliseconds backoff(int retry) const;
};

std::string zeroshot_request_body(std::string_view text,
                                  std::span<const std::string> candidates);
/// Throws Protocol on anything but {labels: [str], scores: [num]} of equal length.
ZeroShotResponse parse_zeroshot_response(std::string_view body);

class ZeroShotClient {
 public:
  /// `endpoint` is a full URL such as "http://127.0.0.1:8000/classify".
  ZeroShotClient(std::string endpoint, std::optional<std::string> token = {},
                 RetryPolicy retry = {},
                 std::chrono::milliseconds timeout = std::chrono::seconds(30));

  /// Connection failures, 429 and 5xx are retried with capped exponential
  /// backoff; other statuses and malformed bodies fail immediately.
  ZeroShotResponse classify(std::string_view text,
                            std::span<const std::string> candidates) const;

  const std::string& endpoint() const { return endpoint_; }
  /// Number of HTTP requests issued so far (including retries).
  std::size_t requests_sent() const;

 private:
  std::string endpoint_;
  std::string scheme_host_port_;
  std::string path_;
  std::optional<std::string> token_;
  RetryPolicy retry_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mu_;
  mutable std::size_t requests_ = 0;
};

/// Responses keyed by (text hash, label set). Optionally backed by an
/// append-only JSONL file so reruns do not hit the external service again.
class ZeroShotCache {
 public:
  ZeroShotCache() = default;
  explicit ZeroShotCache(std::filesystem::path backing_file);

  static std::string key(std::string_view text,
                         std::span<const std::string> candidates);

  std::optional<ZeroShotResponse> get(const std::string& key) const;
  void put(const std::string& key, const ZeroShotResponse& response);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::map<std::string, ZeroShotResponse> entries_;
};

/// Cache lookup first, then the client; a fresh response is cached.
ZeroShotResponse classify_cached(const ZeroShotClient& client,
                                 ZeroShotCache* cache, std::string_view text,
                                 std::span<const std::string> candidates);

std::vector<std::string> label_names(std::span<const SeverityLabel> labelset);

LabelVote zeroshot_label(const CleanDocument& doc, const ZeroShotClient& client,
                         std::span<const SeverityLabel> labelset,
                         ZeroShotCache* cache = nullptr,
                         std::int64_t created_at = 0);

}  // namespace depsev
