#include "depsev/zeroshot.hpp"

#include <fstream>
#include <thread>

#include "depsev/error.hpp"
#include "depsev/hash.hpp"
#include "depsev/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  auto d = initial_backoff;
  for (int i = 1; i < retry && d < max_backoff; ++i) d *= 2;
  return std::min(d, max_backoff);
}

std::string zeroshot_request_body(std::string_view text,
                                  std::span<const std::string> candidates) {
  json j = {{"text", text},
            {"candidate_labels",
             std::vector<std::string>(candidates.begin(), candidates.end())}};
  return j.dump();
}

ZeroShotResponse parse_zeroshot_response(std::string_view body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Protocol, "zero-shot response is not a JSON object");
  }
  auto labels = j.find("labels");
  auto scores = j.find("scores");
  if (labels == j.end() || scores == j.end() || !labels->is_array() ||
      !scores->is_array() || labels->size() != scores->size()) {
    throw Error(ErrorKind::Protocol,
                "zero-shot response needs parallel labels[] and scores[]");
  }
  ZeroShotResponse r;
  for (const auto& l : *labels) {
    if (!l.is_string()) throw Error(ErrorKind::Protocol, "non-string label");
    r.labels.push_back(l.get<std::string>());
  }
  for (const auto& s : *scores) {
    if (!s.is_number()) throw Error(ErrorKind::Protocol, "non-numeric score");
    r.scores.push_back(s.get<double>());
  }
  return r;
}

ZeroShotClient::ZeroShotClient(std::string endpoint,
                               std::optional<std::string> token,
                               RetryPolicy retry,
                               std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)),
      token_(std::move(token)),
      retry_(retry),
      timeout_(timeout) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::Config, "zero-shot endpoint must be a URL: " + endpoint_);
  }
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint_.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);
}

std::size_t ZeroShotClient::requests_sent() const {
  std::lock_guard lock(mu_);
  return requests_;
}

ZeroShotResponse ZeroShotClient::classify(
    std::string_view text, std::span<const std::string> candidates) const {
  httplib::Client cli(scheme_host_port_);
  const auto secs = static_cast<time_t>(timeout_.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout_.count() % 1000) * 1000);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (token_ && !token_->empty()) {
    headers.emplace("Authorization", "Bearer " + *token_);
  }
  const std::string body = zeroshot_request_body(text, candidates);

  std::string last_failure;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(retry_.backoff(attempt - 1));
    {
      std::lock_guard lock(mu_);
      ++requests_;
    }
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      last_failure = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorKind::Protocol, "zero-shot service returned HTTP " +
                                           std::to_string(res->status));
    }
    return parse_zeroshot_response(res->body);
  }
  throw Error(ErrorKind::Network, "zero-shot service unreachable after " +
                                      std::to_string(retry_.max_attempts) +
                                      " attempts (" + last_failure + ")");
}

ZeroShotCache::ZeroShotCache(std::filesystem::path backing_file)
    : file_(std::move(backing_file)) {
  std::ifstream in(*file_);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key")) continue;  // torn tail
    ZeroShotResponse r;
    r.labels = j.value("labels", std::vector<std::string>{});
    r.scores = j.value("scores", std::vector<double>{});
    entries_[j["key"].get<std::string>()] = std::move(r);
  }
}

std::string ZeroShotCache::key(std::string_view text,
                               std::span<const std::string> candidates) {
  std::string labels;
  for (const auto& c : candidates) {
    if (!labels.empty()) labels += ',';
    labels += c;
  }
  return hex64(fnv1a64(text)) + "|" + labels;
}

std::optional<ZeroShotResponse> ZeroShotCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ZeroShotCache::put(const std::string& key, const ZeroShotResponse& response) {
  std::lock_guard lock(mu_);
  entries_[key] = response;
  if (file_) {
    std::ofstream out(*file_, std::ios::app | std::ios::binary);
    json j = {{"key", key}, {"labels", response.labels}, {"scores", response.scores}};
    out << j.dump() << '\n';
  }
}

std::size_t ZeroShotCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ZeroShotResponse classify_cached(const ZeroShotClient& client,
                                 ZeroShotCache* cache, std::string_view text,
                                 std::span<const std::string> candidates) {
  if (!cache) return client.classify(text, candidates);
  const auto k = ZeroShotCache::key(text, candidates);
  if (auto hit = cache->get(k)) return *hit;
  auto r = client.classify(text, candidates);
  cache->put(k, r);
  return r;
}

std::vector<std::string> label_names(std::span<const SeverityLabel> labelset) {
  std::vector<std::string> out;
  for (auto l : labelset) out.emplace_back(to_string(l));
  return out;
}

LabelVote zeroshot_label(const CleanDocument& doc, const ZeroShotClient& client,
                         std::span<const SeverityLabel> labelset,
                         ZeroShotCache* cache, std::int64_t created_at) {
  const auto names = label_names(labelset);
  const auto k = ZeroShotCache::key(doc.text, names);
  if (cache) {
    if (auto hit = cache->get(k)) {
      return zeroshot_vote(doc.id, hit->labels, hit->scores, labelset, created_at);
    }
  }
  const auto r = client.classify(doc.text, names);
  // Validate before caching so a contract violation is never replayed.
  auto vote = zeroshot_vote(doc.id, r.labels, r.scores, labelset, created_at);
  if (cache) cache->put(k, r);
  return vote;
}

}  // namespace depsev
