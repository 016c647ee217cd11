#include "depsev/service.hpp"

#include <chrono>
#include <cstdio>
#include <unordered_set>

#include "depsev/severity.hpp"
#include "httplib.h"
#include "json.hpp"

namespace depsev {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view kind,
                const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  send_json(res, status, extra);
}

json allowed_labels_json() {
  json a = json::array();
  for (auto s : kAllSeverities) a.push_back(std::string(to_string(s)));
  return a;
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::optional<bool> parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  return std::nullopt;
}

}  // namespace

AnnotationService::AnnotationService(const PipelineConfig& config, const WarningSink& warn)
    : config_(config),
      docs_(load_clean_corpus(config, warn)),
      bands_(config.bands ? SeverityBands::load(*config.bands) : SeverityBands::standard()) {
  for (const auto& post : ingest_corpus(config_.corpus)) {
    original_text_[post.id] = post.title ? *post.title + "\n\n" + post.body : post.body;
  }
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    by_id_.emplace(docs_[i].id, i);
    ids.insert(docs_[i].id);
  }
  for (const auto& [lang, lc] : config_.languages) {
    lexicons_.emplace(lang, build_lexicon(load_questionnaire(lc.questionnaire),
                                          load_stoplist(lang, lc.stoplist), warn));
  }
  const auto dir = config_.annotation_store.value_or(config_.output_dir / "annotations");
  store_ = std::make_unique<AnnotationStore>(dir, std::move(ids));
  if (!config_.zeroshot.endpoint.empty()) {
    const char* token = std::getenv(config_.zeroshot.token_env.c_str());
    zeroshot_ = std::make_unique<ZeroShotClient>(
        config_.zeroshot.endpoint,
        token ? std::optional<std::string>(token) : std::nullopt,
        RetryPolicy{config_.zeroshot.max_attempts,
                    std::chrono::milliseconds(config_.zeroshot.initial_backoff_ms),
                    std::chrono::milliseconds(config_.zeroshot.max_backoff_ms)},
        std::chrono::milliseconds(config_.zeroshot.timeout_ms));
  }
  cache_ = config_.zeroshot.cache ? std::make_unique<ZeroShotCache>(*config_.zeroshot.cache)
                                  : std::make_unique<ZeroShotCache>();
  server_ = std::make_unique<httplib::Server>();
  // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which would let
  // a second instance share the port instead of failing.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  routes();
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = server_->bind_to_any_port(host);
    if (p < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return p;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port) +
                                   " (port busy?)");
  }
  return port;
}

void AnnotationService::serve_bound() { server_->listen_after_bind(); }

void AnnotationService::listen(const std::string& host, int port) {
  bind(host, port);
  serve_bound();
}

void AnnotationService::stop() {
  if (server_) server_->stop();
}

bool AnnotationService::running() const { return server_ && server_->is_running(); }

void AnnotationService::routes() {
  auto& srv = *server_;
  const auto labelset = std::vector<SeverityLabel>(kAllSeverities.begin(), kAllSeverities.end());
  const auto names = label_names(labelset);

  srv.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
  });
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const Error& e) {
          send_error(res, 500, to_string(e.kind()), e.what());
        } catch (const std::exception& e) {
          send_error(res, 500, "internal", e.what());
        }
      });

  // Zero-shot vote without calling upstream; nullopt when not cached yet.
  auto cached_zeroshot = [this, labelset, names](const CleanDocument& d)
      -> std::optional<LabelVote> {
    if (auto hit = cache_->get(ZeroShotCache::key(d.text, names))) {
      return zeroshot_vote(d.id, hit->labels, hit->scores, labelset, config_.timestamp);
    }
    return std::nullopt;
  };

  auto status_of = [this](const std::string& id) {
    if (store_->fusion(id)) return "fused";
    if (store_->effective(id)) return "labeled";
    return "unlabeled";
  };

  auto task_json = [this, status_of, cached_zeroshot](const CleanDocument& d, bool blind) {
    json t = {{"doc_id", d.id},
              {"text", original_text_.at(d.id)},
              {"clean_text", d.text},
              {"language", d.language},
              {"status", status_of(d.id)}};
    if (!blind) {
      json votes = json::object();
      auto lex = lexicons_.find(d.language);
      votes["keyword"] = lex == lexicons_.end()
                             ? json(nullptr)
                             : json(std::string(to_string(
                                   keyword_label(d, lex->second, bands_).label)));
      auto zs = cached_zeroshot(d);
      votes["zeroshot"] = zs ? json(std::string(to_string(zs->label))) : json(nullptr);
      t["votes"] = votes;
    }
    if (auto e = store_->effective(d.id)) {
      t["expert_label"] = std::string(to_string(e->label));
    }
    return t;
  };

  auto blind_param = [this](const httplib::Request& req) -> std::optional<bool> {
    if (!req.has_param("blind")) return config_.blind_mode;
    return parse_bool(req.get_param_value("blind"));
  };

  srv.Get("/tasks", [this, task_json, status_of, blind_param](const httplib::Request& req,
                                                              httplib::Response& res) {
    const std::string status = req.has_param("status") ? req.get_param_value("status") : "";
    if (!status.empty() && status != "unlabeled" && status != "labeled" && status != "fused") {
      return send_error(res, 400, "validation",
                        "status must be unlabeled, labeled or fused");
    }
    std::size_t limit = docs_.size();
    if (req.has_param("limit")) {
      try {
        const long long v = std::stoll(req.get_param_value("limit"));
        if (v < 0) throw std::invalid_argument("negative");
        limit = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        return send_error(res, 400, "validation", "limit must be a non-negative integer");
      }
    }
    const auto blind = blind_param(req);
    if (!blind) return send_error(res, 400, "validation", "blind must be true or false");
    json tasks = json::array();
    for (const auto& d : docs_) {
      if (tasks.size() >= limit) break;
      if (status.empty() || status == status_of(d.id)) tasks.push_back(task_json(d, *blind));
    }
    send_json(res, 200, tasks);
  });

  srv.Get(R"(/tasks/([^/]+))", [this, task_json, blind_param](const httplib::Request& req,
                                                             httplib::Response& res) {
    const std::string id = req.matches[1];
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
      return send_error(res, 404, "not_found", "unknown document '" + id + "'");
    }
    const auto blind = blind_param(req);
    if (!blind) return send_error(res, 400, "validation", "blind must be true or false");
    json t = task_json(docs_[it->second], *blind);
    json history = json::array();
    for (const auto& h : store_->history(id)) {
      history.push_back({{"sequence", h.sequence},
                         {"annotator_id", h.annotation.annotator_id},
                         {"label", std::string(to_string(h.annotation.label))},
                         {"submitted_at", h.annotation.submitted_at},
                         {"blind_mode", h.blind_mode}});
    }
    t["history"] = history;
    send_json(res, 200, t);
  });

  srv.Post("/annotations", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      return send_error(res, 400, "parse", "body must be a JSON object");
    }
    for (const char* key : {"doc_id", "annotator_id", "label"}) {
      if (!body.contains(key) || !body[key].is_string()) {
        return send_error(res, 400, "validation",
                          std::string("missing string field '") + key + "'");
      }
    }
    if (body.contains("submitted_at") && !body["submitted_at"].is_number_integer()) {
      return send_error(res, 400, "validation", "submitted_at must be an integer");
    }
    if (body.contains("blind_mode") && !body["blind_mode"].is_boolean()) {
      return send_error(res, 400, "validation", "blind_mode must be a boolean");
    }
    const auto label = parse_severity(body["label"].get<std::string>());
    if (!label) {
      return send_error(res, 422, "validation",
                        "unknown label '" + body["label"].get<std::string>() + "'",
                        {{"allowed_labels", allowed_labels_json()}});
    }
    ExpertAnnotation a{body["doc_id"].get<std::string>(),
                       body["annotator_id"].get<std::string>(), *label,
                       body.value("submitted_at", now_seconds())};
    if (a.annotator_id.empty()) {
      return send_error(res, 400, "validation", "annotator_id must not be empty");
    }
    if (!store_->knows(a.doc_id)) {
      return send_error(res, 404, "not_found", "unknown document '" + a.doc_id + "'");
    }
    const auto ack = store_->record(a, body.value("blind_mode", config_.blind_mode));
    send_json(res, 200,
              {{"status", "ok"},
               {"sequence", ack.sequence},
               {"superseded", ack.superseded},
               {"duplicate", ack.duplicate}});
  });

  srv.Get("/progress", [this](const httplib::Request&, httplib::Response& res) {
    const auto total = store_->total_documents();
    const auto labeled = store_->labeled_count();
    send_json(res, 200,
              {{"total", total},
               {"labeled", labeled},
               {"fused", store_->fused_count()},
               {"pending", total - labeled}});
  });

  srv.Post("/fuse", [this, labelset, cached_zeroshot](const httplib::Request&,
                                                     httplib::Response& res) {
    std::size_t counts[3] = {0, 0, 0};
    std::size_t already = 0, missing_votes = 0;
    for (const auto& d : docs_) {
      const auto e = store_->effective(d.id);
      if (!e) continue;
      if (store_->fusion(d.id)) {
        ++already;
        continue;
      }
      auto lex = lexicons_.find(d.language);
      if (lex == lexicons_.end()) {
        ++missing_votes;
        continue;
      }
      std::optional<LabelVote> zs;
      if (zeroshot_) {
        try {
          zs = zeroshot_label(d, *zeroshot_, labelset, cache_.get(), config_.timestamp);
        } catch (const Error& err) {
          return send_error(res, 502, to_string(err.kind()), err.what());
        }
      } else {
        zs = cached_zeroshot(d);
      }
      if (!zs) {
        ++missing_votes;
        continue;
      }
      const auto kw = keyword_label(d, lex->second, bands_, config_.timestamp);
      const LabelVote ex{d.id, VoteSource::Expert, e->label, std::nullopt, e->submitted_at};
      const auto f = fuse(kw, *zs, ex, config_.fusion_weights);
      store_->record_fusion(d.id, f.label, f.agreement);
      ++counts[static_cast<int>(f.agreement)];
    }
    send_json(res, 200,
              {{"unanimous", counts[0]},
               {"majority", counts[1]},
               {"expert_fallback", counts[2]},
               {"fused", counts[0] + counts[1] + counts[2]},
               {"already_fused", already},
               {"missing_votes", missing_votes}});
  });

  srv.Get("/export/labels", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(expert_labels_csv(store_->effective_all()), "text/csv; charset=utf-8");
  });

  srv.Post("/zeroshot", [this, names](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") ||
        !body["text"].is_string()) {
      return send_error(res, 400, "parse", "body must be {\"text\": string}");
    }
    std::vector<std::string> candidates = names;
    if (body.contains("candidate_labels")) {
      try {
        candidates = body["candidate_labels"].get<std::vector<std::string>>();
      } catch (const json::exception&) {
        return send_error(res, 400, "validation", "candidate_labels must be strings");
      }
    }
    const auto text = body["text"].get<std::string>();
    if (!zeroshot_) {
      if (auto hit = cache_->get(ZeroShotCache::key(text, candidates))) {
        return send_json(res, 200, {{"labels", hit->labels}, {"scores", hit->scores}});
      }
      return send_error(res, 503, "config", "no zero-shot endpoint configured");
    }
    try {
      const auto r = classify_cached(*zeroshot_, cache_.get(), text, candidates);
      send_json(res, 200, {{"labels", r.labels}, {"scores", r.scores}});
    } catch (const Error& e) {
      send_error(res, 502, to_string(e.kind()), e.what());
    }
  });
}

void serve(const PipelineConfig& config, const std::string& host) {
  AnnotationService service(config);
  const int port = service.bind(host, config.port);
  std::printf("listening on %s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  service.serve_bound();
}

}  // namespace depsev
