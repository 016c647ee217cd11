#include "doctest.h"
#include "http_stub.hpp"
#include "support.hpp"

#include <atomic>

#include "depsev/error.hpp"
#include "depsev/zeroshot.hpp"
#include "json.hpp"

using namespace depsev;
using nlohmann::json;
using testing::HttpStub;

namespace {

const std::vector<std::string> kNames = label_names(kAllSeverities);

RetryPolicy fast_retry(int attempts = 4) {
  return {attempts, std::chrono::milliseconds(1), std::chrono::milliseconds(4)};
}

void respond(httplib::Response& res, const json& labels, const json& scores) {
  res.set_content(json{{"labels", labels}, {"scores", scores}}.dump(), "application/json");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected depsev::Error");
  return ErrorKind::Io;
}

const CleanDocument kDoc{"d1", "en", "everything feels hopeless", 3};

}  // namespace

TEST_CASE("request body and response parsing") {
  const auto body = json::parse(zeroshot_request_body("some text", kNames));
  CHECK(body["text"] == "some text");
  CHECK(body["candidate_labels"].get<std::vector<std::string>>() == kNames);

  const auto r = parse_zeroshot_response(R"({"labels":["a","b"],"scores":[0.25,0.75]})");
  CHECK(r.labels == std::vector<std::string>{"a", "b"});
  CHECK(r.scores == std::vector<double>{0.25, 0.75});
  CHECK_THROWS_AS(parse_zeroshot_response("not json"), Error);
  CHECK_THROWS_AS(parse_zeroshot_response(R"({"labels":["a"],"scores":[]})"), Error);
  CHECK_THROWS_AS(parse_zeroshot_response(R"({"labels":[1],"scores":[0.5]})"), Error);
}

TEST_CASE("backoff doubles and caps") {
  const RetryPolicy p{5, std::chrono::milliseconds(100), std::chrono::milliseconds(300)};
  CHECK(p.backoff(1).count() == 100);
  CHECK(p.backoff(2).count() == 200);
  CHECK(p.backoff(3).count() == 300);
  CHECK(p.backoff(9).count() == 300);
}

TEST_CASE("a Severe-leaning stub yields a Severe vote with its confidence") {
  std::string auth;
  HttpStub stub([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    respond(res, kNames, {0.02, 0.02, 0.02, 0.02, 0.9, 0.02});
  });
  ZeroShotClient client(stub.url(), std::string("secret"), fast_retry());
  const auto v = zeroshot_label(kDoc, client, kAllSeverities);
  CHECK(v.label == SeverityLabel::Severe);
  CHECK(v.source == VoteSource::ZeroShot);
  CHECK(v.confidence == doctest::Approx(0.9));
  CHECK(auth == "Bearer secret");
}

TEST_CASE("mismatched labels are a protocol error and are not cached") {
  HttpStub stub([](const httplib::Request&, httplib::Response& res) {
    respond(res, {"happy", "sad"}, {0.5, 0.5});
  });
  ZeroShotClient client(stub.url(), std::nullopt, fast_retry());
  ZeroShotCache cache;
  CHECK(kind_of([&] { zeroshot_label(kDoc, client, kAllSeverities, &cache); }) ==
        ErrorKind::Protocol);
  CHECK(cache.size() == 0);
}

TEST_CASE("a Moderate/Severe tie resolves to Severe") {
  HttpStub stub([](const httplib::Request&, httplib::Response& res) {
    respond(res, kNames, {0.05, 0.05, 0.05, 0.4, 0.4, 0.05});
  });
  ZeroShotClient client(stub.url(), std::nullopt, fast_retry());
  CHECK(zeroshot_label(kDoc, client, kAllSeverities).label == SeverityLabel::Severe);
}

TEST_CASE("transient failures are retried") {
  std::atomic<int> calls{0};
  HttpStub stub([&](const httplib::Request&, httplib::Response& res) {
    const int n = ++calls;
    if (n == 1) {
      res.status = 503;
    } else if (n == 2) {
      res.status = 429;
    } else {
      respond(res, kNames, {0.9, 0.02, 0.02, 0.02, 0.02, 0.02});
    }
  });
  ZeroShotClient client(stub.url(), std::nullopt, fast_retry());
  CHECK(zeroshot_label(kDoc, client, kAllSeverities).label == SeverityLabel::Normal);
  CHECK(client.requests_sent() == 3);
}

TEST_CASE("retries stop at max_attempts") {
  std::atomic<int> calls{0};
  HttpStub stub([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  ZeroShotClient client(stub.url(), std::nullopt, fast_retry(3));
  CHECK(kind_of([&] { client.classify("x", kNames); }) == ErrorKind::Network);
  CHECK(calls == 3);
}

TEST_CASE("client errors are not retried") {
  std::atomic<int> calls{0};
  HttpStub stub([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  ZeroShotClient client(stub.url(), std::nullopt, fast_retry());
  CHECK(kind_of([&] { client.classify("x", kNames); }) == ErrorKind::Protocol);
  CHECK(calls == 1);
}

TEST_CASE("an unreachable endpoint is a network error") {
  ZeroShotClient client("http://127.0.0.1:" + std::to_string(testing::closed_port()) + "/c",
                        std::nullopt, fast_retry(2), std::chrono::milliseconds(200));
  CHECK(kind_of([&] { client.classify("x", kNames); }) == ErrorKind::Network);
  CHECK(client.requests_sent() == 2);
}

TEST_CASE("malformed endpoints are rejected") {
  CHECK_THROWS_AS(ZeroShotClient("not a url"), Error);
}

TEST_CASE("the cache answers repeats without a request and persists") {
  std::atomic<int> calls{0};
  HttpStub stub([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    respond(res, kNames, {0.1, 0.1, 0.1, 0.5, 0.1, 0.1});
  });
  testing::TempDir dir;
  ZeroShotClient client(stub.url(), std::nullopt, fast_retry());
  {
    ZeroShotCache cache(dir / "cache.jsonl");
    CHECK(zeroshot_label(kDoc, client, kAllSeverities, &cache).label == SeverityLabel::Moderate);
    CHECK(zeroshot_label(kDoc, client, kAllSeverities, &cache).label == SeverityLabel::Moderate);
    CHECK(calls == 1);
  }
  ZeroShotCache reopened(dir / "cache.jsonl");
  CHECK(reopened.size() == 1);
  CHECK(zeroshot_label(kDoc, client, kAllSeverities, &reopened).label ==
        SeverityLabel::Moderate);
  CHECK(calls == 1);

  // A different label set is a different key.
  const std::vector<SeverityLabel> four = {SeverityLabel::Normal, SeverityLabel::Mild,
                                           SeverityLabel::Moderate, SeverityLabel::Severe};
  CHECK(ZeroShotCache::key(kDoc.text, label_names(four)) !=
        ZeroShotCache::key(kDoc.text, kNames));
}
