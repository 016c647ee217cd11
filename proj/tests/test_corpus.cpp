#include "doctest.h"
#include "support.hpp"

#include "depsev/corpus.hpp"
#include "depsev/error.hpp"
#include "depsev/text.hpp"

#include <set>

using namespace depsev;
using testing::TempDir;

namespace {

RawPost post(std::string body, std::string lang = "en") {
  RawPost p;
  p.id = "p1";
  p.body = std::move(body);
  p.language = std::move(lang);
  return p;
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

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  FAIL("expected an exception");
  return {};
}

}  // namespace

TEST_CASE("ingest keeps file order and skips blank lines") {
  TempDir dir;
  testing::write_file(dir / "c.jsonl",
                      R"({"id":"a1","body":"first","language":"en"})"
                      "\n\n"
                      R"({"id":"a2","body":"second","language":"lg","title":"t","created_at":5})"
                      "\n");
  const auto posts = ingest_corpus(dir / "c.jsonl");
  REQUIRE(posts.size() == 2);
  CHECK(posts[0].id == "a1");
  CHECK(posts[1].id == "a2");
  CHECK(posts[1].title == std::optional<std::string>("t"));
  CHECK(posts[1].created_at == std::optional<std::int64_t>(5));
}

TEST_CASE("ingest names the offending line and duplicate ids") {
  TempDir dir;
  testing::write_file(dir / "missing.jsonl",
                      R"({"id":"a1","body":"ok","language":"en"})"
                      "\n"
                      R"({"id":"a2","language":"en"})"
                      "\n");
  const auto msg = message_of([&] { ingest_corpus(dir / "missing.jsonl"); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("body") != std::string::npos);

  testing::write_file(dir / "dup.jsonl",
                      R"({"id":"a1","body":"x","language":"en"})"
                      "\n"
                      R"({"id":"a1","body":"y","language":"en"})"
                      "\n");
  CHECK(kind_of([&] { ingest_corpus(dir / "dup.jsonl"); }) == ErrorKind::Validation);
  CHECK(message_of([&] { ingest_corpus(dir / "dup.jsonl"); }).find("a1") != std::string::npos);

  CHECK(kind_of([&] { ingest_corpus(dir / "absent.jsonl"); }) == ErrorKind::Io);
}

TEST_CASE("preprocess examples") {
  const StopList none("en", {});
  CHECK(preprocess(post("Hello WORLD http://x.y !!"), none).text == "hello world");
  CHECK(preprocess(post("I am sad"), StopList("en", {"i", "am"})).text == "sad");
  const auto empty = preprocess(post("..."), none);
  CHECK(empty.text.empty());
  CHECK(empty.token_count == 0);
}

TEST_CASE("preprocess details") {
  const StopList none("en", {});
  CHECK(preprocess(post("can't stop, won't stop"), none).text == "cant stop wont stop");
  CHECK(preprocess(post("see www.example.com now"), none).text == "see now");
  CHECK(preprocess(post("ÉCOLE Ωmega ДОМ"), none).text == "école ωmega дом");
  CHECK(preprocess(post("tabs\tand\nnewlines   here"), none).token_count == 4);

  RawPost titled = post("body text");
  titled.title = "My Title";
  CHECK(preprocess(titled, none).text == "my title body text");

  // Stop-list entries go through the same normalization as text.
  CHECK(preprocess(post("I don't know"), StopList("en", {"I", "don't"})).text == "know");
}

TEST_CASE("stop lists") {
  const auto en = load_stoplist("en", std::nullopt);
  // "it's" normalizes to "its", which the list already has.
  std::set<std::string> distinct;
  for (const auto& w : builtin_english_stopwords()) {
    distinct.insert(text::join(text::normalize_tokens(w)));
  }
  CHECK(builtin_english_stopwords().size() == 179);
  CHECK(en.size() == distinct.size());
  CHECK(en.contains("its"));
  CHECK(en.size() > 100);
  CHECK(en.contains("the"));

  TempDir dir;
  std::string words;
  for (int i = 0; i < 20; ++i) words += "w" + std::to_string(i) + "\n";
  testing::write_file(dir / "lg.txt", "# luganda\n" + words);
  CHECK(load_stoplist("lg", dir / "lg.txt").size() == 20);

  CHECK(message_of([] { load_stoplist("lg", std::nullopt); }) ==
        "no built-in stop list for lg");
  CHECK(kind_of([] { load_stoplist("lg", std::nullopt); }) == ErrorKind::NotFound);
}

TEST_CASE("preprocess_all keeps empty documents and warns") {
  std::vector<RawPost> posts = {post("hello"), post("!!!")};
  posts[1].id = "p2";
  const StopList none("en", {});
  std::vector<std::string> warnings;
  const auto docs = preprocess_all(
      posts, [&](const std::string&) -> const StopList& { return none; },
      [&](std::string_view w) { warnings.emplace_back(w); });
  REQUIRE(docs.size() == 2);
  CHECK(docs[1].token_count == 0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("p2") != std::string::npos);
}

TEST_CASE("clean documents round-trip through JSONL") {
  TempDir dir;
  std::vector<CleanDocument> docs = {{"a", "en", "hello world", 2}, {"b", "lg", "", 0}};
  write_clean_documents(dir / "clean.jsonl", docs);
  CHECK(read_clean_documents(dir / "clean.jsonl") == docs);
}

TEST_CASE("property: preprocessing is idempotent") {
  const std::vector<std::string> pieces = {
      "Hello", "WORLD", "can't", "it's", "...", "!!", "http://a.b/c", "www.x.org", "the",
      "I", "sad", "São", "ÀÉÎ", "--", "'quoted'", "a,b", "\t", "  ", "x'", "Ünïcödé", "Ωμέγα"};
  const StopList stops("en", {"the", "i", "a"});
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::string body;
    const auto n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      body += pieces[rng.below(pieces.size())];
      body += rng.below(4) == 0 ? "" : " ";
    }
    if (text::trim(body).empty()) body = "x";
    const auto once = preprocess(post(body), stops);
    auto again_input = post(once.text.empty() ? "." : once.text);
    const auto twice = preprocess(again_input, stops);
    CHECK_MESSAGE(twice.text == once.text, "body: " << body);
    CHECK(twice.token_count == once.token_count);
  }
}

TEST_CASE("property: a URL-only body leaves nothing behind") {
  Rng rng(3);
  const StopList none("en", {});
  for (int trial = 0; trial < 200; ++trial) {
    std::string url = rng.below(2) ? "https://" : "www.";
    for (int i = 0; i < 3; ++i) url += testing::random_word(rng, 26) + (i < 2 ? "." : "/");
    url += testing::random_word(rng, 26) + "?q=" + testing::random_word(rng, 26);
    CHECK(preprocess(post(url), none).text.empty());
  }
}
