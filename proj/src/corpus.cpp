#include "depsev/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include "json.hpp"
#include <sstream>

#include "depsev/error.hpp"
#include "depsev/text.hpp"

namespace depsev {

using nlohmann::json;

WarningSink stderr_warnings() {
  return [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
}

StopList::StopList(std::string language, const std::vector<std::string>& words)
    : language_(std::move(language)) {
  for (const auto& w : words) {
    for (auto& t : text::normalize_tokens(w)) words_.insert(std::move(t));
  }
}

bool StopList::contains(std::string_view token) const {
  return words_.find(std::string(token)) != words_.end();
}

std::vector<std::string> StopList::sorted_words() const {
  std::vector<std::string> out(words_.begin(), words_.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string required_string(const json& j, const char* key,
                            std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                      ": missing or non-string \"" + key +
                                      "\"");
  }
  return it->get<std::string>();
}

}  // namespace

RawPost parse_post(std::string_view line, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Parse,
                "line " + std::to_string(line_no) + ": not a JSON object");
  }
  RawPost p;
  p.id = required_string(j, "id", line_no);
  p.body = required_string(j, "body", line_no);
  p.language = required_string(j, "language", line_no);
  if (auto it = j.find("source"); it != j.end() && it->is_string()) {
    p.source = it->get<std::string>();
  }
  if (auto it = j.find("title"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": \"title\" must be a string");
    }
    p.title = it->get<std::string>();
  }
  if (auto it = j.find("created_at"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": \"created_at\" must be an integer");
    }
    p.created_at = it->get<std::int64_t>();
  }
  if (p.id.empty()) {
    throw Error(ErrorKind::Parse,
                "line " + std::to_string(line_no) + ": empty \"id\"");
  }
  if (text::trim(p.body).empty()) {
    throw Error(ErrorKind::Parse,
                "line " + std::to_string(line_no) + ": empty \"body\"");
  }
  if (p.language.empty()) {
    throw Error(ErrorKind::Parse,
                "line " + std::to_string(line_no) + ": empty \"language\"");
  }
  return p;
}

std::vector<RawPost> ingest_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot read corpus file " + path.string());
  }
  std::vector<RawPost> posts;
  std::map<std::string, int> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    posts.push_back(parse_post(line, line_no));
    ++seen[posts.back().id];
  }
  std::string dups;
  for (const auto& [id, n] : seen) {
    if (n > 1) dups += (dups.empty() ? "" : ", ") + id;
  }
  if (!dups.empty()) {
    throw Error(ErrorKind::Validation, "duplicate post ids: " + dups);
  }
  return posts;
}

CleanDocument preprocess(const RawPost& post, const StopList& stops) {
  std::string raw;
  if (post.title && !post.title->empty()) {
    raw = *post.title;
    raw += ' ';
  }
  raw += post.body;

  std::vector<std::string> kept;
  for (auto& tok : text::normalize_tokens(raw)) {
    if (!stops.contains(tok)) kept.push_back(std::move(tok));
  }
  CleanDocument doc;
  doc.id = post.id;
  doc.language = post.language;
  doc.token_count = kept.size();
  doc.text = text::join(kept);
  return doc;
}

StopList load_stoplist(const std::string& language,
                       const std::optional<std::filesystem::path>& path) {
  if (!path) {
    if (language == "en") return StopList("en", builtin_english_stopwords());
    throw Error(ErrorKind::NotFound,
                "no built-in stop list for " + language);
  }
  std::ifstream in(*path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot read stop list " + path->string());
  }
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    auto t = text::trim(line);
    if (!t.empty()) words.emplace_back(t);
  }
  return StopList(language, words);
}

std::vector<CleanDocument> preprocess_all(
    const std::vector<RawPost>& posts,
    const std::function<const StopList&(const std::string&)>& stops_for,
    const WarningSink& warn) {
  std::vector<CleanDocument> out;
  out.reserve(posts.size());
  for (const auto& p : posts) {
    out.push_back(preprocess(p, stops_for(p.language)));
    if (out.back().token_count == 0 && warn) {
      warn("document " + p.id + " is empty after preprocessing");
    }
  }
  return out;
}

std::string to_json_line(const CleanDocument& doc) {
  json j = {{"id", doc.id},
            {"language", doc.language},
            {"text", doc.text},
            {"token_count", doc.token_count}};
  return j.dump();
}

CleanDocument clean_document_from_json(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::Parse, "clean document is not a JSON object");
  }
  CleanDocument d;
  try {
    d.id = j.at("id").get<std::string>();
    d.language = j.at("language").get<std::string>();
    d.text = j.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("clean document: ") + e.what());
  }
  d.token_count = text::split_whitespace(d.text).size();
  return d;
}

std::vector<CleanDocument> read_clean_documents(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<CleanDocument> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    docs.push_back(clean_document_from_json(line));
  }
  return docs;
}

void write_clean_documents(const std::filesystem::path& path,
                           const std::vector<CleanDocument>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& d : docs) out << to_json_line(d) << '\n';
}

}  // namespace depsev
