#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace depsev {

/// Receives human-readable warnings (degenerate inputs that are kept).
using WarningSink = std::function<void(std::string_view)>;

/// Writes "warning: ..." to stderr.
WarningSink stderr_warnings();

struct RawPost {
  std::string id;
  std::string source;
  std::optional<std::int64_t> created_at;
  std::optional<std::string> title;
  std::string body;
  std::string language;
};

struct CleanDocument {
  std::string id;
  std::string language;
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const CleanDocument&) const = default;
};

class StopList {
 public:
  StopList() = default;
  /// Entries are run through the same token normalization as documents, so
  /// "don't" in a list matches "dont" in text. Duplicates collapse.
  StopList(std::string language, const std::vector<std::string>& words);

  const std::string& language() const { return language_; }
  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }
  std::vector<std::string> sorted_words() const;

 private:
  std::string language_;
  std::unordered_set<std::string> words_;
};

/// Reads the line-delimited corpus format. Blank lines are skipped; any
/// malformed line aborts with its 1-based line number, and duplicate ids
/// reject the whole file.
std::vector<RawPost> ingest_corpus(const std::filesystem::path& path);

/// Parses one corpus record; `line_no` only feeds error messages.
RawPost parse_post(std::string_view line, std::size_t line_no);

CleanDocument preprocess(const RawPost& post, const StopList& stops);

/// Built-in list for "en" when no path is supplied; otherwise the file
/// (one token per line, '#' starts a comment).
StopList load_stoplist(const std::string& language,
                       const std::optional<std::filesystem::path>& path);

/// Size-checked view of the bundled English list.
const std::vector<std::string>& builtin_english_stopwords();

/// Preprocesses a whole corpus, warning about documents left empty. Stop
/// lists are looked up by language.
std::vector<CleanDocument> preprocess_all(
    const std::vector<RawPost>& posts,
    const std::function<const StopList&(const std::string&)>& stops_for,
    const WarningSink& warn);

std::string to_json_line(const CleanDocument& doc);
CleanDocument clean_document_from_json(std::string_view line);
std::vector<CleanDocument> read_clean_documents(
    const std::filesystem::path& path);
void write_clean_documents(const std::filesystem::path& path,
                           const std::vector<CleanDocument>& docs);

}  // namespace depsev
