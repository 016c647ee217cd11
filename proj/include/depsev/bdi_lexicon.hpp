#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "depsev/corpus.hpp"
#include "depsev/severity.hpp"

namespace depsev {

inline constexpr int kQuestionnaireItems = 21;
inline constexpr int kMaxItemScore = 3;
inline constexpr int kMaxTotalScore = kQuestionnaireItems * kMaxItemScore;

struct QuestionnaireOption {
  std::string statement;
  int score = 0;
};

struct QuestionnaireItem {
  int index = 0;
  std::array<QuestionnaireOption, 4> options;
};

/// Reads "item<TAB>score<TAB>statement" lines ('#' comments allowed) and
/// requires exactly 21 items with four options scored 0..3.
std::vector<QuestionnaireItem> load_questionnaire(
    const std::filesystem::path& path);

struct LexiconEntry {
  int item_index = 0;
  std::string keyword;
  int score = 0;

  bool operator==(const LexiconEntry&) const = default;
};

struct MatchedKeyword {
  std::string keyword;
  int item_index = 0;
  int score = 0;

  bool operator==(const MatchedKeyword&) const = default;
};

struct BdiScore {
  int total = 0;
  std::map<int, int> per_item;
  std::vector<MatchedKeyword> matched_keywords;
};

class BdiLexicon {
 public:
  BdiLexicon() = default;
  /// Validates entries (item range, score range, one keyword per item).
  BdiLexicon(std::string language, std::vector<LexiconEntry> entries);

  const std::string& language() const { return language_; }
  const std::vector<LexiconEntry>& entries() const { return entries_; }

  /// Per-item maximum over keywords present in the document's token set.
  BdiScore score(const CleanDocument& doc) const;

  /// Tab-separated item_index, keyword, score.
  void export_tsv(const std::filesystem::path& path) const;
  static BdiLexicon import_tsv(const std::filesystem::path& path,
                               std::string language);

 private:
  std::string language_;
  std::vector<LexiconEntry> entries_;
  // keyword -> positions in entries_
  std::unordered_map<std::string, std::vector<std::size_t>> by_keyword_;
};

/// Every option statement is normalized and stop-filtered; each surviving
/// token becomes an entry scored by its option, keeping the max score when a
/// token recurs within one item.
BdiLexicon build_lexicon(const std::vector<QuestionnaireItem>& items,
                         const StopList& stops, const WarningSink& warn = {});

BdiScore score_text(const CleanDocument& doc, const BdiLexicon& lexicon);

class SeverityBands {
 public:
  using Band = std::pair<int, SeverityLabel>;  // (inclusive upper bound, label)

  /// Bounds must be strictly increasing, start at or above 0 and end at 63.
  explicit SeverityBands(std::vector<Band> bands);

  /// 0-10 Normal, 11-16 Mild, 17-20 Borderline, 21-30 Moderate,
  /// 31-40 Severe, 41-63 Extreme.
  static SeverityBands standard();
  /// "upper_bound label" per line, '#' comments allowed.
  static SeverityBands load(const std::filesystem::path& path);

  const std::vector<Band>& bands() const { return bands_; }

 private:
  std::vector<Band> bands_;
};

SeverityLabel map_score_to_band(int score, const SeverityBands& bands);

}  // namespace depsev
